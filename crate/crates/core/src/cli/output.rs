//! CSV tables held in memory until a run has finished, so a failed run
//! leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bundle::SolutionBundle;
use crate::error::{invalid, Result};
use crate::integrator::InvariantLine;

/// Scientific notation with `digits` significant digits.
pub fn fmt_float(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}

/// One CSV file: leading `#` comment lines, a header and string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub comments: Vec<String>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            comments: Vec::new(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for c in &self.comments {
            out.extend_from_slice(format!("# {c}\n").as_bytes());
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let io = |e: csv::Error| invalid("output", e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| invalid("output", e.to_string()))
    }
}

/// A text artifact that is not a table.
#[derive(Debug, Clone, PartialEq)]
pub struct TextFile {
    pub name: String,
    pub body: String,
}

/// Everything a subcommand produces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub texts: Vec<TextFile>,
}

impl Artifacts {
    /// Writes every file into `dir`, creating it if needed. Returns the paths.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for t in &self.tables {
            let p = dir.join(&t.name);
            let bytes = t.to_bytes().map_err(std::io::Error::other)?;
            fs::write(&p, bytes)?;
            paths.push(p);
        }
        for t in &self.texts {
            let p = dir.join(&t.name);
            fs::write(&p, &t.body)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// `two_time.csv` rows `(s, t)` for `t <= s`, time-major, on every
/// `stride`-th grid node.
pub fn two_time_table(b: &SolutionBundle, digits: usize, stride: usize) -> Table {
    let f = |x: f64| fmt_float(x, digits);
    let mut t = Table::new("two_time.csv", &["s", "t", "C", "R", "Q"]);
    for i in (0..b.len()).step_by(stride) {
        for j in (0..=i).step_by(stride) {
            t.push(vec![
                f(b.time(i)),
                f(b.time(j)),
                f(b.c.get(i, j)),
                f(b.r.get(i, j)),
                f(b.q.get(i, j)),
            ]);
        }
    }
    t
}

pub fn one_time_table(b: &SolutionBundle, digits: usize) -> Table {
    let f = |x: f64| fmt_float(x, digits);
    let mut t = Table::new("one_time.csv", &["s", "M", "K", "D", "mu"]);
    for i in 0..b.len() {
        t.push(vec![f(b.time(i)), f(b.m[i]), f(b.k[i]), f(b.d[i]), f(b.mu[i])]);
    }
    t
}

pub fn invariants_table(lines: &[InvariantLine], digits: usize) -> Table {
    let mut t = Table::new("invariants.csv", &["name", "value", "tolerance", "pass"]);
    for l in lines {
        t.push(vec![
            l.name.to_string(),
            fmt_float(l.value, digits),
            fmt_float(l.tolerance, digits),
            l.pass.to_string(),
        ]);
    }
    t
}

/// A gnuplot script plotting whichever of the known tables were written.
pub fn gnuplot_script(tables: &[Table]) -> TextFile {
    let has = |n: &str| tables.iter().any(|t| t.name == n);
    let mut s = String::from(
        "# gnuplot -persist plot.gp\nset datafile separator ','\nset key autotitle columnhead\n",
    );
    if has("one_time.csv") {
        s.push_str(
            "set xlabel 's'\nplot 'one_time.csv' using 1:2 with lines title 'M', \\\n     \
             'one_time.csv' using 1:3 with lines title 'K'\npause -1\n",
        );
    }
    if has("fdt.csv") {
        s.push_str(
            "set xlabel 'tau'\nplot 'fdt.csv' using 1:2 with lines title 'C_fdt', \\\n     \
             'fdt.csv' using 1:3 with lines title 'R_fdt'\npause -1\n",
        );
    }
    if has("phase.csv") {
        s.push_str(
            "set xlabel 'h'\nset ylabel 'beta_c'\nplot 'phase.csv' using 1:2 with linespoints \
             title 'predicted beta_c(h)'\npause -1\n",
        );
    }
    if has("compare_fdt.csv") {
        s.push_str(
            "set xlabel 't_w'\nset logscale y\nplot 'compare_fdt.csv' using 1:2 with linespoints \
             title 'gap C', \\\n     'compare_fdt.csv' using 1:3 with linespoints title 'gap FDR'\n\
             unset logscale y\npause -1\n",
        );
    }
    TextFile {
        name: "plot.gp".into(),
        body: s,
    }
}
