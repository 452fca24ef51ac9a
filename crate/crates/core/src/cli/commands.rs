//! The subcommands. Each validates its whole configuration first and
//! returns the artifacts in memory; nothing touches the disk here.

use crate::bundle::SolutionBundle;
use crate::error::{invalid, Error, Result};
use crate::fdt::{derivative, phase_sweep, solve_fdt, FdtSolution, PhaseEntry};
use crate::integrator::{check_invariants, integrate, integrate_hard, integrate_soft, IntegratorConfig, InvariantTolerances};
use crate::langevin::{run_mc, Estimate, TrajectoryStats};
use crate::model::MixtureSpec;
use crate::series::{h_series, response_from_series};

use super::config::{CompareMode, ConfinementKind, RunConfig};
use super::output::{
    fmt_float, gnuplot_script, invariants_table, one_time_table, two_time_table, Artifacts, Table,
};

/// Largest z-score accepted by the Monte Carlo comparison.
pub const Z_MAX: f64 = 3.0;

/// A finished subcommand: its files, whether every check passed, and a
/// one-paragraph summary for the terminal.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub pass: bool,
    pub summary: String,
}

/// A failed subcommand, possibly with flagged partial output.
#[derive(Debug)]
pub struct Failure {
    pub error: Error,
    pub partial: Option<Artifacts>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Self { error, partial: None }
    }
}

pub type CommandResult = std::result::Result<Outcome, Failure>;

fn finish(mut artifacts: Artifacts, pass: bool, summary: String) -> Outcome {
    artifacts.texts.push(gnuplot_script(&artifacts.tables));
    Outcome {
        artifacts,
        pass,
        summary,
    }
}

fn bundle_tables(cfg: &RunConfig, b: &SolutionBundle) -> (Vec<Table>, bool) {
    let digits = cfg.output.precision;
    let mut tol = InvariantTolerances::for_radius(b.params.r);
    if let Some(c) = cfg.integrator.as_ref().and_then(|s| s.constraint_tol) {
        tol.constraint = c;
    }
    let lines = check_invariants(b).lines(&tol);
    let pass = lines.iter().all(|l| l.pass);
    (
        vec![
            two_time_table(b, digits, cfg.output.two_time_stride),
            one_time_table(b, digits),
            invariants_table(&lines, digits),
        ],
        pass,
    )
}

pub fn run_integrate(cfg: &RunConfig) -> CommandResult {
    let params = cfg.params()?;
    let icfg = cfg.integrator()?;
    match integrate(&params, &icfg) {
        Ok(b) => {
            let (tables, pass) = bundle_tables(cfg, &b);
            let summary = format!(
                "integrated {} rows (dt = {}); invariants {}",
                b.len(),
                b.dt(),
                if pass { "pass" } else { "FAIL" }
            );
            Ok(finish(Artifacts { tables, texts: vec![] }, pass, summary))
        }
        Err(Error::BlowUp {
            row,
            time,
            field,
            partial,
        }) => {
            let (mut tables, _) = bundle_tables(cfg, &partial);
            for t in &mut tables {
                t.comments.push(format!("partial output: blow-up at row {row} (t = {time}) in {field}"));
            }
            Err(Failure {
                error: Error::BlowUp {
                    row,
                    time,
                    field,
                    partial,
                },
                partial: Some(Artifacts { tables, texts: vec![] }),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn require_soft(cfg: &RunConfig) -> Result<()> {
    if cfg.confinement.kind == ConfinementKind::Hard {
        return Err(invalid("confinement", "SDE requires soft constraint"));
    }
    Ok(())
}

/// `(name, estimates)` for the two-time observables of a run.
fn two_time_observables(stats: &TrajectoryStats) -> [(&'static str, &[Estimate]); 6] {
    [
        ("C", &stats.c),
        ("chi", &stats.chi),
        ("Q", &stats.q),
        ("L", &stats.l),
        ("COV", &stats.cov),
        ("Q_minus_L", &stats.q_minus_l),
    ]
}

pub fn mc_stats_table(stats: &TrajectoryStats, seed: u64, digits: usize) -> Table {
    let f = |x: f64| fmt_float(x, digits);
    let mut t = Table::new("mc_stats.csv", &["s", "t", "observable", "estimate", "stderr", "n"]);
    t.comments.push(format!("seed = {seed}"));
    t.comments.push(format!("N = {}, disorder samples = {}", stats.n, stats.n_disorder));
    let nr = stats.record_times.len();
    let n = stats.n_disorder.to_string();
    for a in 0..nr {
        for b in 0..=a {
            let (s, tt) = (stats.record_times[a], stats.record_times[b]);
            for (name, v) in two_time_observables(stats) {
                let e = v[a * nr + b];
                t.push(vec![f(s), f(tt), name.into(), f(e.mean), f(e.se), n.clone()]);
            }
            if a == b {
                let e = stats.m[a];
                t.push(vec![f(s), f(s), "M".into(), f(e.mean), f(e.se), n.clone()]);
            }
        }
    }
    t
}

pub fn run_simulate(cfg: &RunConfig) -> CommandResult {
    require_soft(cfg)?;
    let params = cfg.params()?;
    let mc = cfg.mc()?;
    let stats = run_mc(&params, &mc)?;
    let table = mc_stats_table(&stats, mc.seed, cfg.output.precision);
    let summary = format!(
        "simulated N = {} with {} disorder samples x {} noise copies, seed {}",
        mc.n, mc.n_disorder, mc.n_noise, mc.seed
    );
    Ok(finish(
        Artifacts {
            tables: vec![table],
            texts: vec![],
        },
        true,
        summary,
    ))
}

pub fn fdt_tables(sol: &FdtSolution, digits: usize) -> Vec<Table> {
    let f = |x: f64| fmt_float(x, digits);
    let mut t = Table::new("fdt.csv", &["tau", "C_fdt", "R_fdt", "Q_fdt"]);
    for (i, (c, r)) in sol.c_fdt.iter().zip(&sol.r_fdt).enumerate() {
        t.push(vec![f(i as f64 * sol.dt), f(*c), f(*r), f(sol.q_fdt)]);
    }
    let mut s = Table::new(
        "fdt_summary.csv",
        &[
            "beta",
            "h",
            "q_fdt",
            "m_fdt",
            "mu_stat",
            "decay_rate",
            "decay_quality",
            "max_residual",
            "multiple_roots",
        ],
    );
    let (rate, quality) = sol.decay.map_or((f64::NAN, f64::NAN), |d| (d.rate, d.quality));
    s.push(vec![
        f(sol.beta),
        f(sol.h),
        f(sol.q_fdt),
        f(sol.m_fdt),
        f(sol.mu_stat),
        f(rate),
        f(quality),
        f(sol.residuals.max()),
        sol.multiple_roots.to_string(),
    ]);
    vec![t, s]
}

pub fn phase_table(entries: &[PhaseEntry], digits: usize) -> Table {
    let f = |x: f64| fmt_float(x, digits);
    let mut t = Table::new("phase.csv", &["h", "beta_c", "q", "gamma_ratio", "x_star", "status"]);
    for e in entries {
        match &e.result {
            Ok(p) => {
                let status = if p.multiple_roots { "multiple_roots" } else { "ok" };
                t.push(vec![
                    f(e.h),
                    f(p.beta_c),
                    f(p.q_at_transition),
                    f(p.gamma_ratio),
                    f(p.sup_location),
                    status.into(),
                ]);
            }
            Err(msg) => {
                let nan = f(f64::NAN);
                t.push(vec![f(e.h), nan.clone(), nan.clone(), nan.clone(), nan, msg.clone()]);
            }
        }
    }
    t
}

fn sweep(cfg: &RunConfig, mix: &MixtureSpec) -> Result<Option<(Table, usize)>> {
    let s = cfg.fdt()?;
    if s.h_grid.is_empty() {
        return Ok(None);
    }
    let entries = phase_sweep(&s.h_grid, mix, s.tol)?;
    let failed = entries.iter().filter(|e| e.result.is_err()).count();
    Ok(Some((phase_table(&entries, cfg.output.precision), failed)))
}

pub fn run_fdt(cfg: &RunConfig) -> CommandResult {
    let s = cfg.fdt()?;
    let mix = cfg.mixture()?;
    let sol = solve_fdt(cfg.model.beta, cfg.model.h, &mix, s.dt, s.tau_max)?;
    let mut tables = fdt_tables(&sol, cfg.output.precision);
    let mut summary = format!(
        "Q_fdt = {}, M_fdt = {}, max residual {:.3e}",
        sol.q_fdt,
        sol.m_fdt,
        sol.residuals.max()
    );
    let mut pass = true;
    if let Some((t, failed)) = sweep(cfg, &mix)? {
        summary.push_str(&format!("; phase sweep over {} fields, {failed} failed", t.rows.len()));
        pass = failed == 0;
        tables.push(t);
    }
    Ok(finish(Artifacts { tables, texts: vec![] }, pass, summary))
}

pub fn run_phase(cfg: &RunConfig) -> CommandResult {
    let mix = cfg.mixture()?;
    let (t, failed) = sweep(cfg, &mix)?.ok_or_else(|| invalid("h_grid", "[fdt] h_grid is empty"))?;
    let summary = format!("phase sweep over {} fields, {failed} failed", t.rows.len());
    Ok(finish(
        Artifacts {
            tables: vec![t],
            texts: vec![],
        },
        failed == 0,
        summary,
    ))
}

/// Grid index of `t`, or a grid-mismatch error.
fn grid_index(t: f64, dt: f64, len: usize, what: &str) -> Result<usize> {
    let i = (t / dt).round();
    if (i * dt - t).abs() > 1e-9 * dt.max(t) || i as usize >= len {
        return Err(Error::GridMismatch(format!(
            "{what} {t} is not a node of the integrator grid (dt = {dt}, {len} rows)"
        )));
    }
    Ok(i as usize)
}

/// Rows of the Monte Carlo comparison: `(s, t, observable, estimate, limit)`.
pub struct McComparison {
    pub rows: Vec<(f64, f64, &'static str, Estimate, f64)>,
}

impl McComparison {
    pub fn max_z(&self) -> f64 {
        self.rows.iter().map(|r| r.3.z_score(r.4)).fold(0.0, f64::max)
    }
}

/// Joins Monte Carlo estimates with a limit bundle at every recorded pair
/// `t <= s`: `C`, `Q` and `M` against the bundle, and `Q_N - L_N` against 0.
pub fn compare_mc(stats: &TrajectoryStats, b: &SolutionBundle) -> Result<McComparison> {
    let idx = stats
        .record_times
        .iter()
        .map(|&t| grid_index(t, b.dt(), b.len(), "record time"))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (a, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate().take(a + 1) {
            let (s, t) = (stats.record_times[a], stats.record_times[c]);
            rows.push((s, t, "C", stats.c_at(a, c), b.c.get(i, j)));
            rows.push((s, t, "Q", stats.q_at(a, c), b.q.get(i, j)));
            rows.push((s, t, "Q_minus_L", stats.q_minus_l_at(a, c), 0.0));
            if a == c {
                rows.push((s, s, "M", stats.m[a], b.m[i]));
            }
        }
    }
    Ok(McComparison { rows })
}

/// `sup_{tau <= tau_max} |C(t_w + tau, t_w) - C_fdt(tau)|` and
/// `sup_{tau <= tau_max} |R(t_w + tau, t_w) + 2 d/dtau C(t_w + tau, t_w)|`.
pub fn fdt_gaps(b: &SolutionBundle, fdt: &FdtSolution, t_wait: f64, tau_max: f64) -> Result<(f64, f64)> {
    if (b.dt() - fdt.dt).abs() > 1e-12 * b.dt() {
        return Err(Error::GridMismatch(format!(
            "integrator dt {} differs from FDT dt {}",
            b.dt(),
            fdt.dt
        )));
    }
    let w = grid_index(t_wait, b.dt(), b.len(), "waiting time")?;
    let span = (tau_max / b.dt()).round() as usize;
    if w + span >= b.len() || span >= fdt.c_fdt.len() {
        return Err(Error::GridMismatch(format!(
            "window t_w = {t_wait}, tau_max = {tau_max} exceeds the computed range"
        )));
    }
    let slice = b.two_time_slice(t_wait, tau_max)?;
    let gap_c = slice
        .c
        .iter()
        .zip(&fdt.c_fdt)
        .map(|(c, f)| (c - f).abs())
        .fold(0.0, f64::max);
    let gap_fdr = fdr_residual(b, t_wait, tau_max)?.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok((gap_c, gap_fdr))
}

/// `R(t_w + tau, t_w) + 2 d/dtau C(t_w + tau, t_w)` on the grid `tau = 0, dt, .., tau_max`.
pub fn fdr_residual(b: &SolutionBundle, t_wait: f64, tau_max: f64) -> Result<Vec<f64>> {
    let slice = b.two_time_slice(t_wait, tau_max)?;
    let dc = derivative(&slice.c, b.dt());
    Ok(slice.r.iter().zip(&dc).map(|(r, d)| r + 2.0 * d).collect())
}

/// FDR gap with the O(dt^2) truncation of the integrator removed by a
/// Richardson combination of runs at `dt` (`fine`) and `2 dt` (`coarse`).
///
/// Once the dynamics is stationary the raw residual stalls at roughly
/// `0.04 dt^2`, which hides the approach to the FDT regime.
pub fn fdr_gap_extrapolated(
    fine: &SolutionBundle,
    coarse: &SolutionBundle,
    t_wait: f64,
    tau_max: f64,
) -> Result<f64> {
    if (coarse.dt() - 2.0 * fine.dt()).abs() > 1e-12 * coarse.dt() {
        return Err(Error::GridMismatch(format!(
            "extrapolation needs dt {} and {}, got {}",
            fine.dt(),
            2.0 * fine.dt(),
            coarse.dt()
        )));
    }
    let g1 = fdr_residual(fine, t_wait, tau_max)?;
    let g2 = fdr_residual(coarse, t_wait, tau_max)?;
    Ok(g2
        .iter()
        .enumerate()
        .filter_map(|(i, v)| g1.get(2 * i).map(|f| ((4.0 * f - v) / 3.0).abs()))
        .fold(0.0, f64::max))
}

/// Sup-norm differences of `C`, `R`, `Q` and `M` over the common rows.
pub fn bundle_gap(a: &SolutionBundle, b: &SolutionBundle) -> Result<f64> {
    if a.len() != b.len() || (a.dt() - b.dt()).abs() > 1e-12 * a.dt() {
        return Err(Error::GridMismatch("bundles live on different grids".into()));
    }
    let mut gap = 0.0f64;
    for i in 0..a.len() {
        gap = gap.max((a.m[i] - b.m[i]).abs());
        for j in 0..=i {
            gap = gap
                .max((a.c.get(i, j) - b.c.get(i, j)).abs())
                .max((a.r.get(i, j) - b.r.get(i, j)).abs())
                .max((a.q.get(i, j) - b.q.get(i, j)).abs());
        }
    }
    Ok(gap)
}

pub fn run_compare(cfg: &RunConfig) -> CommandResult {
    let cmp = cfg.compare()?;
    let digits = cfg.output.precision;
    let f = |x: f64| fmt_float(x, digits);
    match cmp.mode {
        CompareMode::Mc => {
            require_soft(cfg)?;
            let params = cfg.params()?;
            let icfg = cfg.integrator()?;
            let mc = cfg.mc()?;
            // Record times must be integrator nodes before anything runs.
            let len = icfg.steps()? + 1;
            for &t in &mc.record_times {
                grid_index(t, icfg.dt, len, "record time")?;
            }
            let b = integrate_soft(&params, &icfg)?;
            let stats = run_mc(&params, &mc)?;
            let joined = compare_mc(&stats, &b)?;
            let mut t = Table::new(
                "compare_mc.csv",
                &["s", "t", "observable", "estimate", "stderr", "limit", "z", "pass"],
            );
            t.comments.push(format!("seed = {}", mc.seed));
            for (s, tt, name, e, limit) in &joined.rows {
                let z = e.z_score(*limit);
                t.push(vec![
                    f(*s),
                    f(*tt),
                    name.to_string(),
                    f(e.mean),
                    f(e.se),
                    f(*limit),
                    f(z),
                    (z <= Z_MAX).to_string(),
                ]);
            }
            let max_z = joined.max_z();
            let pass = max_z <= Z_MAX;
            let summary = format!("Monte Carlo vs limit: max z = {max_z:.3} over {} rows", joined.rows.len());
            Ok(finish(
                Artifacts {
                    tables: vec![mc_stats_table(&stats, mc.seed, digits), t],
                    texts: vec![],
                },
                pass,
                summary,
            ))
        }
        CompareMode::Fdt => {
            if cfg.confinement.kind != ConfinementKind::Hard {
                return Err(invalid("confinement", "the FDT comparison uses the hard integrator").into());
            }
            if cfg.model.r != 1.0 {
                return Err(invalid("r", "the FDT comparison is normalized to r = 1").into());
            }
            if cmp.t_waits.len() < 2 || cmp.t_waits.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("t_waits", "need at least two increasing waiting times").into());
            }
            let params = cfg.params()?;
            let icfg = cfg.integrator()?;
            let s = cfg.fdt()?;
            if (s.dt - icfg.dt).abs() > 1e-12 * icfg.dt {
                return Err(Error::GridMismatch(format!("[fdt] dt {} differs from [integrator] dt {}", s.dt, icfg.dt)).into());
            }
            if s.tau_max < cmp.tau_max || cmp.t_waits.last().unwrap() + cmp.tau_max > icfg.t_max + 1e-9 {
                return Err(Error::GridMismatch("comparison window exceeds the computed ranges".into()).into());
            }
            let sol = solve_fdt(params.beta, params.h, &params.mixture, s.dt, s.tau_max)?;
            let b = integrate_hard(&params, &icfg)?;
            let coarse = integrate_hard(&params, &IntegratorConfig { dt: 2.0 * icfg.dt, ..icfg.clone() })?;
            for &tw in &cmp.t_waits {
                grid_index(tw, coarse.dt(), coarse.len(), "waiting time")?;
            }
            let mut t = Table::new("compare_fdt.csv", &["t_wait", "gap_C", "gap_FDR", "gap_FDR_extrapolated"]);
            let mut gaps = Vec::new();
            for &tw in &cmp.t_waits {
                let (gc, gr) = fdt_gaps(&b, &sol, tw, cmp.tau_max)?;
                let ge = fdr_gap_extrapolated(&b, &coarse, tw, cmp.tau_max)?;
                t.push(vec![f(tw), f(gc), f(gr), f(ge)]);
                gaps.push((gc, ge));
            }
            let pass = gaps.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
            let summary = format!(
                "FDT vs dynamics: gaps {} with the waiting time",
                if pass { "decrease" } else { "do NOT decrease" }
            );
            let mut tables = fdt_tables(&sol, digits);
            tables.push(t);
            Ok(finish(Artifacts { tables, texts: vec![] }, pass, summary))
        }
    }
}

pub fn run_oracle(cfg: &RunConfig) -> CommandResult {
    let params = cfg.params()?;
    let icfg = cfg.integrator()?;
    let (o, scfg) = cfg.oracle()?;
    let len = icfg.steps()? + 1;
    let mut pairs = Vec::new();
    for &t in &o.times {
        for &tau in &o.taus {
            let ti = grid_index(t, icfg.dt, len, "oracle time")?;
            let si = grid_index(t + tau, icfg.dt, len, "oracle time")?;
            pairs.push((si, ti));
        }
    }
    let b = integrate(&params, &icfg)?;
    let digits = cfg.output.precision;
    let f = |x: f64| fmt_float(x, digits);
    let mut t = Table::new(
        "oracle.csv",
        &["s", "t", "R_series", "R_integrator", "rel_err", "tail_bound", "nodes"],
    );
    let mut worst = 0.0f64;
    for (si, ti) in pairs {
        let (s, tt) = (b.time(si), b.time(ti));
        let hv = h_series(&b.c, params.beta, &params.mixture, s, tt, &scfg)?;
        let rs = response_from_series(&b.mu, b.dt(), hv.value, s, tt)?;
        let ri = b.r.get(si, ti);
        let rel = (rs - ri).abs() / ri.abs();
        worst = worst.max(rel);
        t.push(vec![f(s), f(tt), f(rs), f(ri), f(rel), f(hv.tail_bound), hv.nodes.to_string()]);
    }
    let pass = worst <= o.rel_tol;
    let summary = format!("series vs integrator: max relative error {worst:.3e} (tolerance {:.1e})", o.rel_tol);
    Ok(finish(
        Artifacts {
            tables: vec![t],
            texts: vec![],
        },
        pass,
        summary,
    ))
}
