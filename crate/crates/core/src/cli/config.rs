//! Run configuration: a TOML document with flat sections.
//!
//! ```toml
//! [model]
//! beta = 0.2
//! h = 0.3
//! r = 1.0
//! alpha = 0.0
//! k = 1.0
//! a = [0.0, 0.0, 1.0]      # a_1, a_2, a_3, ...
//!
//! [confinement]
//! kind = "hard"            # or "soft"
//! l = 1000.0               # soft only
//! k_exp = 1                # soft only
//!
//! [integrator]
//! dt = 0.01
//! t_max = 10.0
//! corrector_iters = 2
//!
//! [mc]
//! n = 500
//! dt_sde = 2e-4
//! n_disorder = 50
//! n_noise = 4
//! seed = 1
//! record_times = [0.0, 0.5, 1.0]
//!
//! [fdt]
//! dt = 0.01
//! tau_max = 20.0
//! h_grid = [0.0, 0.5, 1.0]
//! tol = 1e-8
//!
//! [compare]
//! mode = "mc"              # or "fdt"
//! t_waits = [5.0, 10.0, 20.0]
//! tau_max = 5.0
//!
//! [oracle]
//! n_max = 3
//! times = [0.0, 2.0]
//! taus = [0.25, 0.5, 1.0]
//! rel_tol = 1e-3
//!
//! [output]
//! directory = "out"
//! precision = 17
//! two_time_stride = 1
//! ```
//!
//! Every section is optional until a subcommand needs it; unknown keys are
//! rejected.

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{invalid, Result};
use crate::fdt::require_no_random_field;
use crate::integrator::IntegratorConfig;
use crate::langevin::McConfig;
use crate::model::{MixtureSpec, ModelParams};
use crate::series::SeriesConfig;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub confinement: ConfinementSection,
    pub integrator: Option<IntegratorSection>,
    pub mc: Option<McSection>,
    pub fdt: Option<FdtSection>,
    pub compare: Option<CompareSection>,
    pub oracle: Option<OracleSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub beta: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "one")]
    pub k: f64,
    /// `a_1, a_2, ...`
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConfinementKind {
    #[default]
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfinementSection {
    #[serde(default)]
    pub kind: ConfinementKind,
    pub l: Option<f64>,
    pub k_exp: Option<u32>,
}

impl Default for ConfinementSection {
    fn default() -> Self {
        Self {
            kind: ConfinementKind::Hard,
            l: None,
            k_exp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "two")]
    pub corrector_iters: usize,
    pub constraint_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n: usize,
    pub dt_sde: f64,
    pub n_disorder: usize,
    pub n_noise: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to `0, T/4, T/2, 3T/4, T` with `T` the integrator horizon.
    pub record_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdtSection {
    pub dt: f64,
    pub tau_max: f64,
    #[serde(default)]
    pub h_grid: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMode {
    Mc,
    Fdt,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub mode: CompareMode,
    #[serde(default)]
    pub t_waits: Vec<f64>,
    #[serde(default = "five")]
    pub tau_max: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "three")]
    pub n_max: usize,
    pub simplex_nodes: Option<usize>,
    #[serde(default = "zero_vec")]
    pub times: Vec<f64>,
    pub taus: Vec<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// Significant digits of every float written.
    #[serde(default = "seventeen")]
    pub precision: usize,
    /// Keep every `two_time_stride`-th row and column of the two-time fields.
    #[serde(default = "one_usize")]
    pub two_time_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            precision: 17,
            two_time_stride: 1,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn three() -> usize {
    3
}
fn five() -> f64 {
    5.0
}
fn one_usize() -> usize {
    1
}
fn seventeen() -> usize {
    17
}
fn default_tol() -> f64 {
    1e-8
}
fn default_rel_tol() -> f64 {
    1e-3
}
fn zero_vec() -> Vec<f64> {
    vec![0.0]
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn missing(section: &'static str) -> crate::Error {
    invalid(section, format!("the [{section}] section is required by this subcommand"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid("config", e.to_string()))?;
        cfg.output.validate()?;
        Ok(cfg)
    }

    pub fn mixture(&self) -> Result<MixtureSpec> {
        MixtureSpec::new(self.model.a.clone())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let mix = self.mixture()?;
        match self.confinement.kind {
            ConfinementKind::Hard => {
                if self.confinement.l.is_some() || self.confinement.k_exp.is_some() {
                    return Err(invalid("confinement", "l and k_exp apply to soft confinement only"));
                }
                ModelParams::hard(m.beta, m.h, m.r, m.alpha, m.k, mix)
            }
            ConfinementKind::Soft => {
                let l = self.confinement.l.ok_or_else(|| invalid("l", "soft confinement needs l"))?;
                let k_exp = self
                    .confinement
                    .k_exp
                    .ok_or_else(|| invalid("k_exp", "soft confinement needs k_exp"))?;
                ModelParams::soft(m.beta, m.h, m.r, m.alpha, l, k_exp, mix)
            }
        }
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        let s = self.integrator.as_ref().ok_or_else(|| missing("integrator"))?;
        let mut cfg = IntegratorConfig::new(s.dt, s.t_max).with_corrector_iters(s.corrector_iters);
        cfg.constraint_tol = s.constraint_tol;
        cfg.steps()?;
        Ok(cfg)
    }

    /// Monte Carlo settings over the integrator horizon.
    pub fn mc(&self) -> Result<McConfig> {
        let s = self.mc.as_ref().ok_or_else(|| missing("mc"))?;
        let t_max = self.integrator()?.t_max;
        let times = s
            .record_times
            .clone()
            .unwrap_or_else(|| (0..=4).map(|k| t_max * k as f64 / 4.0).collect());
        let cfg = McConfig::new(s.n, s.dt_sde, t_max, s.n_disorder, s.n_noise)
            .with_record_times(times)
            .with_seed(s.seed);
        cfg.record_indices()?;
        Ok(cfg)
    }

    pub fn fdt(&self) -> Result<&FdtSection> {
        let s = self.fdt.as_ref().ok_or_else(|| missing("fdt"))?;
        if !(s.dt.is_finite() && s.dt > 0.0) {
            return Err(invalid("dt", format!("[fdt] dt must be positive, got {}", s.dt)));
        }
        if !(s.tau_max.is_finite() && s.tau_max >= 2.0 * s.dt) {
            return Err(invalid("tau_max", "[fdt] tau_max must cover at least two steps"));
        }
        if !(s.tol.is_finite() && s.tol > 0.0) {
            return Err(invalid("tol", "[fdt] tol must be positive"));
        }
        if s.h_grid.iter().any(|h| !(h.is_finite() && *h >= 0.0)) || s.h_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("h_grid", "must be sorted, finite and >= 0"));
        }
        require_no_random_field(&self.mixture()?)?;
        Ok(s)
    }

    pub fn compare(&self) -> Result<&CompareSection> {
        let s = self.compare.as_ref().ok_or_else(|| missing("compare"))?;
        if !(s.tau_max.is_finite() && s.tau_max > 0.0) {
            return Err(invalid("tau_max", "[compare] tau_max must be positive"));
        }
        if s.t_waits.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("t_waits", "must be finite and >= 0"));
        }
        Ok(s)
    }

    pub fn oracle(&self) -> Result<(&OracleSection, SeriesConfig)> {
        let s = self.oracle.as_ref().ok_or_else(|| missing("oracle"))?;
        if s.taus.is_empty() || s.times.is_empty() {
            return Err(invalid("taus", "[oracle] needs at least one time and one tau"));
        }
        if s.taus.iter().chain(&s.times).any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("taus", "[oracle] times and taus must be finite and >= 0"));
        }
        if !(s.rel_tol.is_finite() && s.rel_tol > 0.0) {
            return Err(invalid("rel_tol", "must be positive"));
        }
        let cfg = SeriesConfig {
            n_max: s.n_max,
            simplex_nodes: s.simplex_nodes,
            ..SeriesConfig::default()
        };
        Ok((s, cfg))
    }
}

impl OutputSection {
    fn validate(&self) -> Result<()> {
        if !(1..=17).contains(&self.precision) {
            return Err(invalid("precision", format!("must lie in 1..=17, got {}", self.precision)));
        }
        if self.two_time_stride == 0 {
            return Err(invalid("two_time_stride", "must be >= 1"));
        }
        Ok(())
    }
}
