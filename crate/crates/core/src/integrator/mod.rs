//! Row-by-row solver for the limiting two-time equations.
//!
//! Every field `X` in `{C, R, Q}` obeys `d/ds X(s,t) = -mu(s) X(s,t) + G_X(s,t)`
//! on `s >= t`, where `G_X` collects the memory integrals and field terms.
//! Row `i` (time `s_i = i dt`) is produced by an explicit Euler predictor
//! from the stored row `i-1` rates followed by `corrector_iters` trapezoid
//! corrections. Each correction recomputes the memory integrals with the
//! current row iterate (the O(i^2) "sweep") and then solves the scalar
//! unknowns `mu_i`, `M_i`, `D_i` (and `K_i` in soft mode) self-consistently
//! against the row values, which is O(i).
//!
//! Hard mode pins `C(i,i) = r`; `mu_i = (k + 2 beta^2 int psi(C)R + 2 h M_i) / (2r)`.
//! Soft mode advances `K` with BDF2 (backward Euler on the first step) and
//! uses `mu_i = f'(K_i)`. The `K` equation relaxes at rate ~`4 L r`, far
//! beyond what a fixed-point trapezoid step tolerates for large `L`.

mod invariants;
mod kernel;

pub use invariants::{check_invariants, InvariantLine, InvariantReport, InvariantTolerances};

use serde::{Deserialize, Serialize};

use crate::bundle::{Quadrature, SchemeMeta, SolutionBundle};
use crate::error::{invalid, Error, Result};
use crate::field::{FieldKind, TwoTimeField};
use crate::model::{ConfinementSpec, MixtureSpec, ModelParams};

/// Default cap on the storage of the three two-time fields.
pub const DEFAULT_MEMORY_LIMIT: u64 = 3 << 30;

/// Step size, horizon and corrector settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    pub corrector_iters: usize,
    /// Hard-mode diagnostic tolerance on `|C(i,i) - r|`; `None` means `1e-8 r`.
    pub constraint_tol: Option<f64>,
    pub quadrature: Quadrature,
    pub memory_limit_bytes: u64,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        Self {
            dt,
            t_max,
            corrector_iters: 2,
            constraint_tol: None,
            quadrature: Quadrature::Trapezoid,
            memory_limit_bytes: DEFAULT_MEMORY_LIMIT,
        }
    }

    pub fn with_corrector_iters(mut self, iters: usize) -> Self {
        self.corrector_iters = iters;
        self
    }

    /// Number of steps `n = t_max / dt`; the grid has `n + 1` rows.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(invalid("t_max", format!("must be positive, got {}", self.t_max)));
        }
        if self.corrector_iters == 0 {
            return Err(invalid("corrector_iters", "must be >= 1"));
        }
        if let Some(tol) = self.constraint_tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(invalid("constraint_tol", format!("must be positive, got {tol}")));
            }
        }
        let n = (self.t_max / self.dt).round();
        if n < 2.0 {
            return Err(invalid("t_max", "need at least two steps (t_max / dt >= 2)"));
        }
        if (n * self.dt - self.t_max).abs() > 1e-12 * self.t_max {
            return Err(invalid(
                "dt",
                format!("t_max = {} is not a multiple of dt = {}", self.t_max, self.dt),
            ));
        }
        Ok(n as usize)
    }
}

/// Integrates the hard spherical system.
pub fn integrate_hard(params: &ModelParams, cfg: &IntegratorConfig) -> Result<SolutionBundle> {
    if !params.confinement.is_hard() {
        return Err(invalid("confinement", "integrate_hard needs the hard constraint"));
    }
    Engine::new(params, cfg)?.run()
}

/// Integrates the soft-confinement system.
pub fn integrate_soft(params: &ModelParams, cfg: &IntegratorConfig) -> Result<SolutionBundle> {
    if params.confinement.is_hard() {
        return Err(invalid("confinement", "integrate_soft needs a confinement potential"));
    }
    Engine::new(params, cfg)?.run()
}

/// Dispatches on the confinement variant.
pub fn integrate(params: &ModelParams, cfg: &IntegratorConfig) -> Result<SolutionBundle> {
    Engine::new(params, cfg)?.run()
}

/// Rates `d/ds X(s_i, t_j)` of the last completed row.
struct Rates {
    c: Vec<f64>,
    r: Vec<f64>,
    q: Vec<f64>,
    m: f64,
}

/// Memory integrals of the current row, before the `h M_j` field terms.
#[derive(Default)]
struct Memory {
    c: Vec<f64>,
    q: Vec<f64>,
    r: Vec<f64>,
    m: f64,
}

struct Engine<'a> {
    params: &'a ModelParams,
    mix: &'a MixtureSpec,
    beta2: f64,
    h: f64,
    dt: f64,
    n: usize,
    corrector_iters: usize,
    c: TwoTimeField,
    r: TwoTimeField,
    q: TwoTimeField,
    m: Vec<f64>,
    k: Vec<f64>,
    d: Vec<f64>,
    mu: Vec<f64>,
    scratch: kernel::Scratch,
    base_c: Vec<f64>,
    base_r: Vec<f64>,
    base_q: Vec<f64>,
    side_wa: Vec<f64>,
    side_nq: Vec<f64>,
    max_mu_residual: f64,
    warnings: Vec<String>,
}

impl<'a> Engine<'a> {
    fn new(params: &'a ModelParams, cfg: &IntegratorConfig) -> Result<Self> {
        params.validate()?;
        let n = cfg.steps()?;
        let rows = n + 1;
        let required = 3 * TwoTimeField::bytes_for(rows);
        if required > cfg.memory_limit_bytes {
            return Err(Error::Resource {
                what: format!("two-time grids with {rows} rows"),
                required_bytes: required,
                limit_bytes: cfg.memory_limit_bytes,
            });
        }
        let dt = cfg.dt;
        Ok(Self {
            params,
            mix: &params.mixture,
            beta2: params.beta * params.beta,
            h: params.h,
            dt,
            n,
            corrector_iters: cfg.corrector_iters,
            c: TwoTimeField::with_capacity(dt, FieldKind::Symmetric, rows),
            r: TwoTimeField::with_capacity(dt, FieldKind::Causal, rows),
            q: TwoTimeField::with_capacity(dt, FieldKind::Symmetric, rows),
            m: Vec::with_capacity(rows),
            k: Vec::with_capacity(rows),
            d: Vec::with_capacity(rows),
            mu: Vec::with_capacity(rows),
            scratch: kernel::Scratch::default(),
            base_c: Vec::with_capacity(rows),
            base_r: Vec::with_capacity(rows),
            base_q: Vec::with_capacity(rows),
            side_wa: Vec::with_capacity(rows),
            side_nq: Vec::with_capacity(rows),
            max_mu_residual: 0.0,
            warnings: Vec::new(),
        })
    }

    fn run(mut self) -> Result<SolutionBundle> {
        let mut rates = self.initial_row()?;
        for i in 1..=self.n {
            rates = self.advance(i, &rates)?;
        }
        Ok(self.into_bundle())
    }

    fn initial_row(&mut self) -> Result<Rates> {
        let r0 = self.params.r;
        let m0 = self.params.initial_magnetization();
        self.c.push_row(&[r0]);
        self.q.push_row(&[r0]);
        self.r.push_row(&[1.0]);
        self.m.push(m0);
        self.k.push(r0);
        self.d.push(r0);
        // All memory integrals vanish on the single-node interval [0, 0].
        let g_diag = self.h * m0;
        let mu0 = match &self.params.confinement {
            ConfinementSpec::Hard { r, k } => (k + 2.0 * g_diag) / (2.0 * r),
            soft => soft.df(r0)?,
        };
        self.mu.push(mu0);
        let rates = Rates {
            c: vec![-mu0 * r0 + g_diag],
            r: vec![-mu0],
            q: vec![-mu0 * r0 + g_diag],
            m: -mu0 * m0 + self.h,
        };
        self.check_row(0)?;
        Ok(rates)
    }

    /// Predictor, corrector passes and the rates of the new row.
    fn advance(&mut self, i: usize, prev: &Rates) -> Result<Rates> {
        let dt = self.dt;
        let hard = self.params.confinement.is_hard();

        // Explicit Euler predictor from the row i-1 rates.
        let k_pred = if hard {
            self.params.r
        } else if i >= 2 {
            2.0 * self.k[i - 1] - self.k[i - 2]
        } else {
            self.k[0]
        };
        let mut row = Vec::with_capacity(i + 1);
        for (x, f) in [(&mut self.c, &prev.c), (&mut self.q, &prev.q), (&mut self.r, &prev.r)] {
            row.clear();
            row.extend(x.row(i - 1).iter().zip(f.iter()).map(|(v, f)| v + dt * f));
            row.push(0.0);
            x.push_row(&row);
        }
        self.c.row_mut(i)[i] = k_pred;
        self.m.push(self.m[i - 1] + dt * prev.m);
        self.d.push(self.d[i - 1] + 2.0 * dt * prev.q[i - 1]);
        self.q.row_mut(i)[i] = self.d[i];
        self.k.push(k_pred);
        self.mu.push(self.mu[i - 1]);

        let mut memory = Memory::default();
        for _ in 0..self.corrector_iters {
            memory = self.sweep(i);
            self.solve_row(i, prev, &memory)?;
        }
        self.check_row(i)?;

        let mu = self.mu[i];
        let h = self.h;
        let mut rates = Rates {
            c: Vec::with_capacity(i + 1),
            r: Vec::with_capacity(i + 1),
            q: Vec::with_capacity(i + 1),
            m: 0.0,
        };
        let (c_row, r_row, q_row) = (self.c.row(i), self.r.row(i), self.q.row(i));
        for j in 0..=i {
            let hm = h * self.m[j];
            rates.c.push(-mu * c_row[j] + memory.c[j] + hm);
            rates.q.push(-mu * q_row[j] + memory.q[j] + hm);
            rates.r.push(-mu * r_row[j] + memory.r[j]);
        }
        rates.m = -mu * self.m[i] + h + memory.m;
        Ok(rates)
    }

    /// Memory integrals for row `i` given its current iterate.
    fn sweep(&mut self, i: usize) -> Memory {
        let beta2 = self.beta2;
        let mut memory = Memory {
            c: vec![0.0; i + 1],
            q: vec![0.0; i + 1],
            r: vec![0.0; i + 1],
            m: 0.0,
        };
        if beta2 == 0.0 {
            return memory;
        }
        let dt = self.dt;
        let s = &mut self.scratch;
        s.prepare(i, dt, self.mix, self.c.row(i), self.r.row(i), self.q.row(i));
        for k in 0..=i {
            kernel::accumulate_row(s, k, self.c.row(k), self.q.row(k), self.r.row(k));
        }
        let a_i = s.a[i];
        let r_row = self.r.row(i);
        for j in 0..=i {
            let first_c = s.ic[j];
            let first_q = s.iq[j];
            let second_c = if j == 0 { 0.0 } else { s.sc[j] };
            let second_q = if j == 0 { 0.0 } else { s.sq[j] };
            memory.c[j] = beta2 * (first_c + second_c);
            memory.q[j] = beta2 * (first_q + second_q);
            memory.r[j] = if j == i {
                0.0
            } else {
                beta2 * (s.ir[j] - 0.5 * dt * (s.a[j] + a_i * r_row[j]))
            };
        }
        let mut mem_m = 0.0;
        for kk in 0..=i {
            mem_m += s.wa[kk] * self.m[kk];
        }
        memory.m = beta2 * mem_m;
        memory
    }

    /// `int_0^{s_i} psi(C(s_i,u)) R(s_i,u) du` by the trapezoid rule.
    fn psi_integral(&self, i: usize) -> f64 {
        let c_row = self.c.row(i);
        let r_row = self.r.row(i);
        trapezoid_row(self.dt, i, |j| self.mix.psi(c_row[j]) * r_row[j])
    }

    /// Solves `mu_i`, `M_i`, `D_i` (and `K_i`) with the memory integrals
    /// frozen, updating the off-diagonal entries of row `i`.
    fn solve_row(&mut self, i: usize, prev: &Rates, memory: &Memory) -> Result<()> {
        let dt = self.dt;
        let half = 0.5 * dt;
        let h = self.h;
        self.base_c.clear();
        self.base_r.clear();
        self.base_q.clear();
        for j in 0..i {
            let hm = h * self.m[j];
            self.base_c
                .push(self.c.get(i - 1, j) + half * (prev.c[j] + memory.c[j] + hm));
            self.base_q
                .push(self.q.get(i - 1, j) + half * (prev.q[j] + memory.q[j] + hm));
            self.base_r.push(self.r.get(i - 1, j) + half * (prev.r[j] + memory.r[j]));
        }
        let base_m = self.m[i - 1] + half * (prev.m + h + memory.m);
        self.prepare_side_step(i);
        let mu_prev = self.mu[i - 1];

        let tol = 4.0 * f64::EPSILON;
        let max_iter = 200;
        let mut mu = self.mu[i];
        let mut k_diag = self.k[i];
        let mut residual = f64::INFINITY;
        let mut used = (mu, k_diag);
        for _ in 0..max_iter {
            used = (mu, k_diag);
            let den = 1.0 + half * mu;
            let m_i = base_m / den;
            {
                let c_row = self.c.row_mut(i);
                for (x, b) in c_row[..i].iter_mut().zip(&self.base_c) {
                    *x = b / den;
                }
                c_row[i] = k_diag;
            }
            for (x, b) in self.r.row_mut(i)[..i].iter_mut().zip(&self.base_r) {
                *x = b / den;
            }
            for (x, b) in self.q.row_mut(i)[..i].iter_mut().zip(&self.base_q) {
                *x = b / den;
            }
            // The diagonal of Q is reached from Q(i, i-1) along the second
            // argument, with d/dt Q(s,t) = (d/ds Q)(t,s).
            let q_sub = self.q.get(i, i - 1);
            let side = -mu_prev * q_sub + self.side_memory(i) + h * m_i;
            let d_i = (q_sub + half * (side + memory.q[i] + h * m_i)) / den;
            self.q.row_mut(i)[i] = d_i;
            self.m[i] = m_i;
            self.d[i] = d_i;

            let drive = self.beta2 * self.psi_integral(i) + h * m_i;
            let (mu_new, k_new) = match &self.params.confinement {
                ConfinementSpec::Hard { r, k } => ((k + 2.0 * drive) / (2.0 * r), *r),
                soft => {
                    let k_new = self.solve_k(i, drive, k_diag, soft)?;
                    (soft.df(k_new)?, k_new)
                }
            };
            residual = (mu_new - mu).abs();
            let settled = residual <= tol * mu.abs().max(1.0)
                && (k_new - k_diag).abs() <= tol * k_diag.abs().max(1.0);
            if settled {
                break;
            }
            if !(mu_new.is_finite() && k_new.is_finite()) {
                used = (mu_new, k_new);
                break;
            }
            mu = mu_new;
            k_diag = k_new;
        }
        let (mu, k_diag) = used;
        self.mu[i] = mu;
        self.k[i] = k_diag;
        if residual.is_finite() {
            self.max_mu_residual = self.max_mu_residual.max(residual);
            if residual > 1e3 * f64::EPSILON * mu.abs().max(1.0) {
                self.warnings.push(format!(
                    "row {i}: mu self-consistency residual {residual:.3e} after {max_iter} iterations"
                ));
            }
        }
        Ok(())
    }

    /// Row `i-1` weights for the memory integrals of `(d/ds Q)(s_{i-1}, t_i)`.
    fn prepare_side_step(&mut self, i: usize) {
        self.side_wa.clear();
        self.side_nq.clear();
        if self.beta2 == 0.0 {
            return;
        }
        let (c_prev, r_prev, q_prev) = (self.c.row(i - 1), self.r.row(i - 1), self.q.row(i - 1));
        for k in 0..i {
            let w = if i == 1 {
                0.0
            } else if k == 0 || k == i - 1 {
                0.5 * self.dt
            } else {
                self.dt
            };
            self.side_wa.push(w * r_prev[k] * self.mix.nu2(c_prev[k]));
            self.side_nq.push(self.mix.nu1(q_prev[k]));
        }
    }

    /// Memory part of `(d/ds Q)(s_{i-1}, t_i)` for the current row iterate:
    /// `beta^2 [int_0^{s_{i-1}} Q(u,t_i) R(s_{i-1},u) nu''(C(s_{i-1},u)) du
    ///  + int_0^{t_i} nu'(Q(s_{i-1},u)) R(t_i,u) du]`.
    fn side_memory(&self, i: usize) -> f64 {
        if self.beta2 == 0.0 {
            return 0.0;
        }
        let q_row = self.q.row(i);
        let r_row = self.r.row(i);
        let first: f64 = self.side_wa.iter().zip(q_row).map(|(w, q)| w * q).sum();
        let corner = self.mix.nu1(q_row[i - 1]);
        let second = trapezoid_row(self.dt, i, |k| {
            let nq = if k < i { self.side_nq[k] } else { corner };
            nq * r_row[k]
        });
        self.beta2 * (first + second)
    }

    /// BDF2 (backward Euler at `i = 1`) step for `K' = -2 f'(K) K + 1 + 2 drive`,
    /// solved by damped Newton.
    fn solve_k(&self, i: usize, drive: f64, guess: f64, conf: &ConfinementSpec) -> Result<f64> {
        let dt = self.dt;
        let (a, b, c) = if i >= 2 {
            (3.0, 4.0 * self.k[i - 1] - self.k[i - 2], 2.0 * dt)
        } else {
            (1.0, self.k[i - 1], dt)
        };
        let g = |x: f64| -> Result<f64> {
            Ok(a * x - b + c * (2.0 * conf.df(x)? * x - 1.0 - 2.0 * drive))
        };
        let mut x = guess;
        let mut gx = g(x)?;
        for _ in 0..100 {
            let slope = a + 2.0 * c * (conf.d2f(x)? * x + conf.df(x)?);
            if !(x.is_finite() && slope.is_finite()) {
                // Overflow; the caller reports the row as a blow-up.
                return Ok(f64::NAN);
            }
            if slope <= 0.0 {
                return Err(Error::Scheme(format!(
                    "row {i}: Newton slope {slope} for K is not positive"
                )));
            }
            let mut step = gx / slope;
            let mut trial = x - step;
            let mut g_trial = g(trial)?;
            let mut halvings = 0;
            while (!g_trial.is_finite() || g_trial.abs() > gx.abs()) && halvings < 40 {
                step *= 0.5;
                trial = x - step;
                g_trial = g(trial)?;
                halvings += 1;
            }
            let done = (trial - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1.0);
            x = trial;
            gx = g_trial;
            if done || gx == 0.0 {
                break;
            }
        }
        Ok(x)
    }

    fn check_row(&self, i: usize) -> Result<()> {
        let bad = |v: &[f64]| v.iter().any(|x| !x.is_finite());
        let field = if !self.m[i].is_finite() {
            Some("M")
        } else if !self.mu[i].is_finite() {
            Some("mu")
        } else if !self.d[i].is_finite() {
            Some("D")
        } else if !self.k[i].is_finite() {
            Some("K")
        } else if bad(self.c.row(i)) {
            Some("C")
        } else if bad(self.r.row(i)) {
            Some("R")
        } else if bad(self.q.row(i)) {
            Some("Q")
        } else {
            None
        };
        match field {
            None => Ok(()),
            Some(field) => {
                let mut partial = self.partial_bundle(i);
                partial
                    .meta
                    .warnings
                    .push(format!("blow-up in {field} at row {i}; rows >= {i} dropped"));
                Err(Error::BlowUp {
                    row: i,
                    time: i as f64 * self.dt,
                    field,
                    partial: Box::new(partial),
                })
            }
        }
    }

    fn meta(&self) -> SchemeMeta {
        SchemeMeta {
            dt: self.dt,
            corrector_iters: self.corrector_iters,
            quadrature: Quadrature::Trapezoid,
            max_mu_residual: self.max_mu_residual,
            warnings: self.warnings.clone(),
        }
    }

    /// Rows `0..rows` as a bundle.
    fn partial_bundle(&self, rows: usize) -> SolutionBundle {
        let mut c = self.c.clone();
        let mut r = self.r.clone();
        let mut q = self.q.clone();
        c.truncate(rows);
        r.truncate(rows);
        q.truncate(rows);
        SolutionBundle {
            c,
            r,
            q,
            m: self.m[..rows].to_vec(),
            k: self.k[..rows].to_vec(),
            d: self.d[..rows].to_vec(),
            mu: self.mu[..rows].to_vec(),
            params: self.params.clone(),
            meta: self.meta(),
        }
    }

    fn into_bundle(self) -> SolutionBundle {
        let meta = self.meta();
        SolutionBundle {
            c: self.c,
            r: self.r,
            q: self.q,
            m: self.m,
            k: self.k,
            d: self.d,
            mu: self.mu,
            params: self.params.clone(),
            meta,
        }
    }
}

/// Trapezoid rule over nodes `0..=i` with spacing `dt`.
pub(crate) fn trapezoid_row(dt: f64, i: usize, f: impl Fn(usize) -> f64) -> f64 {
    if i == 0 {
        return 0.0;
    }
    let mut sum = 0.5 * (f(0) + f(i));
    for j in 1..i {
        sum += f(j);
    }
    dt * sum
}
