//! Output of an integration run: the two-time fields plus one-time series.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::TwoTimeField;
use crate::model::{ConfinementSpec, ModelParams};

/// Quadrature rule used for the memory integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    Trapezoid,
}

/// How a bundle was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeMeta {
    pub dt: f64,
    pub corrector_iters: usize,
    pub quadrature: Quadrature,
    /// Largest `|mu_i - mu(row i)|` left after the corrector passes.
    pub max_mu_residual: f64,
    pub warnings: Vec<String>,
}

/// `C`, `R`, `Q` on the computed grid plus `M`, `K = C(s,s)`, `D = Q(s,s)`
/// and the drift coefficient `mu` (the multiplier in hard mode, `f'(K)` in
/// soft mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionBundle {
    pub c: TwoTimeField,
    pub r: TwoTimeField,
    pub q: TwoTimeField,
    pub m: Vec<f64>,
    pub k: Vec<f64>,
    pub d: Vec<f64>,
    pub mu: Vec<f64>,
    pub params: ModelParams,
    pub meta: SchemeMeta,
}

/// Fields along `t = t_w`, `s = t_w + tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    /// Row index of the snapped waiting time.
    pub wait_index: usize,
    pub tau: Vec<f64>,
    pub c: Vec<f64>,
    pub r: Vec<f64>,
    pub q: Vec<f64>,
}

impl SolutionBundle {
    /// Number of computed rows.
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.meta.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.meta.dt
    }

    /// Last computed time.
    pub fn t_max(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    /// Snaps a time to the nearest grid index.
    pub fn index_of(&self, t: f64) -> usize {
        (t / self.meta.dt).round().max(0.0) as usize
    }

    /// `C, R, Q (t_w + tau, t_w)` for `tau` on the grid up to `tau_max`.
    /// Both ends are snapped to the nearest grid node.
    pub fn two_time_slice(&self, t_wait: f64, tau_max: f64) -> Result<Slice> {
        if !(t_wait >= 0.0 && tau_max >= 0.0) {
            return Err(invalid("t_wait", "waiting time and tau_max must be >= 0"));
        }
        let w = self.index_of(t_wait);
        let span = self.index_of(tau_max);
        let last = w + span;
        if self.is_empty() || last >= self.len() {
            return Err(Error::OutOfRange {
                start: t_wait,
                end: t_wait + tau_max,
                available: self.t_max(),
            });
        }
        let mut out = Slice {
            wait_index: w,
            tau: Vec::with_capacity(span + 1),
            c: Vec::with_capacity(span + 1),
            r: Vec::with_capacity(span + 1),
            q: Vec::with_capacity(span + 1),
        };
        for n in 0..=span {
            out.tau.push(n as f64 * self.meta.dt);
            out.c.push(self.c.get(w + n, w));
            out.r.push(self.r.get(w + n, w));
            out.q.push(self.q.get(w + n, w));
        }
        Ok(out)
    }

    /// First row index holding a non-finite value, with the offending field.
    pub fn first_non_finite(&self) -> Option<(usize, &'static str)> {
        for i in 0..self.len() {
            let checks: [(&'static str, bool); 7] = [
                ("M", self.m[i].is_finite()),
                ("K", self.k[i].is_finite()),
                ("D", self.d[i].is_finite()),
                ("mu", self.mu[i].is_finite()),
                ("C", i >= self.c.rows() || self.c.row(i).iter().all(|v| v.is_finite())),
                ("R", i >= self.r.rows() || self.r.row(i).iter().all(|v| v.is_finite())),
                ("Q", i >= self.q.rows() || self.q.row(i).iter().all(|v| v.is_finite())),
            ];
            if let Some((name, _)) = checks.iter().find(|(_, ok)| !ok) {
                return Some((i, name));
            }
        }
        None
    }

    /// The same trajectory expressed in the slowed clock `s' = h s`:
    /// `U_h(s') = U(s' / h)`. Values are unchanged, the step becomes `h dt`
    /// and the drift coefficient becomes `mu / h`.
    pub fn time_rescaled(&self, h: f64) -> Result<SolutionBundle> {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid("h", format!("time rescaling needs h > 0, got {h}")));
        }
        let mut out = self.clone();
        let dt = self.meta.dt * h;
        out.c = out.c.with_dt(dt);
        out.r = out.r.with_dt(dt);
        out.q = out.q.with_dt(dt);
        out.mu.iter_mut().for_each(|v| *v /= h);
        out.meta.dt = dt;
        Ok(out)
    }

    /// Maps a hard-sphere run at radius `r` onto the unit-radius pure-spin
    /// coordinates: time multiplied by `r^(m/2 - 1)`, `C, Q, K, D` divided by
    /// `r`, `M` divided by `sqrt(r)`, `R` unchanged.
    ///
    /// The returned parameters describe the limiting pure system: leading
    /// monomial of the mixture, `r = 1`, `k = 0`, field `h_r / r^((m-1)/2)`.
    pub fn radius_rescaled(&self) -> Result<SolutionBundle> {
        let ConfinementSpec::Hard { .. } = self.params.confinement else {
            return Err(invalid("confinement", "radius rescaling applies to hard runs"));
        };
        let radius = self.params.r;
        let m = self.params.mixture.degree() as f64;
        let time_factor = radius.powf(m / 2.0 - 1.0);
        let dt = self.meta.dt * time_factor;
        let sqrt_r = radius.sqrt();

        let mut out = self.clone();
        out.c.map_in_place(|v| v / radius);
        out.q.map_in_place(|v| v / radius);
        out.c = out.c.with_dt(dt);
        out.q = out.q.with_dt(dt);
        out.r = out.r.with_dt(dt);
        out.m.iter_mut().for_each(|v| *v /= sqrt_r);
        out.k.iter_mut().for_each(|v| *v /= radius);
        out.d.iter_mut().for_each(|v| *v /= radius);
        out.mu.iter_mut().for_each(|v| *v /= time_factor);
        out.meta.dt = dt;
        out.params = ModelParams {
            beta: self.params.beta,
            h: self.params.h / radius.powf((m - 1.0) / 2.0),
            r: 1.0,
            alpha: self.params.alpha,
            mixture: self.params.mixture.leading_pure(),
            confinement: ConfinementSpec::Hard { r: 1.0, k: 0.0 },
        };
        Ok(out)
    }
}
