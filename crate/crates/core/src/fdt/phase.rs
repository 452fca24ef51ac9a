//! Predicted dynamical transition:
//! `1/(4 beta_c^2) = sup_{x in (Q,1]} (nu'(x) - nu'(Q))(1-x)(1-Q)/(x-Q)`
//! with `Q = Q^fdt(beta_c, h)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{require_no_random_field, solve_qfdt_detailed};
use crate::error::{invalid, Error, Result};
use crate::model::MixtureSpec;

/// Scan points for the supremum over `x`.
pub const SUP_SCAN_POINTS: usize = 10_000;
/// Excluded neighbourhood of the removable singularity at `x = Q`.
const SINGULAR_GAP: f64 = 1e-8;

/// Supremum of the ratio and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub value: f64,
    pub location: f64,
}

/// `sup_{x in (q,1]} (nu'(x) - nu'(q))(1-x)(1-q)/(x-q)`, the value at
/// `x -> q` being `nu''(q)(1-q)^2`.
pub fn sup_ratio(q: f64, mixture: &MixtureSpec) -> SupResult {
    let limit = mixture.nu2(q) * (1.0 - q).powi(2);
    let lo = q + SINGULAR_GAP;
    if lo >= 1.0 {
        return SupResult {
            value: limit,
            location: q,
        };
    }
    let g = |x: f64| (mixture.nu1(x) - mixture.nu1(q)) * (1.0 - x) * (1.0 - q) / (x - q);
    let n = SUP_SCAN_POINTS;
    let x_at = |i: usize| if i == n { 1.0 } else { lo + (1.0 - lo) * i as f64 / n as f64 };
    let mut best = (limit, q, None);
    for i in 0..=n {
        let x = x_at(i);
        let v = g(x);
        if v > best.0 {
            best = (v, x, Some(i));
        }
    }
    let Some(i) = best.2 else {
        return SupResult {
            value: best.0,
            location: best.1,
        };
    };
    // Golden-section refinement on the neighbouring scan cell.
    let (mut a, mut b) = (x_at(i.saturating_sub(1)), x_at((i + 1).min(n)));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * b.abs().max(1e-300) {
            break;
        }
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - ratio * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + ratio * (b - a);
            gd = g(d);
        }
    }
    let (x, v) = if gc > gd { (c, gc) } else { (d, gd) };
    if v > best.0 {
        SupResult { value: v, location: x }
    } else {
        SupResult {
            value: best.0,
            location: best.1,
        }
    }
}

/// One point of the phase boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub h: f64,
    pub beta_c: f64,
    pub q_at_transition: f64,
    /// `beta_c / h`; infinite at `h = 0`.
    pub gamma_ratio: f64,
    pub sup_location: f64,
    /// `|1/(4 beta_c^2) - sup|` at the returned point.
    pub residual: f64,
    /// The overlap equation had several roots at `beta_c`.
    pub multiple_roots: bool,
}

fn g_of_beta(beta: f64, h: f64, mixture: &MixtureSpec) -> Result<(f64, f64, SupResult, bool)> {
    let root = solve_qfdt_detailed(beta, h, mixture)?;
    let sup = sup_ratio(root.q, mixture);
    Ok((1.0 / (4.0 * beta * beta) - sup.value, root.q, sup, root.multiple()))
}

/// `beta_c(h)` by scanning `beta` geometrically over `[lo, hi]` for the
/// first sign change of `G(beta) = 1/(4 beta^2) - sup` and bisecting it.
pub fn beta_c_with(
    h: f64,
    mixture: &MixtureSpec,
    tol: f64,
    lo: f64,
    hi: f64,
    scan: usize,
) -> Result<PhasePoint> {
    require_no_random_field(mixture)?;
    if !(h.is_finite() && h >= 0.0) {
        return Err(invalid("h", format!("must be finite and >= 0, got {h}")));
    }
    if !(tol > 0.0) || !(lo > 0.0 && hi > lo) || scan < 2 {
        return Err(invalid("tol", "need tol > 0, 0 < lo < hi and at least 2 scan points"));
    }
    let ratio = (hi / lo).powf(1.0 / (scan - 1) as f64);
    let mut prev_beta = lo;
    let mut prev = g_of_beta(lo, h, mixture)?;
    let mut bracket = None;
    for k in 1..scan {
        let beta = if k == scan - 1 { hi } else { lo * ratio.powi(k as i32) };
        let cur = g_of_beta(beta, h, mixture)?;
        if prev.0 > 0.0 && cur.0 <= 0.0 {
            bracket = Some((prev_beta, beta, cur));
            break;
        }
        prev_beta = beta;
        prev = cur;
    }
    let (mut a, mut b, at_b) = bracket.ok_or(Error::NoCriticalBeta { lo, hi })?;
    let mut best = (b, at_b);
    // G is of order 1/beta^2, so the bracket is also narrowed to a relative
    // width; an absolute tol alone leaves beta loose at large h.
    while best.1 .0.abs() > tol || b - a > 1e-12 * b {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let cur = g_of_beta(mid, h, mixture)?;
        if cur.0 > 0.0 {
            a = mid;
            if cur.0.abs() < best.1 .0.abs() {
                best = (mid, cur);
            }
        } else {
            b = mid;
            best = (mid, cur);
        }
    }
    let (beta, (g, q, sup, multiple)) = best;
    Ok(PhasePoint {
        h,
        beta_c: beta,
        q_at_transition: q,
        gamma_ratio: if h > 0.0 { beta / h } else { f64::INFINITY },
        sup_location: sup.location,
        residual: g.abs(),
        multiple_roots: multiple,
    })
}

/// [`beta_c_with`] over `[1e-3, 1e3 (1 + h)]` with 400 scan points.
pub fn beta_c(h: f64, mixture: &MixtureSpec, tol: f64) -> Result<PhasePoint> {
    beta_c_with(h, mixture, tol, 1e-3, 1e3 * (1.0 + h), 400)
}

/// Outcome for one field value of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEntry {
    pub h: f64,
    pub result: std::result::Result<PhasePoint, String>,
}

/// `beta_c` for every field value, in parallel; failures are recorded per point.
pub fn phase_sweep(hs: &[f64], mixture: &MixtureSpec, tol: f64) -> Result<Vec<PhaseEntry>> {
    if hs.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
        return Err(invalid("h", "field values must be finite and >= 0"));
    }
    if hs.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("h", "field grid must be sorted"));
    }
    require_no_random_field(mixture)?;
    Ok(hs
        .par_iter()
        .map(|&h| PhaseEntry {
            h,
            result: beta_c(h, mixture, tol).map_err(|e| e.to_string()),
        })
        .collect())
}
