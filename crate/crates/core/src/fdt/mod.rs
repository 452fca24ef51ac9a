//! Stationary (FDT) regime: the scalar equation for the limiting overlap
//! `Q = 4(1-Q)^2 (beta^2 nu'(Q) + h^2)`, the convolution equation
//! `C'(s) = -int_0^s phi(C(v)) C'(s-v) dv - 1/2` for the limiting
//! correlation, `R = -2C'`, `M = 2h(1-Q)`, residuals of the stationary
//! system, exponential-decay fits and the predicted transition `beta_c(h)`.

mod phase;

pub use phase::{beta_c, beta_c_with, phase_sweep, sup_ratio, PhaseEntry, PhasePoint, SupResult};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::MixtureSpec;

/// Points of the sign-change scan for the overlap equation.
pub const Q_SCAN_POINTS: usize = 10_000;
/// Target for `|F(Q)|` at the returned root.
pub const Q_RESIDUAL_TOL: f64 = 1e-13;

/// `F(Q) = 4(1-Q)^2 (beta^2 nu'(Q) + h^2) - Q`.
pub fn overlap_equation(beta: f64, h: f64, mixture: &MixtureSpec, q: f64) -> f64 {
    4.0 * (1.0 - q).powi(2) * (beta * beta * mixture.nu1(q) + h * h) - q
}

/// Root of the overlap equation with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfdtRoot {
    pub q: f64,
    pub residual: f64,
    /// Sign changes (including exact zeros) found by the scan.
    pub sign_changes: usize,
    /// Search interval actually used.
    pub lo: f64,
    pub hi: f64,
}

impl QfdtRoot {
    pub fn multiple(&self) -> bool {
        self.sign_changes > 1
    }
}

pub(crate) fn require_no_random_field(mixture: &MixtureSpec) -> Result<()> {
    let rf = mixture.random_field();
    if rf != 0.0 {
        return Err(Error::RandomField(rf));
    }
    Ok(())
}

fn check_beta_h(beta: f64, h: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(invalid("beta", format!("must be finite and >= 0, got {beta}")));
    }
    if !(h.is_finite() && h >= 0.0) {
        return Err(invalid("h", format!("must be finite and >= 0, got {h}")));
    }
    Ok(())
}

/// Lowest root of the overlap equation on `[max(0, 1 - 1/(2h)), 1]`,
/// falling back to `[0, 1]` when that interval has no sign change.
pub fn solve_qfdt_detailed(beta: f64, h: f64, mixture: &MixtureSpec) -> Result<QfdtRoot> {
    check_beta_h(beta, h)?;
    require_no_random_field(mixture)?;
    let f = |q: f64| overlap_equation(beta, h, mixture, q);
    let lo = if h > 0.0 { (1.0 - 0.5 / h).max(0.0) } else { 0.0 };
    let mut found = scan_and_bisect(&f, lo, 1.0);
    if found.is_none() && lo > 0.0 {
        found = scan_and_bisect(&f, 0.0, 1.0);
    }
    let (q, sign_changes, a, b) = found.ok_or(Error::NoFdtRoot { lo, hi: 1.0 })?;
    Ok(QfdtRoot {
        q,
        residual: f(q).abs(),
        sign_changes,
        lo: a,
        hi: b,
    })
}

/// `Q^fdt` for `(beta, h)`.
pub fn solve_qfdt(beta: f64, h: f64, mixture: &MixtureSpec) -> Result<f64> {
    Ok(solve_qfdt_detailed(beta, h, mixture)?.q)
}

/// Scans `[a, b]`, bisects the first bracket and counts sign changes.
fn scan_and_bisect(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Option<(f64, usize, f64, f64)> {
    let n = Q_SCAN_POINTS;
    let x = |i: usize| if i == n { b } else { a + (b - a) * i as f64 / n as f64 };
    let mut changes = 0;
    let mut first: Option<(f64, f64)> = None;
    let mut prev_x = x(0);
    let mut prev = f(prev_x);
    if prev == 0.0 {
        changes += 1;
        first = Some((prev_x, prev_x));
    }
    for i in 1..=n {
        let xi = x(i);
        let fi = f(xi);
        if fi == 0.0 {
            changes += 1;
            first.get_or_insert((xi, xi));
        } else if prev != 0.0 && (prev < 0.0) != (fi < 0.0) {
            changes += 1;
            first.get_or_insert((prev_x, xi));
        }
        prev_x = xi;
        prev = fi;
    }
    let (mut lo, mut hi) = first?;
    if lo == hi {
        return Some((lo, changes, a, b));
    }
    let f_lo_neg = f(lo) < 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some((mid, changes, a, b));
        }
        if (fm < 0.0) == f_lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    Some((root, changes, a, b))
}

/// `phi(x) = 1/(2(1-Q)) + 2 beta^2 (nu'(x) - nu'(Q))`.
pub fn phi(beta: f64, q: f64, mixture: &MixtureSpec, x: f64) -> f64 {
    0.5 / (1.0 - q) + 2.0 * beta * beta * (mixture.nu1(x) - mixture.nu1(q))
}

/// Limiting correlation on a uniform lag grid, with `R = -2 C'` taken from
/// the same march.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfdtSolution {
    pub dt: f64,
    pub c: Vec<f64>,
    pub r: Vec<f64>,
}

impl CfdtSolution {
    pub fn tau(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

/// Largest value of `phi(x)(1-x)` on `[0, 1]` by dense scan, `x = q` included.
pub fn existence_margin(beta: f64, q: f64, mixture: &MixtureSpec) -> f64 {
    let n = Q_SCAN_POINTS;
    let g = |x: f64| phi(beta, q, mixture, x) * (1.0 - x);
    (0..=n)
        .map(|i| g(i as f64 / n as f64))
        .fold(g(q), f64::max)
}

/// Marches the convolution equation with trapezoidal quadrature.
///
/// With `D = C'` on the grid, step `n` reads
/// `D_n = -1/2 - dt [ (D_n phi(C_0) + D_0 phi(C_n))/2 + sum_{k=1}^{n-1} phi(C_k) D_{n-k} ]`
/// and `C_n = C_{n-1} + dt (D_{n-1} + D_n)/2`; the only nonlinearity is
/// `phi(C_n)` inside the `D_0` endpoint term, resolved by scalar Newton.
pub fn solve_cfdt(
    beta: f64,
    h: f64,
    q_fdt: f64,
    mixture: &MixtureSpec,
    dt: f64,
    tau_max: f64,
) -> Result<CfdtSolution> {
    check_beta_h(beta, h)?;
    if !(0.0..1.0).contains(&q_fdt) {
        return Err(invalid("q_fdt", format!("must lie in [0, 1), got {q_fdt}")));
    }
    if !(dt.is_finite() && dt > 0.0 && tau_max.is_finite() && tau_max > 0.0) {
        return Err(invalid("dt", "dt and tau_max must be positive"));
    }
    let n = (tau_max / dt).round() as usize;
    if n == 0 || (n as f64 * dt - tau_max).abs() > 1e-9 * tau_max {
        return Err(invalid("tau_max", "must be a whole number of steps"));
    }
    let margin = existence_margin(beta, q_fdt, mixture);
    if margin < 0.5 - 1e-12 {
        return Err(Error::NoFdtSolution(format!(
            "sup phi(x)(1-x) = {margin} is below 1/2"
        )));
    }
    let ph = |x: f64| phi(beta, q_fdt, mixture, x);
    let dph = |x: f64| 2.0 * beta * beta * mixture.nu2(x);

    let mut c = Vec::with_capacity(n + 1);
    let mut d = Vec::with_capacity(n + 1);
    let mut p = Vec::with_capacity(n + 1); // phi(C_k)
    c.push(1.0);
    d.push(-0.5);
    p.push(ph(1.0));
    let (d0, p0) = (d[0], p[0]);
    for step in 1..=n {
        let hist: f64 = (1..step).map(|k| p[k] * d[step - k]).sum();
        let base = -0.5 - dt * hist;
        // Solve r(x) = x + dt/2 (x p0 + d0 phi(C(x))) - base = 0.
        let c_of = |x: f64| c[step - 1] + 0.5 * dt * (d[step - 1] + x);
        let mut x = d[step - 1];
        for _ in 0..50 {
            let cx = c_of(x);
            let res = x + 0.5 * dt * (x * p0 + d0 * ph(cx)) - base;
            let slope = 1.0 + 0.5 * dt * (p0 + d0 * dph(cx) * 0.5 * dt);
            let next = x - res / slope;
            let done = (next - x).abs() <= 4.0 * f64::EPSILON * next.abs().max(1e-300);
            x = next;
            if done {
                break;
            }
        }
        let cn = c_of(x);
        if !cn.is_finite() || !(-1e-8..=1.0 + 1e-8).contains(&cn) {
            return Err(Error::Scheme(format!(
                "C left [0, 1] at tau = {}: {cn}",
                step as f64 * dt
            )));
        }
        c.push(cn);
        d.push(x);
        p.push(ph(cn));
    }
    let r = d.iter().map(|v| -2.0 * v).collect();
    Ok(CfdtSolution { dt, c, r })
}

/// Least-squares exponential fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `eta` in `series ~ A exp(-eta tau)`.
    pub rate: f64,
    /// Coefficient of determination of the log-linear fit.
    pub quality: f64,
    pub accepted: bool,
}

/// Quality below which a fit is rejected.
pub const MIN_FIT_QUALITY: f64 = 0.5;

/// Fits `log(series)` against `tau` over the trailing half of the series.
pub fn fit_decay(series: &[f64], dt: f64) -> Result<DecayFit> {
    if series.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 samples, got {}", series.len())));
    }
    let start = series.len() / 2;
    let window = &series[start..];
    if let Some(bad) = window.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Fit(format!(
            "non-positive entry {} at index {}",
            window[bad],
            start + bad
        )));
    }
    let n = window.len() as f64;
    let xs: Vec<f64> = (0..window.len()).map(|i| (start + i) as f64 * dt).collect();
    let ys: Vec<f64> = window.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let quality = if syy == 0.0 { 0.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit {
        rate: -slope,
        quality,
        accepted: quality >= MIN_FIT_QUALITY,
    })
}

/// Sup-norm residuals of the five stationary equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryResiduals {
    pub m: f64,
    pub r: f64,
    pub c: f64,
    pub q: f64,
    pub mu: f64,
}

impl StationaryResiduals {
    pub fn max(&self) -> f64 {
        [self.m, self.r, self.c, self.q, self.mu].into_iter().fold(0.0, f64::max)
    }
}

/// Full stationary solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdtSolution {
    pub beta: f64,
    pub h: f64,
    pub q_fdt: f64,
    pub m_fdt: f64,
    pub dt: f64,
    pub c_fdt: Vec<f64>,
    pub r_fdt: Vec<f64>,
    /// `1/2 + 2 beta^2 (nu'(1) - Q nu'(Q)) + h M`, the closed form implied
    /// by `R = -2C'`, `C(0) = 1`, `C(inf) = Q`.
    pub mu_stat: f64,
    /// Fit of `C - Q`; `None` when the covariance is below round-off
    /// too early to fit.
    pub decay: Option<DecayFit>,
    pub residuals: StationaryResiduals,
    pub multiple_roots: bool,
}

/// Solves the whole stationary system and checks it.
pub fn solve_fdt(beta: f64, h: f64, mixture: &MixtureSpec, dt: f64, tau_max: f64) -> Result<FdtSolution> {
    let root = solve_qfdt_detailed(beta, h, mixture)?;
    let q = root.q;
    let cf = solve_cfdt(beta, h, q, mixture, dt, tau_max)?;
    let m = 2.0 * h * (1.0 - q);
    let mu_stat = 0.5 + 2.0 * beta * beta * (mixture.nu1(1.0) - q * mixture.nu1(q)) + h * m;
    let cov: Vec<f64> = cf.c.iter().map(|c| c - q).collect();
    let floor = 1e-10 * (1.0 - q);
    let usable = cov.iter().position(|&v| !(v > floor)).unwrap_or(cov.len());
    let decay = fit_decay(&cov[..usable], dt).ok();
    let mut sol = FdtSolution {
        beta,
        h,
        q_fdt: q,
        m_fdt: m,
        dt,
        c_fdt: cf.c,
        r_fdt: cf.r,
        mu_stat,
        decay,
        residuals: StationaryResiduals {
            m: 0.0,
            r: 0.0,
            c: 0.0,
            q: 0.0,
            mu: 0.0,
        },
        multiple_roots: root.multiple(),
    };
    sol.residuals = stationary_residuals(&sol, mixture);
    Ok(sol)
}

/// Fourth-order finite-difference derivative on a uniform grid.
pub fn derivative(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    if n < 5 {
        return (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (v[b] - v[a]) / ((b - a) as f64 * dt)
            })
            .collect();
    }
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * dt)
            } else if i < 2 {
                (-25.0 * v[i] + 48.0 * v[i + 1] - 36.0 * v[i + 2] + 16.0 * v[i + 3] - 3.0 * v[i + 4])
                    / (12.0 * dt)
            } else {
                (25.0 * v[i] - 48.0 * v[i - 1] + 36.0 * v[i - 2] - 16.0 * v[i - 3] + 3.0 * v[i - 4])
                    / (12.0 * dt)
            }
        })
        .collect()
}

fn trapezoid(f: impl Fn(usize) -> f64, n: usize, dt: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let inner: f64 = (1..n).map(&f).sum();
    dt * (inner + 0.5 * (f(0) + f(n)))
}

/// Residuals of the stationary system for `(M, R, C, Q = const)` with
/// the tail closure `C = Q`, `R = 0` beyond the last lag. The `R` and `C`
/// equations are checked on the first half of the lag grid, where the
/// closure does not reach the convolution window.
pub fn stationary_residuals(fdt: &FdtSolution, mixture: &MixtureSpec) -> StationaryResiduals {
    let (beta, h, q, m) = (fdt.beta, fdt.h, fdt.q_fdt, fdt.m_fdt);
    let b2 = beta * beta;
    let (c, r, dt) = (&fdt.c_fdt, &fdt.r_fdt, fdt.dt);
    let n = c.len() - 1;
    let c_at = |i: usize| if i <= n { c[i] } else { q };
    let r_at = |i: usize| if i <= n { r[i] } else { 0.0 };

    let int_r_nu2 = trapezoid(|k| r[k] * mixture.nu2(c[k]), n, dt);
    let int_r = trapezoid(|k| r[k], n, dt);
    let int_psi_r = trapezoid(|k| mixture.psi(c[k]) * r[k], n, dt);
    let mu_quad = 0.5 + b2 * int_psi_r + h * m;
    let mu = fdt.mu_stat;

    let res_m = (-mu * m + h + b2 * m * int_r_nu2).abs();
    let res_q = (-mu * q + b2 * q * int_r_nu2 + b2 * mixture.nu1(q) * int_r + h * m).abs();
    let res_mu = (mu - mu_quad).abs();

    let dr = derivative(r, dt);
    let dc = derivative(c, dt);
    let w: Vec<f64> = (0..=n).map(|k| r[k] * mixture.nu2(c[k])).collect();
    let nu1_c: Vec<f64> = (0..=2 * n).map(|i| mixture.nu1(c_at(i))).collect();
    let half = n / 2;
    let mut res_r = 0.0f64;
    let mut res_c = 0.0f64;
    for i in 0..=half {
        let conv_r = trapezoid(|k| r[i - k] * w[k], i, dt);
        res_r = res_r.max((dr[i] - (-mu * r[i] + b2 * conv_r)).abs());
        // int_0^inf C(|tau - theta|) R(theta) nu''(C(theta)) dtheta
        let conv_c = trapezoid(|k| c_at(i.abs_diff(k)) * w[k], n, dt);
        // int_0^inf nu'(C(tau + u)) R(u) du
        let tail = trapezoid(|k| nu1_c[i + k] * r_at(k), n, dt);
        res_c = res_c.max((dc[i] - (-mu * c[i] + b2 * conv_c + b2 * tail + h * m)).abs());
    }
    StationaryResiduals {
        m: res_m,
        r: res_r,
        c: res_c,
        q: res_q,
        mu: res_mu,
    }
}
