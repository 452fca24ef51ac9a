//! Response function from the non-crossing pairing expansion
//! `R(s,t) = exp(-int_t^s mu) H(s,t)` with
//! `H = 1 + sum_n eps^(2n) sum_{sigma in NC_n} int_{t<=t_1<=...<=t_2n<=s} prod_{i<sigma(i)} nu''(C(t_i, t_sigma(i)))`.
//!
//! Independent of the integrator: it only reads `C` (and `mu` for the
//! exponential prefactor), so agreement with the integrator's `R` is a real
//! cross-check.
//!
//! Evaluation walks the ordered variables left to right as a Dyck path. A
//! variable either opens an arc (its partner comes later: the state gains an
//! axis for the partner position and the factor `nu''(C(u, partner))`) or
//! closes the most recent open arc (the state is restricted to the diagonal
//! where that pending partner equals the variable). After each variable the
//! state is integrated by cumulative trapezoid up to the next variable.
//! States with equal depth are summed, so every `sigma in NC_n` is covered
//! exactly once without enumerating them.

use crate::error::{invalid, Error, Result};
use crate::field::TwoTimeField;
use crate::model::MixtureSpec;

/// Largest order accepted anywhere in this module.
pub const MAX_ORDER: usize = 8;
/// Default cap on quadrature nodes per simplex dimension.
pub const DEFAULT_SIMPLEX_NODES: usize = 41;
/// Largest DP state (entries) before refusing.
const MAX_STATE: usize = 50_000_000;

/// A fixed-point free, non-crossing involution of `{0, ..., 2n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NonCrossingInvolution {
    pub n: usize,
    /// `pairing[i]` is the partner of `i`.
    pub pairing: Vec<usize>,
}

impl NonCrossingInvolution {
    /// Arcs `(i, sigma(i))` with `i < sigma(i)`, 1-based.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        (0..2 * self.n)
            .filter(|&i| i < self.pairing[i])
            .map(|i| (i + 1, self.pairing[i] + 1))
            .collect()
    }
}

/// Catalan number `C_n`.
pub fn catalan(n: usize) -> u64 {
    let mut c: u64 = 1;
    for k in 0..n as u64 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

/// Stack test: scanning left to right, every closing index must match the
/// most recent unmatched opening index.
pub fn is_noncrossing(pairing: &[usize]) -> bool {
    let mut stack = Vec::with_capacity(pairing.len() / 2);
    for (i, &p) in pairing.iter().enumerate() {
        if p == i || p >= pairing.len() || pairing[p] != i {
            return false;
        }
        if p > i {
            stack.push(i);
        } else if stack.pop() != Some(p) {
            return false;
        }
    }
    stack.is_empty()
}

/// The O(n^2) definition: some `i < j < sigma(i) < sigma(j)`.
pub fn has_crossing(pairing: &[usize]) -> bool {
    let arcs: Vec<(usize, usize)> = (0..pairing.len())
        .filter(|&i| i < pairing[i])
        .map(|i| (i, pairing[i]))
        .collect();
    arcs.iter()
        .any(|&(i, pi)| arcs.iter().any(|&(j, pj)| i < j && j < pi && pi < pj))
}

/// All fixed-point free involutions of `{0, ..., 2n-1}`.
pub fn all_pairings(n: usize) -> Vec<Vec<usize>> {
    fn rec(pairing: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some(first) = pairing.iter().position(|&p| p == usize::MAX) else {
            out.push(pairing.clone());
            return;
        };
        for other in first + 1..pairing.len() {
            if pairing[other] == usize::MAX {
                pairing[first] = other;
                pairing[other] = first;
                rec(pairing, out);
                pairing[first] = usize::MAX;
                pairing[other] = usize::MAX;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut vec![usize::MAX; 2 * n], &mut out);
    out
}

/// Every element of `NC_n`, `1 <= n <= 8`.
pub fn enumerate_nc(n: usize) -> Result<Vec<NonCrossingInvolution>> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(invalid("n", format!("must lie in 1..={MAX_ORDER}, got {n}")));
    }
    Ok(all_pairings(n)
        .into_iter()
        .filter(|p| is_noncrossing(p))
        .map(|pairing| NonCrossingInvolution { n, pairing })
        .collect())
}

/// Truncation order and quadrature resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesConfig {
    pub n_max: usize,
    /// Nodes per simplex dimension; `None` uses every grid node of the
    /// window, subsampled to at most [`DEFAULT_SIMPLEX_NODES`] (fewer at
    /// high order so the state stays in memory).
    pub simplex_nodes: Option<usize>,
    /// Largest accepted bound on the omitted terms.
    pub tail_tolerance: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            n_max: 3,
            simplex_nodes: None,
            tail_tolerance: 1e-6,
        }
    }
}

/// Truncated `H(s,t)` with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// `partial_sums[n]` is the sum of the terms of order `0..=n`.
    pub partial_sums: Vec<f64>,
    /// Bound on the omitted terms `n > n_max`.
    pub tail_bound: f64,
    /// Quadrature nodes per dimension actually used.
    pub nodes: usize,
}

/// `sum_{n >= 0} Catalan(n) x^n / (2n)!` restricted to `n in range`.
pub fn catalan_sum(x: f64, range: std::ops::Range<usize>) -> f64 {
    // term_n = Catalan(n) x^n / (2n)! = x^n / (n! (n+1)!)
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 0..range.end {
        if n > 0 {
            term *= x / (n as f64 * (n + 1) as f64);
        }
        if n >= range.start {
            sum += term;
        }
    }
    sum
}

/// `sum_{n > n_max} Catalan(n) x^n / (2n)!`, summed until negligible.
fn catalan_tail(x: f64, n_max: usize) -> f64 {
    let mut term = 1.0;
    let mut tail = 0.0;
    let mut n = 0usize;
    loop {
        if n > 0 {
            term *= x / (n as f64 * (n + 1) as f64);
        }
        if n > n_max {
            tail += term;
            if term <= 1e-18 * tail.max(1e-300) || n > n_max + 200 {
                break;
            }
        }
        n += 1;
    }
    tail
}

/// Picks a node stride dividing `span` so that at most `cap` nodes remain.
fn node_stride(span: usize, cap: usize) -> usize {
    let cap = cap.max(2);
    let min_stride = span.div_ceil(cap - 1).max(1);
    (min_stride..=span).find(|s| span % s == 0).unwrap_or(span)
}

/// Truncated series for `H(s,t)` with prefactor `epsilon` (the inverse
/// temperature for the plain system), reading `C` from `c`.
pub fn h_series(
    c: &TwoTimeField,
    epsilon: f64,
    mixture: &MixtureSpec,
    s: f64,
    t: f64,
    cfg: &SeriesConfig,
) -> Result<SeriesValue> {
    if !(1..=MAX_ORDER).contains(&cfg.n_max) {
        return Err(invalid("n_max", format!("must lie in 1..={MAX_ORDER}")));
    }
    if !(t >= 0.0 && s >= t) {
        return Err(invalid("s", format!("need 0 <= t <= s, got t = {t}, s = {s}")));
    }
    let dt = c.dt();
    let (ti, si) = ((t / dt).round() as usize, (s / dt).round() as usize);
    let on_grid = |x: f64, i: usize| (x - i as f64 * dt).abs() <= 1e-9 * dt.max(x);
    if !on_grid(t, ti) || !on_grid(s, si) {
        return Err(invalid("s", "s and t must be grid times"));
    }
    if si >= c.rows() {
        return Err(Error::OutOfRange {
            start: t,
            end: s,
            available: (c.rows().saturating_sub(1)) as f64 * dt,
        });
    }
    let span = si - ti;
    let tau = span as f64 * dt;
    if span == 0 || epsilon == 0.0 {
        return Ok(SeriesValue {
            value: 1.0,
            partial_sums: vec![1.0; cfg.n_max + 1],
            tail_bound: 0.0,
            nodes: span + 1,
        });
    }

    let cap = match cfg.simplex_nodes {
        Some(n) => n,
        None => {
            // Largest node count whose state fits the budget at this order.
            let fit = (MAX_STATE as f64).powf(1.0 / (cfg.n_max as f64 + 1.0)).floor() as usize;
            fit.min(DEFAULT_SIMPLEX_NODES)
        }
    };
    let stride = node_stride(span, cap);
    let nodes: Vec<usize> = (0..=span / stride).map(|a| ti + a * stride).collect();
    let len = nodes.len();
    let state = len.checked_pow(cfg.n_max as u32 + 1).unwrap_or(usize::MAX);
    if state > MAX_STATE {
        return Err(Error::Resource {
            what: format!("series state with {len} nodes at order {}", cfg.n_max),
            required_bytes: (state as u64).saturating_mul(8),
            limit_bytes: MAX_STATE as u64 * 8,
        });
    }
    let h = stride as f64 * dt;

    let mut kernel = vec![0.0; len * len];
    let mut kappa_max = 0.0f64;
    let mut kappa_sum = 0.0;
    let mut count = 0usize;
    for a in 0..len {
        for b in 0..len {
            let v = mixture.nu2(c.get(nodes[a], nodes[b]));
            kernel[a * len + b] = v;
            kappa_max = kappa_max.max(v);
            if b >= a {
                kappa_sum += v;
                count += 1;
            }
        }
    }
    let eps2 = epsilon * epsilon;
    let tail_bound = catalan_tail(eps2 * kappa_max * tau * tau, cfg.n_max);
    if !(tail_bound <= cfg.tail_tolerance) {
        return Err(Error::Truncation {
            bound: tail_bound,
            tolerance: cfg.tail_tolerance,
            n_max: cfg.n_max,
        });
    }

    // Control variate: the same quadrature applied to the constant kernel
    // kappa_bar, whose exact terms are known, cancels most of the
    // discretization error and makes constant kernels exact.
    let kappa_bar = kappa_sum / count as f64;
    let flat = vec![kappa_bar; len * len];
    let raw = simplex_terms(&kernel, len, h, cfg.n_max);
    let reference = simplex_terms(&flat, len, h, cfg.n_max);

    let mut partial_sums = Vec::with_capacity(cfg.n_max + 1);
    let mut total = 1.0;
    partial_sums.push(total);
    let mut eps_pow = 1.0;
    for n in 1..=cfg.n_max {
        eps_pow *= eps2;
        let exact = catalan(n) as f64 * kappa_bar.powi(n as i32) * tau.powi(2 * n as i32)
            / factorial(2 * n);
        total += eps_pow * (raw[n] - reference[n] + exact);
        partial_sums.push(total);
    }
    Ok(SeriesValue {
        value: total,
        partial_sums,
        tail_bound,
        nodes: len,
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `terms[n] = sum_{sigma in NC_n}` of the nested-trapezoid simplex
/// integral of `prod kernel[t_i, t_sigma(i)]` over nodes spaced `h`.
fn simplex_terms(kernel: &[f64], len: usize, h: f64, n_max: usize) -> Vec<f64> {
    let mut terms = vec![0.0; n_max + 1];
    terms[0] = 1.0;
    // states[d]: layout (p_1, ..., p_d, x), x fastest. Depth 0 before any
    // variable is placed: the first variable's density is 1.
    let mut states: Vec<Option<Vec<f64>>> = vec![None; n_max + 1];
    states[0] = Some(vec![1.0; len]);
    for k in 1..=2 * n_max {
        let mut next: Vec<Option<Vec<f64>>> = vec![None; n_max + 1];
        for d in 0..=n_max {
            let Some(phi) = states[d].as_ref() else { continue };
            // Arcs still open after step k must close within the remaining steps.
            if d < n_max && d + 1 <= 2 * n_max - k {
                let opened = open_arc(phi, d, len, kernel);
                add_into(&mut next[d + 1], integrate_last(opened, len, h));
            }
            if d > 0 {
                let closed = close_arc(phi, d, len);
                add_into(&mut next[d - 1], integrate_last(closed, len, h));
            }
        }
        states = next;
        if k % 2 == 0 {
            if let Some(done) = states[0].as_ref() {
                terms[k / 2] = done[len - 1];
            }
        }
    }
    terms
}

fn add_into(slot: &mut Option<Vec<f64>>, v: Vec<f64>) {
    match slot {
        Some(acc) => acc.iter_mut().zip(v).for_each(|(a, b)| *a += b),
        None => *slot = Some(v),
    }
}

/// `(p, u) -> (p, q, u)` with the factor `kernel[u, q]`.
fn open_arc(phi: &[f64], d: usize, len: usize, kernel: &[f64]) -> Vec<f64> {
    let outer = len.pow(d as u32);
    let mut out = vec![0.0; outer * len * len];
    for p in 0..outer {
        let src = &phi[p * len..(p + 1) * len];
        for q in 0..len {
            let dst = &mut out[(p * len + q) * len..(p * len + q + 1) * len];
            for u in 0..len {
                dst[u] = src[u] * kernel[u * len + q];
            }
        }
    }
    out
}

/// `(p_1..p_d, u) -> (p_1..p_{d-1}, u)` restricted to `p_d = u`.
fn close_arc(phi: &[f64], d: usize, len: usize) -> Vec<f64> {
    let outer = len.pow(d as u32 - 1);
    let mut out = vec![0.0; outer * len];
    for p in 0..outer {
        for u in 0..len {
            out[p * len + u] = phi[(p * len + u) * len + u];
        }
    }
    out
}

/// Cumulative trapezoid along the last axis, from the first node.
fn integrate_last(mut v: Vec<f64>, len: usize, h: f64) -> Vec<f64> {
    for row in v.chunks_exact_mut(len) {
        let mut acc = 0.0;
        let mut prev = row[0];
        row[0] = 0.0;
        for x in row.iter_mut().skip(1) {
            let cur = *x;
            acc += 0.5 * h * (prev + cur);
            prev = cur;
            *x = acc;
        }
    }
    v
}

/// `exp(-int_t^s mu) * h_value`, the integral by trapezoid on the grid of `mu`.
pub fn response_from_series(mu: &[f64], dt: f64, h_value: f64, s: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0 && s >= t) {
        return Err(invalid("s", "need 0 <= t <= s"));
    }
    let (ti, si) = ((t / dt).round() as usize, (s / dt).round() as usize);
    if si >= mu.len() {
        return Err(Error::OutOfRange {
            start: t,
            end: s,
            available: (mu.len().saturating_sub(1)) as f64 * dt,
        });
    }
    let mut integral = 0.0;
    for j in ti..si {
        integral += 0.5 * dt * (mu[j] + mu[j + 1]);
    }
    Ok((-integral).exp() * h_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldKind;
    use proptest::prelude::*;

    fn constant_field(value: f64, dt: f64, rows: usize) -> TwoTimeField {
        let mut f = TwoTimeField::new(dt, FieldKind::Symmetric);
        for i in 0..rows {
            f.push_row(&vec![value; i + 1]);
        }
        f
    }

    fn field_from(dt: f64, rows: usize, g: impl Fn(f64, f64) -> f64) -> TwoTimeField {
        let mut f = TwoTimeField::new(dt, FieldKind::Symmetric);
        for i in 0..rows {
            let row: Vec<f64> = (0..=i).map(|j| g(i as f64 * dt, j as f64 * dt)).collect();
            f.push_row(&row);
        }
        f
    }

    /// `(2 pi)^-1 int_{-2}^{2} e^{a x} sqrt(4 - x^2) dx` via `x = 2 cos(theta)`,
    /// a smooth periodic integrand where the trapezoid rule converges
    /// geometrically.
    fn semicircle(a: f64) -> f64 {
        let m = 2000;
        let dth = std::f64::consts::PI / m as f64;
        let mut sum = 0.0;
        for k in 0..=m {
            let th = k as f64 * dth;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            sum += w * (2.0 * a * th.cos()).exp() * 4.0 * th.sin().powi(2);
        }
        sum * dth / (2.0 * std::f64::consts::PI)
    }

    #[test]
    fn catalan_numbers() {
        let expect = [1u64, 1, 2, 5, 14, 42, 132, 429, 1430];
        for (n, &c) in expect.iter().enumerate() {
            assert_eq!(catalan(n), c);
        }
    }

    #[test]
    fn enumeration_small_cases() {
        let one = enumerate_nc(1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].arcs(), vec![(1, 2)]);
        let two = enumerate_nc(2).unwrap();
        let mut arcs: Vec<_> = two.iter().map(|s| s.arcs()).collect();
        arcs.sort();
        assert_eq!(arcs, vec![vec![(1, 2), (3, 4)], vec![(1, 4), (2, 3)]]);
        assert_eq!(all_pairings(2).len(), 3);
    }

    #[test]
    fn enumeration_counts_match_catalan() {
        for n in 1..=6 {
            assert_eq!(enumerate_nc(n).unwrap().len() as u64, catalan(n));
        }
        assert_eq!(all_pairings(4).len(), 105);
        assert_eq!(enumerate_nc(4).unwrap().len(), 14);
    }

    #[test]
    fn stack_test_agrees_with_pairwise_definition() {
        for n in 1..=5 {
            for p in all_pairings(n) {
                assert_eq!(is_noncrossing(&p), !has_crossing(&p), "{p:?}");
            }
        }
    }

    #[test]
    fn enumeration_is_duplicate_free() {
        let all = enumerate_nc(5).unwrap();
        let set: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
    }

    #[test]
    fn enumeration_range_guard() {
        assert!(enumerate_nc(0).is_err());
        assert!(enumerate_nc(9).is_err());
    }

    #[test]
    fn zero_coupling_gives_one() {
        let c = constant_field(0.5, 0.05, 30);
        let mix = MixtureSpec::pure(3, 1.0).unwrap();
        let v = h_series(&c, 0.0, &mix, 1.0, 0.0, &SeriesConfig::default()).unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn constant_kernel_matches_catalan_and_semicircle() {
        // nu'' = 1 for the pure 2-spin mixture, so the kernel is constant.
        let mix = MixtureSpec::pure(2, 1.0).unwrap();
        let c = constant_field(0.8, 0.05, 40);
        let (beta, tau) = (0.5, 1.0);
        let cfg = SeriesConfig {
            n_max: 6,
            ..SeriesConfig::default()
        };
        let v = h_series(&c, beta, &mix, 1.5, 0.5, &cfg).unwrap();
        let a = beta * tau;
        let scalar = catalan_sum(a * a, 0..40);
        assert!((v.value - scalar).abs() <= 1e-10, "{} vs {scalar}", v.value);
        assert!((scalar - semicircle(a)).abs() <= 1e-10);
    }

    #[test]
    fn quadrature_alone_converges_for_constant_kernel() {
        let terms = simplex_terms(&vec![1.0; 81 * 81], 81, 1.0 / 80.0, 2);
        assert!((terms[1] - 0.5).abs() < 1e-4);
        assert!((terms[2] - 2.0 / 24.0).abs() < 1e-4);
    }

    /// Direct nested quadrature of one term for one pairing, by brute force
    /// over grid tuples, to validate the DP bookkeeping.
    fn brute_term(kernel: &dyn Fn(usize, usize) -> f64, len: usize, h: f64, n: usize) -> f64 {
        let pairings = enumerate_nc(n).unwrap();
        let mut total = 0.0;
        // Nested trapezoid weights: integrate t_1 over [0, t_2], ..., t_2n over [0, L].
        fn rec(
            depth: usize,
            upper: usize,
            vars: &mut Vec<usize>,
            weight: f64,
            h: f64,
            f: &dyn Fn(&[usize]) -> f64,
        ) -> f64 {
            if depth == 0 {
                return weight * f(vars);
            }
            if upper == 0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for u in 0..=upper {
                let w = if u == 0 || u == upper { 0.5 * h } else { h };
                vars.push(u);
                acc += rec(depth - 1, u, vars, weight * w, h, f);
                vars.pop();
            }
            acc
        }
        for sigma in &pairings {
            let f = |vars: &[usize]| {
                // vars were pushed from t_2n down to t_1.
                let pos = |i: usize| vars[2 * n - 1 - i];
                sigma
                    .arcs()
                    .iter()
                    .map(|&(a, b)| kernel(pos(a - 1), pos(b - 1)))
                    .product::<f64>()
            };
            total += rec(2 * n, len - 1, &mut Vec::new(), 1.0, h, &f);
        }
        total
    }

    #[test]
    fn dp_matches_brute_force_nested_quadrature() {
        let len = 6;
        let h = 0.2;
        let kern = |a: usize, b: usize| 1.0 + 0.3 * a as f64 - 0.1 * b as f64 + 0.05 * (a * b) as f64;
        let mut kernel = vec![0.0; len * len];
        for a in 0..len {
            for b in 0..len {
                kernel[a * len + b] = kern(a, b);
            }
        }
        let dp = simplex_terms(&kernel, len, h, 2);
        for n in 1..=2 {
            let brute = brute_term(&kern, len, h, n);
            assert!((dp[n] - brute).abs() <= 1e-12 * brute.abs(), "n={n}: {} vs {brute}", dp[n]);
        }
    }

    #[test]
    fn truncation_error_reports_bound() {
        let mix = MixtureSpec::pure(2, 1.0).unwrap();
        let c = constant_field(1.0, 0.1, 60);
        match h_series(&c, 2.0, &mix, 5.0, 0.0, &SeriesConfig::default()) {
            Err(Error::Truncation { bound, .. }) => assert!(bound > 1e-6),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn response_prefactor() {
        let mu = vec![0.5; 101];
        let r = response_from_series(&mu, 0.01, 1.0, 0.8, 0.3).unwrap();
        assert!((r - (-0.25f64).exp()).abs() < 1e-14);
        assert_eq!(response_from_series(&mu, 0.01, 1.0, 0.4, 0.4).unwrap(), 1.0);
    }

    #[test]
    fn stride_divides_span() {
        assert_eq!(node_stride(40, 41), 1);
        assert_eq!(node_stride(100, 41), 4);
        assert_eq!(node_stride(7, 3), 7);
    }

    proptest! {
        #[test]
        fn partial_sums_monotone_and_bounded(decay in 0.1f64..2.0, beta in 0.05f64..0.25) {
            let mix = MixtureSpec::new(vec![0.0, 1.0, 0.8]).unwrap();
            let c = field_from(0.05, 25, |s, t| (-decay * (s - t)).exp());
            let cfg = SeriesConfig { n_max: 3, simplex_nodes: Some(13), tail_tolerance: 1e-6 };
            let v = h_series(&c, beta, &mix, 1.2, 0.0, &cfg).unwrap();
            prop_assert!(v.value >= 1.0);
            for w in v.partial_sums.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            let a = beta * mix.nu2(1.0).sqrt() * 1.2;
            prop_assert!(v.value <= semicircle(a) + 1e-6);
        }
    }
}
