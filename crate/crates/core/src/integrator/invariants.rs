//! Post-hoc checks of the structural properties every solution must have:
//! positivity, `|M| <= sqrt(K)`, the response bound
//! `|int_{t1}^{t2} R(s,u) du|^2 <= K(s) (t2 - t1)` and non-negative
//! definiteness of `C` and `Q`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bundle::SolutionBundle;
use crate::field::TwoTimeField;
use crate::model::ConfinementSpec;

/// Largest Gram matrix used for the eigenvalue checks.
pub const MAX_GRAM_NODES: usize = 200;
/// Rows and columns sampled by the response-bound check.
pub const MAX_RBD_NODES: usize = 400;

/// Worst-case violations found in a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    /// Hard mode: `max |C(i,i) - r|`; both modes include `|K - C(i,i)|`, `|D - Q(i,i)|`.
    pub max_constraint_violation: f64,
    pub min_c: f64,
    pub min_r: f64,
    pub min_m: f64,
    pub min_q: f64,
    /// Largest `|int R|^2 - K (t2 - t1)`, never below 0 since `t1 = t2` is included.
    pub rbd_violation: f64,
    pub min_eigenvalue_c: f64,
    pub min_eigenvalue_q: f64,
    /// Largest `|M(s)| - sqrt(K(s))`, clipped at 0.
    pub magnetization_bound_violation: f64,
    /// Carried over from the scheme metadata.
    pub max_mu_residual: f64,
}

/// Pass thresholds for an [`InvariantReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantTolerances {
    pub constraint: f64,
    pub min_value: f64,
    pub rbd: f64,
    pub eigenvalue: f64,
    pub magnetization: f64,
    pub mu_residual: f64,
}

impl InvariantTolerances {
    /// Defaults scaled by the radius `r`.
    pub fn for_radius(r: f64) -> Self {
        Self {
            constraint: 1e-8 * r,
            min_value: 1e-8,
            rbd: 1e-6 * r,
            eigenvalue: 1e-6,
            magnetization: 1e-8 * r.sqrt().max(1.0),
            mu_residual: 1e-9,
        }
    }
}

/// One named check with its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantLine {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl InvariantReport {
    /// The report as `(name, value, tolerance, pass)` lines. Lower bounds
    /// (minima, eigenvalues) pass when `value >= -tolerance`.
    pub fn lines(&self, tol: &InvariantTolerances) -> Vec<InvariantLine> {
        let upper = |name, value: f64, tolerance: f64| InvariantLine {
            name,
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        };
        let lower = |name, value: f64, tolerance: f64| InvariantLine {
            name,
            value,
            tolerance,
            pass: value.is_finite() && value >= -tolerance,
        };
        vec![
            upper("max_constraint_violation", self.max_constraint_violation, tol.constraint),
            lower("min_C", self.min_c, tol.min_value),
            lower("min_R", self.min_r, tol.min_value),
            lower("min_M", self.min_m, tol.min_value),
            lower("min_Q", self.min_q, tol.min_value),
            upper("rbd_violation", self.rbd_violation, tol.rbd),
            lower("min_eigenvalue_C", self.min_eigenvalue_c, tol.eigenvalue),
            lower("min_eigenvalue_Q", self.min_eigenvalue_q, tol.eigenvalue),
            upper(
                "magnetization_bound_violation",
                self.magnetization_bound_violation,
                tol.magnetization,
            ),
            upper("max_mu_residual", self.max_mu_residual, tol.mu_residual),
        ]
    }

    pub fn passes(&self, tol: &InvariantTolerances) -> bool {
        self.lines(tol).iter().all(|l| l.pass)
    }
}

/// Evenly spaced indices in `0..n`, at most `max` of them, always
/// including the first and last.
pub(crate) fn thinned(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let mut out: Vec<usize> = (0..max)
        .map(|a| ((a as f64) * (n - 1) as f64 / (max - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

fn field_min(f: &TwoTimeField) -> f64 {
    f.as_slice().iter().copied().fold(f64::INFINITY, f64::min)
}

fn gram_min_eigenvalue(f: &TwoTimeField, nodes: &[usize]) -> f64 {
    let n = nodes.len();
    let mat = DMatrix::from_fn(n, n, |a, b| f.get(nodes[a], nodes[b]));
    SymmetricEigen::new(mat)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn rbd_violation(bundle: &SolutionBundle) -> f64 {
    let n = bundle.len();
    let dt = bundle.dt();
    let mut worst = 0.0f64;
    let mut prefix = Vec::with_capacity(n);
    for &s in &thinned(n, MAX_RBD_NODES) {
        let row = bundle.r.row(s);
        prefix.clear();
        prefix.push(0.0);
        for u in 1..=s {
            let last = prefix[u - 1];
            prefix.push(last + 0.5 * dt * (row[u - 1] + row[u]));
        }
        let k = bundle.k[s];
        let nodes = thinned(s + 1, MAX_RBD_NODES);
        for (a, &t1) in nodes.iter().enumerate() {
            for &t2 in &nodes[a..] {
                let integral = prefix[t2] - prefix[t1];
                let excess = integral * integral - k * (t2 - t1) as f64 * dt;
                worst = worst.max(excess);
            }
        }
    }
    worst
}

/// Computes the invariant report for a completed bundle.
pub fn check_invariants(bundle: &SolutionBundle) -> InvariantReport {
    let n = bundle.len();
    let hard_r = match bundle.params.confinement {
        ConfinementSpec::Hard { r, .. } => Some(r),
        _ => None,
    };
    let mut constraint = 0.0f64;
    let mut mag = 0.0f64;
    for i in 0..n {
        let cd = bundle.c.get(i, i);
        constraint = constraint
            .max((cd - bundle.k[i]).abs())
            .max((bundle.q.get(i, i) - bundle.d[i]).abs());
        if let Some(r) = hard_r {
            constraint = constraint.max((cd - r).abs());
        }
        mag = mag.max(bundle.m[i].abs() - bundle.k[i].max(0.0).sqrt());
    }
    let nodes = thinned(n, MAX_GRAM_NODES);
    InvariantReport {
        max_constraint_violation: constraint,
        min_c: field_min(&bundle.c),
        min_r: field_min(&bundle.r),
        min_m: bundle.m.iter().copied().fold(f64::INFINITY, f64::min),
        min_q: field_min(&bundle.q),
        rbd_violation: rbd_violation(bundle),
        min_eigenvalue_c: gram_min_eigenvalue(&bundle.c, &nodes),
        min_eigenvalue_q: gram_min_eigenvalue(&bundle.q, &nodes),
        magnetization_bound_violation: mag.max(0.0),
        max_mu_residual: bundle.meta.max_mu_residual,
    }
}
