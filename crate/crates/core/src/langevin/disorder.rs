//! Gaussian couplings `J_{i_1..i_p}` and the gradient `G = -grad H`.
//!
//! One Gaussian is drawn per multiset `{i_1..i_p}` with variance
//! `prod_k l_k! * N^(1-p)` (`l_k` the multiplicities) and written to every
//! index permutation, so the dense tensor is exactly symmetric.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::model::MixtureSpec;

/// Largest supported interaction order for dense storage.
pub const MAX_DENSE_ORDER: usize = 3;
/// Largest supported system size for dense storage.
pub const MAX_DENSE_N: usize = 2000;
/// Default cap on coupling storage.
pub const DEFAULT_DISORDER_LIMIT: u64 = 2 << 30;

/// Dense coupling tensor of order `p`, row-major over `(i_1, ..., i_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTensor {
    pub p: usize,
    pub data: Vec<f64>,
}

/// One disorder realization.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSample {
    pub n: usize,
    pub seed: u64,
    /// Coefficients of the mixture the couplings were drawn for.
    pub a: Vec<f64>,
    /// One tensor per order `p` with `a_p != 0`.
    pub tensors: Vec<CouplingTensor>,
}

/// Bytes of dense storage for the orders present in `mixture`.
pub fn disorder_bytes(n: usize, mixture: &MixtureSpec) -> u64 {
    (1..=mixture.degree())
        .filter(|&p| mixture.a(p) != 0.0)
        .map(|p| (n as u64).saturating_pow(p as u32).saturating_mul(8))
        .fold(0u64, u64::saturating_add)
}

/// Multiplicity factor `prod_k l_k!` of a sorted index tuple.
pub fn multiplicity(sorted: &[usize]) -> f64 {
    let mut c = 1.0;
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
            c *= run as f64;
        } else {
            run = 1;
        }
    }
    c
}

/// Draws the couplings for `mixture` at size `n` from `seed`.
pub fn sample_disorder(n: usize, mixture: &MixtureSpec, seed: u64) -> Result<DisorderSample> {
    sample_disorder_with_limit(n, mixture, seed, DEFAULT_DISORDER_LIMIT)
}

/// [`sample_disorder`] with an explicit storage cap in bytes.
pub fn sample_disorder_with_limit(
    n: usize,
    mixture: &MixtureSpec,
    seed: u64,
    limit_bytes: u64,
) -> Result<DisorderSample> {
    if n < 2 {
        return Err(invalid("N", format!("must be at least 2, got {n}")));
    }
    let required = disorder_bytes(n, mixture);
    let top = (1..=mixture.degree()).rev().find(|&p| mixture.a(p) != 0.0).unwrap_or(1);
    if top > MAX_DENSE_ORDER || n > MAX_DENSE_N || required > limit_bytes {
        return Err(Error::Resource {
            what: format!(
                "dense couplings up to order {top} at N = {n} (supported: order <= {MAX_DENSE_ORDER}, N <= {MAX_DENSE_N})"
            ),
            required_bytes: required,
            limit_bytes,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = Vec::new();
    for p in 1..=mixture.degree() {
        if mixture.a(p) == 0.0 {
            continue;
        }
        let scale = (n as f64).powi(1 - p as i32);
        let mut data = vec![0.0; n.pow(p as u32)];
        let mut idx = vec![0usize; p];
        // Sorted tuples i_1 <= ... <= i_p in lexicographic order.
        loop {
            let sd = (multiplicity(&idx) * scale).sqrt();
            let z: f64 = rng.sample(StandardNormal);
            let value = sd * z;
            for perm in permutations(&idx) {
                let flat = perm.iter().fold(0, |acc, &i| acc * n + i);
                data[flat] = value;
            }
            if !next_sorted(&mut idx, n) {
                break;
            }
        }
        tensors.push(CouplingTensor { p, data });
    }
    Ok(DisorderSample {
        n,
        seed,
        a: mixture.coefficients().to_vec(),
        tensors,
    })
}

fn next_sorted(idx: &mut [usize], n: usize) -> bool {
    let p = idx.len();
    let mut k = p;
    while k > 0 {
        k -= 1;
        if idx[k] + 1 < n {
            let v = idx[k] + 1;
            for slot in &mut idx[k..] {
                *slot = v;
            }
            return true;
        }
    }
    false
}

/// Distinct permutations of a tuple of length at most 3.
fn permutations(idx: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = match idx.len() {
        1 => vec![idx.to_vec()],
        2 => vec![vec![idx[0], idx[1]], vec![idx[1], idx[0]]],
        _ => {
            let (a, b, c) = (idx[0], idx[1], idx[2]);
            vec![
                vec![a, b, c],
                vec![a, c, b],
                vec![b, a, c],
                vec![b, c, a],
                vec![c, a, b],
                vec![c, b, a],
            ]
        }
    };
    out.sort();
    out.dedup();
    out
}

impl DisorderSample {
    fn coefficient(&self, p: usize) -> f64 {
        self.a.get(p - 1).copied().unwrap_or(0.0)
    }

    /// `G^i(x) = sum_p a_p/(p-1)! sum J_{i i_1..i_{p-1}} x^{i_1}..x^{i_{p-1}}`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(invalid("x", format!("length {} differs from N = {}", x.len(), self.n)));
        }
        let g = self.grad_batch(&DMatrix::from_column_slice(self.n, 1, x));
        Ok(g.column(0).iter().copied().collect())
    }

    /// Gradient for every column of `x` (`N x m`).
    pub fn grad_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n, x.ncols());
        for t in &self.tensors {
            self.add_order(t, x, &mut g);
        }
        g
    }

    /// Adds the order-`t.p` part of the gradient to `g`.
    fn add_order(&self, t: &CouplingTensor, x: &DMatrix<f64>, g: &mut DMatrix<f64>) {
        let n = self.n;
        let a = self.coefficient(t.p);
        match t.p {
            1 => {
                for mut col in g.column_iter_mut() {
                    for (gi, ji) in col.iter_mut().zip(&t.data) {
                        *gi += a * ji;
                    }
                }
            }
            2 => {
                // Symmetric, so the row-major buffer is also column-major.
                let j = DMatrix::from_column_slice(n, n, &t.data);
                g.gemm(a, &j, x, 1.0);
            }
            3 => {
                // J as an N^2 x N matrix (column i holds J_{i..}) against vec(x x^T).
                let j = DMatrix::from_column_slice(n * n, n, &t.data);
                let m = x.ncols();
                let mut outer = DMatrix::zeros(n * n, m);
                for c in 0..m {
                    let xc = x.column(c);
                    for (k, &xk) in xc.iter().enumerate() {
                        for (l, &xl) in xc.iter().enumerate() {
                            outer[(k * n + l, c)] = xk * xl;
                        }
                    }
                }
                g.gemm_tr(0.5 * a, &j, &outer, 1.0);
            }
            _ => unreachable!("order checked at sampling"),
        }
    }

    /// `H(x) = -sum_p a_p/p! sum J_{i_1..i_p} x^{i_1}..x^{i_p}`, using that
    /// each order is homogeneous of degree `p`, so `x . G_p = -p H_p`.
    pub fn hamiltonian(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(invalid("x", format!("length {} differs from N = {}", x.len(), self.n)));
        }
        let xm = DMatrix::from_column_slice(self.n, 1, x);
        let mut h = 0.0;
        for t in &self.tensors {
            let mut g = DMatrix::zeros(self.n, 1);
            self.add_order(t, &xm, &mut g);
            h -= xm.dot(&g) / t.p as f64;
        }
        Ok(h)
    }
}
