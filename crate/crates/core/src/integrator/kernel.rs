//! The O(i^2) memory sweep for one row, fused so that each stored row of
//! `C`, `Q`, `R` is streamed once per corrector pass.

use crate::model::MixtureSpec;

/// Per-row buffers. For the row being solved (index `i`):
/// `a[k] = R(i,k) nu''(C(i,k))`, `wa[k]` its trapezoid-weighted value,
/// `bc[k] = nu'(C(i,k))`, `bq[k] = nu'(Q(i,k))`.
#[derive(Default)]
pub(super) struct Scratch {
    pub a: Vec<f64>,
    pub wa: Vec<f64>,
    bc: Vec<f64>,
    bq: Vec<f64>,
    dt: f64,
    /// `sum_k w_k C(k,j) a_k` over `k in 0..=i`.
    pub ic: Vec<f64>,
    pub iq: Vec<f64>,
    /// `sum_{k >= j} dt a_k R(k,j)`; endpoint corrections applied by the caller.
    pub ir: Vec<f64>,
    /// Trapezoid `int_0^{t_j} nu'(C(s_i,u)) R(t_j,u) du` (valid for `j >= 1`).
    pub sc: Vec<f64>,
    pub sq: Vec<f64>,
}

impl Scratch {
    pub fn prepare(
        &mut self,
        i: usize,
        dt: f64,
        mix: &MixtureSpec,
        c_row: &[f64],
        r_row: &[f64],
        q_row: &[f64],
    ) {
        let len = i + 1;
        self.dt = dt;
        for v in [
            &mut self.a,
            &mut self.wa,
            &mut self.bc,
            &mut self.bq,
            &mut self.ic,
            &mut self.iq,
            &mut self.ir,
            &mut self.sc,
            &mut self.sq,
        ] {
            v.clear();
            v.resize(len, 0.0);
        }
        for k in 0..len {
            let a = r_row[k] * mix.nu2(c_row[k]);
            let w = if i == 0 {
                0.0
            } else if k == 0 || k == i {
                0.5 * dt
            } else {
                dt
            };
            self.a[k] = a;
            self.wa[k] = w * a;
            self.bc[k] = mix.nu1(c_row[k]);
            self.bq[k] = mix.nu1(q_row[k]);
        }
    }
}

/// Adds the contributions of stored row `k` to every accumulator.
pub(super) fn accumulate_row(s: &mut Scratch, k: usize, c: &[f64], q: &[f64], r: &[f64]) {
    let ca = s.wa[k];
    let ra = s.dt * s.a[k];
    let sums = strided(
        ca,
        ra,
        Inputs {
            c: &c[..k],
            q: &q[..k],
            r: &r[..k],
            wa: &s.wa[..k],
            bc: &s.bc[..k],
            bq: &s.bq[..k],
        },
        &mut s.ic[..k],
        &mut s.iq[..k],
        &mut s.ir[..k],
    );

    // Diagonal entry of row k.
    let (cd, qd, rd) = (c[k], q[k], r[k]);
    s.ic[k] += ca * cd;
    s.iq[k] += ca * qd;
    s.ir[k] += ra * rd;
    s.ic[k] += sums[0];
    s.iq[k] += sums[1];

    let dt = s.dt;
    let full_c = sums[2] + rd * s.bc[k];
    let full_q = sums[3] + rd * s.bq[k];
    s.sc[k] = dt * full_c - 0.5 * dt * (s.bc[0] * r[0] + s.bc[k] * rd);
    s.sq[k] = dt * full_q - 0.5 * dt * (s.bq[0] * r[0] + s.bq[k] * rd);
}

struct Inputs<'a> {
    c: &'a [f64],
    q: &'a [f64],
    r: &'a [f64],
    wa: &'a [f64],
    bc: &'a [f64],
    bq: &'a [f64],
}

/// Three axpys into `ic, iq, ir` and four dot products, in one pass.
/// Kept out of line so the output slices are distinct parameters, which
/// lets the compiler vectorize the stores.
#[inline(never)]
fn strided(
    ca: f64,
    ra: f64,
    x: Inputs<'_>,
    ic: &mut [f64],
    iq: &mut [f64],
    ir: &mut [f64],
) -> [f64; 4] {
    const W: usize = 8;
    let n = ic.len();
    let mut dc = [0.0f64; W];
    let mut dq = [0.0f64; W];
    let mut dr_c = [0.0f64; W];
    let mut dr_q = [0.0f64; W];
    let chunks = n / W;
    for ch in 0..chunks {
        let span = ch * W..ch * W + W;
        let c: &[f64; W] = x.c[span.clone()].try_into().unwrap();
        let q: &[f64; W] = x.q[span.clone()].try_into().unwrap();
        let r: &[f64; W] = x.r[span.clone()].try_into().unwrap();
        let w: &[f64; W] = x.wa[span.clone()].try_into().unwrap();
        let bc: &[f64; W] = x.bc[span.clone()].try_into().unwrap();
        let bq: &[f64; W] = x.bq[span.clone()].try_into().unwrap();
        let oc: &mut [f64; W] = (&mut ic[span.clone()]).try_into().unwrap();
        let oq: &mut [f64; W] = (&mut iq[span.clone()]).try_into().unwrap();
        let or: &mut [f64; W] = (&mut ir[span]).try_into().unwrap();
        for l in 0..W {
            oc[l] += ca * c[l];
            oq[l] += ca * q[l];
            or[l] += ra * r[l];
            dc[l] += c[l] * w[l];
            dq[l] += q[l] * w[l];
            dr_c[l] += r[l] * bc[l];
            dr_q[l] += r[l] * bq[l];
        }
    }
    for j in chunks * W..n {
        let l = j % W;
        ic[j] += ca * x.c[j];
        iq[j] += ca * x.q[j];
        ir[j] += ra * x.r[j];
        dc[l] += x.c[j] * x.wa[j];
        dq[l] += x.q[j] * x.wa[j];
        dr_c[l] += x.r[j] * x.bc[j];
        dr_q[l] += x.r[j] * x.bq[j];
    }
    let fold = |v: [f64; W]| ((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7]));
    [fold(dc), fold(dq), fold(dr_c), fold(dr_q)]
}
