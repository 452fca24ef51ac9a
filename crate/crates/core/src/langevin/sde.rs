//! Euler-Maruyama integration of the Langevin system for two replicas and
//! `n_noise` Brownian copies each, all sharing the couplings and `x_0`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{stream_rng, DisorderSample, InitialCondition, McConfig, Stream};
use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;

/// States and Brownian paths of one run at the record times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub replica: usize,
    pub copy: usize,
    /// `x[a * N + i]`: coordinate `i` at record time `a`.
    pub x: Vec<f64>,
    /// Brownian path, same layout.
    pub b: Vec<f64>,
}

impl Trajectory {
    pub fn state(&self, a: usize, n: usize) -> &[f64] {
        &self.x[a * n..(a + 1) * n]
    }

    pub fn noise(&self, a: usize, n: usize) -> &[f64] {
        &self.b[a * n..(a + 1) * n]
    }
}

/// Every run for one disorder sample, replica 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    pub n: usize,
    pub record_times: Vec<f64>,
    pub n_noise: usize,
    pub x0: Vec<f64>,
    pub runs: Vec<Trajectory>,
}

impl Trajectories {
    /// Runs of `replica` in copy order.
    pub fn replica(&self, replica: usize) -> &[Trajectory] {
        &self.runs[replica * self.n_noise..(replica + 1) * self.n_noise]
    }
}

/// The shared initial state for disorder sample `d`.
pub fn initial_state(params: &ModelParams, mc: &McConfig, d: usize) -> Result<Vec<f64>> {
    let n = mc.n;
    match &mc.initial {
        InitialCondition::Supplied(x) => {
            if x.len() != n {
                return Err(invalid("x0", format!("length {} differs from N = {n}", x.len())));
            }
            Ok(x.clone())
        }
        InitialCondition::UniformSphere => {
            let mut rng = stream_rng(mc.seed, Stream::Initial, d as u64, 0, 0);
            let mut z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            // Remove the mean and rescale so |z|^2 = N, then tilt along 1.
            let mean = z.iter().sum::<f64>() / n as f64;
            z.iter_mut().for_each(|v| *v -= mean);
            let norm = (z.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            let (r, alpha) = (params.r, params.alpha);
            let along = alpha * r.sqrt();
            let across = ((1.0 - alpha * alpha) * r).sqrt() / norm;
            Ok(z.iter().map(|v| along + across * v).collect())
        }
    }
}

/// Integrates both replicas and all noise copies for one disorder sample.
pub fn simulate(
    params: &ModelParams,
    disorder: &DisorderSample,
    x0: &[f64],
    mc: &McConfig,
    d: usize,
) -> Result<Trajectories> {
    if params.confinement.is_hard() {
        return Err(invalid(
            "confinement",
            "the Langevin simulation needs a soft confinement potential",
        ));
    }
    let steps = mc.steps()?;
    let record = mc.record_indices()?;
    let n = mc.n;
    if disorder.n != n || x0.len() != n {
        return Err(invalid("N", "disorder, x0 and config sizes differ"));
    }
    let runs = 2 * mc.n_noise;
    let mut rngs: Vec<ChaCha8Rng> = (0..runs)
        .map(|col| {
            let (rep, copy) = (col / mc.n_noise, col % mc.n_noise);
            let stream_rep = if mc.shared_noise { 0 } else { rep };
            stream_rng(mc.seed, Stream::Noise, d as u64, stream_rep as u64, copy as u64)
        })
        .collect();

    let mut x = DMatrix::from_fn(n, runs, |i, _| x0[i]);
    let mut b = DMatrix::<f64>::zeros(n, runs);
    let mut out: Vec<Trajectory> = (0..runs)
        .map(|col| Trajectory {
            replica: col / mc.n_noise,
            copy: col % mc.n_noise,
            x: Vec::with_capacity(record.len() * n),
            b: Vec::with_capacity(record.len() * n),
        })
        .collect();
    let store = |out: &mut [Trajectory], x: &DMatrix<f64>, b: &DMatrix<f64>| {
        for (col, t) in out.iter_mut().enumerate() {
            t.x.extend(x.column(col).iter());
            t.b.extend(b.column(col).iter());
        }
    };

    let dt = mc.dt_sde;
    let sq = dt.sqrt();
    let limit = 100.0 * params.r;
    let mut next_record = 0;
    if record[0] == 0 {
        store(&mut out, &x, &b);
        next_record = 1;
    }
    for step in 1..=steps {
        let g = (params.beta != 0.0).then(|| disorder.grad_batch(&x));
        for (col, rng) in rngs.iter_mut().enumerate() {
            let mut xc = x.column_mut(col);
            let norm = xc.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let fp = params.confinement.df(norm)?;
            let mut bc = b.column_mut(col);
            for i in 0..n {
                let xi: f64 = rng.sample(StandardNormal);
                let mut drift = -fp * xc[i] + params.h;
                if let Some(g) = &g {
                    drift += params.beta * g[(i, col)];
                }
                xc[i] += dt * drift + sq * xi;
                bc[i] += sq * xi;
            }
            let after = xc.iter().map(|v| v * v).sum::<f64>() / n as f64;
            if !(after <= limit) {
                return Err(Error::NormBlowUp {
                    norm: after,
                    limit,
                    step,
                });
            }
        }
        if next_record < record.len() && record[next_record] == step {
            store(&mut out, &x, &b);
            next_record += 1;
        }
    }
    Ok(Trajectories {
        n,
        record_times: mc.record_times.clone(),
        n_noise: mc.n_noise,
        x0: x0.to_vec(),
        runs: out,
    })
}
