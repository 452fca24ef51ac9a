//! Finite-N soft-constraint Langevin dynamics
//! `dx = dB - f'(|x|^2/N) x dt + beta G(x) dt + h dt`
//! with Gaussian disorder, two replicas and several noise copies per
//! disorder, plus the empirical observables whose large-N limits the
//! integrator computes.

mod disorder;
mod sde;
mod stats;

pub use disorder::{
    disorder_bytes, multiplicity, sample_disorder, sample_disorder_with_limit, CouplingTensor,
    DisorderSample, DEFAULT_DISORDER_LIMIT, MAX_DENSE_N, MAX_DENSE_ORDER,
};
pub use sde::{initial_state, simulate, Trajectories, Trajectory};
pub use stats::{observables, DisorderEstimate, Estimate, TrajectoryStats};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::ModelParams;

/// Initial condition shared by both replicas and all noise copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub enum InitialCondition {
    /// Uniform on the sphere of radius `sqrt(rN)`, tilted so that the
    /// magnetization is exactly `alpha sqrt(r)`.
    #[default]
    UniformSphere,
    /// A fixed state of length `N`, used for every disorder sample.
    Supplied(Vec<f64>),
}

/// Monte Carlo run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: usize,
    pub dt_sde: f64,
    pub t_max: f64,
    pub n_disorder: usize,
    /// Brownian realizations per replica.
    pub n_noise: usize,
    /// Times at which states are stored; must lie on the SDE grid.
    pub record_times: Vec<f64>,
    pub seed: u64,
    pub initial: InitialCondition,
    /// Drive the second replica with the first replica's noise.
    pub shared_noise: bool,
    pub disorder_limit_bytes: u64,
}

impl McConfig {
    pub fn new(n: usize, dt_sde: f64, t_max: f64, n_disorder: usize, n_noise: usize) -> Self {
        Self {
            n,
            dt_sde,
            t_max,
            n_disorder,
            n_noise,
            record_times: vec![0.0, t_max],
            seed: 0,
            initial: InitialCondition::UniformSphere,
            shared_noise: false,
            disorder_limit_bytes: DEFAULT_DISORDER_LIMIT,
        }
    }

    pub fn with_record_times(mut self, times: Vec<f64>) -> Self {
        self.record_times = times;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of SDE steps.
    pub fn steps(&self) -> Result<usize> {
        if self.n < 2 {
            return Err(invalid("N", format!("must be at least 2, got {}", self.n)));
        }
        if !(self.dt_sde.is_finite() && self.dt_sde > 0.0) {
            return Err(invalid("dt_sde", format!("must be positive, got {}", self.dt_sde)));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(invalid("t_max", format!("must be positive, got {}", self.t_max)));
        }
        if self.n_disorder < 1 {
            return Err(invalid("n_disorder", "must be at least 1"));
        }
        if self.n_noise < 2 {
            return Err(invalid("n_noise", format!("must be at least 2, got {}", self.n_noise)));
        }
        let steps = (self.t_max / self.dt_sde).round() as usize;
        if steps == 0 || (steps as f64 * self.dt_sde - self.t_max).abs() > 1e-9 * self.t_max {
            return Err(invalid("dt_sde", "t_max must be a whole number of SDE steps"));
        }
        Ok(steps)
    }

    /// Grid indices of the record times (validated, strictly increasing).
    pub fn record_indices(&self) -> Result<Vec<usize>> {
        let steps = self.steps()?;
        if self.record_times.is_empty() {
            return Err(invalid("record_times", "at least one record time is needed"));
        }
        let mut out = Vec::with_capacity(self.record_times.len());
        for &t in &self.record_times {
            let i = (t / self.dt_sde).round();
            if !(t >= 0.0) || i as usize > steps || (i * self.dt_sde - t).abs() > 1e-9 * self.dt_sde.max(t) {
                return Err(invalid(
                    "record_times",
                    format!("{t} is not a point of the SDE grid on [0, {}]", self.t_max),
                ));
            }
            let i = i as usize;
            if out.last().is_some_and(|&last| last >= i) {
                return Err(invalid("record_times", "must be strictly increasing"));
            }
            out.push(i);
        }
        Ok(out)
    }
}

/// Stream tags, so every random quantity has its own ChaCha stream.
#[derive(Clone, Copy)]
pub(crate) enum Stream {
    DisorderSeed = 1,
    Initial = 2,
    Noise = 3,
}

/// A generator for `(tag, disorder, replica, copy)` derived from the master
/// seed. The draws of one stream never depend on scheduling.
pub(crate) fn stream_rng(master: u64, tag: Stream, disorder: u64, replica: u64, copy: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(
        ((tag as u64) << 60) | ((disorder & 0xFFFF_FFFF) << 24) | ((replica & 0xF) << 20) | (copy & 0xF_FFFF),
    );
    rng
}

/// Seed of the `d`-th disorder sample.
pub fn disorder_seed(master: u64, d: usize) -> u64 {
    stream_rng(master, Stream::DisorderSeed, d as u64, 0, 0).next_u64()
}

/// Samples `n_disorder` couplings, simulates each, and reduces the
/// per-disorder estimates. Disorder samples run in parallel.
pub fn run_mc(params: &ModelParams, mc: &McConfig) -> Result<TrajectoryStats> {
    mc.record_indices()?;
    let estimates: Vec<Result<DisorderEstimate>> = (0..mc.n_disorder)
        .into_par_iter()
        .map(|d| {
            let j = sample_disorder_with_limit(
                mc.n,
                &params.mixture,
                disorder_seed(mc.seed, d),
                mc.disorder_limit_bytes,
            )?;
            let x0 = initial_state(params, mc, d)?;
            let traj = simulate(params, &j, &x0, mc, d)?;
            DisorderEstimate::from_trajectories(&traj)
        })
        .collect();
    let estimates = estimates.into_iter().collect::<Result<Vec<_>>>()?;
    TrajectoryStats::from_estimates(mc.n, &mc.record_times, &estimates)
}

#[cfg(test)]
mod tests;
