//! Plug-in estimators of `C_N, chi_N, M_N, Q_N, L_N, COV_N` at the record
//! times, averaged over noise copies per disorder sample and then over
//! disorder samples, which also supply the standard errors.
//!
//! `L_N` needs a product of two noise averages; using replica 0's copies for
//! one factor and replica 1's for the other makes it unbiased.

use serde::{Deserialize, Serialize};

use super::Trajectories;
use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Sample mean and `sd / sqrt(n)`; needs at least two samples.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let n = samples.len();
        if n < 2 {
            return None;
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Some(Self {
            mean,
            se: (var / n as f64).sqrt(),
        })
    }

    /// `|self - value|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.se
    }
}

/// Observables of one disorder sample, averaged over its noise copies.
/// Matrices are `n_rec x n_rec`, row-major, indexed `(s, t)` by record index.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderEstimate {
    pub n_rec: usize,
    pub c: Vec<f64>,
    pub chi: Vec<f64>,
    pub q: Vec<f64>,
    pub l: Vec<f64>,
    pub cov: Vec<f64>,
    pub m: Vec<f64>,
}

impl DisorderEstimate {
    pub fn from_trajectories(traj: &Trajectories) -> Result<Self> {
        let n = traj.n;
        let nr = traj.record_times.len();
        let copies = traj.n_noise;
        if copies < 2 {
            return Err(Error::InsufficientSamples {
                observable: "L_N",
                reason: format!("needs at least 2 noise copies per replica, got {copies}"),
            });
        }
        let runs = traj.runs.len() as f64;
        let nf = n as f64;
        let (rep_a, rep_b) = (traj.replica(0), traj.replica(1));
        let mean_state = |group: &[super::Trajectory], a: usize| -> Vec<f64> {
            let mut acc = vec![0.0; n];
            for t in group {
                acc.iter_mut().zip(t.state(a, n)).for_each(|(s, v)| *s += v);
            }
            acc.iter_mut().for_each(|s| *s /= group.len() as f64);
            acc
        };
        let mean_a: Vec<Vec<f64>> = (0..nr).map(|a| mean_state(rep_a, a)).collect();
        let mean_b: Vec<Vec<f64>> = (0..nr).map(|a| mean_state(rep_b, a)).collect();

        let mut c = vec![0.0; nr * nr];
        let mut chi = vec![0.0; nr * nr];
        let mut q = vec![0.0; nr * nr];
        let mut l = vec![0.0; nr * nr];
        for s in 0..nr {
            for t in 0..nr {
                let k = s * nr + t;
                c[k] = traj.runs.iter().map(|r| dot(r.state(s, n), r.state(t, n))).sum::<f64>() / (runs * nf);
                chi[k] = traj.runs.iter().map(|r| dot(r.state(s, n), r.noise(t, n))).sum::<f64>() / (runs * nf);
                q[k] = rep_a
                    .iter()
                    .zip(rep_b)
                    .map(|(a, b)| dot(a.state(s, n), b.state(t, n)) + dot(b.state(s, n), a.state(t, n)))
                    .sum::<f64>()
                    / (2.0 * copies as f64 * nf);
                l[k] = (dot(&mean_a[s], &mean_b[t]) + dot(&mean_b[s], &mean_a[t])) / (2.0 * nf);
            }
        }
        let cov = c.iter().zip(&l).map(|(c, l)| c - l).collect();
        let m = (0..nr)
            .map(|a| traj.runs.iter().map(|r| r.state(a, n).iter().sum::<f64>()).sum::<f64>() / (runs * nf))
            .collect();
        Ok(Self {
            n_rec: nr,
            c,
            chi,
            q,
            l,
            cov,
            m,
        })
    }
}

/// Disorder-averaged observables with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub n: usize,
    pub record_times: Vec<f64>,
    pub n_disorder: usize,
    pub c: Vec<Estimate>,
    pub chi: Vec<Estimate>,
    pub q: Vec<Estimate>,
    pub l: Vec<Estimate>,
    pub cov: Vec<Estimate>,
    /// `Q_N - L_N`, estimated per disorder sample so correlations cancel.
    pub q_minus_l: Vec<Estimate>,
    pub m: Vec<Estimate>,
}

impl TrajectoryStats {
    pub fn from_estimates(n: usize, record_times: &[f64], est: &[DisorderEstimate]) -> Result<Self> {
        let nd = est.len();
        let nr = record_times.len();
        let reduce = |name: &'static str, pick: &dyn Fn(&DisorderEstimate) -> &[f64], len: usize| {
            (0..len)
                .map(|k| {
                    let samples: Vec<f64> = est.iter().map(|e| pick(e)[k]).collect();
                    Estimate::from_samples(&samples).ok_or_else(|| Error::InsufficientSamples {
                        observable: name,
                        reason: format!("standard errors need at least 2 disorder samples, got {nd}"),
                    })
                })
                .collect::<Result<Vec<_>>>()
        };
        let diff: Vec<Vec<f64>> = est
            .iter()
            .map(|e| e.q.iter().zip(&e.l).map(|(q, l)| q - l).collect())
            .collect();
        let q_minus_l = (0..nr * nr)
            .map(|k| {
                let samples: Vec<f64> = diff.iter().map(|d| d[k]).collect();
                Estimate::from_samples(&samples).ok_or_else(|| Error::InsufficientSamples {
                    observable: "Q_N - L_N",
                    reason: format!("needs at least 2 disorder samples, got {nd}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            record_times: record_times.to_vec(),
            n_disorder: nd,
            c: reduce("C_N", &|e| &e.c, nr * nr)?,
            chi: reduce("chi_N", &|e| &e.chi, nr * nr)?,
            q: reduce("Q_N", &|e| &e.q, nr * nr)?,
            l: reduce("L_N", &|e| &e.l, nr * nr)?,
            cov: reduce("COV_N", &|e| &e.cov, nr * nr)?,
            q_minus_l,
            m: reduce("M_N", &|e| &e.m, nr)?,
        })
    }

    fn at(&self, v: &[Estimate], s: usize, t: usize) -> Estimate {
        v[s * self.record_times.len() + t]
    }

    /// Estimates at record indices `(s, t)`.
    pub fn c_at(&self, s: usize, t: usize) -> Estimate {
        self.at(&self.c, s, t)
    }
    pub fn chi_at(&self, s: usize, t: usize) -> Estimate {
        self.at(&self.chi, s, t)
    }
    pub fn q_at(&self, s: usize, t: usize) -> Estimate {
        self.at(&self.q, s, t)
    }
    pub fn l_at(&self, s: usize, t: usize) -> Estimate {
        self.at(&self.l, s, t)
    }
    pub fn cov_at(&self, s: usize, t: usize) -> Estimate {
        self.at(&self.cov, s, t)
    }
    pub fn q_minus_l_at(&self, s: usize, t: usize) -> Estimate {
        self.at(&self.q_minus_l, s, t)
    }
}

/// Statistics from already simulated disorder samples.
pub fn observables(trajectories: &[Trajectories]) -> Result<TrajectoryStats> {
    let first = trajectories.first().ok_or_else(|| Error::InsufficientSamples {
        observable: "C_N",
        reason: "no trajectories".into(),
    })?;
    let est = trajectories
        .iter()
        .map(DisorderEstimate::from_trajectories)
        .collect::<Result<Vec<_>>>()?;
    TrajectoryStats::from_estimates(first.n, &first.record_times, &est)
}
