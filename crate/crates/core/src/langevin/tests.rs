use super::*;
use crate::error::Error;
use crate::model::MixtureSpec;

fn soft(beta: f64, h: f64, l: f64, mix: MixtureSpec) -> ModelParams {
    ModelParams::soft(beta, h, 1.0, 0.0, l, 1, mix).unwrap()
}

/// Brute-force Hamiltonian over all ordered index tuples.
fn brute_hamiltonian(j: &DisorderSample, x: &[f64]) -> f64 {
    let n = j.n;
    let mut h = 0.0;
    for t in &j.tensors {
        let a = j.a[t.p - 1];
        let fact: f64 = (1..=t.p).map(|k| k as f64).product();
        let mut sum = 0.0;
        for (flat, &v) in t.data.iter().enumerate() {
            let mut rest = flat;
            let mut prod = v;
            for _ in 0..t.p {
                prod *= x[rest % n];
                rest /= n;
            }
            sum += prod;
        }
        h -= a / fact * sum;
    }
    h
}

#[test]
fn two_spin_variances_follow_multiplicity() {
    let mix = MixtureSpec::pure(2, 1.0).unwrap();
    let draws = 100_000;
    let (mut off, mut diag) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
    for seed in 0..draws as u64 {
        let j = sample_disorder(2, &mix, seed).unwrap();
        let d = &j.tensors[0].data;
        assert_eq!(d[1], d[2]);
        off.push(d[1] * d[1]);
        diag.push(d[0] * d[0]);
    }
    let off = Estimate::from_samples(&off).unwrap();
    let diag = Estimate::from_samples(&diag).unwrap();
    assert!(off.z_score(0.5) < 5.0, "{off:?}");
    assert!(diag.z_score(1.0) < 5.0, "{diag:?}");
}

#[test]
fn three_spin_distinct_variance() {
    let n = 50;
    let mix = MixtureSpec::pure(3, 1.0).unwrap();
    let mut sq = Vec::new();
    for seed in 0..6 {
        let j = sample_disorder(n, &mix, seed).unwrap();
        let d = &j.tensors[0].data;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    sq.push(d[(a * n + b) * n + c].powi(2));
                }
            }
        }
    }
    assert!(sq.len() >= 100_000);
    let est = Estimate::from_samples(&sq).unwrap();
    assert!(est.z_score(1.0 / (n * n) as f64) < 5.0, "{est:?}");
}

#[test]
fn gradient_matches_hamiltonian_differences() {
    let n = 20;
    let mix = MixtureSpec::new(vec![0.4, 1.0, 0.7]).unwrap();
    let j = sample_disorder(n, &mix, 17).unwrap();
    let x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (i as f64 * 1.3).sin()).collect();
    let g = j.grad(&x).unwrap();
    let eps = 1e-5;
    for i in 0..n {
        let mut up = x.clone();
        let mut down = x.clone();
        up[i] += eps;
        down[i] -= eps;
        let fd = -(brute_hamiltonian(&j, &up) - brute_hamiltonian(&j, &down)) / (2.0 * eps);
        assert!((g[i] - fd).abs() <= 1e-6 * g[i].abs().max(1.0), "i={i}: {} vs {fd}", g[i]);
    }
    let h = j.hamiltonian(&x).unwrap();
    assert!((h - brute_hamiltonian(&j, &x)).abs() <= 1e-10 * h.abs().max(1.0));
}

#[test]
fn initial_state_has_radius_and_magnetization() {
    let params = ModelParams::soft(0.0, 0.0, 2.0, 0.6, 10.0, 1, MixtureSpec::pure(2, 1.0).unwrap()).unwrap();
    let mc = McConfig::new(300, 0.01, 0.1, 2, 2);
    let x = initial_state(&params, &mc, 0).unwrap();
    let k = x.iter().map(|v| v * v).sum::<f64>() / 300.0;
    let m = x.iter().sum::<f64>() / 300.0;
    assert!((k - 2.0).abs() < 1e-12);
    assert!((m - 0.6 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn config_validation() {
    assert!(McConfig::new(1, 0.01, 1.0, 2, 2).steps().is_err());
    assert!(McConfig::new(10, 0.01, 1.0, 2, 1).steps().is_err());
    assert!(McConfig::new(10, 0.3, 1.0, 2, 2).steps().is_err());
    let mc = McConfig::new(10, 0.01, 1.0, 2, 2).with_record_times(vec![0.0, 0.505]);
    assert!(mc.record_indices().is_err());
    let mc = McConfig::new(10, 0.01, 1.0, 2, 2).with_record_times(vec![0.5, 0.2]);
    assert!(mc.record_indices().is_err());
    let mc = McConfig::new(10, 0.01, 1.0, 2, 2).with_record_times(vec![0.0, 0.25, 1.0]);
    assert_eq!(mc.record_indices().unwrap(), vec![0, 25, 100]);
}

#[test]
fn hard_confinement_is_rejected() {
    let params = ModelParams::hard(0.1, 0.0, 1.0, 0.0, 1.0, MixtureSpec::pure(2, 1.0).unwrap()).unwrap();
    let mc = McConfig::new(10, 0.01, 0.1, 2, 2);
    let j = sample_disorder(10, &params.mixture, 0).unwrap();
    assert!(simulate(&params, &j, &[1.0; 10], &mc, 0).is_err());
}

#[test]
fn unstable_potential_trips_the_norm_guard() {
    let params =
        ModelParams::polynomial(0.0, 0.0, 1.0, 0.0, vec![0.0, -20.0], MixtureSpec::pure(2, 1.0).unwrap()).unwrap();
    let mc = McConfig::new(20, 0.01, 5.0, 2, 2);
    let j = sample_disorder(20, &params.mixture, 0).unwrap();
    let x0 = initial_state(&params, &mc, 0).unwrap();
    assert!(matches!(simulate(&params, &j, &x0, &mc, 0), Err(Error::NormBlowUp { .. })));
}

#[test]
fn shared_noise_makes_replicas_identical() {
    let params = soft(0.4, 0.2, 10.0, MixtureSpec::pure(2, 1.0).unwrap());
    let mut mc = McConfig::new(40, 0.01, 0.5, 2, 2).with_record_times(vec![0.0, 0.2, 0.5]);
    mc.shared_noise = true;
    let j = sample_disorder(40, &params.mixture, 5).unwrap();
    let x0 = initial_state(&params, &mc, 0).unwrap();
    let traj = simulate(&params, &j, &x0, &mc, 0).unwrap();
    for (a, b) in traj.replica(0).iter().zip(traj.replica(1)) {
        assert_eq!(a.x, b.x);
    }
    let est = DisorderEstimate::from_trajectories(&traj).unwrap();
    for s in 0..3 {
        let k = s * 3 + s;
        assert!((est.q[k] - est.c[k]).abs() <= 1e-14 * est.c[k]);
    }
}

#[test]
fn runs_are_deterministic_and_c_is_symmetric() {
    let params = soft(0.3, 0.2, 10.0, MixtureSpec::pure(2, 1.0).unwrap());
    let mc = McConfig::new(30, 0.01, 0.4, 3, 2)
        .with_record_times(vec![0.0, 0.2, 0.4])
        .with_seed(11);
    let a = run_mc(&params, &mc).unwrap();
    let b = run_mc(&params, &mc).unwrap();
    assert_eq!(a, b);
    for s in 0..3 {
        for t in 0..3 {
            assert_eq!(a.c_at(s, t), a.c_at(t, s));
            assert_eq!(a.q_at(s, t), a.q_at(t, s));
        }
        assert_eq!(a.chi_at(s, 0).mean, 0.0);
        assert!(a.c_at(s, s).mean > 0.0);
    }
    assert!(a.c.iter().chain(&a.q).chain(&a.l).all(|e| e.se >= 0.0));
}

#[test]
fn single_disorder_sample_has_no_error_bars() {
    let params = soft(0.3, 0.2, 10.0, MixtureSpec::pure(2, 1.0).unwrap());
    let mc = McConfig::new(10, 0.01, 0.1, 1, 2);
    assert!(matches!(run_mc(&params, &mc), Err(Error::InsufficientSamples { .. })));
}

/// RK4 for the one-time soft system at beta = 0:
/// `M' = -f'(K) M + h`, `K' = -2 f'(K) K + 1 + 2 h M`.
fn free_soft_oracle(params: &ModelParams, t: f64, m0: f64, k0: f64) -> (f64, f64) {
    let f = &params.confinement;
    let h = params.h;
    let rhs = |m: f64, k: f64| {
        let fp = f.df(k).unwrap();
        (-fp * m + h, -2.0 * fp * k + 1.0 + 2.0 * h * m)
    };
    let steps = 20_000;
    let dt = t / steps as f64;
    let (mut m, mut k) = (m0, k0);
    for _ in 0..steps {
        let (a1, b1) = rhs(m, k);
        let (a2, b2) = rhs(m + 0.5 * dt * a1, k + 0.5 * dt * b1);
        let (a3, b3) = rhs(m + 0.5 * dt * a2, k + 0.5 * dt * b2);
        let (a4, b4) = rhs(m + dt * a3, k + dt * b3);
        m += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        k += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    (m, k)
}

#[test]
fn free_radius_fluctuates_around_fixed_point() {
    let params = soft(0.0, 0.0, 10.0, MixtureSpec::pure(2, 1.0).unwrap());
    let mc = McConfig::new(500, 0.005, 3.0, 8, 2)
        .with_record_times(vec![2.0, 3.0])
        .with_seed(3);
    let stats = run_mc(&params, &mc).unwrap();
    let (_, k_star) = free_soft_oracle(&params, 30.0, 0.0, 1.0);
    for a in 0..2 {
        let k = stats.c_at(a, a);
        assert!(k.z_score(k_star) < 3.0, "K_N {k:?} vs {k_star}");
    }
}

#[test]
fn strong_field_magnetization_matches_scalar_oracle() {
    let params = soft(0.0, 2.0, 10.0, MixtureSpec::pure(2, 1.0).unwrap());
    let mc = McConfig::new(200, 0.002, 4.0, 8, 2)
        .with_record_times(vec![1.0, 4.0])
        .with_seed(8);
    let stats = run_mc(&params, &mc).unwrap();
    for (a, &t) in [1.0, 4.0].iter().enumerate() {
        let (m, _) = free_soft_oracle(&params, t, 0.0, 1.0);
        let est = stats.m[a];
        // Finite-N bias is O(1/N); the statistical error is far smaller here.
        assert!((est.mean - m).abs() < 3.0 * est.se + 2e-3, "t={t}: {est:?} vs {m}");
    }
}

#[test]
fn replica_overlap_agrees_with_averaged_overlap() {
    let params = soft(0.3, 0.2, 10.0, MixtureSpec::pure(2, 1.0).unwrap());
    let mc = McConfig::new(100, 0.005, 1.0, 10, 3)
        .with_record_times(vec![0.0, 0.5, 1.0])
        .with_seed(21);
    let stats = run_mc(&params, &mc).unwrap();
    for s in 0..3 {
        for t in 0..3 {
            let d = stats.q_minus_l_at(s, t);
            assert!(d.mean.abs() <= 3.0 * d.se + 1e-12, "({s},{t}): {d:?}");
        }
        let l = stats.l_at(s, s);
        assert!(l.mean >= -2.0 * l.se);
    }
}

#[test]
fn disorder_spread_shrinks_with_size() {
    let params = soft(0.5, 0.0, 10.0, MixtureSpec::pure(2, 1.0).unwrap());
    let mut spread = Vec::new();
    for n in [100, 200, 400] {
        let mc = McConfig::new(n, 0.01, 1.0, 80, 2)
            .with_record_times(vec![0.5, 1.0])
            .with_seed(2);
        let stats = run_mc(&params, &mc).unwrap();
        let e = stats.c_at(1, 0);
        spread.push(e.se * (stats.n_disorder as f64).sqrt());
    }
    assert!(spread[0] > spread[1] && spread[1] > spread[2], "{spread:?}");
}
