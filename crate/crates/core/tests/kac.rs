use std::f64::consts::{FRAC_PI_2, PI};

use kacstroock::kac::{build_approximation, build_approximation_md, integrate, integrate_exact, sample_driver, ExperimentConfig};
use kacstroock::levy::{normalization_constant, JumpLaw, LevyTriplet};
use kacstroock::sampler::{sample_exact_jump, sample_grid, Exactness, PathSample, SamplerSeed};
use kacstroock::Error;
use proptest::prelude::*;

/// Midpoint Riemann sum of c·ε·e^{iθX_s} over [0, 2t/ε²] with a fixed step.
fn riemann(path: &PathSample, theta: f64, c: f64, eps: f64, t: f64, step: f64) -> (f64, f64) {
    let end = 2.0 * t / (eps * eps);
    let n = (end / step).round() as usize;
    let h = end / n as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for k in 0..n {
        let x = path.value_at((k as f64 + 0.5) * h);
        re += (theta * x).cos();
        im += (theta * x).sin();
    }
    (c * eps * re * h, c * eps * im * h)
}

/// ε∫₀^{2t/ε²}(−1)^{N_s}ds summed segment by segment from the jump times alone.
fn stroock(jump_times: &[f64], eps: f64, t: f64) -> f64 {
    let end = 2.0 * t / (eps * eps);
    let mut total = 0.0;
    let mut sign = 1.0;
    let mut left = 0.0;
    for &tau in jump_times {
        if tau >= end {
            break;
        }
        total += sign * (tau - left);
        sign = -sign;
        left = tau;
    }
    total += sign * (end - left);
    eps * total
}

fn poisson_config(theta: f64, eps: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(LevyTriplet::poisson(1.0).unwrap(), vec![theta], eps, 1.0);
    c.n_out = 100;
    c
}

#[test]
fn stroock_equivalence_at_pi() {
    let config = poisson_config(PI, 0.1);
    let times = config.output_times();
    for r in 0..100 {
        let path = build_approximation(&config, r).unwrap();
        assert_eq!(path.meta.c_theta, 1.0);
        let driver = sample_driver(&config, r).unwrap();
        let jumps = &driver.breakpoints[1..];
        for (k, &t) in times.iter().enumerate() {
            assert!((path.re[k] - stroock(jumps, 0.1, t)).abs() <= 1e-12, "replica {r} t={t}");
            assert_eq!(path.im[k], 0.0);
        }
    }
}

#[test]
fn exact_integral_matches_dense_riemann_sum() {
    let law = JumpLaw::new(vec![(1.0, 0.5), (-0.7, 0.3), (2.5, 0.2)]).unwrap();
    let (eps, theta, c) = (1.0, 1.3, 0.8);
    let out = [0.25, 0.5, 0.75, 1.0];
    for r in 0..5 {
        let path = sample_exact_jump(3.0, &law, 2.0, SamplerSeed::new(21, r)).unwrap();
        let (re, im) = integrate_exact(&path, theta, c, eps, &out).unwrap();
        for (k, &t) in out.iter().enumerate() {
            let (rr, ri) = riemann(&path, theta, c, eps, t, 1e-6);
            let tol = 1e-6 * c * 2.0;
            assert!((re[k] - rr).abs() <= tol && (im[k] - ri).abs() <= tol, "t={t}: {} vs {rr}", re[k]);
        }
    }
}

#[test]
fn lipschitz_bound_between_output_times() {
    let config = poisson_config(FRAC_PI_2, 0.1);
    for r in 0..20 {
        let p = build_approximation(&config, r).unwrap();
        assert_eq!((p.re[0], p.im[0]), (0.0, 0.0));
        for k in 1..p.len() {
            let dt = p.times[k] - p.times[k - 1];
            let d = ((p.re[k] - p.re[k - 1]).powi(2) + (p.im[k] - p.im[k - 1]).powi(2)).sqrt();
            assert!(d <= 2.0 * p.meta.c_theta * dt / 0.1 * (1.0 + 1e-12));
        }
    }
}

#[test]
fn md_component_equals_one_dimensional_run() {
    let tr = LevyTriplet::poisson(1.0).unwrap();
    let md = ExperimentConfig::new(tr.clone(), vec![FRAC_PI_2, PI / 3.0], 0.05, 1.0);
    let first = ExperimentConfig::new(tr.clone(), vec![FRAC_PI_2], 0.05, 1.0);
    let second = ExperimentConfig::new(tr, vec![PI / 3.0], 0.05, 1.0);
    for r in 0..10 {
        let comps = build_approximation_md(&md, r).unwrap();
        assert_eq!(comps[0], build_approximation(&first, r).unwrap());
        assert_eq!(comps[1], build_approximation(&second, r).unwrap());
    }
}

#[test]
fn md_equal_angles_name_the_difference_condition() {
    let config = ExperimentConfig::new(LevyTriplet::poisson(1.0).unwrap(), vec![FRAC_PI_2, FRAC_PI_2], 0.05, 1.0);
    match build_approximation_md(&config, 0) {
        Err(Error::AdmissibilityFailure(f)) => assert!(f.iter().any(|m| m.contains("a(θ1−θ2)")), "{f:?}"),
        other => panic!("expected AdmissibilityFailure, got {other:?}"),
    }
}

#[test]
fn null_degenerate_refused_and_zero_horizon() {
    assert!(matches!(build_approximation(&poisson_config(2.0 * PI, 0.1), 0), Err(Error::DegenerateTheta { .. })));
    let mut config = poisson_config(FRAC_PI_2, 0.1);
    config.t_max = 0.0;
    let p = build_approximation(&config, 0).unwrap();
    assert!(p.re.iter().chain(&p.im).all(|v| *v == 0.0));
}

#[test]
fn grid_self_convergence_for_brownian() {
    let tr = LevyTriplet::brownian(1.0, 0.0).unwrap();
    let (theta, eps) = (1.0, 0.1);
    let c = normalization_constant(theta, &tr).unwrap();
    assert!((c - 0.5).abs() < 1e-15);
    let horizon = 2.0 / (eps * eps);
    let mut sq = 0.0;
    let n = 100;
    for r in 0..n {
        let fine = sample_grid(&tr, horizon, 1e-3, SamplerSeed::new(31, r)).unwrap();
        // Coarsen by keeping every other grid level: the same Brownian path on a 2e−3 grid.
        let keep: Vec<usize> = (0..fine.len()).step_by(2).collect();
        let coarse = PathSample {
            breakpoints: keep.iter().map(|&k| fine.breakpoints[k]).collect(),
            values: keep.iter().map(|&k| fine.values[k]).collect(),
            terminal: fine.terminal,
            horizon,
            exactness: Exactness::GridApprox { step: 2e-3 },
        };
        let (fr, fi) = integrate(&fine, theta, c, eps, &[1.0]).unwrap();
        let (cr, ci) = integrate(&coarse, theta, c, eps, &[1.0]).unwrap();
        sq += (fr[0] - cr[0]).powi(2) + (fi[0] - ci[0]).powi(2);
    }
    let rms = (sq / n as f64).sqrt();
    assert!(rms < 5e-2, "rms {rms}");
}

#[test]
fn build_is_deterministic() {
    let mut config = ExperimentConfig::new(LevyTriplet::brownian(1.0, 0.0).unwrap(), vec![1.0], 0.2, 1.0);
    config.master_seed = 77;
    assert_eq!(build_approximation(&config, 3).unwrap(), build_approximation(&config, 3).unwrap());
}

proptest! {
    #[test]
    fn conjugate_angle_gives_conjugate_path(theta in 0.1f64..3.0, seed in 0u64..1000) {
        let tr = LevyTriplet::compound_poisson(1.5, JumpLaw::symmetric(0.8).unwrap()).unwrap();
        let plus = ExperimentConfig { master_seed: seed, ..ExperimentConfig::new(tr.clone(), vec![theta], 0.2, 1.0) };
        let minus = ExperimentConfig { master_seed: seed, ..ExperimentConfig::new(tr, vec![-theta], 0.2, 1.0) };
        let (Ok(p), Ok(m)) = (build_approximation(&plus, 0), build_approximation(&minus, 0)) else {
            return Ok(());
        };
        prop_assert_eq!(&p.re, &m.re);
        prop_assert!(p.im.iter().zip(&m.im).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn stroock_equivalence_random_seeds(seed in 0u64..10_000, eps in 0.05f64..1.0) {
        let config = ExperimentConfig { master_seed: seed, ..poisson_config(PI, eps) };
        let path = build_approximation(&config, 0).unwrap();
        let driver = sample_driver(&config, 0).unwrap();
        for (k, &t) in config.output_times().iter().enumerate() {
            let want = stroock(&driver.breakpoints[1..], eps, t);
            prop_assert!((path.re[k] - want).abs() <= 1e-12 * want.abs().max(1.0) / eps);
            prop_assert_eq!(path.im[k], 0.0);
        }
    }
}
