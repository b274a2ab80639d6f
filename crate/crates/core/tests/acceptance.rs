//! Acceptance run: one line per criterion, then a summary.
//!
//! Criteria listed in `RECORDED_FAILURES` are evaluated exactly as stated and
//! are expected to print FAIL. The binary exits non-zero when any other
//! criterion fails, or when a recorded one unexpectedly passes.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::Command;
use std::time::Instant;

use kacstroock::hypothesis::{h1_value, h2_value, h3_value, hbar_cross_value, hypothesis_scan, EvalMode, Hypothesis};
use kacstroock::kac::{sample_driver, ExperimentConfig};
use kacstroock::levy::{levy_exponent, normalization_constant, JumpLaw, LevyTriplet};
use kacstroock::presets::load_preset;
use kacstroock::stats::{
    covariance_estimate, estimate_endpoint_moments, ks_ladder, ks_normal, median, quadratic_variation_check,
    simulate_components, with_workers,
};
use num_complex::Complex64;

const RECORDED_FAILURES: &[(u32, &str)] = &[
    (4, "on seeds 1..=5 the medians at ε=0.1 and ε=0.05 invert by a few 1e-4; both sit at the sampling floor plus the O(ε) mean offset"),
    (9, "unattainable: at θ=π the endpoint variance tends to 2, so Re x(1) is N(0,2), not N(0,1)"),
];
const LADDER: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn preset(name: &str) -> ExperimentConfig {
    load_preset(name).unwrap().config
}

fn ulps_apart(x: f64, y: f64) -> u64 {
    (x.to_bits() as i64).abs_diff(y.to_bits() as i64)
}

/// ε∫₀^{2t/ε²}(−1)^{N_s}ds from the jump times.
fn stroock(jump_times: &[f64], eps: f64, t: f64) -> f64 {
    let end = 2.0 * t / (eps * eps);
    let (mut total, mut sign, mut left) = (0.0, 1.0, 0.0);
    for &tau in jump_times.iter().take_while(|&&tau| tau < end) {
        total += sign * (tau - left);
        sign = -sign;
        left = tau;
    }
    eps * (total + sign * (end - left))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let tr = LevyTriplet::poisson(1.0).unwrap();
    let mut config = ExperimentConfig::new(tr.clone(), vec![PI], 0.1, 1.0);
    config.replicas = 100;
    let c = normalization_constant(PI, &tr).unwrap();
    let paths = &simulate_components(&config).unwrap()[0];
    let mut max_err = 0.0f64;
    let mut max_im = 0.0f64;
    for (r, p) in paths.iter().enumerate() {
        let driver = sample_driver(&config, r as u64).unwrap();
        for (k, &t) in p.times.iter().enumerate() {
            max_err = max_err.max((p.re[k] - stroock(&driver.breakpoints[1..], 0.1, t)).abs());
            max_im = max_im.max(p.im[k].abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        c == 1.0 && max_err <= 1e-12 && max_im == 0.0 && secs < 1.0,
        format!("c(π)={c}, max|re−oracle|={max_err:.2e} (≤1e-12), max|im|={max_im}, {secs:.3}s (<1s)"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let families = [
        ("poisson", LevyTriplet::poisson(1.0).unwrap()),
        ("brownian", LevyTriplet::brownian(1.0, 0.0).unwrap()),
        ("compound-poisson-symmetric", LevyTriplet::compound_poisson(2.0, JumpLaw::symmetric(1.0).unwrap()).unwrap()),
        ("stable-1.5", LevyTriplet::symmetric_stable(1.5, 1.0).unwrap()),
    ];
    let mut worst = 0;
    let mut checked = 0;
    for (_, tr) in &families {
        for k in 1..=30 {
            let theta = 0.1 * k as f64;
            let e = levy_exponent(theta, tr).unwrap();
            if e.a_part <= tr.default_tolerance() {
                continue;
            }
            let c = normalization_constant(theta, tr).unwrap();
            worst = worst.max(ulps_apart(c * c * 2.0 * e.a_part, e.a_part * e.a_part + e.b_part * e.b_part));
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 4 && secs < 1.0, format!("{checked} (family, θ) pairs, worst {worst} ulps (≤4), {secs:.3}s (<1s)"))
}

fn criterion_3_and_5() -> (Outcome, Outcome) {
    let config = preset("poisson-pi-half");
    let start = Instant::now();
    let components = with_workers(Some(1), || simulate_components(&config)).unwrap().unwrap();
    let paths = &components[0];
    let k = paths[0].times.len() - 1;
    let ends: Vec<Complex64> = paths.iter().map(|p| Complex64::new(p.re[k], p.im[k])).collect();
    let m = estimate_endpoint_moments(&ends, 1.0).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let c3 = outcome(
        (m.var_re.value - 1.0).abs() <= 0.06
            && (m.var_im.value - 1.0).abs() <= 0.06
            && m.cov_re_im.value.abs() <= 0.05
            && (m.fourth_abs_moment.value - 8.0).abs() <= 0.5
            && secs < 120.0,
        format!(
            "var_re={:.4} var_im={:.4} (1±0.06), cov={:.4} (0±0.05), E|x|⁴={:.3} (8±0.5), n={}, {secs:.2}s single-threaded (<120s)",
            m.var_re.value, m.var_im.value, m.cov_re_im.value, m.fourth_abs_moment.value, m.n
        ),
    );
    let qv = quadratic_variation_check(paths, 0.0, 1.0, 100).unwrap();
    let c5 = outcome(
        (qv.sum_re2.value - 1.0).abs() <= 0.06 && (qv.sum_im2.value - 1.0).abs() <= 0.06 && qv.cross.value.abs() <= 0.05,
        format!(
            "100 cells: Σ(ΔRe)²={:.4} Σ(ΔIm)²={:.4} (1±0.06), ΣΔReΔIm={:.4} (0±0.05)",
            qv.sum_re2.value, qv.sum_im2.value, qv.cross.value
        ),
    );
    (c3, c5)
}

fn criterion_4_and_6() -> (Outcome, Outcome) {
    let mut config = preset("poisson-pi-half");
    config.replicas = 5000;
    let seeds = [1, 2, 3, 4, 5];
    let rows = ks_ladder(&config, &LADDER, &seeds, None).unwrap();
    let per_eps = |eps: f64| rows.iter().filter(move |r| r.epsilon == eps);

    let medians: Vec<f64> = LADDER.iter().map(|&e| median(&per_eps(e).map(|r| r.ks_stat).collect::<Vec<_>>())).collect();
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    let last = medians[medians.len() - 1];
    let c4 = outcome(
        monotone && last <= 0.025,
        format!(
            "median KS over 5 seeds at ε={LADDER:?}: {:?}; non-increasing={monotone}, at ε=0.05 {last:.4} (≤0.025)",
            medians.iter().map(|m| (m * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    );

    let bounded = rows.iter().all(|r| r.tightness <= 6.0 + 3.0 * r.tightness_se);
    let worst = rows.iter().map(|r| r.tightness - 6.0 - 3.0 * r.tightness_se).fold(f64::NEG_INFINITY, f64::max);
    // Trend: least-squares slope of the per-ε mean ratio against ladder position,
    // positive meaning growth as ε shrinks; an increase must exceed 3 SE of the slope.
    let xs: Vec<f64> = (0..LADDER.len()).map(|i| i as f64).collect();
    let (mut means, mut ses) = (Vec::new(), Vec::new());
    for &e in &LADDER {
        let rs: Vec<_> = per_eps(e).collect();
        let k = rs.len() as f64;
        means.push(rs.iter().map(|r| r.tightness).sum::<f64>() / k);
        ses.push(rs.iter().map(|r| r.tightness_se.powi(2)).sum::<f64>().sqrt() / k);
    }
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let slope: f64 = xs.iter().zip(&means).map(|(x, y)| (x - xbar) * y).sum::<f64>() / sxx;
    let slope_se = xs.iter().zip(&ses).map(|(x, s)| ((x - xbar) / sxx * s).powi(2)).sum::<f64>().sqrt();
    let no_trend = slope <= 3.0 * slope_se;
    let c6 = outcome(
        bounded && no_trend,
        format!(
            "per-ε mean ratio {:?}; all ≤ 6+3SE={bounded} (worst margin {worst:.3}); slope {slope:.4} ± {slope_se:.4} per ladder step (≤3SE={no_trend})",
            means.iter().map(|m| (m * 1e3).round() / 1e3).collect::<Vec<_>>()
        ),
    );
    (c4, c6)
}

fn criterion_7() -> Outcome {
    let tr = LevyTriplet::poisson(1.0).unwrap();
    let (s, t, eps) = (0.0, 1.0, 0.1);
    let rows = [
        ("H1", h1_value(FRAC_PI_2, &tr, s, t, eps, EvalMode::Both).unwrap()),
        ("H2", h2_value(FRAC_PI_2, &tr, s, t, eps, EvalMode::Both).unwrap()),
        ("H3", h3_value(FRAC_PI_2, &tr, s, t, eps, EvalMode::Both).unwrap()),
        ("H̄+", hbar_cross_value(FRAC_PI_2, PI / 3.0, 1, &tr, s, t, eps, EvalMode::Both).unwrap()),
        ("H̄−", hbar_cross_value(FRAC_PI_2, PI / 3.0, -1, &tr, s, t, eps, EvalMode::Both).unwrap()),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, r) in &rows {
        let (c, q) = (r.closed_form.unwrap(), r.quadrature.unwrap());
        let rel = (c - q).abs() / c.abs();
        worst = worst.max(rel);
        parts.push(format!("{name}={c:.6}"));
    }
    let scan = hypothesis_scan(&[FRAC_PI_2], &tr, s, t, &LADDER, EvalMode::ClosedForm).unwrap();
    let exponent = scan.h2_exponents[0].1;
    let gaps: Vec<String> =
        scan.rows.iter().filter(|r| r.which == Hypothesis::H2).map(|r| format!("{:.1e}", r.limit_gap)).collect();
    outcome(
        worst <= 0.01 && exponent >= 1.9,
        format!(
            "{}; worst closed/quadrature rel diff {worst:.2e} (≤1%); H2 gaps {gaps:?}, fitted exponent {exponent} (≥1.9)",
            parts.join(" ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let config = preset("md-poisson-2d");
    let components = simulate_components(&config).unwrap();
    let k = components[0][0].times.len() - 1;
    let mut vars: Vec<(String, Vec<f64>)> = Vec::new();
    for (j, paths) in components.iter().enumerate() {
        vars.push((format!("Re{}", j + 1), paths.iter().map(|p| p.re[k]).collect()));
        vars.push((format!("Im{}", j + 1), paths.iter().map(|p| p.im[k]).collect()));
    }
    let mut ok = true;
    let mut diag = Vec::new();
    let mut worst_off = 0.0f64;
    for a in 0..vars.len() {
        for b in a..vars.len() {
            let v = covariance_estimate(&vars[a].1, &vars[b].1).value;
            if a == b {
                ok &= (v - 1.0).abs() <= 0.06;
                diag.push(format!("{}={v:.4}", vars[a].0));
            } else {
                ok &= v.abs() <= 0.06;
                worst_off = worst_off.max(v.abs());
            }
        }
    }
    let mut single = config.clone();
    single.thetas = vec![config.thetas[0]];
    let one_d = simulate_components(&single).unwrap();
    let bitwise = one_d[0] == components[0];
    outcome(
        ok && bitwise,
        format!(
            "diagonal {} (1±0.06); max |off-diagonal| over 6 pairs {worst_off:.4} (≤0.06); component 0 bitwise equal to 1-D run: {bitwise}",
            diag.join(" ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let config = preset("poisson-pi");
    let paths = &simulate_components(&config).unwrap()[0];
    let max_im = paths.iter().flat_map(|p| p.im.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let k = paths[0].times.len() - 1;
    let re: Vec<f64> = paths.iter().map(|p| p.re[k]).collect();
    let ks = ks_normal(&re, 1.0).unwrap();
    let var = covariance_estimate(&re, &re).value;
    outcome(
        max_im == 0.0 && ks.ks_stat <= 0.025,
        format!("max|im|={max_im} (=0); KS of Re x(1) vs N(0,1) = {:.4} (≤0.025); observed var_re={var:.4}", ks.ks_stat),
    )
}

fn criterion_10() -> Outcome {
    let dir = std::env::temp_dir().join(format!("kacstroock-acceptance-{}", std::process::id()));
    let run = |theta: &str| {
        Command::new(env!("CARGO_BIN_EXE_kacstroock"))
            .args(["simulate", "--family", "poisson", "--rate", "1", "--epsilon", "0.1", "--replicas", "2", "--theta", theta])
            .arg("--out-dir")
            .arg(&dir)
            .output()
            .unwrap()
    };
    let null = run("6.283185307179586");
    let pair = run("1.5707963267948966,1.5707963267948966");
    let null_msg = String::from_utf8_lossy(&null.stderr).into_owned();
    let pair_msg = String::from_utf8_lossy(&pair.stderr).into_owned();
    let _ = std::fs::remove_dir_all(&dir);
    let ok_null = null.status.code() == Some(2) && null_msg.contains("NullDegenerate");
    let ok_pair =
        pair.status.code() == Some(2) && pair_msg.contains("admissibility failure") && pair_msg.contains("a(θ1−θ2)");
    outcome(
        ok_null && ok_pair,
        format!(
            "θ=2π → exit {:?}: {}; (π/2, π/2) → exit {:?}: {}",
            null.status.code(),
            null_msg.trim(),
            pair.status.code(),
            pair_msg.trim()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "Stroock equivalence", criterion_1()));
    results.push((2, "normalization identity", criterion_2()));
    let (c3, c5) = criterion_3_and_5();
    results.push((3, "limit-law moments", c3));
    let (c4, c6) = criterion_4_and_6();
    results.push((4, "normality trend", c4));
    results.push((5, "quadratic variation", c5));
    results.push((6, "tightness ratio", c6));
    results.push((7, "hypothesis closed forms", criterion_7()));
    results.push((8, "m-dimensional", criterion_8()));
    results.push((9, "real-degenerate mode", criterion_9()));
    results.push((10, "degenerate refusals", criterion_10()));
    results.sort_by_key(|r| r.0);

    let mut unexpected = Vec::new();
    for (n, name, o) in &results {
        let recorded = RECORDED_FAILURES.iter().find(|r| r.0 == *n).map(|r| r.1);
        let tag = match (o.pass, recorded) {
            (true, None) => "PASS".to_string(),
            (false, None) => "FAIL".to_string(),
            (false, Some(why)) => format!("FAIL (recorded: {why})"),
            (true, Some(_)) => "PASS (recorded as failing)".to_string(),
        };
        println!("criterion {n:>2} {name:<24} {tag}: {}", o.detail);
        if o.pass == recorded.is_some() {
            unexpected.push(*n);
        }
    }
    println!(
        "acceptance: {} of {} criteria pass, {:.1}s",
        results.iter().filter(|r| r.2.pass).count(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
