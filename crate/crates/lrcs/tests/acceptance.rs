//! Acceptance suite: every test exercises one end-to-end guarantee at a
//! fixed tolerance and prints a `[acceptance] <name>: PASS` line with the
//! measured numbers (visible with `cargo test -- --nocapture`).
//!
//! Oracles used here (quadrature, finite differences, principal angles,
//! least-squares fits) are implemented inside this file, independent of the
//! library code paths they check.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use lrcs::altmin::run_altmin;
use lrcs::gdmin::{gd_step, gradient_u, run, update_b, SolverConfig};
use lrcs::harness::{run_experiment, ExperimentSpec, GridSpec};
use lrcs::init::{spectral_init, truncated_second_moment, verify_expectation, InitConfig};
use lrcs::linalg::{orthonormality_error, thin_qr_positive};
use lrcs::metrics::sd2;
use lrcs::model::{generate_ground_truth, measure, GroundTruth, ProblemInstance};
use lrcs::report::RunReport;

// ---------------------------------------------------------------------
// helpers

fn make_instance(
    n: usize,
    q: usize,
    r: usize,
    m: usize,
    kappa: f64,
    sigma_v: f64,
    seed: u64,
) -> (GroundTruth, ProblemInstance) {
    let t = generate_ground_truth(n, q, r, kappa, seed).unwrap();
    let inst = measure(&t, m, sigma_v, seed).unwrap();
    (t, inst)
}

fn run_one(inst: &ProblemInstance, r: usize, max_iters: usize, timing: bool) -> RunReport {
    let cfg = SolverConfig::new(r)
        .with_max_iters(max_iters)
        .with_record_timing(timing);
    let (_, report) = run(inst, &cfg).unwrap();
    report
}

/// Least-squares line fit of `y` against `x`; returns (slope, r_squared).
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    (slope, 1.0 - ss_res / ss_tot)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Adaptive Simpson quadrature (independent of the library's closed form).
fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let mid = 0.5 * (a + b);
        let left = rule(f, a, mid);
        let right = rule(f, mid, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, mid, left, 0.5 * tol, depth - 1)
                + recurse(f, mid, b, right, 0.5 * tol, depth - 1)
        }
    }
    recurse(&f, a, b, rule(&f, a, b), tol, 40)
}

/// Second moment of a standard normal restricted to `[-gamma, gamma]`,
/// by quadrature only.
fn truncated_moment_quadrature(gamma: f64) -> f64 {
    let phi = |x: f64| x * x * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    2.0 * simpson(phi, 0.0, gamma, 1e-14)
}

/// Subspace distance through principal angles: `sqrt(1 - sigma_min^2)` of
/// the cosine matrix. Valid for equal-rank orthonormal inputs.
fn sd2_principal_angles(u1: &DMatrix<f64>, u2: &DMatrix<f64>) -> f64 {
    let c = u1.transpose() * u2;
    let svals = c.svd(false, false).singular_values;
    let smin = svals[svals.len() - 1];
    (1.0 - smin * smin).max(0.0).sqrt()
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

// ---------------------------------------------------------------------
// criteria

#[test]
fn noise_free_convergence_and_contraction() {
    let mut finals = Vec::new();
    let mut ratios = Vec::new();
    for seed in 0..10u64 {
        let (_, inst) = make_instance(100, 100, 2, 40, 1.3, 0.0, 300 + seed);
        let report = run_one(&inst, 2, 150, false);
        let sd2s: Vec<f64> = report.history.iter().map(|h| h.sd2_to_truth.unwrap()).collect();
        finals.push(report.final_errors.unwrap().sd2);
        for w in sd2s.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (1e-11..=0.1).contains(&a) && (1e-11..=0.1).contains(&b) {
                ratios.push(b / a);
            }
        }
    }
    let worst = finals.iter().cloned().fold(0.0_f64, f64::max);
    assert!(
        worst <= 1e-10,
        "worst final subspace distance over 10 seeds: {worst:.3e}"
    );
    let med_ratio = median(&mut ratios);
    assert!(
        med_ratio <= 0.95,
        "median per-iteration contraction {med_ratio:.4}"
    );
    println!(
        "[acceptance] noise_free_convergence_and_contraction: PASS \
         (worst final sd2 {worst:.2e}, median contraction {med_ratio:.3})"
    );
}

#[test]
fn log_linear_decay_fit() {
    let mut r2s = Vec::new();
    for seed in 0..3u64 {
        let (_, inst) = make_instance(100, 100, 2, 40, 1.3, 0.0, 320 + seed);
        let report = run_one(&inst, 2, 150, false);
        let pts: Vec<(f64, f64)> = report
            .history
            .iter()
            .filter_map(|h| {
                let d = h.sd2_to_truth.unwrap();
                ((1e-8..=1e-2).contains(&d)).then(|| (h.iter as f64, d.ln()))
            })
            .collect();
        assert!(pts.len() >= 10, "only {} points in the decay window", pts.len());
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let (slope, r2) = line_fit(&xs, &ys);
        assert!(slope < 0.0);
        r2s.push(r2);
    }
    let min_r2 = r2s.iter().cloned().fold(1.0_f64, f64::min);
    assert!(min_r2 >= 0.98, "weakest log-linear fit R^2 = {min_r2:.4}");
    println!("[acceptance] log_linear_decay_fit: PASS (min R^2 {min_r2:.4} over 3 seeds)");
}

#[test]
fn noise_floor_scaling() {
    // sigma_v chosen so that q * sigma_v^2 / sigma_min^2 equals the target
    // noise-to-signal ratio; the floor should scale like its square root.
    let (n, q, r, m) = (60, 60, 2, 40);
    let nsrs = [1e-6, 1e-4, 1e-2];
    let mut floors = Vec::new();
    for (i, &nsr) in nsrs.iter().enumerate() {
        let sigma_v = (nsr / q as f64).sqrt();
        let mut per_seed = Vec::new();
        for seed in 0..10u64 {
            let (_, inst) =
                make_instance(n, q, r, m, 1.3, sigma_v, 400 + 40 * i as u64 + seed);
            let report = run_one(&inst, r, 100, false);
            // Floor: median distance over the trailing iterations, after
            // the decay has flattened out.
            let mut tail: Vec<f64> = report
                .history
                .iter()
                .rev()
                .take(20)
                .map(|h| h.sd2_to_truth.unwrap())
                .collect();
            per_seed.push(median(&mut tail));
        }
        floors.push(median(&mut per_seed));
    }
    assert!(
        floors[0] < floors[1] && floors[1] < floors[2],
        "floors not increasing: {floors:?}"
    );
    for pair in floors.windows(2) {
        let ratio = pair[1] / pair[0];
        assert!(
            (3.0..=30.0).contains(&ratio),
            "floor ratio {ratio:.2} outside [3, 30] (floors {floors:?})"
        );
    }
    println!(
        "[acceptance] noise_floor_scaling: PASS (floors {:.2e} / {:.2e} / {:.2e}, \
         ratios {:.1} and {:.1})",
        floors[0],
        floors[1],
        floors[2],
        floors[1] / floors[0],
        floors[2] / floors[1]
    );
}

#[test]
fn init_quality_improves_with_rows() {
    let (n, q, r) = (64, 64, 2);
    let init_sd2 = |m: usize, seed: u64| -> f64 {
        let (t, inst) = make_instance(n, q, r, m, 1.3, 0.0, seed);
        let res = spectral_init(&inst.full_view(), r, &InitConfig::from_truth(&t)).unwrap();
        sd2(&t.u_star, &res.u0).unwrap()
    };
    let at_80: Vec<f64> = (0..40).map(|s| init_sd2(80, 500 + s)).collect();
    let at_160: Vec<f64> = (0..40).map(|s| init_sd2(160, 500 + s)).collect();
    let good = at_80.iter().filter(|&&d| d <= 0.5).count();
    assert!(good >= 38, "only {good}/40 seeds below 0.5 at m = 80");
    let m80 = median(&mut at_80.clone());
    let m160 = median(&mut at_160.clone());
    assert!(
        m160 < m80,
        "median init distance did not improve: {m160:.3} at m=160 vs {m80:.3} at m=80"
    );
    println!(
        "[acceptance] init_quality_improves_with_rows: PASS \
         ({good}/40 seeds <= 0.5 at m=80, median {m80:.3} -> {m160:.3} at m=160)"
    );
}

#[test]
fn expectation_mc_agreement() {
    let t = generate_ground_truth(20, 10, 2, 2.0, 600).unwrap();
    let coarse = verify_expectation(&t, 50, 0.5, 2000, 601).unwrap();
    assert!(
        coarse.rel_frob_dev <= 0.05,
        "deviation {:.4} above 5% at 2000 replicates",
        coarse.rel_frob_dev
    );
    let fine = verify_expectation(&t, 50, 0.5, 8000, 601).unwrap();
    assert!(
        fine.rel_frob_dev <= 0.025,
        "deviation {:.4} above 2.5% at 8000 replicates",
        fine.rel_frob_dev
    );
    println!(
        "[acceptance] expectation_mc_agreement: PASS \
         (rel deviation {:.4} at 2000 reps, {:.4} at 8000 reps)",
        coarse.rel_frob_dev, fine.rel_frob_dev
    );
}

#[test]
fn truncated_moment_bounds_and_oracles() {
    // Near-total mass above gamma = 3.
    let mut min_w = f64::INFINITY;
    for i in 0..=70 {
        let gamma = 3.0 + 0.1 * i as f64;
        min_w = min_w.min(truncated_second_moment(gamma));
    }
    assert!(min_w >= 0.92, "minimum weight {min_w:.4} on [3, 10]");

    // Closed form against quadrature.
    let mut max_dev = 0.0_f64;
    for i in 0..=40 {
        let gamma = 0.125 * i as f64;
        let dev = (truncated_second_moment(gamma) - truncated_moment_quadrature(gamma)).abs();
        max_dev = max_dev.max(dev);
    }
    assert!(max_dev <= 1e-10, "closed form vs quadrature deviates by {max_dev:.2e}");

    // Closed form against plain Monte Carlo, three standard errors.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(606);
    let samples: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            x
        })
        .collect();
    for gamma in [0.5, 1.0, 2.0, 3.0] {
        let vals: Vec<f64> = samples
            .iter()
            .map(|&x| if x.abs() <= gamma { x * x } else { 0.0 })
            .collect();
        let nf = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / nf;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
        let se = (var / nf).sqrt();
        let closed = truncated_second_moment(gamma);
        assert!(
            (closed - mean).abs() <= 3.0 * se,
            "gamma {gamma}: closed {closed:.6} vs MC {mean:.6} (3 SE = {:.2e})",
            3.0 * se
        );
    }
    println!(
        "[acceptance] truncated_moment_bounds_and_oracles: PASS \
         (min weight {min_w:.4} on [3,10], quadrature deviation {max_dev:.1e}, MC within 3 SE)"
    );
}

#[test]
fn gradient_matches_finite_differences() {
    // f(U) = sum_k |A_k U b_k - y_k|^2 has gradient 2 G with G the matrix
    // the solver uses (it folds the 2 into the step size), so the
    // directional derivative must match 2 <G, D>.
    let mut worst = 0.0_f64;
    for seed in 0..20u64 {
        let (_, inst) = make_instance(6, 3, 2, 8, 1.5, 0.1, 700 + seed);
        let view = inst.full_view();
        let u = thin_qr_positive(&gaussian_matrix(6, 2, 900 + seed)).unwrap();
        let b = gaussian_matrix(2, 3, 1000 + seed);
        let dir = gaussian_matrix(6, 2, 1100 + seed);
        let g = gradient_u(&u, &b, &view).unwrap();
        let analytic = 2.0 * (g.component_mul(&dir)).sum();

        let f = |mat: &DMatrix<f64>| -> f64 {
            (0..view.q())
                .map(|k| {
                    let bk = b.column(k);
                    let res = view.a(k) * mat * bk - view.y(k);
                    res.norm_squared()
                })
                .sum()
        };
        let h = 1e-4;
        let numeric = (f(&(&u + &dir * h)) - f(&(&u - &dir * h))) / (2.0 * h);
        let rel = (analytic - numeric).abs() / numeric.abs().max(1e-300);
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-5, "worst relative gradient error {worst:.2e}");
    println!(
        "[acceptance] gradient_matches_finite_differences: PASS \
         (worst relative error {worst:.1e} over 20 seeds)"
    );
}

#[test]
fn solver_comparison_from_identical_init() {
    let (_, inst) = make_instance(100, 100, 2, 40, 1.3, 0.0, 800);
    let cfg = SolverConfig::new(2).with_max_iters(150);
    let (_, rep_gd) = run(&inst, &cfg).unwrap();
    let (_, rep_am) = run_altmin(&inst, &cfg).unwrap();

    // Identical initialization, bit for bit.
    assert_eq!(rep_gd.alpha, rep_am.alpha);
    assert_eq!(rep_gd.init_sd2, rep_am.init_sd2);
    assert_eq!(rep_gd.truncation_fraction, rep_am.truncation_fraction);

    let gd_sd2 = rep_gd.final_errors.as_ref().unwrap().sd2;
    let am_sd2 = rep_am.final_errors.as_ref().unwrap().sd2;
    assert!(gd_sd2 <= 1e-8, "gradient solver final sd2 {gd_sd2:.2e}");
    assert!(am_sd2 <= 1e-8, "baseline final sd2 {am_sd2:.2e}");

    let mut gd_ms: Vec<f64> = rep_gd.history.iter().map(|h| h.u_update_ms).collect();
    let mut am_ms: Vec<f64> = rep_am.history.iter().map(|h| h.u_update_ms).collect();
    let (gd_med, am_med) = (median(&mut gd_ms), median(&mut am_ms));
    assert!(
        gd_med < am_med,
        "basis update medians: gradient {gd_med:.3} ms vs baseline {am_med:.3} ms"
    );
    println!(
        "[acceptance] solver_comparison_from_identical_init: PASS \
         (sd2 {gd_sd2:.1e} vs {am_sd2:.1e}, basis update {gd_med:.2} ms vs {am_med:.2} ms)"
    );
}

#[test]
fn invariant_suite() {
    // (a) Orthonormality along the whole iteration path, via public ops.
    let (t, inst) = make_instance(30, 25, 2, 30, 1.2, 0.0, 810);
    let view = inst.full_view();
    let init = spectral_init(&view, 2, &InitConfig::from_truth(&t)).unwrap();
    let mut u = init.u0.clone();
    assert!(orthonormality_error(&u) <= 1e-8);
    let mut max_ortho = orthonormality_error(&u);
    for _ in 0..40 {
        let b = update_b(&u, &view).unwrap();
        let sigma = b.clone().singular_values()[0];
        let g = gradient_u(&u, &b, &view).unwrap();
        u = gd_step(&u, &g, 0.5 / (sigma * sigma), inst.m()).unwrap();
        max_ortho = max_ortho.max(orthonormality_error(&u));
    }
    assert!(max_ortho <= 1e-8, "orthonormality drifted to {max_ortho:.2e}");

    // (b) Rotating a basis within its span does not move the distance.
    let q_rot = thin_qr_positive(&gaussian_matrix(2, 2, 811)).unwrap();
    let rotated = &u * &q_rot;
    let self_dist = sd2(&u, &rotated).unwrap();
    assert!(self_dist <= 1e-10, "distance to own rotation {self_dist:.2e}");
    let d1 = sd2(&t.u_star, &u).unwrap();
    let d2 = sd2(&t.u_star, &rotated).unwrap();
    assert!((d1 - d2).abs() <= 1e-10);

    // (c) Distance agrees with the principal-angle computation.
    let mut max_gap = 0.0_f64;
    for seed in 0..20u64 {
        let a = thin_qr_positive(&gaussian_matrix(40, 3, 820 + seed)).unwrap();
        let b = thin_qr_positive(&gaussian_matrix(40, 3, 860 + seed)).unwrap();
        max_gap = max_gap.max((sd2(&a, &b).unwrap() - sd2_principal_angles(&a, &b)).abs());
    }
    assert!(max_gap <= 1e-10, "principal-angle gap {max_gap:.2e}");

    // (d) Experiments rerun byte for byte with timings off.
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec {
        grid: GridSpec {
            n: vec![16],
            q: vec![12],
            r: vec![2],
            m: vec![10],
            sigma_v: vec![0.0, 0.05],
        },
        kappa: 1.2,
        trials: 3,
        max_iters: 25,
        record_timing: false,
        out_dir: tmp.path().join("a"),
        ..ExperimentSpec::default()
    };
    let o1 = run_experiment(&spec).unwrap();
    spec.out_dir = tmp.path().join("b");
    let o2 = run_experiment(&spec).unwrap();
    for (x, y) in [
        (&o1.results_path, &o2.results_path),
        (&o1.history_path, &o2.history_path),
        (&o1.summary_path, &o2.summary_path),
    ] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }

    // (e) Scaling the observations scales the step size down and leaves
    // the recovered subspace in place (default sigma estimate from B).
    let (t0, base) = make_instance(40, 30, 2, 25, 1.3, 0.01, 830);
    let scale = 137.0;
    let scaled_truth = GroundTruth::new(
        t0.u_star.clone(),
        DVector::from_iterator(2, t0.sigma_star.iter().map(|s| s * scale)),
        t0.v_star.clone(),
    )
    .unwrap();
    let scaled = ProblemInstance::from_parts(
        Some(scaled_truth),
        (0..base.q()).map(|k| base.sketch(k).clone()).collect(),
        (0..base.q()).map(|k| base.observation(k) * scale).collect(),
        base.sigma_v * scale,
        base.seed,
    )
    .unwrap();
    let cfg = SolverConfig::new(2).with_max_iters(60).with_record_timing(false);
    let (s_base, rep_base) = run(&base, &cfg).unwrap();
    let (s_scaled, rep_scaled) = run(&scaled, &cfg).unwrap();
    let alpha_rel = (rep_scaled.alpha - scale * scale * rep_base.alpha).abs()
        / (scale * scale * rep_base.alpha);
    assert!(alpha_rel <= 1e-10, "threshold not scale-equivariant: {alpha_rel:.2e}");
    let drift = sd2(&s_base.u, &s_scaled.u).unwrap();
    assert!(drift <= 1e-8, "recovered subspace moved by {drift:.2e} under scaling");
    let eta_rel = (rep_scaled.history[0].eta_used * scale * scale
        - rep_base.history[0].eta_used)
        .abs()
        / rep_base.history[0].eta_used;
    assert!(eta_rel <= 1e-10, "step size not inverse-square in scale: {eta_rel:.2e}");

    println!(
        "[acceptance] invariant_suite: PASS \
         (orthonormality {max_ortho:.1e}, rotation {self_dist:.1e}, \
          principal angles {max_gap:.1e}, byte-identical reruns, scale drift {drift:.1e})"
    );
}

#[test]
fn phase_transition_monotone_in_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        grid: GridSpec {
            n: vec![50],
            q: vec![50],
            r: vec![2],
            m: vec![5, 10, 20, 40, 80],
            sigma_v: vec![0.0],
        },
        kappa: 1.0,
        trials: 20,
        max_iters: 80,
        success_tol: 1e-6,
        base_seed: 12,
        record_timing: false,
        out_dir: tmp.path().join("phase"),
        ..ExperimentSpec::default()
    };
    let outcome = run_experiment(&spec).unwrap();
    let rates: Vec<f64> = outcome.summary.iter().map(|r| r.success_rate).collect();
    for w in rates.windows(2) {
        assert!(w[1] >= w[0], "success rate not monotone: {rates:?}");
    }
    assert!(rates[0] <= 0.1, "m=5 should almost always fail, got {}", rates[0]);
    assert!(
        rates[rates.len() - 1] >= 0.9,
        "m=80 should almost always succeed, got {}",
        rates[rates.len() - 1]
    );
    println!("[acceptance] phase_transition_monotone_in_rows: PASS (success rates {rates:?})");
}
