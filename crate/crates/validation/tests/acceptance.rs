//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails.

use std::process::ExitCode;

use deepc_bench::commands::{self, timed, Check};
use deepc_bench::instance::{control_spec, Instance};
use deepc_bench::{ExperimentConfig, Variant};
use deepc_core::matlib::{self, Mat, Vector};
use deepc_core::qp::{self, QpStatus, QuadProgram};
use deepc_core::rng::SeededRng;
use deepc_core::{slra, variants};

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

type Outcome = Result<Verdict, String>;

fn checks_verdict(checks: &[Check], expected: usize) -> Verdict {
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed()).collect();
    let worst = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let mut detail = format!("{} checks, worst deviation {worst:.3e}", checks.len());
    if let Some(c) = failed.first() {
        detail += &format!(", {} failed (first: instance {} {} {:.3e} {})", failed.len(), c.instance, c.pair, c.deviation, c.note);
    }
    Verdict::new(failed.is_empty() && checks.len() == expected, detail)
}

fn within(limit_s: f64, secs: f64, v: Verdict) -> Verdict {
    let ok = secs < limit_s;
    let detail = if ok { v.detail } else { format!("{}; runtime {secs:.1} s over the {limit_s} s budget", v.detail) };
    Verdict::new(v.passed && ok, detail)
}

fn tms() -> ExperimentConfig {
    ExperimentConfig::triple_mass()
}

fn noise_free() -> Outcome {
    let (checks, secs) = timed(|| commands::noise_free_checks(&tms()));
    let checks = checks.map_err(|e| e.to_string())?;
    Ok(within(30.0, secs, checks_verdict(&checks, 5)))
}

fn hybrid_svd() -> Outcome {
    let (checks, secs) = timed(|| commands::hybrid_svd_checks(&tms(), 10));
    let checks = checks.map_err(|e| e.to_string())?;
    Ok(within(60.0, secs, checks_verdict(&checks, 10)))
}

fn large_ridge() -> Outcome {
    let cfg = tms();
    let base = control_spec(&cfg, 0.0, 0.0, cfg.lambda_y).map_err(|e| e.to_string())?;
    let spec = control_spec(&cfg, 0.0, 1e4, cfg.lambda_y).map_err(|e| e.to_string())?;
    let mut worst = [0.0f64; 3];
    let mut failed = 0;
    for i in 0..10 {
        let inst = Instance::generate(&cfg, i).map_err(|e| e.to_string())?;
        let hybrid = variants::solve_hybrid(&inst.lib, &inst.online, &spec);
        let svd = variants::preprocess_svd(&inst.lib).and_then(|p| variants::solve_svd(&p, &inst.online, &spec));
        let dd = variants::build_spc_library(&inst.lib).and_then(|p| variants::solve_dd_spc(&p, &inst.online, &base));
        let (h, s, d) = (hybrid.map_err(|e| e.to_string())?, svd.map_err(|e| e.to_string())?, dd.map_err(|e| e.to_string())?);
        let devs = [commands::deviation(&h, &s), commands::deviation(&h, &d), commands::deviation(&s, &d)];
        for k in 0..3 {
            worst[k] = worst[k].max(devs[k]);
        }
        failed += devs.iter().filter(|d| **d > 1e-4).count();
    }
    // the same pairs with λ2 scaled to the Hessian of each instance
    let scaled = commands::large_ridge_checks(&cfg, 10).map_err(|e| e.to_string())?;
    let scaled_worst = scaled.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let detail = format!(
        "lambda2 = 1e4: worst hybrid/svd {:.3e}, hybrid/dd-spc {:.3e}, svd/dd-spc {:.3e}, {failed} of 30 pairs above 1e-4; \
         lambda2 = {:.0e} x Hessian scale: worst {scaled_worst:.3e} over {} pairs",
        worst[0],
        worst[1],
        worst[2],
        cfg.large_lambda2_factor,
        scaled.len()
    );
    Ok(Verdict::new(failed == 0, detail))
}

fn spc_predictor() -> Outcome {
    let checks = commands::spc_predictor_checks(&tms(), 10).map_err(|e| e.to_string())?;
    Ok(checks_verdict(&checks, 10))
}

fn reduction() -> Outcome {
    let checks = commands::reduction_checks(&tms(), 10).map_err(|e| e.to_string())?;
    Ok(checks_verdict(&checks, 20))
}

fn penrose() -> Outcome {
    let mut rng = SeededRng::new(606);
    let mut worst = 0.0f64;
    let mut shapes = std::collections::BTreeSet::new();
    for _ in 0..100 {
        let rows = 1 + (rng.uniform() * 12.0) as usize;
        let cols = 1 + (rng.uniform() * 12.0) as usize;
        let rank = 1 + (rng.uniform() * rows.min(cols) as f64) as usize;
        let rank = rank.min(rows.min(cols));
        shapes.insert((rows.cmp(&cols), rank == rows.min(cols)));
        let left = Mat::from_fn(rows, rank, |_, _| rng.standard_normal());
        let right = Mat::from_fn(rank, cols, |_, _| rng.standard_normal());
        let a = left * right;
        let x = matlib::pinv(&a, matlib::DEFAULT_RANK_TOL).map_err(|e| e.to_string())?;
        let ax = &a * &x;
        let xa = &x * &a;
        for dev in [
            matlib::max_abs_diff(&(&ax * &a), &a),
            matlib::max_abs_diff(&(&x * &ax), &x),
            matlib::max_abs_diff(&ax, &ax.transpose()),
            matlib::max_abs_diff(&xa, &xa.transpose()),
        ] {
            worst = worst.max(dev);
        }
    }
    Ok(Verdict::new(
        worst <= 1e-8,
        format!("100 matrices in {} shape/rank classes, worst condition residual {worst:.3e}", shapes.len()),
    ))
}

fn slra_checks() -> Outcome {
    let cfg = tms();
    let p = 3;
    let clean = Instance::generate_with_noise(&cfg, 0, 0.0).map_err(|e| e.to_string())?.lib;
    let rep = slra::iterative_slra(&clean.output_hankel(), &clean.input_hankel(), p, cfg.n_order, cfg.slra_eps, cfg.slra_max_iter)
        .map_err(|e| e.to_string())?;
    let fixed_dev = matlib::max_abs_diff(&rep.h_y_star, &clean.output_hankel());
    let fixed_ok = fixed_dev <= 1e-10 && rep.iterations <= 2;

    let mut improved = 0;
    for i in 0..20 {
        let noisy = Instance::generate(&cfg, i).map_err(|e| e.to_string())?.lib;
        let reference = Instance::generate_with_noise(&cfg, i, 0.0).map_err(|e| e.to_string())?.lib.output_hankel();
        let rep = slra::iterative_slra(&noisy.output_hankel(), &noisy.input_hankel(), p, cfg.n_order, cfg.slra_eps, cfg.slra_max_iter)
            .map_err(|e| e.to_string())?;
        if (&rep.h_y_star - &reference).norm() < (noisy.output_hankel() - &reference).norm() {
            improved += 1;
        }
    }
    Ok(Verdict::new(
        fixed_ok && improved >= 18,
        format!(
            "fixed point: deviation {fixed_dev:.3e} after {} iteration(s); denoising improved {improved}/20",
            rep.iterations
        ),
    ))
}

fn cost_ordering() -> Outcome {
    let cfg = tms();
    let (report, secs) = timed(|| commands::benchmark(&cfg));
    let report = report.map_err(|e| e.to_string())?;
    let order = [Variant::Hybrid, Variant::Svd, Variant::DdSpc, Variant::SvdIter, Variant::GroundTruth];
    let means: Vec<f64> = order.iter().map(|v| report.mean_cost(*v).unwrap_or(f64::NAN)).collect();
    let ordered = means.windows(2).all(|w| w[0] > w[1]);
    let rate = report.row(Variant::SvdIter).and_then(|r| r.increase_rate).unwrap_or(f64::NAN);
    let failures: usize = report.rows.iter().map(|r| r.failures).sum();
    let listing: Vec<String> = order.iter().zip(&means).map(|(v, m)| format!("{v} {m:.2}")).collect();
    let v = Verdict::new(
        ordered && rate < 0.15,
        format!(
            "means {}; ordering {}; svd-iter increase {:.1}% (limit 15%); {failures} failed solves",
            listing.join(", "),
            if ordered { "holds" } else { "violated" },
            100.0 * rate
        ),
    );
    Ok(within(1200.0, secs, v))
}

/// Minimum of a strictly convex box QP by trying every free/lower/upper
/// assignment and keeping the best feasible stationary point.
fn enumerate_active_sets(p: &Mat, q: &Vector, lo: &Vector, hi: &Vector) -> Vector {
    let n = q.len();
    let mut best: Option<(f64, Vector)> = None;
    for code in 0..3usize.pow(n as u32) {
        let roles: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let mut z = Vector::zeros(n);
        for i in 0..n {
            z[i] = [0.0, lo[i], hi[i]][roles[i]];
        }
        let free: Vec<usize> = (0..n).filter(|&i| roles[i] == 0).collect();
        if !free.is_empty() {
            let rhs = -(p * &z + q);
            let pf = Mat::from_fn(free.len(), free.len(), |r, c| p[(free[r], free[c])]);
            let bf = Vector::from_fn(free.len(), |r, _| rhs[free[r]]);
            let sol = pf.cholesky().expect("principal submatrix of a PD matrix").solve(&bf);
            for (r, &i) in free.iter().enumerate() {
                z[i] = sol[r];
            }
        }
        if (0..n).all(|i| z[i] >= lo[i] - 1e-12 && z[i] <= hi[i] + 1e-12) {
            let f = 0.5 * z.dot(&(p * &z)) + q.dot(&z);
            if best.as_ref().is_none_or(|(fb, _)| f < *fb) {
                best = Some((f, z));
            }
        }
    }
    best.expect("the unconstrained face always has a candidate").1
}

fn qp_oracle() -> Outcome {
    let mut rng = SeededRng::new(909);
    let mut worst = 0.0f64;
    let mut not_optimal = 0;
    for case in 0..50 {
        let n = 1 + case % 6;
        let g = Mat::from_fn(n, n, |_, _| rng.standard_normal());
        let p = &g * g.transpose() + Mat::identity(n, n) * 0.1;
        let q = Vector::from_fn(n, |_, _| 3.0 * rng.standard_normal());
        let lo = Vector::from_fn(n, |_, _| rng.uniform_in(-2.0, 0.0));
        let hi = Vector::from_fn(n, |i, _| lo[i] + rng.uniform_in(0.1, 2.5));
        let prob = QuadProgram::new(p.clone(), q.clone())
            .and_then(|pr| pr.with_bounds(lo.clone(), hi.clone()))
            .map_err(|e| e.to_string())?;
        let sol = qp::solve(&prob, qp::DEFAULT_TOL, qp::DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
        if sol.status != QpStatus::Optimal {
            not_optimal += 1;
        }
        worst = worst.max((&sol.z - enumerate_active_sets(&p, &q, &lo, &hi)).amax());
    }
    Ok(Verdict::new(
        worst <= 1e-6 && not_optimal == 0,
        format!("50 problems, n = 1..6, worst deviation {worst:.3e}, {not_optimal} not optimal"),
    ))
}

fn nonlinearity() -> Outcome {
    let cfg = ExperimentConfig {
        trials: 20,
        eps_list: vec![0.0],
        variants: vec![Variant::Hybrid, Variant::SvdIter],
        ..ExperimentConfig::lotka_volterra()
    };
    let (report, secs) = timed(|| commands::nonlinearity(&cfg));
    let report = report.map_err(|e| e.to_string())?;
    let hybrid = report.mean_cost(0.0, Variant::Hybrid).unwrap_or(f64::NAN);
    let svd_iter = report.mean_cost(0.0, Variant::SvdIter).unwrap_or(f64::NAN);
    let gt = report.mean_cost(0.0, Variant::GroundTruth).unwrap_or(f64::NAN);
    let v = Verdict::new(
        svd_iter < hybrid,
        format!("eps = 0, 20 trials: svd-iter {svd_iter:.2} vs hybrid {hybrid:.2} (ground truth {gt:.2})"),
    );
    Ok(within(900.0, secs, v))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("noise-free equivalence of all formulations", noise_free),
        ("hybrid and SVD agree with lambda1 = 0", hybrid_svd),
        ("large-lambda2 hybrid, SVD and DD-SPC agree", large_ridge),
        ("DD-SPC and classical SPC agree", spc_predictor),
        ("SVD reduction conditions", reduction),
        ("pseudoinverse Penrose conditions", penrose),
        ("SLRA fixed point and denoising", slra_checks),
        ("Monte Carlo cost ordering", cost_ordering),
        ("box QPs against active-set enumeration", qp_oracle),
        ("Lotka-Volterra eps = 0 ordering", nonlinearity),
    ];
    let mut passed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (outcome, secs) = timed(run);
        let (ok, detail) = match outcome {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        passed += ok as usize;
        println!(
            "criterion {:>2} {} {name}: {detail} [{secs:.1} s]",
            k + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
