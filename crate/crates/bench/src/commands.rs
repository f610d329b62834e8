//! The four experiments. Each returns a report; the `write_*` functions turn
//! reports into CSV and SVG files.

use std::path::Path;
use std::time::Instant;

use deepc_core::io::{fmt_f64, write_text};
use deepc_core::matlib;
use deepc_core::variants::{self, ControlSolution};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::instance::{control_spec, default_spec, Instance};
use crate::svg::{self, Figure, Series};
use crate::variant::{self, Outcome, Variant};

/// Largest entrywise deviation over `(u, y, σy)`.
pub fn deviation(a: &ControlSolution, b: &ControlSolution) -> f64 {
    matlib::max_abs_diff_vec(&a.u, &b.u)
        .max(matlib::max_abs_diff_vec(&a.y_pred, &b.y_pred))
        .max(matlib::max_abs_diff_vec(&a.sigma_y, &b.sigma_y))
}

fn csv_preamble(cfg: &ExperimentConfig, columns: &str) -> String {
    format!(
        "# config_hash={}; cost = quadratic stage cost (dimensionless); time in s; rates in %\n{columns}\n",
        cfg.hash()
    )
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "nan".into())
}

/// Writes the resolved configuration next to the results.
pub fn echo_config(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    write_text(&dir.join("config.json"), &cfg.to_json())?;
    Ok(())
}

// ---------------------------------------------------------------- equivalence

#[derive(Debug, Clone)]
pub struct Check {
    pub regime: &'static str,
    pub instance: usize,
    pub pair: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub note: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

#[derive(Debug, Clone, Default)]
pub struct EquivalenceReport {
    pub checks: Vec<Check>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn regime(&self, name: &str) -> impl Iterator<Item = &Check> {
        let name = name.to_string();
        self.checks.iter().filter(move |c| c.regime == name)
    }

    pub fn worst(&self, name: &str) -> f64 {
        self.regime(name).map(|c| c.deviation).fold(0.0, f64::max)
    }
}

fn compare(regime: &'static str, instance: usize, named: &[(&str, deepc_core::Result<ControlSolution>)], pairs: &[(usize, usize)], tolerance: f64) -> Vec<Check> {
    pairs
        .iter()
        .map(|&(i, j)| {
            let pair = format!("{}/{}", named[i].0, named[j].0);
            match (&named[i].1, &named[j].1) {
                (Ok(a), Ok(b)) if a.is_optimal() && b.is_optimal() => Check {
                    regime,
                    instance,
                    pair,
                    deviation: deviation(a, b),
                    tolerance,
                    note: String::new(),
                },
                (a, b) => {
                    let status = |r: &deepc_core::Result<ControlSolution>| match r {
                        Ok(s) => format!("{:?}", s.solver.status),
                        Err(e) => e.to_string(),
                    };
                    Check {
                        regime,
                        instance,
                        pair,
                        deviation: f64::INFINITY,
                        tolerance,
                        note: format!("solver failure: {} / {}", status(a), status(b)),
                    }
                }
            }
        })
        .collect()
}

/// Noise-free data, no regularization, `σy` pinned to zero: every variant
/// against the model-based controller.
pub fn noise_free_checks(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let inst = Instance::generate_with_noise(cfg, 0, 0.0)?;
    let spec = control_spec(cfg, 0.0, 0.0, f64::INFINITY)?;
    let mut named = vec![("ground-truth", variants::solve_ground_truth(&inst.model, &inst.state, &spec))];
    for v in [Variant::Basic, Variant::Hybrid, Variant::Svd, Variant::DdSpc, Variant::SvdIter] {
        let sol = variant::prepare(v, &inst, cfg).and_then(|p| variant::solve_prepared(v, &p, &inst, &spec));
        named.push((v.name(), sol));
    }
    let pairs: Vec<(usize, usize)> = (1..named.len()).map(|k| (k, 0)).collect();
    Ok(compare("noise-free", 0, &named, &pairs, 1e-6))
}

/// Hybrid against SVD with `λ1 = 0` on noisy instances.
pub fn hybrid_svd_checks(cfg: &ExperimentConfig, instances: usize) -> Result<Vec<Check>> {
    let spec = control_spec(cfg, 0.0, cfg.lambda2, cfg.lambda_y)?;
    let mut out = Vec::new();
    for i in 0..instances {
        let inst = Instance::generate(cfg, i)?;
        let named = [
            ("hybrid", variants::solve_hybrid(&inst.lib, &inst.online, &spec)),
            ("svd", variants::preprocess_svd(&inst.lib).and_then(|p| variants::solve_svd(&p, &inst.online, &spec))),
        ];
        out.extend(compare("hybrid-svd", i, &named, &[(0, 1)], 1e-5));
    }
    Ok(out)
}

/// With `λ2` near 1e9 the stationarity residual cannot be evaluated in f64
/// to better than about 1e-9 relative, so these solves use a looser stop.
pub const LARGE_RIDGE_QP_TOL: f64 = 1e-8;

/// Hybrid, SVD and Data-Driven-SPC with a large, instance-scaled `λ2`.
pub fn large_ridge_checks(cfg: &ExperimentConfig, instances: usize) -> Result<Vec<Check>> {
    let base = control_spec(cfg, 0.0, 0.0, cfg.lambda_y)?;
    let mut out = Vec::new();
    for i in 0..instances {
        let inst = Instance::generate(cfg, i)?;
        let lambda2 = variants::scaled_lambda2(&inst.lib, &base, cfg.large_lambda2_factor)?;
        let spec = control_spec(cfg, 0.0, lambda2, cfg.lambda_y)?.with_solver(cfg.qp_tol.max(LARGE_RIDGE_QP_TOL), cfg.qp_max_iter);
        let named = [
            ("hybrid", variants::solve_hybrid(&inst.lib, &inst.online, &spec)),
            ("svd", variants::preprocess_svd(&inst.lib).and_then(|p| variants::solve_svd(&p, &inst.online, &spec))),
            ("dd-spc", variants::build_spc_library(&inst.lib).and_then(|p| variants::solve_dd_spc(&p, &inst.online, &base))),
        ];
        let mut checks = compare("large-ridge", i, &named, &[(0, 1), (0, 2), (1, 2)], 1e-4);
        for c in &mut checks {
            let sep = if c.note.is_empty() { "" } else { "; " };
            c.note = format!("{}{sep}lambda2={}", c.note, fmt_f64(lambda2));
        }
        out.extend(checks);
    }
    Ok(out)
}

/// Data-Driven-SPC against classical SPC with `λ1 = 0`, on instances whose
/// `H₁` has full row rank.
pub fn spc_predictor_checks(cfg: &ExperimentConfig, instances: usize) -> Result<Vec<Check>> {
    let spec = control_spec(cfg, 0.0, 0.0, cfg.lambda_y)?;
    let mut out = Vec::new();
    for i in 0..instances {
        let inst = Instance::generate(cfg, i)?;
        let h1 = inst.lib.h1();
        let rank = matlib::numeric_rank(&h1, matlib::DEFAULT_RANK_TOL)?;
        if rank < h1.nrows() {
            out.push(Check {
                regime: "spc-predictor",
                instance: i,
                pair: "dd-spc/spc".into(),
                deviation: f64::INFINITY,
                tolerance: 1e-6,
                note: format!("H1 rank {rank} < {} rows", h1.nrows()),
            });
            continue;
        }
        let named = [
            ("dd-spc", variants::build_spc_library(&inst.lib).and_then(|p| variants::solve_dd_spc(&p, &inst.online, &spec))),
            ("spc", variants::solve_classical_spc(&inst.lib, &inst.online, &spec)),
        ];
        out.extend(compare("spc-predictor", i, &named, &[(0, 1)], 1e-6));
    }
    Ok(out)
}

/// Row-space containment and projector exchange of the SVD reduction.
pub fn reduction_checks(cfg: &ExperimentConfig, instances: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for i in 0..instances {
        let inst = Instance::generate(cfg, i)?;
        let (containment, exchange) = variants::svd_reduction_conditions(&inst.lib)?;
        for (pair, dev) in [("containment", containment), ("exchange", exchange)] {
            out.push(Check {
                regime: "svd-reduction",
                instance: i,
                pair: pair.into(),
                deviation: dev,
                tolerance: 1e-8,
                note: String::new(),
            });
        }
    }
    Ok(out)
}

pub fn equivalence(cfg: &ExperimentConfig) -> Result<EquivalenceReport> {
    let n = cfg.trials;
    let mut checks = noise_free_checks(cfg)?;
    checks.extend(hybrid_svd_checks(cfg, n)?);
    checks.extend(large_ridge_checks(cfg, n)?);
    checks.extend(spc_predictor_checks(cfg, n)?);
    checks.extend(reduction_checks(cfg, n)?);
    Ok(EquivalenceReport { checks })
}

pub fn equivalence_csv(cfg: &ExperimentConfig, report: &EquivalenceReport) -> String {
    let mut out = csv_preamble(cfg, "regime,instance,pair,max_deviation,tolerance,passed,note");
    for c in &report.checks {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.regime,
            c.instance,
            c.pair,
            fmt_f64(c.deviation),
            fmt_f64(c.tolerance),
            c.passed(),
            c.note
        ));
    }
    out
}

pub fn write_equivalence(cfg: &ExperimentConfig, report: &EquivalenceReport, dir: &Path) -> Result<()> {
    echo_config(cfg, dir)?;
    write_text(&dir.join("equivalence.csv"), &equivalence_csv(cfg, report))?;
    Ok(())
}

// ------------------------------------------------------------------ benchmark

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    /// Ground truth first, then the configured variants in order.
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub variant: Variant,
    /// Over successful trials; `None` when every trial failed.
    pub mean_cost: Option<f64>,
    /// `(mean − gt_mean)/gt_mean`.
    pub increase_rate: Option<f64>,
    pub mean_seconds: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub trials: Vec<TrialRecord>,
}

impl BenchReport {
    pub fn row(&self, v: Variant) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.variant == v)
    }

    pub fn mean_cost(&self, v: Variant) -> Option<f64> {
        self.row(v).and_then(|r| r.mean_cost)
    }
}

fn variant_list(cfg: &ExperimentConfig) -> Vec<Variant> {
    let mut list = vec![Variant::GroundTruth];
    list.extend(cfg.variants.iter().copied().filter(|v| *v != Variant::GroundTruth));
    list
}

/// Runs one trial; solutions are kept only when `keep_solutions` is set.
pub fn run_trial(cfg: &ExperimentConfig, index: usize, keep_solutions: bool) -> Result<TrialRecord> {
    let inst = Instance::generate(cfg, index)?;
    let spec = default_spec(cfg)?;
    let outcomes = variant_list(cfg)
        .into_iter()
        .map(|v| {
            let mut o = variant::run(v, &inst, &spec, cfg);
            if !keep_solutions {
                o.solution = None;
            }
            o
        })
        .collect();
    Ok(TrialRecord {
        index,
        seed: inst.seed,
        outcomes,
    })
}

pub fn aggregate(variants: &[Variant], trials: &[TrialRecord]) -> Vec<BenchRow> {
    let mut rows: Vec<BenchRow> = variants
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let outcomes: Vec<&Outcome> = trials.iter().map(|t| &t.outcomes[k]).collect();
            let costs: Vec<f64> = outcomes.iter().filter_map(|o| o.cost).collect();
            let n = outcomes.len().max(1) as f64;
            BenchRow {
                variant: v,
                mean_cost: (!costs.is_empty()).then(|| costs.iter().sum::<f64>() / costs.len() as f64),
                increase_rate: None,
                mean_seconds: outcomes.iter().map(|o| o.seconds).sum::<f64>() / n,
                successes: costs.len(),
                failures: outcomes.len() - costs.len(),
            }
        })
        .collect();
    let gt = rows.iter().find(|r| r.variant == Variant::GroundTruth).and_then(|r| r.mean_cost);
    for r in &mut rows {
        r.increase_rate = match (r.mean_cost, gt) {
            (Some(m), Some(g)) if g != 0.0 => Some((m - g) / g),
            _ => None,
        };
    }
    rows
}

pub fn benchmark(cfg: &ExperimentConfig) -> Result<BenchReport> {
    let trials = (0..cfg.trials)
        .map(|i| run_trial(cfg, i, i == 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        rows: aggregate(&variant_list(cfg), &trials),
        trials,
    })
}

fn rows_csv(rows: &[BenchRow], prefix: &str) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{prefix}{},{},{},{},{}\n",
            r.variant,
            opt(r.mean_cost),
            opt(r.increase_rate.map(|x| 100.0 * x)),
            r.successes,
            r.failures
        ));
    }
    out
}

pub fn benchmark_csv(cfg: &ExperimentConfig, report: &BenchReport) -> String {
    csv_preamble(cfg, "variant,mean_cost,increase_rate_pct,successes,failures") + &rows_csv(&report.rows, "")
}

/// Wall-clock times live in their own file so the cost tables stay reproducible.
pub fn timing_csv(cfg: &ExperimentConfig, report: &BenchReport) -> String {
    let mut out = csv_preamble(cfg, "variant,mean_time_s,trials");
    for r in &report.rows {
        out.push_str(&format!("{},{},{}\n", r.variant, fmt_f64(r.mean_seconds), r.successes + r.failures));
    }
    out
}

pub fn trials_csv(cfg: &ExperimentConfig, report: &BenchReport) -> String {
    let mut out = csv_preamble(cfg, "trial,seed,variant,realized_cost,status");
    for t in &report.trials {
        for o in &t.outcomes {
            out.push_str(&format!("{},{},{},{},{}\n", t.index, t.seed, o.variant, opt(o.cost), o.status));
        }
    }
    out
}

/// Open-loop true outputs of the first trial, one figure per output channel.
pub fn trajectory_figures(cfg: &ExperimentConfig, report: &BenchReport) -> Result<Vec<Figure>> {
    let Some(first) = report.trials.first() else {
        return Ok(Vec::new());
    };
    let inst = Instance::generate(cfg, first.index)?;
    let m = inst.lib.n_inputs();
    let p = inst.lib.n_outputs();
    let dt = 0.1;
    let mut figs: Vec<Figure> = (0..p)
        .map(|j| Figure {
            title: format!("Open-loop trajectory, trial {}", first.index),
            x_label: "time [s]".into(),
            y_label: format!("y{}", j + 1),
            series: Vec::new(),
        })
        .collect();
    for o in &first.outcomes {
        let Some(sol) = &o.solution else { continue };
        if o.failed() {
            continue;
        }
        let y = inst.realized_outputs(&sol.u, m)?;
        for (j, fig) in figs.iter_mut().enumerate() {
            fig.series.push(Series {
                label: o.variant.to_string(),
                points: (0..y.nrows()).map(|k| (k as f64 * dt, y[(k, j)])).collect(),
            });
        }
    }
    Ok(figs)
}

pub fn write_benchmark(cfg: &ExperimentConfig, report: &BenchReport, dir: &Path) -> Result<()> {
    echo_config(cfg, dir)?;
    write_text(&dir.join("benchmark.csv"), &benchmark_csv(cfg, report))?;
    write_text(&dir.join("timing.csv"), &timing_csv(cfg, report))?;
    write_text(&dir.join("trials.csv"), &trials_csv(cfg, report))?;
    for (j, fig) in trajectory_figures(cfg, report)?.iter().enumerate() {
        svg::emit_svg(fig, &dir.join(format!("trajectory_y{}.svg", j + 1)))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub variant: Variant,
    /// `None` where the formulation has no such weight.
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub cost: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn costs(&self, v: Variant) -> Vec<f64> {
        self.cells.iter().filter(|c| c.variant == v).filter_map(|c| c.cost).collect()
    }
}

/// Realized cost over the λ grids on the first trial's data.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let inst = Instance::generate(cfg, 0)?;
    let mut cells = Vec::new();
    for v in variant_list(cfg) {
        let prepared = variant::prepare(v, &inst, cfg);
        let l1s: Vec<Option<f64>> = if v.uses_lambda1() { cfg.lambda1_grid.iter().map(|&x| Some(x)).collect() } else { vec![None] };
        let l2s: Vec<Option<f64>> = if v.uses_lambda2() { cfg.lambda2_grid.iter().map(|&x| Some(x)).collect() } else { vec![None] };
        for &l1 in &l1s {
            for &l2 in &l2s {
                let spec = control_spec(cfg, l1.unwrap_or(0.0), l2.unwrap_or(0.0), cfg.lambda_y)?;
                let solved = match &prepared {
                    Ok(p) => variant::solve_prepared(v, p, &inst, &spec),
                    Err(e) => Err(deepc_core::Error::InvalidArgument(format!("preprocessing failed: {e}"))),
                };
                let o = variant::finish(v, solved, &inst, &spec, 0.0);
                cells.push(SweepCell {
                    variant: v,
                    lambda1: l1,
                    lambda2: l2,
                    cost: o.cost,
                    status: o.status,
                });
            }
        }
    }
    Ok(SweepReport { cells })
}

pub fn sweep_csv(cfg: &ExperimentConfig, report: &SweepReport) -> String {
    let mut out = csv_preamble(cfg, "variant,lambda1,lambda2,realized_cost,status");
    let lam = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "-".into());
    for c in &report.cells {
        out.push_str(&format!("{},{},{},{},{}\n", c.variant, lam(c.lambda1), lam(c.lambda2), opt(c.cost), c.status));
    }
    out
}

pub fn write_sweep(cfg: &ExperimentConfig, report: &SweepReport, dir: &Path) -> Result<()> {
    echo_config(cfg, dir)?;
    write_text(&dir.join("sweep.csv"), &sweep_csv(cfg, report))?;
    Ok(())
}

// --------------------------------------------------------------- nonlinearity

#[derive(Debug, Clone)]
pub struct NonlinearityReport {
    pub levels: Vec<(f64, BenchReport)>,
}

impl NonlinearityReport {
    pub fn mean_cost(&self, eps: f64, v: Variant) -> Option<f64> {
        self.levels.iter().find(|(e, _)| *e == eps).and_then(|(_, r)| r.mean_cost(v))
    }
}

/// Monte Carlo benchmark on the interpolated Lotka-Volterra plant for every
/// entry of `eps_list`.
pub fn nonlinearity(cfg: &ExperimentConfig) -> Result<NonlinearityReport> {
    let levels = cfg
        .eps_list
        .iter()
        .map(|&eps| {
            let level = cfg.with_plant_eps(eps);
            level.validate()?;
            Ok((eps, benchmark(&level)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NonlinearityReport { levels })
}

pub fn nonlinearity_csv(cfg: &ExperimentConfig, report: &NonlinearityReport) -> String {
    let mut out = csv_preamble(cfg, "eps,variant,mean_cost,increase_rate_pct,successes,failures");
    for (eps, r) in &report.levels {
        out.push_str(&rows_csv(&r.rows, &format!("{},", fmt_f64(*eps))));
    }
    out
}

pub fn nonlinearity_figure(report: &NonlinearityReport) -> Figure {
    let mut series: Vec<Series> = Vec::new();
    for (eps, r) in &report.levels {
        for row in &r.rows {
            let Some(cost) = row.mean_cost else { continue };
            let label = row.variant.to_string();
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((1.0 - eps, cost)),
                None => series.push(Series {
                    label,
                    points: vec![(1.0 - eps, cost)],
                }),
            }
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Figure {
        title: "Mean realized cost versus nonlinearity".into(),
        x_label: "1 - eps".into(),
        y_label: "mean realized cost".into(),
        series,
    }
}

pub fn write_nonlinearity(cfg: &ExperimentConfig, report: &NonlinearityReport, dir: &Path) -> Result<()> {
    echo_config(cfg, dir)?;
    write_text(&dir.join("nonlinearity.csv"), &nonlinearity_csv(cfg, report))?;
    svg::emit_svg(&nonlinearity_figure(report), &dir.join("nonlinearity.svg"))?;
    Ok(())
}

/// Seconds elapsed while running `f`.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
