//! Named experiment registry.

use chebstep::apps::{
    first_reach, jacobi_operator, make_deblur_problem, make_gram_jacobi_system, make_lasso_problem,
    power_map_operator, run_fista, run_lasso_trial, tanh_gram_operator, tanh_inverse_operator,
};
use chebstep::chebyshev::{chebyshev_psor_factors, rate_report};
use chebstep::psor::{
    estimate_reference, plain_local_rate, psor_bounds_from_operator, psor_iterate, run_psor_against,
    PsorBounds, PsorConfig, Symmetrization, REFERENCE_BUDGET_FACTOR,
};
use chebstep::rng::{self, derive_seed};
use chebstep::spectral::BoundsMethod;
use chebstep::trace::average_traces;
use chebstep::{FixedPointOperator, IterationTrace, SpectralBounds, StepSchedule};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Param, ParamKind};
use crate::error::{CliError, Result};
use crate::output::fmt_f64;

/// Everything an experiment produces, before it is written to disk.
pub struct ExperimentOutput {
    /// `(method, trace)`, written as `<name>_<method>.csv`.
    pub traces: Vec<(&'static str, IterationTrace)>,
    /// Written as `<name>_meta.json`.
    pub meta: Value,
    /// Additional `(file suffix, contents)` pairs, written as `<name>_<suffix>`.
    pub extra: Vec<(&'static str, String)>,
}

pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [Param],
    pub run: fn(&ExperimentConfig, &rayon::ThreadPool) -> Result<ExperimentOutput>,
}

const fn int(key: &'static str, default: u64, help: &'static str) -> Param {
    Param {
        key,
        kind: ParamKind::Int(default),
        help,
    }
}

const fn float(key: &'static str, default: f64, help: &'static str) -> Param {
    Param {
        key,
        kind: ParamKind::Float(default),
        help,
    }
}

const fn bound(key: &'static str, default: Option<f64>, help: &'static str) -> Param {
    Param {
        key,
        kind: ParamKind::Bound(default),
        help,
    }
}

const LAMBDA_MIN: Param = bound("lambda_min", None, "lower bound of B = I - J (auto: exact at the fixed point)");
const LAMBDA_MAX: Param = bound("lambda_max", None, "upper bound of B = I - J (auto: exact at the fixed point)");
const PERIOD: Param = int("T", 8, "Chebyshev period");

pub const REGISTRY: &[Experiment] = &[
    Experiment {
        name: "jacobi-fig10",
        description: "Jacobi iteration on P = I + M^T M, q = 0: plain, optimal constant SOR and Chebyshev-PSOR",
        params: &[
            int("n", 512, "dimension"),
            float("std", 0.03, "standard deviation of the entries of M"),
            PERIOD,
            int("iters", 200, "iterations per trace"),
            LAMBDA_MIN,
            LAMBDA_MAX,
        ],
        run: run_jacobi,
    },
    Experiment {
        name: "tanh-inverse-fig8",
        description: "x <- y - tanh(x) for y = (y1, y2): plain and Chebyshev-PSOR",
        params: &[
            float("y1", 0.1, "first component of y"),
            float("y2", 0.6, "second component of y"),
            PERIOD,
            int("iters", 100, "iterations per trace"),
            LAMBDA_MIN,
            LAMBDA_MAX,
        ],
        run: run_tanh_inverse,
    },
    Experiment {
        name: "powermap-fig7",
        description: "x <- (x1^0.2 + x2^0.5, x1^0.5 + x2^0.2) from (x0, x0): plain and Chebyshev-PSOR",
        params: &[
            float("x0", 1.0, "both components of the initial point"),
            PERIOD,
            int("iters", 40, "iterations per trace"),
            LAMBDA_MIN,
            LAMBDA_MAX,
        ],
        run: run_power_map,
    },
    Experiment {
        name: "tanh-gram-fig12",
        description: "x <- tanh(Ax), A = M^T M rescaled to lambda_max(A) = a_max: plain and Chebyshev-PSOR",
        params: &[
            int("n", 512, "dimension"),
            float("std", 0.022, "standard deviation of the entries of M"),
            float("a_max", 0.9766, "largest eigenvalue of A after rescaling"),
            PERIOD,
            int("iters", 400, "iterations per trace"),
            LAMBDA_MIN,
            LAMBDA_MAX,
        ],
        run: run_tanh_gram,
    },
    Experiment {
        name: "lasso-fig11",
        description: "Lasso by ISTA, Chebyshev-PSOR ISTA and FISTA; NMSE averaged over trials",
        params: &[
            int("n", 512, "signal length"),
            int("m", 256, "number of measurements"),
            float("p", 0.1, "probability of a nonzero source entry"),
            float("sigma", 0.1, "noise standard deviation"),
            bound("tau", None, "shrinkage threshold (auto: 1/lambda_max(M^T M))"),
            float("beta_sp", 100.0, "softplus sharpness of the smooth shrinkage"),
            PERIOD,
            int("plain_iters", 3000, "plain ISTA iterations"),
            int("cheb_iters", 400, "Chebyshev-PSOR ISTA iterations"),
            int("fista_iters", 400, "FISTA iterations"),
            int("trials", 20, "number of independent problem instances"),
        ],
        run: run_lasso,
    },
    Experiment {
        name: "deblur-fig14",
        description: "Modified Richardson deblurring of a synthetic stroke image: plain and Chebyshev-PSOR",
        params: &[
            int("height", 28, "image height"),
            int("width", 28, "image width"),
            int("strokes", 3, "number of strokes in the synthetic image"),
            float("omega", 0.8, "Richardson step"),
            PERIOD,
            int("iters", 128, "iterations per trace"),
            bound("lambda_min", Some(0.05), "lower bound of B"),
            bound("lambda_max", None, "upper bound of B (auto: exact at the true image)"),
        ],
        run: run_deblur,
    },
];

pub fn find(name: &str) -> Result<&'static Experiment> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CliError::UnknownExperiment(name.to_string()))
}

fn symmetrization_name(s: Symmetrization) -> &'static str {
    match s {
        Symmetrization::Symmetric => "symmetric",
        Symmetrization::Similar => "similar",
        Symmetrization::DiagonalScaling => "diagonal_scaling",
        Symmetrization::SymmetricPart => "symmetric_part",
    }
}

/// Bounds of `B` with overrides applied. Computes the exact bounds only when
/// an override is missing.
fn resolve_bounds(
    cfg: &ExperimentConfig,
    compute: impl FnOnce() -> chebstep::Result<PsorBounds>,
) -> Result<(SpectralBounds, Value)> {
    let (lo, hi) = (cfg.bound("lambda_min"), cfg.bound("lambda_max"));
    let mut info = Map::new();
    let (a, b) = match (lo, hi) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            let pb = compute()?;
            info.insert("symmetrization".into(), symmetrization_name(pb.symmetrization).into());
            info.insert("lower_bound_only".into(), pb.lower_bound_only.into());
            info.insert("exact_lambda_min".into(), pb.bounds.lambda_min().into());
            info.insert("exact_lambda_max".into(), pb.bounds.lambda_max().into());
            (lo.unwrap_or(pb.bounds.lambda_min()), hi.unwrap_or(pb.bounds.lambda_max()))
        }
    };
    let bounds = SpectralBounds::new(a, b)?;
    info.insert("lambda_min".into(), a.into());
    info.insert("lambda_max".into(), b.into());
    info.insert("lambda_min_source".into(), source(lo).into());
    info.insert("lambda_max_source".into(), source(hi).into());
    Ok((bounds, Value::Object(info)))
}

fn source(v: Option<f64>) -> &'static str {
    if v.is_some() {
        "parameter"
    } else {
        "exact"
    }
}

fn rates_json(bounds: &SpectralBounds, period: usize) -> Result<Value> {
    let r = rate_report(bounds, period)?;
    Ok(json!({
        "kappa": r.kappa,
        "T": period,
        "rho_upp_T": r.rho_upp_t,
        "q_ch_T": r.rate_per_iter,
        "q_ch_star": r.rate_limit,
        "plain_local_rate": plain_local_rate(bounds),
    }))
}

fn label(mut trace: IterationTrace, method: &str, seed: u64) -> IterationTrace {
    trace.method = method.to_string();
    trace.seed = seed;
    trace
}

fn final_errors(traces: &[(&'static str, IterationTrace)]) -> Value {
    Value::Object(
        traces
            .iter()
            .map(|(m, t)| (m.to_string(), Value::from(t.final_error())))
            .collect(),
    )
}

/// Plain and Chebyshev-PSOR traces of `op` against `reference`.
fn plain_and_chebyshev(
    cfg: &ExperimentConfig,
    op: &FixedPointOperator,
    x0: &[f64],
    reference: &[f64],
    bounds: &SpectralBounds,
) -> Result<Vec<(&'static str, IterationTrace)>> {
    let iters = cfg.int("iters");
    let plain = run_psor_against(op, &PsorConfig::plain(iters)?, x0, reference)?;
    let factors = chebyshev_psor_factors(bounds, cfg.int("T"))?;
    let cheb = run_psor_against(op, &PsorConfig::new(factors, iters)?, x0, reference)?;
    Ok(vec![
        ("plain", label(plain, "plain", cfg.seed)),
        ("chebyshev", label(cheb, "chebyshev_psor", cfg.seed)),
    ])
}

fn small_example_output(
    cfg: &ExperimentConfig,
    traces: Vec<(&'static str, IterationTrace)>,
    bounds: &SpectralBounds,
    bounds_info: Value,
    reference: &[f64],
    reference_kind: &str,
) -> Result<ExperimentOutput> {
    let meta = json!({
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "parameters": cfg.snapshot(),
        "bounds": bounds_info,
        "rates": rates_json(bounds, cfg.int("T"))?,
        "reference": reference_kind,
        "fixed_point": reference,
        "final_errors": final_errors(&traces),
    });
    Ok(ExperimentOutput {
        traces,
        meta,
        extra: Vec::new(),
    })
}

fn run_jacobi(cfg: &ExperimentConfig, _pool: &rayon::ThreadPool) -> Result<ExperimentOutput> {
    let n = cfg.int("n");
    let sys = make_gram_jacobi_system(n, cfg.float("std"), derive_seed(cfg.seed, 0))?;
    let zero = vec![0.0; n];
    let op = jacobi_operator(&sys)?.with_fixed_point(zero.clone())?;
    let (bounds, info) = resolve_bounds(cfg, || {
        psor_bounds_from_operator(&op, &zero, BoundsMethod::Exact, cfg.seed)
    })?;
    let x0 = rng::gaussian_vec(&mut rng::seeded(derive_seed(cfg.seed, 1)), n, 1.0);
    let iters = cfg.int("iters");
    let sor_factors = chebyshev_psor_factors(&bounds, 1)?;
    let omega = sor_factors.steps()[0];
    let sor = run_psor_against(&op, &PsorConfig::new(sor_factors, iters)?, &x0, &zero)?;
    let mut traces = plain_and_chebyshev(cfg, &op, &x0, &zero, &bounds)?;
    traces.insert(1, ("sor", label(sor, "constant_sor", cfg.seed)));
    let meta = json!({
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "parameters": cfg.snapshot(),
        "bounds": info,
        "omega_sor": omega,
        "rates": rates_json(&bounds, cfg.int("T"))?,
        "rates_sor": rates_json(&bounds, 1)?,
        "reference": "known",
        "final_errors": final_errors(&traces),
    });
    Ok(ExperimentOutput {
        traces,
        meta,
        extra: Vec::new(),
    })
}

/// Root of `x + tanh(x) = y` by Newton's method; the map is increasing with
/// derivative in `[1, 2]`, so Newton converges from `y / 2`.
fn tanh_inverse_root(y: f64) -> f64 {
    let mut x = 0.5 * y;
    for _ in 0..100 {
        let step = (x + x.tanh() - y) / (2.0 - x.tanh().powi(2));
        x -= step;
        if step.abs() <= 1e-17 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

fn run_tanh_inverse(cfg: &ExperimentConfig, _pool: &rayon::ThreadPool) -> Result<ExperimentOutput> {
    let y = vec![cfg.float("y1"), cfg.float("y2")];
    let x_star: Vec<f64> = y.iter().map(|&v| tanh_inverse_root(v)).collect();
    let op = tanh_inverse_operator(y).with_fixed_point(x_star.clone())?;
    let (bounds, info) = resolve_bounds(cfg, || {
        psor_bounds_from_operator(&op, &x_star, BoundsMethod::Exact, cfg.seed)
    })?;
    let traces = plain_and_chebyshev(cfg, &op, &[0.0, 0.0], &x_star, &bounds)?;
    small_example_output(cfg, traces, &bounds, info, &x_star, "newton")
}

fn run_power_map(cfg: &ExperimentConfig, _pool: &rayon::ThreadPool) -> Result<ExperimentOutput> {
    let start = cfg.float("x0");
    if start <= 0.0 {
        return Err(CliError::invalid("x0", "the map is defined on the positive quadrant"));
    }
    let op = power_map_operator();
    let x0 = vec![start; 2];
    let x_star = estimate_reference(&op, &x0, cfg.int("iters"))?;
    let (bounds, info) = resolve_bounds(cfg, || {
        psor_bounds_from_operator(&op, &x_star, BoundsMethod::Exact, cfg.seed)
    })?;
    let traces = plain_and_chebyshev(cfg, &op, &x0, &x_star, &bounds)?;
    let kind = format!("plain_{REFERENCE_BUDGET_FACTOR}x");
    small_example_output(cfg, traces, &bounds, info, &x_star, &kind)
}

fn run_tanh_gram(cfg: &ExperimentConfig, _pool: &rayon::ThreadPool) -> Result<ExperimentOutput> {
    let n = cfg.int("n");
    let (composite, _) = tanh_gram_operator(n, cfg.float("std"), cfg.float("a_max"), derive_seed(cfg.seed, 0))?;
    let zero = vec![0.0; n];
    let op = composite.to_operator().with_fixed_point(zero.clone())?;
    let (bounds, info) = resolve_bounds(cfg, || {
        psor_bounds_from_operator(&op, &zero, BoundsMethod::Exact, cfg.seed)
    })?;
    let x0 = rng::gaussian_vec(&mut rng::seeded(derive_seed(cfg.seed, 1)), n, 1.0);
    let traces = plain_and_chebyshev(cfg, &op, &x0, &zero, &bounds)?;
    let period = cfg.int("T");
    let cheb = &traces[1].1;
    let floor = 1e-12 * cheb.initial_error();
    let periods = (0..=cheb.len().saturating_sub(1) / period)
        .take_while(|&l| cheb.errors[l * period] > floor)
        .count();
    let envelope = cheb.envelope_period_rate(period, 1, periods);
    let mut out = small_example_output(cfg, traces, &bounds, info, &[], "known")?;
    out.meta["fixed_point"] = json!("origin");
    out.meta["observed_period_rate"] = envelope.map_or(Value::Null, Value::from);
    Ok(out)
}

struct LassoTrialResult {
    plain: IterationTrace,
    chebyshev: IterationTrace,
    fista: IterationTrace,
    bounds: SpectralBounds,
}

fn run_lasso(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<ExperimentOutput> {
    let (n, m, trials) = (cfg.int("n"), cfg.int("m"), cfg.int("trials"));
    let (p, sigma) = (cfg.float("p"), cfg.float("sigma"));
    if !(p > 0.0 && p < 1.0) {
        return Err(CliError::invalid("p", "must lie in (0, 1)"));
    }
    let beta_sp = cfg.float("beta_sp");
    if beta_sp <= 0.0 {
        return Err(CliError::invalid("beta_sp", "must be positive"));
    }
    let period = cfg.int("T");
    let (plain_iters, cheb_iters) = (cfg.int("plain_iters"), cfg.int("cheb_iters"));
    let trial = |i: usize| -> Result<LassoTrialResult> {
        let mut lp = make_lasso_problem(n, m, p, sigma, derive_seed(cfg.seed, i as u64))?;
        if let Some(tau) = cfg.bound("tau") {
            lp.tau = tau;
        }
        lp.beta_sp = beta_sp;
        let tr = run_lasso_trial(&lp, period, plain_iters, cheb_iters)?;
        let fista = run_fista(&lp, cfg.int("fista_iters"))?;
        Ok(LassoTrialResult {
            plain: tr.plain,
            chebyshev: tr.chebyshev,
            fista: fista.trace,
            bounds: tr.bounds,
        })
    };
    let results: Vec<LassoTrialResult> =
        pool.install(|| (0..trials).into_par_iter().map(trial).collect::<Result<Vec<_>>>())?;

    let average = |pick: fn(&LassoTrialResult) -> &IterationTrace, method: &str, kind: &str| {
        let traces: Vec<IterationTrace> = results.iter().map(|r| pick(r).clone()).collect();
        let mut t = IterationTrace::new(method, kind, cfg.seed)
            .with_meta("error", "nmse")
            .with_meta("trials", trials)
            .with_meta("T", period);
        t.errors = average_traces(&traces).unwrap_or_default();
        t
    };
    let plain = average(|r| &r.plain, "ista", "constant");
    let cheb = average(|r| &r.chebyshev, "chebyshev_psor_ista", "chebyshev");
    let fista = average(|r| &r.fista, "fista", "custom");

    let target = plain.errors[plain_iters];
    let reach = first_reach(&cheb.errors, target);
    let trial_bounds: Vec<Value> = results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            json!({
                "trial": i,
                "seed": derive_seed(cfg.seed, i as u64),
                "lambda_min": r.bounds.lambda_min(),
                "lambda_max": r.bounds.lambda_max(),
            })
        })
        .collect();
    let mut per_trial = String::from("trial,seed,lambda_min,lambda_max,plain_final,chebyshev_final,fista_final\n");
    for (i, r) in results.iter().enumerate() {
        per_trial.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            derive_seed(cfg.seed, i as u64),
            fmt_f64(r.bounds.lambda_min()),
            fmt_f64(r.bounds.lambda_max()),
            fmt_f64(r.plain.final_error()),
            fmt_f64(r.chebyshev.final_error()),
            fmt_f64(r.fista.final_error()),
        ));
    }
    let traces = vec![("plain", plain), ("chebyshev", cheb), ("fista", fista)];
    let meta = json!({
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "parameters": cfg.snapshot(),
        "trial_seeds": "derive_seed(master, trial index)",
        "bounds_at": "plain ISTA terminal iterate",
        "plain_target_nmse": target,
        "chebyshev_reach_iteration": reach,
        "iteration_saving": reach.map_or(Value::Null, |k| Value::from(plain_iters as f64 / k.max(1) as f64)),
        "trial_bounds": trial_bounds,
        "final_nmse": final_errors(&traces),
    });
    Ok(ExperimentOutput {
        traces,
        meta,
        extra: vec![("trials.csv", per_trial)],
    })
}

fn run_deblur(cfg: &ExperimentConfig, _pool: &rayon::ThreadPool) -> Result<ExperimentOutput> {
    let (h, w) = (cfg.int("height"), cfg.int("width"));
    let omega = cfg.float("omega");
    if omega <= 0.0 {
        return Err(CliError::invalid("omega", "must be positive"));
    }
    let dp = make_deblur_problem(h, w, omega, cfg.int("strokes"), derive_seed(cfg.seed, 0))?;
    let (bounds, info) = resolve_bounds(cfg, || {
        let exact = dp.b_bounds_at(&dp.x_true)?;
        Ok(PsorBounds {
            bounds: exact,
            symmetrization: Symmetrization::Similar,
            lower_bound_only: false,
        })
    })?;
    let x0 = vec![0.0; dp.x_true.len()];
    let traces = plain_and_chebyshev(cfg, &dp.operator, &x0, &dp.x_true, &bounds)?;

    let iters = cfg.int("iters");
    let plain_x = psor_iterate(&dp.operator, &StepSchedule::constant(1.0)?, &x0, iters, |_, _| true)?;
    let factors = chebyshev_psor_factors(&bounds, cfg.int("T"))?;
    let cheb_x = psor_iterate(&dp.operator, &factors, &x0, iters, |_, _| true)?;
    let mut images = String::from("row,col,true,observed,plain,chebyshev\n");
    for i in 0..h * w {
        images.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i / w,
            i % w,
            fmt_f64(dp.x_true[i]),
            fmt_f64(dp.y[i]),
            fmt_f64(plain_x[i]),
            fmt_f64(cheb_x[i]),
        ));
    }
    let meta = json!({
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "parameters": cfg.snapshot(),
        "bounds": info,
        "rates": rates_json(&bounds, cfg.int("T"))?,
        "reference": "true image",
        "final_mse": { "plain": dp.mse(&plain_x), "chebyshev": dp.mse(&cheb_x) },
        "final_errors": final_errors(&traces),
    });
    Ok(ExperimentOutput {
        traces,
        meta,
        extra: vec![("images.csv", images)],
    })
}
