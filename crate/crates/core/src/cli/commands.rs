//! One function per subcommand, generic over the configured space.

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{CliSpace, ExperimentConfig};
use super::output::{cell, Table};
use crate::analysis::{continuity_sweep, furstenberg_drift, ldt_fit, weight_tilt, ContinuityParams, Perturbation};
use crate::boundary::{sampled_bound_checks, Horofunction, VisualConfig};
use crate::error::{HoroError, Result};
use crate::groups::{convolution_wasserstein_check, orbit_net, FiniteSupportMeasure, GroupMetric, LambdaBound};
use crate::markov::{
    boundary_discrepancy, contraction_search, dyadic_alpha_grid, irreducibility_check, k_alpha_estimate,
    stationary_estimate, submultiplicativity_table, BoundaryObservable, EmpiricalBoundaryMeasure, PairNet,
};
use crate::rng::derive_seed;
use crate::spaces::{check_hyperbolicity, Bord};
use crate::walks::{drift_estimate, hmet_check};

/// Everything a command needs besides its own config section.
pub struct Context<'a, S: CliSpace> {
    pub space: S,
    pub visual: VisualConfig,
    pub mu: FiniteSupportMeasure<S>,
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub cap: usize,
}

pub struct CommandOutput {
    pub result: Value,
    pub table: Table,
    pub violations: Vec<String>,
}

fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| HoroError::Config(format!("the config has no [{name}] section")))
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("reports serialize to JSON")
}

fn horofunction_net<S: CliSpace>(space: &S, mu: &FiniteSupportMeasure<S>, depth: usize) -> Vec<Horofunction<S>> {
    orbit_net(space, mu, depth)
        .into_iter()
        .map(|p| match p {
            Bord::Point(x) => Horofunction::finite(x),
            Bord::Ideal(xi) => Horofunction::boundary(xi),
        })
        .collect()
}

pub fn validate_space<S: CliSpace>(ctx: &Context<'_, S>) -> Result<CommandOutput> {
    let spec = section(&ctx.config.validate_space, "validate_space")?;
    let hyper = check_hyperbolicity(&ctx.space, ctx.visual.delta, spec.samples, derive_seed(ctx.seed, 1));
    let bounds = sampled_bound_checks(&ctx.space, &ctx.visual, spec.bound_samples, derive_seed(ctx.seed, 2));
    let mut violations = Vec::new();
    if !hyper.holds {
        violations.push(format!("four-point condition exceeded delta by {}", hyper.max_violation));
    }
    if bounds.visual_violations > 0 {
        violations.push(format!("{} certified visual-ratio violations", bounds.visual_violations));
    }
    if bounds.comparison_violations > 0 {
        violations.push(format!("{} comparison-bound violations", bounds.comparison_violations));
    }
    let mut table = Table::new(&["check", "samples", "violations", "margin"]);
    table.push(vec![
        "four_point".into(),
        hyper.samples.to_string(),
        u64::from(!hyper.holds).to_string(),
        (0.0 - hyper.max_violation).to_string(),
    ]);
    table.push(vec![
        "visual_ratio".into(),
        bounds.samples.to_string(),
        bounds.visual_violations.to_string(),
        bounds.visual_margin.to_string(),
    ]);
    table.push(vec![
        "comparison".into(),
        bounds.samples.to_string(),
        bounds.comparison_violations.to_string(),
        bounds.comparison_margin.to_string(),
    ]);
    Ok(CommandOutput {
        result: json!({ "visual": ctx.visual, "hyperbolicity": hyper, "bounds": bounds }),
        table,
        violations,
    })
}

pub fn drift<S: CliSpace>(ctx: &Context<'_, S>) -> Result<CommandOutput> {
    let spec = section(&ctx.config.drift, "drift")?;
    let est = drift_estimate(&ctx.space, &ctx.mu, spec.n, spec.trials, derive_seed(ctx.seed, 3))?;
    let mut table = Table::new(&["n", "trials", "mean", "half_width", "std_dev"]);
    table.push(vec![
        est.n.to_string(),
        est.trials.to_string(),
        est.mean.to_string(),
        est.half_width.to_string(),
        est.std_dev.to_string(),
    ]);
    Ok(CommandOutput { result: to_value(&est), table, violations: Vec::new() })
}

pub fn hmet<S: CliSpace>(ctx: &Context<'_, S>) -> Result<CommandOutput> {
    let spec = section(&ctx.config.hmet, "hmet")?;
    let probe = ctx.space.parse_boundary(&spec.probe)?;
    let m = spec.m.unwrap_or(spec.n / 2);
    let report = hmet_check(&ctx.space, &ctx.mu, &probe, spec.n, m, spec.trials, derive_seed(ctx.seed, 4))?;
    let mut table =
        Table::new(&["n", "m", "trials", "drift", "plus", "plus_half_width", "minus", "minus_half_width", "mean_depth"]);
    table.push(vec![
        report.n.to_string(),
        report.m.to_string(),
        report.trials.to_string(),
        report.drift.mean.to_string(),
        report.plus.mean.to_string(),
        report.plus.half_width.to_string(),
        report.minus.mean.to_string(),
        report.minus.half_width.to_string(),
        report.mean_depth.to_string(),
    ]);
    Ok(CommandOutput { result: to_value(&report), table, violations: Vec::new() })
}

pub fn stationary<S: CliSpace>(ctx: &Context<'_, S>) -> Result<CommandOutput> {
    let spec = section(&ctx.config.stationary, "stationary")?;
    let level = spec.level.unwrap_or(ctx.space.default_level());
    let starts = spec.starts.iter().map(|s| ctx.space.parse_boundary(s)).collect::<Result<Vec<_>>>()?;
    let base = derive_seed(ctx.seed, 5);
    let measures = starts
        .iter()
        .enumerate()
        .map(|(i, xi)| stationary_estimate(&ctx.space, &ctx.mu, spec.n, spec.trials, xi, derive_seed(base, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut summaries = Vec::new();
    for (label, m) in spec.starts.iter().zip(&measures) {
        let f = BoundaryObservable::VisualKernel(m.start.clone());
        summaries.push(json!({
            "start": label,
            "atoms": m.len(),
            "stationarity_residual": m.stationarity_residual(&ctx.space, &ctx.visual, &ctx.mu, &f),
        }));
    }
    let mut table = Table::new(&["start_a", "start_b", "discrepancy"]);
    let mut discrepancies = Vec::new();
    for i in 0..measures.len() {
        for j in i + 1..measures.len() {
            let d = boundary_discrepancy(&ctx.space, &ctx.visual, &measures[i], &measures[j], spec.alpha, level)?;
            table.push(vec![spec.starts[i].clone(), spec.starts[j].clone(), d.to_string()]);
            discrepancies.push(json!({ "start_a": spec.starts[i], "start_b": spec.starts[j], "discrepancy": d }));
        }
    }
    Ok(CommandOutput {
        result: json!({
            "n": spec.n,
            "trials": spec.trials,
            "alpha": spec.alpha,
            "level": level,
            "measures": summaries,
            "discrepancies": discrepancies,
        }),
        table,
        violations: Vec::new(),
    })
}

pub fn contraction<S: CliSpace>(ctx: &Context<'_, S>) -> Result<CommandOutput> {
    let spec = section(&ctx.config.contraction, "contraction")?;
    let seed = derive_seed(ctx.seed, 6);
    let horofunctions = horofunction_net(&ctx.space, &ctx.mu, spec.horofunction_depth);
    let alphas = dyadic_alpha_grid(spec.alpha_exponents);
    let search = contraction_search(
        &ctx.space,
        &ctx.visual,
        &ctx.mu,
        spec.n_max,
        &alphas,
        &horofunctions,
        ctx.cap,
        spec.samples,
        seed,
    )?;
    let pairs = PairNet::all_pairs(&ctx.space, ctx.space.pair_net_ideals(&ctx.mu, spec.pair_depth));
    let submult = submultiplicativity_table(
        &ctx.space,
        &ctx.visual,
        &ctx.mu,
        spec.submult_alpha,
        spec.submult_max_total,
        &pairs,
        ctx.cap,
    )?;
    let k_alpha = match &search.found {
        Some(found) => Some(k_alpha_estimate(
            &ctx.space,
            &ctx.visual,
            &ctx.mu,
            found.n,
            found.alpha,
            &pairs,
            ctx.cap,
            spec.samples,
            derive_seed(seed, 1),
        )?),
        None => None,
    };
    let irreducibility = irreducibility_check(&ctx.space, &ctx.mu, &horofunctions);
    let violations: Vec<String> = submult
        .iter()
        .filter(|r| !r.holds)
        .map(|r| format!("k^{} = {} exceeds k^{} k^{} = {}", r.m + r.n, r.k_m_plus_n, r.m, r.n, r.k_m * r.k_n))
        .collect();
    let mut table = Table::new(&["n", "alpha", "bound"]);
    for (n, values) in &search.table {
        for (alpha, v) in alphas.iter().zip(values) {
            table.push(vec![n.to_string(), alpha.to_string(), v.to_string()]);
        }
    }
    Ok(CommandOutput {
        result: json!({
            "horofunctions": horofunctions.len(),
            "pairs": pairs.len(),
            "search": search,
            "k_alpha": k_alpha,
            "submultiplicativity": submult,
            "irreducibility": irreducibility,
        }),
        table,
        violations,
    })
}

pub fn furstenberg<S: CliSpace>(ctx: &Context<'_, S>) -> Result<CommandOutput> {
    let spec = section(&ctx.config.furstenberg, "furstenberg")?;
    let start = ctx.space.parse_boundary(&spec.start)?;
    let nu = match &spec.stationary_atoms {
        Some(list) => {
            let atoms = list.iter().map(|s| ctx.space.parse_boundary(s)).collect::<Result<Vec<_>>>()?;
            if atoms.is_empty() {
                return Err(HoroError::Config("stationary_atoms is empty".into()));
            }
            let weights = vec![1.0 / atoms.len() as f64; atoms.len()];
            EmpiricalBoundaryMeasure { atoms, weights, n: 0, trials: 0, seed: 0, start }
        }
        None => stationary_estimate(&ctx.space, &ctx.mu, spec.chain_n, spec.chain_trials, &start, derive_seed(ctx.seed, 7))?,
    };
    let ell = furstenberg_drift(&ctx.space, &ctx.mu, &nu)?;
    let est = drift_estimate(&ctx.space, &ctx.mu, spec.drift_n, spec.drift_trials, derive_seed(ctx.seed, 8))?;
    let mut table = Table::new(&["furstenberg", "drift", "drift_half_width", "difference"]);
    table.push(vec![ell.to_string(), est.mean.to_string(), est.half_width.to_string(), (ell - est.mean).to_string()]);
    Ok(CommandOutput {
        result: json!({
            "furstenberg": ell,
            "stationary_atoms": nu.len(),
            "drift": est,
            "difference": ell - est.mean,
        }),
        table,
        violations: Vec::new(),
    })
}

pub fn continuity<S: CliSpace>(ctx: &Context<'_, S>) -> Result<CommandOutput> {
    let spec = section(&ctx.config.continuity, "continuity")?;
    let metric = GroupMetric::new(&ctx.space, ctx.visual, orbit_net(&ctx.space, &ctx.mu, spec.net_depth))?;
    let family = spec
        .tilts
        .iter()
        .map(|&t| {
            Ok(Perturbation { label: format!("t={t}"), measure: weight_tilt(&ctx.space, &ctx.mu, &spec.direction, t)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let params =
        ContinuityParams { alpha: spec.alpha, n: spec.n, trials: spec.trials, seed: derive_seed(ctx.seed, 9), lambda: spec.lambda };
    let sweep = continuity_sweep(&metric, &ctx.mu, &family, params)?;
    let lambda = LambdaBound::new(spec.lambda)?;
    let mut violations = Vec::new();
    let mut checks = Vec::new();
    let mut table = Table::new(&[
        "label",
        "w_alpha",
        "drift",
        "delta_ell",
        "half_width",
        "ratio",
        "included",
        "convolution_lhs",
        "convolution_rhs",
        "convolution_violated",
    ]);
    for (p, r) in family.iter().zip(&sweep.records) {
        let check = convolution_wasserstein_check(
            &metric,
            &ctx.mu,
            &ctx.mu,
            &p.measure,
            &p.measure,
            spec.alpha,
            lambda,
            spec.max_power,
            ctx.cap,
        )?;
        if check.violated {
            violations.push(format!("convolution bound violated for {}", p.label));
        }
        table.push(vec![
            r.label.clone(),
            r.w_alpha.to_string(),
            r.drift.to_string(),
            r.delta_ell.to_string(),
            r.half_width.to_string(),
            cell(r.ratio),
            r.included.to_string(),
            check.lhs.to_string(),
            check.rhs.to_string(),
            check.violated.to_string(),
        ]);
        checks.push(check);
    }
    Ok(CommandOutput { result: json!({ "sweep": sweep, "convolution": checks }), table, violations })
}

pub fn ldt<S: CliSpace>(ctx: &Context<'_, S>) -> Result<CommandOutput> {
    let spec = section(&ctx.config.ldt, "ldt")?;
    let probe = spec.probe.as_deref().map(|p| ctx.space.parse_boundary(p)).transpose()?;
    let report = ldt_fit(
        &ctx.space,
        &ctx.mu,
        &spec.epsilons,
        &spec.n_grid,
        spec.trials,
        derive_seed(ctx.seed, 10),
        probe.as_ref(),
        spec.drift,
        ctx.visual.b,
    )?;
    let mut table =
        Table::new(&["kind", "epsilon", "n", "exceedances", "frequency", "wilson_low", "wilson_high", "censored"]);
    for (kind, fits) in [("displacement", &report.displacement), ("horofunction", &report.horofunction)] {
        for fit in fits {
            for j in 0..fit.n_grid.len() {
                table.push(vec![
                    kind.into(),
                    fit.epsilon.to_string(),
                    fit.n_grid[j].to_string(),
                    fit.exceedances[j].to_string(),
                    fit.frequencies[j].to_string(),
                    fit.wilson[j].0.to_string(),
                    fit.wilson[j].1.to_string(),
                    fit.censored[j].to_string(),
                ]);
            }
        }
    }
    Ok(CommandOutput { result: to_value(&report), table, violations: Vec::new() })
}
