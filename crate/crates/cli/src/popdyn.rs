use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use clap::Args;
use qshearer_core::popdyn::{
    adaptive_lambda_scan, alpha_c as core_alpha_c, popdyn_run, AlphaC, AlphaCConfig, PopdynOutcome, PopdynSpec,
    RunConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::{fmt_f64, fmt_opt, Ctx, Table};
use crate::Status;

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BudgetArgs {
    /// Population size P of each message pool.
    #[arg(long, default_value_t = 100_000)]
    pop: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    min_sweeps: usize,
    #[arg(long, default_value_t = 2000)]
    max_sweeps: usize,
}

impl BudgetArgs {
    fn config(&self) -> Result<RunConfig> {
        if self.pop < 2 {
            bail!("--pop must be at least 2");
        }
        if self.max_sweeps < self.min_sweeps {
            bail!("--max-sweeps must be at least --min-sweeps");
        }
        Ok(RunConfig {
            population: self.pop,
            min_sweeps: self.min_sweeps,
            max_sweeps: self.max_sweeps,
            ..RunConfig::default()
        })
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PopdynArgs {
    #[arg(long)]
    k: usize,
    /// Hyperedges per site of the Poisson ensemble.
    #[arg(long, conflicts_with = "t")]
    alpha: Option<f64>,
    /// Fixed site degree instead of Poisson degrees.
    #[arg(long)]
    t: Option<usize>,
    /// Fugacity of a single run; omit together with `--scan`.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Also estimate the occupation density as a derivative of f with this
    /// step.
    #[arg(long)]
    derivative_step: Option<f64>,
    /// Locate the critical fugacity instead of a single run.
    #[arg(long, conflicts_with = "lambda")]
    scan: bool,
    #[command(flatten)]
    #[serde(flatten)]
    budget: BudgetArgs,
}

pub fn popdyn(ctx: &mut Ctx, a: PopdynArgs) -> Result<Status> {
    ctx.start("popdyn", &a)?;
    ctx.manifest.seeds.push(a.budget.seed);
    let spec = match (a.alpha, a.t) {
        (Some(alpha), None) => PopdynSpec::poisson(a.k, alpha),
        (None, Some(t)) => PopdynSpec::regular(t, a.k),
        _ => bail!("exactly one of --alpha and --t is required"),
    };
    let mut cfg = a.budget.config()?;
    cfg.derivative_step = a.derivative_step;
    if a.scan {
        let fit = adaptive_lambda_scan(&spec, &cfg, a.budget.seed)?;
        ctx.emit_json(&json!({ "spec": spec, "config": cfg, "fit": fit }))?;
        return Ok(Status::Ok);
    }
    let Some(lambda) = a.lambda else {
        bail!("--lambda is required unless --scan is given");
    };
    match popdyn_run(&spec, lambda, &cfg, a.budget.seed)? {
        PopdynOutcome::Converged(run) => {
            ctx.emit_json(&json!({
                "converged": true,
                "spec": spec,
                "lambda": lambda,
                "estimates": run.estimates,
                "provenance": run.provenance,
            }))?;
            Ok(Status::Ok)
        }
        PopdynOutcome::Breakdown(b) => {
            ctx.emit_json(&json!({
                "converged": false,
                "spec": spec,
                "lambda": lambda,
                "breakdown": b,
                "provenance": b.provenance,
            }))?;
            Ok(Status::Breakdown)
        }
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AlphaCArgs {
    #[arg(long)]
    k: usize,
    /// Bisection stops at this bracket width.
    #[arg(long, default_value_t = 0.01)]
    alpha_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_start: f64,
    /// Skip the fitted critical fugacities at the bracket ends.
    #[arg(long)]
    no_curve: bool,
    #[command(flatten)]
    #[serde(flatten)]
    budget: BudgetArgs,
}

fn alpha_config(budget: &BudgetArgs, alpha_tol: f64, alpha_start: f64, curve: bool) -> Result<AlphaCConfig> {
    if !(alpha_tol > 0.0 && alpha_start > 0.0) {
        bail!("--alpha-tol and --alpha-start must be positive");
    }
    Ok(AlphaCConfig {
        run: budget.config()?,
        alpha_tol,
        alpha_start,
        curve,
        ..AlphaCConfig::default()
    })
}

pub fn alpha_c(ctx: &mut Ctx, a: AlphaCArgs) -> Result<Status> {
    ctx.start("alpha-c", &a)?;
    ctx.manifest.seeds.push(a.budget.seed);
    let cfg = alpha_config(&a.budget, a.alpha_tol, a.alpha_start, !a.no_curve)?;
    let res = core_alpha_c(a.k, &cfg, a.budget.seed)?;
    ctx.emit_json(&res)?;
    Ok(Status::Ok)
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Fig3Args {
    /// Values of k, each at least 5.
    #[arg(long, value_delimiter = ',', default_value = "5,6,7")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    alpha_tol: f64,
    /// Wall-clock budget; values of k not started in time are reported as
    /// gaps.
    #[arg(long)]
    max_seconds: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    budget: BudgetArgs,
}

#[derive(Debug, Serialize)]
struct Fig3Row {
    k: usize,
    result: Option<AlphaC>,
    gap: Option<String>,
}

pub fn reproduce_fig3(ctx: &mut Ctx, a: Fig3Args) -> Result<Status> {
    ctx.start("reproduce-fig3", &a)?;
    ctx.manifest.seeds.push(a.budget.seed);
    if let Some(&k) = a.k.iter().find(|&&k| k < 5) {
        bail!("k = {k}: population dynamics needs k >= 5");
    }
    let cfg = alpha_config(&a.budget, a.alpha_tol, 1.0, false)?;
    let deadline = a.max_seconds.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0)));
    let mut rows = Vec::new();
    for &k in &a.k {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            rows.push(Fig3Row { k, result: None, gap: Some("budget exhausted".into()) });
            continue;
        }
        match core_alpha_c(k, &cfg, a.budget.seed) {
            Ok(r) => rows.push(Fig3Row { k, result: Some(r), gap: None }),
            Err(e) => rows.push(Fig3Row { k, result: None, gap: Some(e.to_string()) }),
        }
    }
    let mut table = Table::new(&[
        "k",
        "alpha_c",
        "alpha_lo",
        "alpha_hi",
        "alpha_sat_upper",
        "entsat",
        "qlll_alpha",
        "gap",
    ]);
    for r in &rows {
        let upper = 0.573 * 2f64.powi(r.k as i32);
        let res = r.result.as_ref();
        table.push(vec![
            r.k.to_string(),
            fmt_opt(res.map(|x| x.alpha_c)),
            fmt_opt(res.map(|x| x.bracket.0)),
            fmt_opt(res.map(|x| x.bracket.1)),
            fmt_f64(upper),
            res.map(|x| x.entsat.to_string()).unwrap_or_default(),
            String::new(),
            r.gap.clone().unwrap_or_default(),
        ]);
    }
    ctx.emit_csv(&table)?;
    ctx.emit_json_if_requested(&json!({ "rows": rows }))?;
    Ok(Status::Ok)
}
