use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use qshearer_core::cavity::{bp_solve, sweep_lambda, BpOutcome, ContinuationSchedule, SweepStatus};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::graph::load_graph;
use crate::output::{fmt_f64, Ctx, Table};
use crate::Status;

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ScheduleArgs {
    /// Convergence tolerance on the max-norm message change.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Fixed damping in [0, 1); by default 0.5 at negative fugacity.
    #[arg(long)]
    damping: Option<f64>,
    /// Largest continuation step in the fugacity.
    #[arg(long, default_value_t = 5e-2)]
    max_step: f64,
    /// Step size below which a failure counts as breakdown.
    #[arg(long, default_value_t = 1e-6)]
    min_step: f64,
}

impl ScheduleArgs {
    fn schedule(&self) -> Result<ContinuationSchedule> {
        if let Some(d) = self.damping {
            if !(0.0..1.0).contains(&d) {
                bail!("--damping must lie in [0, 1), got {d}");
            }
        }
        if !(self.min_step > 0.0 && self.max_step >= self.min_step) {
            bail!("need 0 < --min-step <= --max-step");
        }
        let d = ContinuationSchedule::default();
        Ok(ContinuationSchedule {
            initial_step: d.initial_step.min(self.max_step),
            max_step: self.max_step,
            min_step: self.min_step,
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            ..d
        })
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BpArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    /// Include the converged messages in the result.
    #[arg(long)]
    messages: bool,
    #[command(flatten)]
    #[serde(flatten)]
    schedule: ScheduleArgs,
}

pub fn bp(ctx: &mut Ctx, a: BpArgs) -> Result<Status> {
    ctx.start("bp", &a)?;
    let schedule = a.schedule.schedule()?;
    let h = load_graph(ctx, &a.graph)?;
    let n = h.n_qudits().max(1) as f64;
    match bp_solve(&h, a.lambda, &schedule) {
        BpOutcome::Converged(c) => {
            let mut result = json!({
                "converged": true,
                "lambda": a.lambda,
                "F": c.free_energy.total,
                "f": c.free_energy.total / n,
                "n_density": c.occupation_density,
                "iterations": c.iterations,
                "residual": c.residual,
                "free_energy": c.free_energy,
            });
            if a.messages {
                result["messages"] = json!({ "q": c.state.q, "l": c.state.l });
            }
            ctx.emit_json(&result)?;
            Ok(Status::Ok)
        }
        BpOutcome::Breakdown(b) => {
            ctx.emit_json(&json!({
                "converged": false,
                "lambda": a.lambda,
                "breakdown": b,
            }))?;
            Ok(Status::Breakdown)
        }
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    from: f64,
    #[arg(long, allow_negative_numbers = true)]
    to: f64,
    /// Number of intervals; `steps + 1` fugacities are solved.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[command(flatten)]
    #[serde(flatten)]
    schedule: ScheduleArgs,
}

pub fn sweep(ctx: &mut Ctx, a: SweepArgs) -> Result<Status> {
    ctx.start("sweep-lambda", &a)?;
    let schedule = a.schedule.schedule()?;
    let h = load_graph(ctx, &a.graph)?;
    let points = sweep_lambda(&h, a.from, a.to, a.steps, &schedule);
    let mut table = Table::new(&["lambda", "f", "n_density", "status"]);
    for p in &points {
        table.push(vec![
            fmt_f64(p.lambda),
            fmt_f64(p.f),
            fmt_f64(p.n_density),
            match p.status {
                SweepStatus::Converged => "converged",
                SweepStatus::Breakdown => "breakdown",
            }
            .into(),
        ]);
    }
    ctx.emit_csv(&table)?;
    let broke = points.iter().any(|p| p.status == SweepStatus::Breakdown);
    ctx.emit_json_if_requested(&json!({
        "points": points,
        "last_converged_lambda": points.iter().filter(|p| p.status == SweepStatus::Converged).map(|p| p.lambda).last(),
        "breakdown": broke,
    }))?;
    Ok(if broke { Status::Breakdown } else { Status::Ok })
}
