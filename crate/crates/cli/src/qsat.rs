use std::ops::Range;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::Args;
use qshearer_core::qsat::{
    diagonal_instance_capped, random_instance_capped, verify_theorem1, Theorem1Record, DEFAULT_DIMENSION_CAP,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::graph::load_graph;
use crate::output::{fmt_f64, fmt_opt, Ctx, Table};
use crate::Status;

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct QsatVerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 2)]
    qudit_dim: usize,
    /// Rank of every projector.
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Batch mode over a half-open seed range `a..b`, with a CSV summary.
    #[arg(long)]
    seeds: Option<String>,
    /// Classical projectors onto random basis states.
    #[arg(long)]
    diagonal: bool,
    /// Largest Hilbert-space dimension to diagonalize.
    #[arg(long, default_value_t = DEFAULT_DIMENSION_CAP)]
    dimension_cap: usize,
}

fn parse_range(s: &str) -> Result<Range<u64>> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| anyhow!("--seeds expects a range a..b, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|e| anyhow!("--seeds start {a:?}: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| anyhow!("--seeds end {b:?}: {e}"))?;
    if a >= b {
        bail!("--seeds range {s:?} is empty");
    }
    Ok(a..b)
}

fn result_json(r: &Theorem1Record, seed: u64) -> serde_json::Value {
    json!({
        "seed": seed,
        "dim_ker": r.kernel.dim_ker,
        "R_exact": r.r_exact,
        "bound": r.bound,
        "certified": r.certified(),
        "margin": r.margin,
        "satisfied": r.satisfied,
        "gap": r.kernel.eigenvalue_gap,
        "ambiguous": r.kernel.ambiguous,
        "p": r.p,
        "p_c": r.p_c,
        "record": r,
    })
}

pub fn qsat_verify(ctx: &mut Ctx, a: QsatVerifyArgs) -> Result<Status> {
    ctx.start("qsat-verify", &a)?;
    let h = load_graph(ctx, &a.graph)?;
    let run = |seed: u64| -> Result<Theorem1Record> {
        let inst = if a.diagonal {
            diagonal_instance_capped(&h, a.qudit_dim, a.rank, seed, a.dimension_cap)?
        } else {
            random_instance_capped(&h, a.qudit_dim, a.rank, seed, a.dimension_cap)?
        };
        Ok(verify_theorem1(&inst)?)
    };
    let Some(range) = a.seeds.as_deref().map(parse_range).transpose()? else {
        let seed = a.seed.unwrap_or(0);
        ctx.manifest.seeds.push(seed);
        let r = run(seed)?;
        ctx.emit_json(&result_json(&r, seed))?;
        return Ok(Status::Ok);
    };
    ctx.manifest.seeds.extend(range.clone());
    let seeds: Vec<u64> = range.collect();
    let records = seeds.par_iter().map(|&s| run(s)).collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&[
        "seed", "dim_ker", "dimension", "R_exact", "certified", "bound", "margin", "gap", "ambiguous",
    ]);
    for (s, r) in seeds.iter().zip(&records) {
        table.push(vec![
            s.to_string(),
            r.kernel.dim_ker.to_string(),
            r.kernel.dimension.to_string(),
            fmt_f64(r.r_exact),
            r.certified().to_string(),
            fmt_opt(r.bound),
            fmt_opt(r.margin),
            fmt_opt(r.kernel.eigenvalue_gap),
            r.kernel.ambiguous.to_string(),
        ]);
    }
    ctx.emit_csv(&table)?;
    let violations = records.iter().filter(|r| r.satisfied == Some(false)).count();
    ctx.emit_json_if_requested(&json!({
        "instances": seeds.iter().zip(&records).map(|(&s, r)| result_json(r, s)).collect::<Vec<_>>(),
        "certified": records.iter().filter(|r| r.certified()).count(),
        "violations": violations,
    }))?;
    Ok(Status::Ok)
}
