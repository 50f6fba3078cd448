//! `qshearer`: exact certificates, cavity solvers, population dynamics and
//! small-instance verification from the command line.
//!
//! Exit status is 0 on success, 1 on any error (including malformed
//! arguments and input files) and 2 when the result is a reported
//! breakdown, since locating a breakdown is the answer of the sweep
//! commands.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;

mod cavity;
mod graph;
mod output;
mod popdyn;
mod qsat;

use output::Ctx;

#[derive(Debug, Parser)]
#[command(name = "qshearer", version, about = "Frustration-freeness certificates for projector Hamiltonians")]
struct Cli {
    /// JSON file of parameters, keyed like the flags; flags given on the
    /// command line take precedence. A result file can be replayed by
    /// passing it here.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write CSV output here instead of stdout.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "QSHEARER_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a hypergraph file.
    GenGraph(graph::GenGraphArgs),
    /// Exact independence polynomial of a dependency graph.
    Indpoly(graph::IndpolyArgs),
    /// Decide the lattice-gas certificate at relative rank p.
    Certify(graph::CertifyArgs),
    /// Belief propagation at one fugacity.
    Bp(cavity::BpArgs),
    /// Belief propagation along a fugacity grid.
    SweepLambda(cavity::SweepArgs),
    /// Population dynamics for random k-QSAT.
    Popdyn(popdyn::PopdynArgs),
    /// Density at which the certificate fails for rank-1 qubit projectors.
    AlphaC(popdyn::AlphaCArgs),
    /// Exact kernel of random instances against the certificate.
    QsatVerify(qsat::QsatVerifyArgs),
    /// Finite-patch thresholds of a lattice.
    ReproduceTable1(graph::Table1Args),
    /// Critical densities over a range of k.
    ReproduceFig3(popdyn::Fig3Args),
}

pub enum Status {
    Ok,
    Breakdown,
}

fn flag_present(argv: &[OsString], flag: &str) -> bool {
    argv.iter().any(|a| {
        a.to_str()
            .is_some_and(|s| s == flag || s.strip_prefix(flag).is_some_and(|rest| rest.starts_with('=')))
    })
}

/// Appends `--key=value` for every config entry whose flag is absent from
/// the command line.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        match a.to_str() {
            Some("--config") => path = argv.get(i + 1).cloned(),
            Some(s) if s.starts_with("--config=") => path = Some(s["--config=".len()..].into()),
            _ => {}
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let root: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.to_string_lossy()))?;
    let params = root
        .pointer("/manifest/parameters")
        .or_else(|| root.pointer("/meta/manifest/parameters"))
        .unwrap_or(&root);
    let Value::Object(map) = params else {
        bail!("config {} is not a JSON object", path.to_string_lossy());
    };
    let mut out = argv.clone();
    for (key, value) in map {
        let flag = format!("--{key}");
        if flag_present(&argv, &flag) {
            continue;
        }
        let text = match value {
            Value::Null | Value::Bool(false) => continue,
            Value::Bool(true) => {
                out.push(flag.into());
                continue;
            }
            Value::String(s) => s.clone(),
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        };
        out.push(format!("{flag}={text}").into());
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<Status> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut ctx = Ctx::new(cli.out, cli.csv, cli.threads);
    match cli.command {
        Command::GenGraph(a) => graph::gen_graph(&mut ctx, a),
        Command::Indpoly(a) => graph::indpoly(&mut ctx, a),
        Command::Certify(a) => graph::certify(&mut ctx, a),
        Command::Bp(a) => cavity::bp(&mut ctx, a),
        Command::SweepLambda(a) => cavity::sweep(&mut ctx, a),
        Command::Popdyn(a) => popdyn::popdyn(&mut ctx, a),
        Command::AlphaC(a) => popdyn::alpha_c(&mut ctx, a),
        Command::QsatVerify(a) => qsat::qsat_verify(&mut ctx, a),
        Command::ReproduceTable1(a) => graph::reproduce_table1(&mut ctx, a),
        Command::ReproduceFig3(a) => popdyn::reproduce_fig3(&mut ctx, a),
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Breakdown) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
