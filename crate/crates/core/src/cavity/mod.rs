//! Belief propagation for the hard-core gas on interaction hypergraphs.
//!
//! Particles live on hyperedges, and two hyperedges exclude each other when
//! they share a site. For every incidence `(a, i)` of site `a` in hyperedge
//! `i` there are two messages: `q_{a→i}`, the occupation probability of `i`
//! seen from `a`, and `l_{i→a}`, the occupation probability of `i` with all
//! other links of `a` cut. At negative fugacity these are formal
//! "probabilities" and may leave `[0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod bp;
mod closed_form;
mod energy;
mod fit;

pub use bp::{
    bp_continue, bp_iterate, bp_solve, bp_sweep, sweep_lambda, BpOutcome, BreakdownKind,
    BreakdownReport, CavityState, ContinuationSchedule, Converged, FactorGraph, SweepPoint,
    SweepStatus,
};
pub use closed_form::{
    chain_uniform_solution, regular_tree_lambda_c, regular_tree_lambda_c_f64,
    regular_tree_solution, ChainSolution, TreeSolution,
};
pub use energy::{free_energy, occupation_density, BetheFreeEnergy};
pub use fit::{
    fit_power_law, fit_power_law_free_exponent, fit_singularity, Background, CriticalExponent,
    PowerLawFit,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Site,
    Edge,
    Link,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CavityError {
    #[error("singular update on link (site {site}, edge {edge}) at lambda = {lambda}")]
    Singular { site: usize, edge: usize, lambda: f64 },
    #[error("nonpositive log argument {value} in {kind:?} term {index}")]
    LogArgument { kind: TermKind, index: usize, value: f64 },
    #[error("state has {got} incidences, factor graph has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Domain(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
}
