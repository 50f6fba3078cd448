use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::{free_energy, occupation_density, BetheFreeEnergy};
use super::{CavityError, TermKind};
use crate::hypergraph::InteractionHypergraph;

/// Incidence structure of a hypergraph. Incidences are numbered edge-major:
/// all sites of edge 0 in edge order, then edge 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph {
    n_sites: usize,
    inc_site: Vec<usize>,
    inc_edge: Vec<usize>,
    site_inc: Vec<Vec<usize>>,
    edge_inc: Vec<Vec<usize>>,
}

impl FactorGraph {
    pub fn new(h: &InteractionHypergraph) -> Self {
        let mut inc_site = Vec::new();
        let mut inc_edge = Vec::new();
        let mut site_inc = vec![Vec::new(); h.n_qudits()];
        let mut edge_inc = Vec::with_capacity(h.n_edges());
        for (i, e) in h.edges().iter().enumerate() {
            let mut incs = Vec::with_capacity(e.len());
            for &a in e {
                let id = inc_site.len();
                inc_site.push(a);
                inc_edge.push(i);
                site_inc[a].push(id);
                incs.push(id);
            }
            edge_inc.push(incs);
        }
        Self {
            n_sites: h.n_qudits(),
            inc_site,
            inc_edge,
            site_inc,
            edge_inc,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_edges(&self) -> usize {
        self.edge_inc.len()
    }

    pub fn n_incidences(&self) -> usize {
        self.inc_site.len()
    }

    /// `(site, edge)` of an incidence.
    pub fn incidence(&self, e: usize) -> (usize, usize) {
        (self.inc_site[e], self.inc_edge[e])
    }

    pub fn site_incidences(&self, a: usize) -> &[usize] {
        &self.site_inc[a]
    }

    pub fn edge_incidences(&self, i: usize) -> &[usize] {
        &self.edge_inc[i]
    }

    /// Incidence id of `(site, edge)`, if the site belongs to the edge.
    pub fn find(&self, site: usize, edge: usize) -> Option<usize> {
        self.edge_inc[edge].iter().copied().find(|&e| self.inc_site[e] == site)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityState {
    pub lambda: f64,
    /// `q_{a→i}` per incidence.
    pub q: Vec<f64>,
    /// `l_{i→a}` per incidence.
    pub l: Vec<f64>,
}

impl CavityState {
    /// The `λ = 0` fixed point.
    pub fn zeros(fg: &FactorGraph) -> Self {
        Self {
            lambda: 0.0,
            q: vec![0.0; fg.n_incidences()],
            l: vec![0.0; fg.n_incidences()],
        }
    }

    /// Isolated-edge messages `q = l = λ / (1 + λ)`, a starting point for
    /// iteration at `λ ≠ 0`.
    pub fn isolated(fg: &FactorGraph, lambda: f64) -> Self {
        let v = lambda / (1.0 + lambda);
        Self {
            lambda,
            q: vec![v; fg.n_incidences()],
            l: vec![v; fg.n_incidences()],
        }
    }

    pub fn max_change(&self, other: &Self) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.l.iter().zip(&other.l))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check(&self, fg: &FactorGraph) -> Result<(), CavityError> {
        if self.q.len() != fg.n_incidences() || self.l.len() != fg.n_incidences() {
            return Err(CavityError::DimensionMismatch {
                expected: fg.n_incidences(),
                got: self.q.len().min(self.l.len()),
            });
        }
        Ok(())
    }
}

const PARALLEL_THRESHOLD: usize = 1 << 14;

/// One synchronous, damped update of every message. Each new message reads
/// only the old state.
pub fn bp_sweep(fg: &FactorGraph, state: &CavityState, damping: f64) -> Result<CavityState, CavityError> {
    state.check(fg)?;
    let lambda = state.lambda;
    if lambda == 0.0 {
        return Ok(CavityState::zeros(fg));
    }
    let singular = |e: usize| {
        let (site, edge) = fg.incidence(e);
        CavityError::Singular { site, edge, lambda }
    };
    let q_update = |e: usize| -> Result<f64, CavityError> {
        let a = fg.inc_site[e];
        let mut s = 0.0;
        for &f in &fg.site_inc[a] {
            if f != e {
                let l = state.l[f];
                if l == 1.0 {
                    return Err(singular(f));
                }
                s += l / (1.0 - l);
            }
        }
        let den = lambda + 1.0 + s;
        let v = lambda / den;
        if den == 0.0 || !v.is_finite() {
            return Err(singular(e));
        }
        Ok((1.0 - damping) * v + damping * state.q[e])
    };
    let l_update = |e: usize| -> Result<f64, CavityError> {
        let i = fg.inc_edge[e];
        let mut prod = 1.0;
        for &f in &fg.edge_inc[i] {
            if f != e {
                let q = state.q[f];
                if q == 0.0 {
                    return Err(singular(f));
                }
                prod *= lambda / q - lambda;
            }
        }
        let den = lambda + prod;
        let v = lambda / den;
        if den == 0.0 || !v.is_finite() {
            return Err(singular(e));
        }
        Ok((1.0 - damping) * v + damping * state.l[e])
    };
    let n = fg.n_incidences();
    let (q, l) = if n >= PARALLEL_THRESHOLD {
        let q = (0..n).into_par_iter().map(q_update).collect::<Result<Vec<_>, _>>()?;
        let l = (0..n).into_par_iter().map(l_update).collect::<Result<Vec<_>, _>>()?;
        (q, l)
    } else {
        let q = (0..n).map(q_update).collect::<Result<Vec<_>, _>>()?;
        let l = (0..n).map(l_update).collect::<Result<Vec<_>, _>>()?;
        (q, l)
    };
    Ok(CavityState { lambda, q, l })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    /// First step away from `λ = 0`.
    pub initial_step: f64,
    /// Step multiplier after each successful step.
    pub growth: f64,
    pub max_step: f64,
    /// Below this step size a failure is reported as breakdown.
    pub min_step: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Fixed damping; `None` uses 0.5 at `λ < 0` and 0 at `λ > 0`.
    pub damping: Option<f64>,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self {
            initial_step: 1e-2,
            growth: 1.5,
            max_step: 5e-2,
            min_step: 1e-6,
            tol: 1e-12,
            max_iter: 20_000,
            damping: None,
        }
    }
}

impl ContinuationSchedule {
    pub fn damping_at(&self, lambda: f64) -> f64 {
        self.damping.unwrap_or(if lambda < 0.0 { 0.5 } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BreakdownKind {
    NoConvergence { iterations: usize, residual: f64 },
    Singular { site: usize, edge: usize },
    LogArgument { term: TermKind, index: usize, value: f64 },
}

impl BreakdownKind {
    fn from_error(err: CavityError, iterations: usize) -> Self {
        match err {
            CavityError::Singular { site, edge, .. } => Self::Singular { site, edge },
            CavityError::LogArgument { kind, index, value } => Self::LogArgument {
                term: kind,
                index,
                value,
            },
            _ => Self::NoConvergence {
                iterations,
                residual: f64::NAN,
            },
        }
    }
}

/// Failure to continue the `λ = 0` branch. `last_good_lambda` is the
/// empirical estimate of the critical fugacity, accurate to `resolution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub last_good_lambda: f64,
    pub attempted_lambda: f64,
    pub resolution: f64,
    pub kind: BreakdownKind,
    #[serde(skip)]
    pub last_good_state: Option<CavityState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Converged {
    pub state: CavityState,
    pub iterations: usize,
    pub residual: f64,
    pub free_energy: BetheFreeEnergy,
    pub occupation_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BpOutcome {
    Converged(Box<Converged>),
    Breakdown(BreakdownReport),
}

impl BpOutcome {
    pub fn converged(&self) -> Option<&Converged> {
        match self {
            Self::Converged(c) => Some(c),
            Self::Breakdown(_) => None,
        }
    }

    pub fn breakdown(&self) -> Option<&BreakdownReport> {
        match self {
            Self::Breakdown(b) => Some(b),
            Self::Converged(_) => None,
        }
    }
}

/// Iterates [`bp_sweep`] from `state` until the max-norm change drops below
/// `tol`. Returns the fixed point, the iteration count and the last change.
pub fn bp_iterate(
    fg: &FactorGraph,
    mut state: CavityState,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(CavityState, usize, f64), BreakdownKind> {
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let next = bp_sweep(fg, &state, damping).map_err(|e| BreakdownKind::from_error(e, it))?;
        residual = next.max_change(&state);
        state = next;
        if !residual.is_finite() {
            break;
        }
        if residual < tol {
            return Ok((state, it, residual));
        }
    }
    Err(BreakdownKind::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

fn attempt(
    fg: &FactorGraph,
    from: &CavityState,
    lambda: f64,
    schedule: &ContinuationSchedule,
) -> Result<Converged, BreakdownKind> {
    let start = if from.lambda == 0.0 {
        CavityState::isolated(fg, lambda)
    } else {
        CavityState {
            lambda,
            q: from.q.clone(),
            l: from.l.clone(),
        }
    };
    let (state, iterations, residual) =
        bp_iterate(fg, start, schedule.damping_at(lambda), schedule.tol, schedule.max_iter)?;
    let fe = free_energy(fg, &state).map_err(|e| BreakdownKind::from_error(e, iterations))?;
    let n = occupation_density(fg, &state);
    Ok(Converged {
        state,
        iterations,
        residual,
        free_energy: fe,
        occupation_density: n,
    })
}

/// Solves BP at `target` by continuation from the trivial `λ = 0` fixed
/// point, so that the physical branch is selected by continuity.
pub fn bp_solve(h: &InteractionHypergraph, target: f64, schedule: &ContinuationSchedule) -> BpOutcome {
    let fg = FactorGraph::new(h);
    bp_continue(&fg, CavityState::zeros(&fg), target, schedule)
}

/// Continues a converged state at `start.lambda` to `target`. Steps grow
/// geometrically and are halved on failure; breakdown is reported once a
/// step below `min_step` fails.
pub fn bp_continue(
    fg: &FactorGraph,
    start: CavityState,
    target: f64,
    schedule: &ContinuationSchedule,
) -> BpOutcome {
    let mut current = if start.lambda == 0.0 {
        let fe = free_energy(fg, &start).expect("trivial state");
        Converged {
            state: start,
            iterations: 0,
            residual: 0.0,
            free_energy: fe,
            occupation_density: 0.0,
        }
    } else {
        match attempt(fg, &start, start.lambda, schedule) {
            Ok(c) => c,
            Err(kind) => {
                return BpOutcome::Breakdown(BreakdownReport {
                    last_good_lambda: f64::NAN,
                    attempted_lambda: start.lambda,
                    resolution: 0.0,
                    kind,
                    last_good_state: None,
                })
            }
        }
    };
    let mut step = schedule.initial_step;
    while current.state.lambda != target {
        let lam = current.state.lambda;
        let remaining = target - lam;
        let next = if remaining.abs() <= step {
            target
        } else {
            lam + step.copysign(remaining)
        };
        match attempt(fg, &current.state, next, schedule) {
            Ok(c) => {
                current = c;
                step = (step * schedule.growth).min(schedule.max_step);
            }
            Err(kind) => {
                let taken = (next - lam).abs();
                if taken <= schedule.min_step {
                    return BpOutcome::Breakdown(BreakdownReport {
                        last_good_lambda: lam,
                        attempted_lambda: next,
                        resolution: taken,
                        kind,
                        last_good_state: Some(current.state),
                    });
                }
                step = taken / 2.0;
            }
        }
    }
    BpOutcome::Converged(Box::new(current))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    Converged,
    Breakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub f: f64,
    pub n_density: f64,
    pub status: SweepStatus,
}

/// `steps + 1` equally spaced fugacities from `from` to `to`, each solved by
/// continuing the previous fixed point. Points past a breakdown are reported
/// with status `breakdown` and NaN values.
pub fn sweep_lambda(
    h: &InteractionHypergraph,
    from: f64,
    to: f64,
    steps: usize,
    schedule: &ContinuationSchedule,
) -> Vec<SweepPoint> {
    let fg = FactorGraph::new(h);
    let n = h.n_qudits().max(1) as f64;
    let mut state = CavityState::zeros(&fg);
    let mut broken = false;
    let mut out = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let lambda = if steps == 0 {
            from
        } else {
            from + (to - from) * j as f64 / steps as f64
        };
        let failed = SweepPoint {
            lambda,
            f: f64::NAN,
            n_density: f64::NAN,
            status: SweepStatus::Breakdown,
        };
        if broken {
            out.push(failed);
            continue;
        }
        match bp_continue(&fg, state.clone(), lambda, schedule) {
            BpOutcome::Converged(c) => {
                out.push(SweepPoint {
                    lambda,
                    f: c.free_energy.total / n,
                    n_density: c.occupation_density,
                    status: SweepStatus::Converged,
                });
                state = c.state;
            }
            BpOutcome::Breakdown(_) => {
                broken = true;
                out.push(failed);
            }
        }
    }
    out
}
