use serde::{Deserialize, Serialize};

use super::bp::{CavityState, FactorGraph};
use super::{CavityError, TermKind};

/// Bethe free energy `F = Σ_a F_a + Σ_i F_i − Σ_(ai) F_ai`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheFreeEnergy {
    pub lambda: f64,
    pub total: f64,
    /// `F / N` with `N` the number of sites.
    pub density: f64,
    pub site_terms: Vec<f64>,
    pub edge_terms: Vec<f64>,
    pub link_terms: Vec<f64>,
}

fn checked_ln(value: f64, kind: TermKind, index: usize) -> Result<f64, CavityError> {
    if value > 0.0 && value.is_finite() {
        Ok(value.ln())
    } else {
        Err(CavityError::LogArgument { kind, index, value })
    }
}

/// `Π(1−l) + Σ_j l_j Π_{j′≠j}(1−l_{j′})`: no edge, or exactly one edge, of
/// the site occupied.
fn site_weight(ls: impl Iterator<Item = f64> + Clone) -> f64 {
    let empty: f64 = ls.clone().map(|l| 1.0 - l).product();
    let one: f64 = ls
        .clone()
        .enumerate()
        .map(|(j, lj)| {
            lj * ls
                .clone()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .map(|(_, l)| 1.0 - l)
                .product::<f64>()
        })
        .sum();
    empty + one
}

fn edge_weight(lambda: f64, qs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let empty: f64 = qs.clone().map(|q| 1.0 - q).product();
    let occupied = lambda * qs.map(|q| q / lambda).product::<f64>();
    (empty, occupied)
}

pub fn free_energy(fg: &FactorGraph, state: &CavityState) -> Result<BetheFreeEnergy, CavityError> {
    let lambda = state.lambda;
    let n = fg.n_sites().max(1) as f64;
    if lambda == 0.0 {
        return Ok(BetheFreeEnergy {
            lambda,
            total: 0.0,
            density: 0.0,
            site_terms: vec![0.0; fg.n_sites()],
            edge_terms: vec![0.0; fg.n_edges()],
            link_terms: vec![0.0; fg.n_incidences()],
        });
    }
    let site_terms = (0..fg.n_sites())
        .map(|a| {
            let ls = fg.site_incidences(a).iter().map(|&e| state.l[e]);
            checked_ln(site_weight(ls), TermKind::Site, a)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let edge_terms = (0..fg.n_edges())
        .map(|i| {
            let qs = fg.edge_incidences(i).iter().map(|&e| state.q[e]);
            let (empty, occupied) = edge_weight(lambda, qs);
            checked_ln(empty + occupied, TermKind::Edge, i)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let link_terms = (0..fg.n_incidences())
        .map(|e| {
            let (q, l) = (state.q[e], state.l[e]);
            checked_ln((1.0 - l) * (1.0 - q) + l * q / lambda, TermKind::Link, e)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let total = site_terms.iter().sum::<f64>() + edge_terms.iter().sum::<f64>()
        - link_terms.iter().sum::<f64>();
    Ok(BetheFreeEnergy {
        lambda,
        total,
        density: total / n,
        site_terms,
        edge_terms,
        link_terms,
    })
}

/// Occupied hyperedges per site from the BP edge marginals. At a fixed
/// point this equals `∂f/∂(log λ)`.
pub fn occupation_density(fg: &FactorGraph, state: &CavityState) -> f64 {
    if state.lambda == 0.0 {
        return 0.0;
    }
    let total: f64 = (0..fg.n_edges())
        .map(|i| {
            let qs = fg.edge_incidences(i).iter().map(|&e| state.q[e]);
            let (empty, occupied) = edge_weight(state.lambda, qs);
            occupied / (empty + occupied)
        })
        .sum();
    total / fg.n_sites().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::{bp_solve, ContinuationSchedule};
    use crate::hypergraph::{generate, EnsembleSpec, InteractionHypergraph};
    use crate::indpoly::matching_polynomial;

    #[test]
    fn zero_fugacity_has_zero_free_energy() {
        let h = generate(&EnsembleSpec::Chain { n: 5 }).unwrap();
        let fg = FactorGraph::new(&h);
        assert_eq!(free_energy(&fg, &CavityState::zeros(&fg)).unwrap().total, 0.0);
    }

    #[test]
    fn small_tree_is_exact() {
        let h = InteractionHypergraph::new(
            8,
            vec![vec![0, 1, 2], vec![2, 3], vec![2, 4, 5], vec![5, 6], vec![6, 7]],
        )
        .unwrap();
        let z = matching_polynomial(&h).unwrap();
        for &lam in &[0.3, -0.1, 1.7] {
            let c = bp_solve(&h, lam, &ContinuationSchedule::default());
            let c = c.converged().unwrap();
            let exact = z.evaluate(lam);
            assert!((c.free_energy.total.exp() - exact).abs() / exact < 1e-12, "lambda {lam}");
        }
    }

    #[test]
    fn occupation_matches_log_derivative() {
        let h = InteractionHypergraph::new(6, vec![vec![0, 1], vec![1, 2, 3], vec![3, 4], vec![1, 5]])
            .unwrap();
        let sched = ContinuationSchedule::default();
        let lam = 0.6;
        let dl = 1e-5;
        let f = |x: f64| bp_solve(&h, x, &sched).converged().unwrap().free_energy.density;
        let numeric = lam * (f(lam + dl) - f(lam - dl)) / (2.0 * dl);
        let fg = FactorGraph::new(&h);
        let c = bp_solve(&h, lam, &sched);
        let direct = occupation_density(&fg, &c.converged().unwrap().state);
        assert!((numeric - direct).abs() < 1e-8);
    }

    #[test]
    fn nonpositive_argument_is_reported() {
        let h = generate(&EnsembleSpec::Chain { n: 3 }).unwrap();
        let fg = FactorGraph::new(&h);
        let s = CavityState {
            lambda: -0.5,
            q: vec![2.0; 4],
            l: vec![2.0; 4],
        };
        assert!(matches!(free_energy(&fg, &s), Err(CavityError::LogArgument { .. })));
    }
}
