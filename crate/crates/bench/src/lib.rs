//! Fixed inputs shared by the benchmarks.

use qshearer_core::hypergraph::{generate, EnsembleSpec, InteractionHypergraph, QuditPlacement};
use qshearer_core::popdyn::{MessagePopulation, PopdynSpec};
use qshearer_core::qsat::{random_instance, QsatInstance};

pub fn hexagonal_patch(side: usize) -> InteractionHypergraph {
    generate(&EnsembleSpec::HexagonalLattice {
        rows: side,
        cols: side,
        placement: QuditPlacement::EdgesAsQudits,
    })
    .expect("valid lattice")
}

pub fn random_3_uniform(n: usize, seed: u64) -> InteractionHypergraph {
    generate(&EnsembleSpec::ErRandom { n, alpha: 0.5, k: 3, seed }).expect("valid ensemble")
}

pub fn k7_population(size: usize) -> MessagePopulation {
    MessagePopulation::new(PopdynSpec::poisson(7, 0.8), -0.005, size, 1)
}

pub fn qubit_cycle_instance(n: usize) -> QsatInstance {
    let h = generate(&EnsembleSpec::Cycle { n }).expect("valid cycle");
    random_instance(&h, 2, 1, 3).expect("small instance")
}
