//! Frustration-freeness certificates for local projector Hamiltonians.
//!
//! A projector Hamiltonian `H = Σ Πᵢ` on qudits of dimension `q` has a
//! nontrivial kernel whenever the hard-core lattice gas living on its
//! interaction hypergraph has a positive partition function at fugacity
//! `-p′` for every `0 ≤ p′ ≤ p`, where `p` is the relative rank of the
//! projectors. This crate provides the pieces needed to evaluate and test
//! that criterion:
//!
//! * [`hypergraph`]: interaction hypergraphs, their dependency graphs, and
//!   generators for chains, trees, lattices and random ensembles.
//! * [`indpoly`]: exact independence polynomials, the first negative
//!   fugacity zero, and certificates with ground-space lower bounds.
//! * [`cavity`]: belief propagation for the hard-core gas, Bethe free
//!   energies, closed forms for chains and regular trees, singularity fits.
//! * [`popdyn`]: population dynamics for random k-QSAT and the resulting
//!   satisfiability bound.
//! * [`qsat`]: exact diagonalization of small instances to check every bound
//!   against the true kernel dimension.

pub mod cavity;
pub mod hypergraph;
pub mod indpoly;
pub mod popdyn;
pub mod qsat;

pub use cavity::{
    bp_solve, bp_sweep, chain_uniform_solution, fit_singularity, free_energy,
    regular_tree_lambda_c, regular_tree_solution, BetheFreeEnergy, BpOutcome, BreakdownReport,
    CavityError, CavityState, ContinuationSchedule, CriticalExponent, FactorGraph,
};
pub use hypergraph::{
    build_dependency_graph, generate, poisson_degree_stats, DependencyGraph, EnsembleSpec,
    HypergraphError, InteractionHypergraph, QuditPlacement,
};
pub use indpoly::{
    first_negative_zero, independence_polynomial, matching_polynomial, shearer_certify,
    CertificateStatus, IndPolyError, IndependencePolynomial, ShearerCertificate,
};
pub use popdyn::{
    alpha_c, estimate_lambda_c, popdyn_run, popdyn_step, DegreeLaw, MessagePopulation,
    PopdynError, PopdynSpec, SingularityFit,
};
pub use qsat::{
    build_hamiltonian, diagonal_instance, kernel_dimension, random_instance,
    subspace_dimension_identity_check, verify_theorem1, KernelReport, QsatError, QsatInstance,
};
