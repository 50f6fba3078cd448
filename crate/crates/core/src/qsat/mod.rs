//! Exact verification on small instances: random and classical projector
//! Hamiltonians, their kernel dimension by dense diagonalization, and the
//! comparison with the lattice-gas lower bound.
//!
//! Basis states of `N` qudits are indexed little-endian, `b = Σ_j s_j q^j`,
//! and a projector on hyperedge `e = [e_0, e_1, …]` acts on the local index
//! `Σ_m s_{e_m} q^m`, so the first qudit of an edge is the least
//! significant.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::hypergraph::{HypergraphError, InteractionHypergraph};
use crate::indpoly::IndPolyError;

mod kernel;
mod verify;

pub use kernel::{build_hamiltonian, instance_kernel, kernel_dimension, KernelReport};
pub use verify::{
    four_cycle_report, geometrization_check, inclusion_exclusion, subspace_dimension_identity_check,
    verify_theorem1, FourCycleReport, GeometrizationReport, InclusionExclusion, SubspaceCheck,
    Theorem1Record,
};

/// Largest Hilbert-space dimension accepted by default.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsatError {
    #[error("Hilbert space dimension {qudit_dim}^{n_qudits} exceeds the cap of {cap}")]
    DimensionCap {
        qudit_dim: usize,
        n_qudits: usize,
        cap: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian: deviation {0:.3e}")]
    NotHermitian(f64),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    IndPoly(#[from] IndPolyError),
}

/// `H = Σ Πᵢ` with one projector per hyperedge.
#[derive(Debug, Clone, PartialEq)]
pub struct QsatInstance {
    pub hypergraph: InteractionHypergraph,
    pub qudit_dim: usize,
    pub rank: usize,
    /// `projectors[i]` acts on `hypergraph.edge(i)` and has side `q^{|eᵢ|}`.
    pub projectors: Vec<DMatrix<Complex64>>,
    pub seed: u64,
    /// All projectors are diagonal in the computational basis.
    pub diagonal: bool,
    pub dimension_cap: usize,
}

impl QsatInstance {
    pub fn dimension(&self) -> usize {
        self.qudit_dim.pow(self.hypergraph.n_qudits() as u32)
    }

    /// Largest relative rank `r / q^{|e|}` over the edges.
    pub fn relative_rank(&self) -> f64 {
        let k_min = self.hypergraph.edges().iter().map(Vec::len).min().unwrap_or(0);
        self.rank as f64 / (self.qudit_dim as f64).powi(k_min as i32)
    }
}

pub fn hilbert_dimension(n_qudits: usize, qudit_dim: usize, cap: usize) -> Result<usize, QsatError> {
    let too_big = QsatError::DimensionCap {
        qudit_dim,
        n_qudits,
        cap,
    };
    let d = u32::try_from(n_qudits)
        .ok()
        .and_then(|n| qudit_dim.checked_pow(n))
        .ok_or_else(|| too_big.clone())?;
    if d > cap {
        return Err(too_big);
    }
    Ok(d)
}

fn check_params(h: &InteractionHypergraph, q: usize, r: usize, cap: usize) -> Result<(), QsatError> {
    if q < 2 {
        return Err(QsatError::InvalidParameter(format!("qudit dimension must be >= 2 (got {q})")));
    }
    hilbert_dimension(h.n_qudits(), q, cap)?;
    for (i, e) in h.edges().iter().enumerate() {
        let local = q.pow(e.len() as u32);
        if r > local {
            return Err(QsatError::InvalidParameter(format!(
                "rank {r} exceeds the local dimension {local} of edge {i}"
            )));
        }
    }
    Ok(())
}

/// Random projectors: `r` complex Gaussian vectors per edge, orthonormalized
/// by QR, `Π = V V†`.
pub fn random_instance(h: &InteractionHypergraph, q: usize, r: usize, seed: u64) -> Result<QsatInstance, QsatError> {
    random_instance_capped(h, q, r, seed, DEFAULT_DIMENSION_CAP)
}

pub fn random_instance_capped(
    h: &InteractionHypergraph,
    q: usize,
    r: usize,
    seed: u64,
    cap: usize,
) -> Result<QsatInstance, QsatError> {
    check_params(h, q, r, cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let projectors = h
        .edges()
        .iter()
        .map(|e| {
            let d = q.pow(e.len() as u32);
            if r == 0 {
                return DMatrix::zeros(d, d);
            }
            let v = orthonormal_columns(&gaussian_matrix(d, r, &mut rng));
            &v * v.adjoint()
        })
        .collect();
    Ok(QsatInstance {
        hypergraph: h.clone(),
        qudit_dim: q,
        rank: r,
        projectors,
        seed,
        diagonal: false,
        dimension_cap: cap,
    })
}

/// Classical projectors: diagonal 0/1 matrices with `r` ones at positions
/// drawn uniformly without replacement.
pub fn diagonal_instance(h: &InteractionHypergraph, q: usize, r: usize, seed: u64) -> Result<QsatInstance, QsatError> {
    diagonal_instance_capped(h, q, r, seed, DEFAULT_DIMENSION_CAP)
}

pub fn diagonal_instance_capped(
    h: &InteractionHypergraph,
    q: usize,
    r: usize,
    seed: u64,
    cap: usize,
) -> Result<QsatInstance, QsatError> {
    check_params(h, q, r, cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let projectors = h
        .edges()
        .iter()
        .map(|e| {
            let d = q.pow(e.len() as u32);
            let mut m = DMatrix::zeros(d, d);
            for i in rand::seq::index::sample(&mut rng, d, r) {
                m[(i, i)] = Complex64::new(1.0, 0.0);
            }
            m
        })
        .collect();
    Ok(QsatInstance {
        hypergraph: h.clone(),
        qudit_dim: q,
        rank: r,
        projectors,
        seed,
        diagonal: true,
        dimension_cap: cap,
    })
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Orthonormal basis of the column span, assuming full column rank.
fn orthonormal_columns(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.clone().qr().q()
}

/// Haar-like random unitary of side `d`.
pub fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    orthonormal_columns(&gaussian_matrix(d, d, rng))
}

/// Conjugates every projector by the tensor product of one random unitary
/// per qudit, a local basis change that leaves the spectrum of `H` intact.
pub fn apply_local_unitaries(inst: &QsatInstance, seed: u64) -> QsatInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = inst.qudit_dim;
    let unitaries: Vec<_> = (0..inst.hypergraph.n_qudits()).map(|_| random_unitary(q, &mut rng)).collect();
    let projectors = inst
        .hypergraph
        .edges()
        .iter()
        .zip(&inst.projectors)
        .map(|(e, p)| {
            // little-endian: the first qudit of the edge is the rightmost factor
            let u = e
                .iter()
                .fold(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)), |acc, &j| {
                    unitaries[j].kronecker(&acc)
                });
            &u * p * u.adjoint()
        })
        .collect();
    QsatInstance {
        projectors,
        diagonal: false,
        ..inst.clone()
    }
}

/// `(‖Π² − Π‖, ‖Π − Π†‖, |tr Π − r|)` in the Frobenius norm.
pub fn projector_defects(p: &DMatrix<Complex64>, rank: usize) -> (f64, f64, f64) {
    let idem = (p * p - p).norm();
    let herm = (p - p.adjoint()).norm();
    let trace = (p.trace() - Complex64::new(rank as f64, 0.0)).norm();
    (idem, herm, trace)
}
