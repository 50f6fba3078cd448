use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{hilbert_dimension, QsatError, QsatInstance};

/// Kernel of a positive semidefinite matrix, counted from its spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub dim_ker: usize,
    pub dimension: usize,
    /// `dim_ker / dimension`.
    pub relative_dim: f64,
    /// Smallest eigenvalue above the zero tolerance; `None` when every
    /// eigenvalue is counted as zero.
    pub eigenvalue_gap: Option<f64>,
    pub zero_tol: f64,
    pub min_eigenvalue: f64,
    /// The gap is within a factor 10 of the tolerance, so the count may be
    /// off.
    pub ambiguous: bool,
}

/// Offsets of the local basis states of edge `e` in the full basis.
pub(crate) fn local_offsets(e: &[usize], q: usize) -> Vec<usize> {
    let strides: Vec<usize> = e.iter().map(|&j| q.pow(j as u32)).collect();
    let d = q.pow(e.len() as u32);
    (0..d)
        .map(|mut a| {
            let mut off = 0;
            for s in &strides {
                off += (a % q) * s;
                a /= q;
            }
            off
        })
        .collect()
}

/// Full basis states whose digits on `e` are all zero.
pub(crate) fn block_bases(e: &[usize], q: usize, dim: usize) -> impl Iterator<Item = usize> + '_ {
    (0..dim).filter(move |&b| e.iter().all(|&j| (b / q.pow(j as u32)) % q == 0))
}

/// `H = Σ Πᵢ ⊗ 1`, embedded little-endian.
pub fn build_hamiltonian(inst: &QsatInstance) -> Result<DMatrix<Complex64>, QsatError> {
    let q = inst.qudit_dim;
    let dim = hilbert_dimension(inst.hypergraph.n_qudits(), q, inst.dimension_cap)?;
    let mut h = DMatrix::zeros(dim, dim);
    for (e, p) in inst.hypergraph.edges().iter().zip(&inst.projectors) {
        let off = local_offsets(e, q);
        for base in block_bases(e, q, dim) {
            for (r, &or) in off.iter().enumerate() {
                for (c, &oc) in off.iter().enumerate() {
                    let v = p[(r, c)];
                    if v != Complex64::default() {
                        h[(base + or, base + oc)] += v;
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Diagonal of `H` for a classical instance: the number of violated
/// projectors in each basis state.
pub(crate) fn diagonal_energies(inst: &QsatInstance) -> Vec<u32> {
    let q = inst.qudit_dim;
    let dim = inst.dimension();
    let mut energy = vec![0u32; dim];
    for (e, p) in inst.hypergraph.edges().iter().zip(&inst.projectors) {
        let off = local_offsets(e, q);
        for base in block_bases(e, q, dim) {
            for (a, &o) in off.iter().enumerate() {
                if p[(a, a)].re > 0.5 {
                    energy[base + o] += 1;
                }
            }
        }
    }
    energy
}

fn report(eigenvalues: &[f64], tol: f64) -> KernelReport {
    let dim = eigenvalues.len();
    let dim_ker = eigenvalues.iter().filter(|&&v| v < tol).count();
    let gap = eigenvalues.iter().copied().filter(|&v| v >= tol).min_by(f64::total_cmp);
    let min_eigenvalue = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    KernelReport {
        dim_ker,
        dimension: dim,
        relative_dim: if dim == 0 { 0.0 } else { dim_ker as f64 / dim as f64 },
        eigenvalue_gap: gap,
        zero_tol: tol,
        min_eigenvalue,
        ambiguous: gap.is_some_and(|g| g <= 10.0 * tol),
    }
}

/// Counts eigenvalues below `zero_tol`, which defaults to
/// `1e-8 · dimension · max diagonal entry`.
pub fn kernel_dimension(h: &DMatrix<Complex64>, zero_tol: Option<f64>) -> Result<KernelReport, QsatError> {
    if !h.is_square() {
        return Err(QsatError::InvalidParameter(format!("matrix is {}x{}", h.nrows(), h.ncols())));
    }
    let dim = h.nrows();
    let max_diag = h.diagonal().iter().map(|v| v.re).fold(0.0, f64::max);
    let scale = max_diag.max(1.0);
    let deviation = (h - h.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if deviation > 1e-10 * scale {
        return Err(QsatError::NotHermitian(deviation));
    }
    let tol = zero_tol.unwrap_or(1e-8 * dim as f64 * scale);
    let eig: DVector<f64> = if dim == 0 { DVector::zeros(0) } else { h.clone().symmetric_eigenvalues() };
    Ok(report(eig.as_slice(), tol))
}

/// Kernel of an instance's Hamiltonian; classical instances are counted
/// exactly from the diagonal.
pub fn instance_kernel(inst: &QsatInstance) -> Result<KernelReport, QsatError> {
    if inst.diagonal {
        let energies: Vec<f64> = diagonal_energies(inst).into_iter().map(f64::from).collect();
        let tol = 1e-8 * energies.len() as f64 * energies.iter().copied().fold(1.0, f64::max);
        return Ok(report(&energies, tol));
    }
    kernel_dimension(&build_hamiltonian(inst)?, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{generate, EnsembleSpec, InteractionHypergraph};
    use crate::qsat::{apply_local_unitaries, diagonal_instance, random_instance};

    #[test]
    fn single_edge_kernel() {
        let h = InteractionHypergraph::new(2, vec![vec![0, 1]]).unwrap();
        for r in 0..=4 {
            let inst = random_instance(&h, 2, r, 3).unwrap();
            let ham = build_hamiltonian(&inst).unwrap();
            assert!((&ham - &inst.projectors[0]).norm() < 1e-14);
            let k = kernel_dimension(&ham, None).unwrap();
            assert_eq!(k.dim_ker, 4 - r);
            assert!(!k.ambiguous);
        }
        let inst = random_instance(&InteractionHypergraph::new(3, vec![vec![0, 1, 2]]).unwrap(), 3, 5, 1).unwrap();
        assert_eq!(instance_kernel(&inst).unwrap().dim_ker, 27 - 5);
    }

    #[test]
    fn embedding_is_little_endian() {
        // |1> on qudit 0 of three qubits is basis state 1; on qudit 2 it is 4
        let h = InteractionHypergraph::new(3, vec![vec![2]]).unwrap();
        let mut inst = diagonal_instance(&h, 2, 1, 0).unwrap();
        inst.projectors[0] = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        let ham = build_hamiltonian(&inst).unwrap();
        let diag: Vec<f64> = ham.diagonal().iter().map(|v| v.re).collect();
        assert_eq!(diag, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn hamiltonian_is_psd() {
        let h = generate(&EnsembleSpec::Cycle { n: 5 }).unwrap();
        let inst = random_instance(&h, 2, 2, 8).unwrap();
        let k = kernel_dimension(&build_hamiltonian(&inst).unwrap(), None).unwrap();
        assert!(k.min_eigenvalue > -1e-10);
    }

    #[test]
    fn disjoint_edges_add_spectra() {
        let h = InteractionHypergraph::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let inst = random_instance(&h, 2, 1, 2).unwrap();
        let mut eig: Vec<f64> = build_hamiltonian(&inst).unwrap().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let counts = [0.0, 1.0, 2.0].map(|v| eig.iter().filter(|&&x| (x - v).abs() < 1e-10).count());
        assert_eq!(counts, [9, 6, 1]);
    }

    #[test]
    fn open_chain_kernel() {
        for n in 2..=8 {
            let h = generate(&EnsembleSpec::Chain { n }).unwrap();
            let k = instance_kernel(&random_instance(&h, 2, 1, n as u64).unwrap()).unwrap();
            assert_eq!(k.dim_ker, n + 1, "N = {n}");
            assert!(!k.ambiguous);
        }
    }

    #[test]
    fn star_kernel() {
        for (z, k, expected) in [(2, 2, 4), (3, 2, 5), (2, 3, 24)] {
            let h = generate(&EnsembleSpec::Star { z, k }).unwrap();
            let rep = instance_kernel(&random_instance(&h, 2, 1, 17).unwrap()).unwrap();
            assert_eq!(rep.dim_ker, expected, "z = {z}, k = {k}");
        }
    }

    #[test]
    fn local_unitary_invariance() {
        let h = generate(&EnsembleSpec::Cycle { n: 4 }).unwrap();
        for inst in [random_instance(&h, 2, 1, 1).unwrap(), diagonal_instance(&h, 2, 2, 1).unwrap()] {
            let before = instance_kernel(&inst).unwrap().dim_ker;
            let after = instance_kernel(&apply_local_unitaries(&inst, 5)).unwrap().dim_ker;
            assert_eq!(before, after);
        }
    }

    #[test]
    fn diagonal_fast_path_matches_eigensolver() {
        let h = generate(&EnsembleSpec::Cycle { n: 5 }).unwrap();
        for seed in 0..5 {
            let inst = diagonal_instance(&h, 2, 2, seed).unwrap();
            let fast = instance_kernel(&inst).unwrap();
            let slow = kernel_dimension(&build_hamiltonian(&inst).unwrap(), None).unwrap();
            assert_eq!(fast.dim_ker, slow.dim_ker);
        }
    }

    #[test]
    fn trivial_ranks() {
        let h = generate(&EnsembleSpec::Chain { n: 4 }).unwrap();
        let zero = diagonal_instance(&h, 2, 0, 0).unwrap();
        let k = instance_kernel(&zero).unwrap();
        assert_eq!((k.dim_ker, k.eigenvalue_gap), (16, None));
        let full = InteractionHypergraph::new(2, vec![vec![0, 1]]).unwrap();
        assert_eq!(instance_kernel(&diagonal_instance(&full, 2, 4, 0).unwrap()).unwrap().dim_ker, 0);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        m[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(matches!(kernel_dimension(&m, None), Err(QsatError::NotHermitian(_))));
    }
}
