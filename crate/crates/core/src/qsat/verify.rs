use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{block_bases, local_offsets};
use super::{
    diagonal_instance, gaussian_matrix, instance_kernel, orthonormal_columns, random_instance, KernelReport,
    QsatError, QsatInstance,
};
use crate::hypergraph::{build_dependency_graph, InteractionHypergraph};
use crate::indpoly::{shearer_certify, CertificateStatus};

/// Exact kernel against the lattice-gas bound for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Record {
    pub n_qudits: usize,
    pub qudit_dim: usize,
    pub rank: usize,
    /// Largest relative rank over the edges.
    pub p: f64,
    pub p_c: f64,
    pub status: CertificateStatus,
    pub r_exact: f64,
    /// `I(G, -p)` when certified.
    pub bound: Option<f64>,
    /// `r_exact - bound` when certified.
    pub margin: Option<f64>,
    /// `margin >= -1e-9` when certified; `None` otherwise, since a missing
    /// certificate says nothing about the kernel.
    pub satisfied: Option<bool>,
    pub kernel: KernelReport,
}

impl Theorem1Record {
    pub fn certified(&self) -> bool {
        self.status == CertificateStatus::Certified
    }
}

/// Slack allowed in `R(ker H) >= I(G, -p)` for rounding.
pub const MARGIN_SLACK: f64 = 1e-9;

/// Compares `R(ker H)` with the certificate at the instance's largest
/// relative rank. With mixed edge sizes the bound at the largest rank is
/// the weaker one, so it still applies.
pub fn verify_theorem1(inst: &QsatInstance) -> Result<Theorem1Record, QsatError> {
    let g = build_dependency_graph(&inst.hypergraph);
    let p = inst.relative_rank().min(1.0);
    let cert = shearer_certify(&g, p, inst.qudit_dim, inst.hypergraph.n_qudits())?;
    let kernel = instance_kernel(inst)?;
    let r_exact = kernel.relative_dim;
    let margin = cert.lower_bound.map(|b| r_exact - b);
    Ok(Theorem1Record {
        n_qudits: inst.hypergraph.n_qudits(),
        qudit_dim: inst.qudit_dim,
        rank: inst.rank,
        p,
        p_c: cert.p_c,
        status: cert.status,
        r_exact,
        bound: cert.lower_bound,
        margin,
        satisfied: margin.map(|m| m >= -MARGIN_SLACK),
        kernel,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceCheck {
    pub ambient: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_sum: usize,
    pub dim_intersection: usize,
    /// `dim(A ∩ B) = dim A + dim B − dim(A + B)`.
    pub holds: bool,
}

/// Draws `A = span(S ∪ X_A)` and `B = span(S ∪ X_B)` with `shared` common
/// random directions `S` and checks the dimension identity. `dim(A + B)` is
/// the rank of `P_A + P_B` and `dim(A ∩ B)` the multiplicity of its
/// eigenvalue 2, both counted from the spectrum.
pub fn subspace_dimension_identity_check(
    ambient: usize,
    (dim_a, dim_b): (usize, usize),
    shared: usize,
    seed: u64,
) -> Result<SubspaceCheck, QsatError> {
    if ambient == 0 || ambient > 64 {
        return Err(QsatError::InvalidParameter(format!("ambient dimension {ambient} not in 1..=64")));
    }
    if dim_a > ambient || dim_b > ambient || shared > dim_a.min(dim_b) {
        return Err(QsatError::InvalidParameter(format!(
            "subspace dimensions ({dim_a}, {dim_b}) with {shared} shared do not fit in {ambient}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common = gaussian_matrix(ambient, shared, &mut rng);
    let mut span = |extra: usize| {
        let x = gaussian_matrix(ambient, extra, &mut rng);
        let v = DMatrix::from_fn(ambient, shared + extra, |r, c| {
            if c < shared {
                common[(r, c)]
            } else {
                x[(r, c - shared)]
            }
        });
        projector_onto(&v)
    };
    let pa = span(dim_a - shared);
    let pb = span(dim_b - shared);
    let eig = (pa + pb).symmetric_eigenvalues();
    // eigenvalues are 1 ± cos θ over the principal angles θ
    let tol = 1e-8 * ambient as f64;
    let dim_sum = eig.iter().filter(|&&v| v > tol).count();
    let dim_intersection = eig.iter().filter(|&&v| v > 2.0 - tol).count();
    Ok(SubspaceCheck {
        ambient,
        dim_a,
        dim_b,
        dim_sum,
        dim_intersection,
        holds: dim_intersection + dim_sum == dim_a + dim_b,
    })
}

fn projector_onto(v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    if v.ncols() == 0 {
        return DMatrix::zeros(v.nrows(), v.nrows());
    }
    let q = orthonormal_columns(v);
    &q * q.adjoint()
}

/// Signed sum over edge subsets of joint violation counts for a classical
/// instance, against the directly counted kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionExclusion {
    pub n_edges: usize,
    pub dimension: usize,
    pub dim_ker: usize,
    /// `Σ_S (−1)^{|S|} #{states violating every edge in S}`.
    pub signed_sum: i64,
    pub agrees: bool,
}

/// Largest number of edges for the subset sum.
pub const MAX_INCLUSION_EXCLUSION_EDGES: usize = 24;

pub fn inclusion_exclusion(inst: &QsatInstance) -> Result<InclusionExclusion, QsatError> {
    if !inst.diagonal {
        return Err(QsatError::InvalidParameter("inclusion-exclusion needs a diagonal instance".into()));
    }
    let m = inst.hypergraph.n_edges();
    if m > MAX_INCLUSION_EXCLUSION_EDGES {
        return Err(QsatError::InvalidParameter(format!(
            "{m} edges exceed the limit of {MAX_INCLUSION_EXCLUSION_EDGES}"
        )));
    }
    let q = inst.qudit_dim;
    let dim = inst.dimension();
    let mut violated = vec![0u32; dim];
    for (i, (e, p)) in inst.hypergraph.edges().iter().zip(&inst.projectors).enumerate() {
        let off = local_offsets(e, q);
        for base in block_bases(e, q, dim) {
            for (a, &o) in off.iter().enumerate() {
                if p[(a, a)].re > 0.5 {
                    violated[base + o] |= 1 << i;
                }
            }
        }
    }
    // joint[S] = #{states whose violated set contains S}, by superset sums
    let mut joint = vec![0i64; 1 << m];
    for &v in &violated {
        joint[v as usize] += 1;
    }
    for bit in 0..m {
        for s in 0..1usize << m {
            if s & (1 << bit) == 0 {
                joint[s] += joint[s | (1 << bit)];
            }
        }
    }
    let signed_sum = joint
        .iter()
        .enumerate()
        .map(|(s, &c)| if s.count_ones() % 2 == 0 { c } else { -c })
        .sum();
    let dim_ker = violated.iter().filter(|&&v| v == 0).count();
    Ok(InclusionExclusion {
        n_edges: m,
        dimension: dim,
        dim_ker,
        signed_sum,
        agrees: signed_sum == dim_ker as i64,
    })
}

/// Measured kernels on the four-qudit cycle, with no expected outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourCycleReport {
    pub qudit_dim: usize,
    pub rank: usize,
    pub p: f64,
    pub p_c: f64,
    pub bound: Option<f64>,
    pub generic_r: Vec<f64>,
    pub classical_r: Vec<f64>,
}

pub fn four_cycle_report(q: usize, r: usize, seeds: &[u64]) -> Result<FourCycleReport, QsatError> {
    let h = InteractionHypergraph::new(4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]])?;
    let mut generic_r = Vec::with_capacity(seeds.len());
    let mut classical_r = Vec::with_capacity(seeds.len());
    let mut first = None;
    for &seed in seeds {
        let rec = verify_theorem1(&random_instance(&h, q, r, seed)?)?;
        generic_r.push(rec.r_exact);
        classical_r.push(instance_kernel(&diagonal_instance(&h, q, r, seed)?)?.relative_dim);
        first.get_or_insert(rec);
    }
    let (p, p_c, bound) = match first {
        Some(rec) => (rec.p, rec.p_c, rec.bound),
        None => {
            let g = build_dependency_graph(&h);
            let p = r as f64 / (q * q) as f64;
            let cert = shearer_certify(&g, p.min(1.0), q, 4)?;
            (p, cert.p_c, cert.lower_bound)
        }
    };
    Ok(FourCycleReport {
        qudit_dim: q,
        rank: r,
        p,
        p_c,
        bound,
        generic_r,
        classical_r,
    })
}

/// Kernel dimensions of repeated random draws on one hypergraph: generic
/// draws should all agree, classical draws may sit above them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrizationReport {
    pub generic_dims: Vec<usize>,
    pub generic_agree: bool,
    pub diagonal_dims: Vec<usize>,
    /// Classical draws with a larger kernel than the generic one.
    pub diagonal_above_generic: usize,
}

pub fn geometrization_check(
    h: &InteractionHypergraph,
    q: usize,
    r: usize,
    seeds: &[u64],
) -> Result<GeometrizationReport, QsatError> {
    let generic_dims = seeds
        .iter()
        .map(|&s| Ok(instance_kernel(&random_instance(h, q, r, s)?)?.dim_ker))
        .collect::<Result<Vec<_>, QsatError>>()?;
    let diagonal_dims = seeds
        .iter()
        .map(|&s| Ok(instance_kernel(&diagonal_instance(h, q, r, s)?)?.dim_ker))
        .collect::<Result<Vec<_>, QsatError>>()?;
    let generic_min = generic_dims.iter().copied().min().unwrap_or(0);
    Ok(GeometrizationReport {
        generic_agree: generic_dims.windows(2).all(|w| w[0] == w[1]),
        diagonal_above_generic: diagonal_dims.iter().filter(|&&d| d > generic_min).count(),
        generic_dims,
        diagonal_dims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{generate, EnsembleSpec};

    #[test]
    fn disjoint_classical_edges_meet_the_bound() {
        let h = InteractionHypergraph::new(6, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        let rec = verify_theorem1(&diagonal_instance(&h, 2, 1, 3).unwrap()).unwrap();
        assert!(rec.certified());
        assert_eq!(rec.r_exact, 0.75f64.powi(3));
        assert!((rec.bound.unwrap() - 0.75f64.powi(3)).abs() < 1e-15);
        assert!(rec.margin.unwrap().abs() < 1e-15);
    }

    #[test]
    fn chain_of_eight() {
        let h = generate(&EnsembleSpec::Chain { n: 8 }).unwrap();
        let rec = verify_theorem1(&random_instance(&h, 2, 1, 1).unwrap()).unwrap();
        assert!(rec.certified() && rec.p_c > 0.25);
        assert_eq!(rec.kernel.dim_ker, 9);
        assert_eq!(rec.r_exact, 9.0 / 256.0);
        let bound = rec.bound.unwrap();
        assert!(bound > 0.0 && bound <= rec.r_exact);
        assert_eq!(rec.satisfied, Some(true));
    }

    #[test]
    fn uncertified_instance_claims_nothing() {
        let h = generate(&EnsembleSpec::Star { z: 5, k: 2 }).unwrap();
        let rec = verify_theorem1(&random_instance(&h, 2, 1, 0).unwrap()).unwrap();
        assert_eq!(rec.status, CertificateStatus::NotCertified);
        assert_eq!((rec.bound, rec.margin, rec.satisfied), (None, None, None));
        assert!(rec.r_exact > 0.0);
    }

    #[test]
    fn subspace_identity() {
        let same = subspace_dimension_identity_check(10, (4, 4), 4, 1).unwrap();
        assert_eq!((same.dim_intersection, same.dim_sum), (4, 4));
        let generic = subspace_dimension_identity_check(12, (5, 6), 0, 2).unwrap();
        assert_eq!((generic.dim_intersection, generic.dim_sum), (0, 11));
        let crowded = subspace_dimension_identity_check(12, (8, 9), 2, 3).unwrap();
        assert_eq!((crowded.dim_intersection, crowded.dim_sum), (5, 12));
        for seed in 0..100 {
            let a = 1 + (seed as usize * 7) % 12;
            let b = 1 + (seed as usize * 5) % 12;
            let s = seed as usize % (a.min(b) + 1);
            assert!(subspace_dimension_identity_check(12, (a, b), s, seed).unwrap().holds);
        }
        assert!(subspace_dimension_identity_check(65, (1, 1), 0, 0).is_err());
    }

    #[test]
    fn inclusion_exclusion_counts() {
        let h = generate(&EnsembleSpec::Cycle { n: 5 }).unwrap();
        for seed in 0..10 {
            let ie = inclusion_exclusion(&diagonal_instance(&h, 2, 2, seed).unwrap()).unwrap();
            assert!(ie.agrees, "{ie:?}");
        }
        assert!(inclusion_exclusion(&random_instance(&h, 2, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn four_cycle() {
        let rep = four_cycle_report(2, 1, &[1, 2, 3]).unwrap();
        assert!((rep.p_c - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
        assert!((rep.bound.unwrap() - 0.125).abs() < 1e-15);
        for r in rep.generic_r.iter().chain(&rep.classical_r) {
            assert!(*r >= 0.125 - 1e-12);
        }
    }

    #[test]
    fn geometrization() {
        let h = generate(&EnsembleSpec::Cycle { n: 5 }).unwrap();
        let seeds: Vec<u64> = (0..20).collect();
        let rep = geometrization_check(&h, 2, 1, &seeds).unwrap();
        assert!(rep.generic_agree, "{:?}", rep.generic_dims);
        assert!(rep.diagonal_dims.iter().all(|&d| d >= rep.generic_dims[0]));
    }
}
