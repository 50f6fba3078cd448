use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::roots::{first_negative_zero, roots_in_unit_interval};
use super::{independence_polynomial, ln_rational, rational_to_f64, IndPolyError, IndependencePolynomial};
use crate::hypergraph::DependencyGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Certified,
    NotCertified,
}

/// Outcome of the lattice-gas test at relative rank `p`.
///
/// When certified, `R(ker H) >= lower_bound = I(G, -p) > 0` and
/// `dim ker H >= q^N I(G, -p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearerCertificate {
    pub relative_rank: f64,
    pub p_c: f64,
    pub status: CertificateStatus,
    pub lower_bound: Option<f64>,
    pub dim_lower_bound: Option<f64>,
    /// `N ln q + ln I(G, -p)`; finite even when `dim_lower_bound` overflows.
    pub log_dim_lower_bound: Option<f64>,
    pub qudit_dim: usize,
    pub n_qudits: usize,
}

impl ShearerCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == CertificateStatus::Certified
    }
}

pub fn shearer_certify(
    g: &DependencyGraph,
    p: f64,
    qudit_dim: usize,
    n_qudits: usize,
) -> Result<ShearerCertificate, IndPolyError> {
    let poly = independence_polynomial(g)?;
    certify_polynomial(&poly, p, qudit_dim, n_qudits)
}

/// Certificate from a precomputed polynomial. Certified iff `I(G, -p′) > 0`
/// on the whole closed interval `[0, p]`, decided exactly with a Sturm
/// count; `p = p_c` is therefore not certified.
pub fn certify_polynomial(
    poly: &IndependencePolynomial,
    p: f64,
    qudit_dim: usize,
    n_qudits: usize,
) -> Result<ShearerCertificate, IndPolyError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(IndPolyError::RankOutOfRange(p));
    }
    let p_c = if poly.degree() == 0 {
        f64::INFINITY
    } else {
        first_negative_zero(poly)?
    };
    let value = poly.evaluate_exact(&-BigRational::from_float(p).expect("finite p"));
    let certified = roots_in_unit_interval(poly, p) == 0 && value.is_positive();
    debug_assert_eq!(certified, p < p_c, "Sturm count disagrees with bisection at p = {p}");
    let mut cert = ShearerCertificate {
        relative_rank: p,
        p_c,
        status: CertificateStatus::NotCertified,
        lower_bound: None,
        dim_lower_bound: None,
        log_dim_lower_bound: None,
        qudit_dim,
        n_qudits,
    };
    if certified {
        let log_dim = n_qudits as f64 * (qudit_dim as f64).ln() + ln_rational(&value);
        cert.status = CertificateStatus::Certified;
        cert.lower_bound = Some(rational_to_f64(&value));
        cert.log_dim_lower_bound = Some(log_dim);
        cert.dim_lower_bound = Some(
            (qudit_dim as f64).powi(n_qudits as i32) * rational_to_f64(&value),
        )
        .filter(|d| d.is_finite() && *d > 0.0)
        .or(Some(log_dim.exp()));
    }
    Ok(cert)
}
