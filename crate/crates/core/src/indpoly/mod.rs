//! Exact independence polynomials and Shearer certificates.
//!
//! `I(G, x) = Σ_{S independent} x^{|S|}` is the partition function of the
//! hard-core gas on the dependency graph at fugacity `x`. Its first zero on
//! the negative axis, `x = -p_c`, bounds the relative projector rank for
//! which a frustration-free ground space is guaranteed.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

mod certificate;
mod count;
mod roots;

pub use certificate::{certify_polynomial, shearer_certify, CertificateStatus, ShearerCertificate};
pub use count::{
    independence_polynomial, independence_polynomial_with_budget, matching_polynomial,
    matching_polynomial_with_budget, DEFAULT_VERTEX_BUDGET, MAX_VERTEX_BUDGET,
};
pub use roots::{first_negative_zero, roots_in_unit_interval, sign_at_negative, SCAN_STEP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndPolyError {
    #[error(
        "instance too large for exact computation: {size} vertices exceeds the budget of {budget}; \
         use the cavity solver instead"
    )]
    TooLarge { size: usize, budget: usize },
    #[error("vertex budget {0} exceeds the supported maximum of {MAX_VERTEX_BUDGET}")]
    BudgetUnsupported(usize),
    #[error("the polynomial of the empty graph has no zero")]
    Degenerate,
    #[error("relative rank p = {0} is outside [0, 1]")]
    RankOutOfRange(f64),
    #[error("no sign change of I(G, -p) found for p <= {0}")]
    NoZeroFound(f64),
    #[error("malformed coefficient {index}: {message}")]
    Coefficient { index: usize, message: String },
}

/// Coefficients `c_s` = number of independent sets of size `s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndependencePolynomial {
    coefficients: Vec<BigUint>,
}

impl IndependencePolynomial {
    /// Wraps raw coefficients; trailing zeros are trimmed.
    pub fn from_coefficients(mut coefficients: Vec<BigUint>) -> Self {
        while coefficients.len() > 1 && coefficients.last().is_some_and(Zero::is_zero) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(BigUint::zero());
        }
        Self { coefficients }
    }

    /// The empty graph: `I = 1`.
    pub fn one() -> Self {
        Self {
            coefficients: vec![BigUint::one()],
        }
    }

    pub fn coefficients(&self) -> &[BigUint] {
        &self.coefficients
    }

    /// Independence number of the underlying graph.
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Number of vertices of the underlying graph (`c₁`).
    pub fn n_vertices(&self) -> usize {
        self.coefficients
            .get(1)
            .and_then(ToPrimitive::to_usize)
            .unwrap_or(0)
    }

    /// `I(G, 1)`: total number of independent sets, including the empty one.
    pub fn total_count(&self) -> BigUint {
        self.coefficients.iter().sum()
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut out = vec![BigUint::zero(); self.coefficients.len() + other.coefficients.len() - 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            for (j, b) in other.coefficients.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::from_coefficients(out)
    }

    /// Horner evaluation in double precision.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::INFINITY))
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate_exact(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * x + BigRational::from_integer(BigInt::from(c.clone()));
        }
        acc
    }

    /// `I(G, -p)` evaluated exactly at the double `p` (every finite double is
    /// a dyadic rational) and rounded once at the end.
    pub fn evaluate_at_negative(&self, p: f64) -> f64 {
        let x = -BigRational::from_float(p).expect("finite p");
        rational_to_f64(&self.evaluate_exact(&x))
    }

    /// Coefficients with alternating signs: `I(G, -y)` as a polynomial in `y`.
    pub(crate) fn alternating(&self) -> Vec<BigInt> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(s, c)| {
                let v = BigInt::from(c.clone());
                if s % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect()
    }
}

impl Serialize for IndependencePolynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            coefficients: Vec<String>,
        }
        Repr {
            coefficients: self.coefficients.iter().map(ToString::to_string).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IndependencePolynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            coefficients: Vec<String>,
        }
        let repr = Repr::deserialize(deserializer)?;
        parse_coefficients(&repr.coefficients).map_err(serde::de::Error::custom)
    }
}

/// Parses decimal-string coefficients.
pub fn parse_coefficients(values: &[String]) -> Result<IndependencePolynomial, IndPolyError> {
    let coefficients = values
        .iter()
        .enumerate()
        .map(|(index, s)| {
            s.parse::<BigUint>().map_err(|e| IndPolyError::Coefficient {
                index,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if coefficients.is_empty() {
        return Err(IndPolyError::Coefficient {
            index: 0,
            message: "empty coefficient list".into(),
        });
    }
    Ok(IndependencePolynomial::from_coefficients(coefficients))
}

/// Natural log of a positive big integer without overflowing `f64`.
pub(crate) fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("in range").ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().expect("in range").ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational.
pub(crate) fn ln_rational(r: &BigRational) -> f64 {
    debug_assert!(r.numer().sign() == Sign::Plus);
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let sign = if r.numer().sign() == Sign::Minus { -1.0 } else { 1.0 };
        sign * ln_rational(&r.abs()).exp()
    })
}
