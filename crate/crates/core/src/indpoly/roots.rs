//! Locating the first zero of `I(G, -p)` for `p > 0`.
//!
//! Signs are always decided exactly: a double `p` is a dyadic rational
//! `m / 2^s`, and `2^{s d} I(G, -m/2^s)` is an integer.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::{IndPolyError, IndependencePolynomial};

/// Scan resolution before bisection takes over.
pub const SCAN_STEP: f64 = 1.0 / 1024.0;

/// Decomposes a nonnegative finite double as `m / 2^s` with `s >= 0`.
fn dyadic(p: f64) -> (BigInt, u64) {
    assert!(p.is_finite() && p >= 0.0);
    if p == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = p.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    if e >= 0 {
        (BigInt::from(mant) << e as u64, 0)
    } else {
        (BigInt::from(mant), (-e) as u64)
    }
}

/// Sign of `Σ a_j y^j` at the dyadic point `y = m / 2^s`.
fn sign_at(coeffs: &[BigInt], m: &BigInt, s: u64) -> Ordering {
    let d = coeffs.len() - 1;
    let mut acc = coeffs[d].clone();
    for j in (0..d).rev() {
        acc = acc * m + (&coeffs[j] << (s * (d - j) as u64));
    }
    acc.sign_ordering()
}

trait SignOrdering {
    fn sign_ordering(&self) -> Ordering;
}

impl SignOrdering for BigInt {
    fn sign_ordering(&self) -> Ordering {
        match self.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }
}

/// Exact sign of `I(G, -p)`.
pub fn sign_at_negative(poly: &IndependencePolynomial, p: f64) -> Ordering {
    let (m, s) = dyadic(p);
    sign_at(&poly.alternating(), &m, s)
}

/// Smallest `p > 0` with `I(G, -p) = 0`: scan in steps of [`SCAN_STEP`] from
/// `p = 0` (where `I = 1`) to the first sign change, then bisect down to
/// adjacent doubles.
pub fn first_negative_zero(poly: &IndependencePolynomial) -> Result<f64, IndPolyError> {
    if poly.degree() == 0 {
        return Err(IndPolyError::Degenerate);
    }
    let coeffs = poly.alternating();
    let sign = |p: f64| {
        let (m, s) = dyadic(p);
        sign_at(&coeffs, &m, s)
    };
    // p_c <= 1 for any graph with a vertex; the extra range only guards
    // against malformed input polynomials
    const SCAN_LIMIT: f64 = 4.0;
    let mut lo = 0.0;
    let mut j = 1u32;
    loop {
        let hi = j as f64 * SCAN_STEP;
        if hi > SCAN_LIMIT {
            return Err(IndPolyError::NoZeroFound(SCAN_LIMIT));
        }
        match sign(hi) {
            Ordering::Equal => return Ok(hi),
            Ordering::Less => return Ok(bisect(&sign, lo, hi)),
            Ordering::Greater => {
                lo = hi;
                j += 1;
            }
        }
    }
}

fn bisect(sign: &impl Fn(f64) -> Ordering, mut lo: f64, mut hi: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        match sign(mid) {
            Ordering::Equal => return mid,
            Ordering::Greater => lo = mid,
            Ordering::Less => hi = mid,
        }
    }
}

/// Number of distinct roots of `I(G, -y)` in `(0, p]`, by Sturm's theorem
/// over a primitive pseudo-remainder sequence in exact integers.
pub fn roots_in_unit_interval(poly: &IndependencePolynomial, p: f64) -> usize {
    if poly.degree() == 0 || p <= 0.0 {
        return 0;
    }
    let seq = sturm_sequence(poly.alternating());
    let (m, s) = dyadic(p);
    let at_zero = variations(seq.iter().map(|c| c[0].sign_ordering()));
    let at_p = variations(seq.iter().map(|c| sign_at(c, &m, s)));
    at_zero - at_p
}

fn variations(signs: impl Iterator<Item = Ordering>) -> usize {
    let mut count = 0;
    let mut last = Ordering::Equal;
    for s in signs.filter(|&s| s != Ordering::Equal) {
        if last != Ordering::Equal && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

fn trim(p: &mut Vec<BigInt>) {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

fn derivative(p: &[BigInt]) -> Vec<BigInt> {
    if p.len() <= 1 {
        return vec![BigInt::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| c * BigInt::from(j))
        .collect()
}

fn make_primitive(p: &mut [BigInt]) {
    let content = p.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    if !content.is_zero() && content != BigInt::from(1) {
        for c in p.iter_mut() {
            *c /= &content;
        }
    }
}

/// Remainder of `a` by `b` up to a positive factor, i.e. something with the
/// sign behaviour of `rem(a, b)`.
fn signed_pseudo_remainder(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let db = b.len() - 1;
    let lc = &b[db];
    let mut r = a.to_vec();
    let mut steps = 0u32;
    while r.len() - 1 >= db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        let coef = r[dr].clone();
        for c in r.iter_mut() {
            *c *= lc;
        }
        for (j, bj) in b.iter().enumerate() {
            r[dr - db + j] -= &coef * bj;
        }
        steps += 1;
        r.pop();
        if r.is_empty() {
            r.push(BigInt::zero());
            break;
        }
        trim(&mut r);
    }
    if lc.is_negative() && steps % 2 == 1 {
        for c in r.iter_mut() {
            *c = -c.clone();
        }
    }
    r
}

fn sturm_sequence(p: Vec<BigInt>) -> Vec<Vec<BigInt>> {
    let mut seq = vec![p.clone(), derivative(&p)];
    loop {
        let n = seq.len();
        if seq[n - 1].len() == 1 {
            break;
        }
        let mut r = signed_pseudo_remainder(&seq[n - 2], &seq[n - 1]);
        if r.len() == 1 && r[0].is_zero() {
            break;
        }
        for c in r.iter_mut() {
            *c = -c.clone();
        }
        make_primitive(&mut r);
        seq.push(r);
    }
    seq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::DependencyGraph;
    use crate::indpoly::independence_polynomial;
    use num_bigint::BigUint;

    fn poly(c: &[u64]) -> IndependencePolynomial {
        IndependencePolynomial::from_coefficients(c.iter().map(|&x| BigUint::from(x)).collect())
    }

    #[test]
    fn dyadic_decomposition() {
        assert_eq!(dyadic(0.25), (BigInt::from(1u64 << 52), 54));
        assert_eq!(dyadic(3.0), (BigInt::from(3u64 << 51), 51));
        assert_eq!(dyadic(0.0), (BigInt::zero(), 0));
    }

    #[test]
    fn k2_root_is_half() {
        assert_eq!(first_negative_zero(&poly(&[1, 2])).unwrap(), 0.5);
    }

    #[test]
    fn complete_graph_roots() {
        for z in 2..=10u64 {
            let p_c = first_negative_zero(&poly(&[1, z])).unwrap();
            assert!((p_c - 1.0 / z as f64).abs() < 1e-15, "z={z}: {p_c}");
        }
    }

    #[test]
    fn p3_root_matches_quadratic_formula() {
        let p_c = first_negative_zero(&poly(&[1, 3, 1])).unwrap();
        let expected = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((p_c - expected).abs() < 1e-15);
        // independent scan: 1 - 3p + p^2 stays positive below the root
        let mut p = 0.0;
        while p < expected - 1e-6 {
            assert!(1.0 - 3.0 * p + p * p > 0.0);
            p += 1e-5;
        }
    }

    #[test]
    fn single_vertex_root_at_one() {
        assert_eq!(first_negative_zero(&poly(&[1, 1])).unwrap(), 1.0);
        assert_eq!(first_negative_zero(&poly(&[1, 3, 3, 1])).unwrap(), 1.0);
    }

    #[test]
    fn empty_graph_is_degenerate() {
        assert_eq!(first_negative_zero(&poly(&[1])), Err(IndPolyError::Degenerate));
    }

    #[test]
    fn tiny_root_below_scan_step() {
        let p_c = first_negative_zero(&poly(&[1, 5000])).unwrap();
        assert!((p_c - 1.0 / 5000.0).abs() < 1e-18);
    }

    #[test]
    fn sturm_counts() {
        // 1 - 3y + y^2 has roots 0.381..., 2.618...
        let p = poly(&[1, 3, 1]);
        assert_eq!(roots_in_unit_interval(&p, 0.3), 0);
        assert_eq!(roots_in_unit_interval(&p, 0.5), 1);
        assert_eq!(roots_in_unit_interval(&p, 3.0), 2);
        // (1 - y)^3: one distinct root at 1, counted when included
        let cube = poly(&[1, 3, 3, 1]);
        assert_eq!(roots_in_unit_interval(&cube, 0.999), 0);
        assert_eq!(roots_in_unit_interval(&cube, 1.0), 1);
        assert_eq!(roots_in_unit_interval(&poly(&[1, 2]), 0.5), 1);
    }

    #[test]
    fn sturm_agrees_with_scan_on_paths() {
        for n in 2..30 {
            let p = independence_polynomial(&DependencyGraph::path(n)).unwrap();
            let p_c = first_negative_zero(&p).unwrap();
            assert_eq!(roots_in_unit_interval(&p, p_c * (1.0 - 1e-9)), 0, "n={n}");
            assert!(roots_in_unit_interval(&p, p_c * (1.0 + 1e-9)) >= 1, "n={n}");
            // zeros of the path polynomial: p = 1 / (4 cos^2(j π / (n + 2)))
            let exact = 1.0 / (4.0 * (std::f64::consts::PI / (n as f64 + 2.0)).cos().powi(2));
            assert!((p_c - exact).abs() < 1e-13, "n={n}: {p_c} vs {exact}");
        }
    }
}
