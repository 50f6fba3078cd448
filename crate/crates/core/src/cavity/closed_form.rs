//! Uniform fixed points on the chain and on infinite `(t, k)`-regular trees
//! (every site in `t` hyperedges, every hyperedge of size `k`).
//!
//! With `x = λ/q − λ` the tree equations reduce to
//! `x^k − x^{k−1} = λ (t − 1)`. The left side has its minimum on `x > 0` at
//! `x_c = (k−1)/k`; the physical branch is the root with `x ≥ x_c`, which
//! tends to 1 as `λ → 0`, and the branch ends at `λ_c(t, k)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::CavityError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSolution {
    pub q: f64,
    pub l: f64,
    /// Free energy per site.
    pub f: f64,
}

/// Uniform chain messages `q = l = (s − 1)/(s + 1)` with `s = √(1 + 4λ)`,
/// and `f = log((1 + s)/2)`.
pub fn chain_uniform_solution(lambda: f64) -> Result<ChainSolution, CavityError> {
    if !(lambda >= -0.25) {
        return Err(CavityError::Domain(format!(
            "chain messages are complex below lambda_c = -1/4 (got {lambda})"
        )));
    }
    let s = (1.0 + 4.0 * lambda).sqrt();
    let q = (s - 1.0) / (s + 1.0);
    Ok(ChainSolution {
        q,
        l: q,
        f: ((1.0 + s) / 2.0).ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSolution {
    pub x: f64,
    pub q: f64,
    pub l: f64,
    /// Free energy per site.
    pub f: f64,
    /// Occupied hyperedges per site.
    pub n_density: f64,
}

fn check_tree(t: usize, k: usize) -> Result<(), CavityError> {
    if t < 2 || k < 2 {
        return Err(CavityError::Domain(format!(
            "regular tree needs t >= 2 and k >= 2 (got t = {t}, k = {k})"
        )));
    }
    Ok(())
}

/// `λ_c(t, k) = −(k−1)^{k−1} / (k^k (t−1))`, exactly.
pub fn regular_tree_lambda_c(t: usize, k: usize) -> Result<BigRational, CavityError> {
    check_tree(t, k)?;
    let num = BigInt::from(k - 1).pow(k as u32 - 1);
    let den = BigInt::from(k).pow(k as u32) * BigInt::from(t - 1);
    Ok(-BigRational::new(num, den))
}

pub fn regular_tree_lambda_c_f64(t: usize, k: usize) -> Result<f64, CavityError> {
    Ok(regular_tree_lambda_c(t, k)?.to_f64().expect("finite"))
}

pub fn regular_tree_solution(t: usize, k: usize, lambda: f64) -> Result<TreeSolution, CavityError> {
    let lambda_c = regular_tree_lambda_c_f64(t, k)?;
    if !(lambda >= lambda_c) {
        return Err(CavityError::Domain(format!(
            "lambda = {lambda} is below lambda_c(t = {t}, k = {k}) = {lambda_c}"
        )));
    }
    let (tf, kf) = (t as f64, k as f64);
    let g = |x: f64| x.powi(k as i32 - 1) * (x - 1.0) - lambda * (tf - 1.0);
    let mut lo = (kf - 1.0) / kf;
    let mut hi = f64::max(1.0, 1.0 + lambda * (tf - 1.0));
    if g(lo) >= 0.0 {
        hi = lo;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    let q = lambda / (lambda + x);
    let l = (x - 1.0) / (x + tf - 2.0);
    let f = (1.0 - tf + tf / kf) * ((tf * x - 1.0) / (tf - 1.0)).ln() + tf * (kf - 1.0) / kf * x.ln();
    // edge marginal λ x^{-k} / (1 + λ x^{-k}), times t/k edges per site
    let w = lambda * x.powi(-(k as i32));
    let n_density = tf / kf * w / (1.0 + w);
    Ok(TreeSolution { x, q, l, f, n_density })
}
