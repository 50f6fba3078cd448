//! Least-squares fits of a power-law singularity
//! `y = background(λ) + A (λ − λ_c)^φ` to samples on the `λ > λ_c` side.
//!
//! For fixed `λ_c` the model is linear in the background coefficients and
//! `A`, so those are eliminated exactly and only `λ_c` is searched
//! (variable projection).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CavityError;

/// Hard-core singularity exponents: one dimension, two dimensions, and
/// dimension six and above (mean field, including trees).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalExponent {
    OneDimensional,
    TwoDimensional,
    MeanField,
}

impl CriticalExponent {
    /// `(numerator, denominator)`.
    pub fn as_ratio(self) -> (u32, u32) {
        match self {
            Self::OneDimensional => (1, 2),
            Self::TwoDimensional => (5, 6),
            Self::MeanField => (3, 2),
        }
    }

    pub fn value(self) -> f64 {
        let (n, d) = self.as_ratio();
        n as f64 / d as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    Constant,
    Linear,
}

impl Background {
    fn n_params(self) -> usize {
        match self {
            Self::Constant => 1,
            Self::Linear => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub lambda_c: f64,
    pub exponent: f64,
    pub amplitude: f64,
    /// Background polynomial coefficients in `λ`, constant first.
    pub background: Vec<f64>,
    /// Root-mean-square residual.
    pub residual: f64,
}

struct Scaled {
    lam: Vec<f64>,
    y: Vec<f64>,
    origin: f64,
    span: f64,
}

fn solve_linear(s: &Scaled, u: f64, phi: f64, bg: Background) -> Option<(DVector<f64>, f64, f64)> {
    let n = s.lam.len();
    let p = bg.n_params() + 1;
    let a = DMatrix::from_fn(n, p, |r, c| {
        let x = s.lam[r];
        match (c, bg) {
            (0, _) => 1.0,
            (1, Background::Linear) => x,
            _ => (x + u).powf(phi),
        }
    });
    let b = DVector::from_column_slice(&s.y);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    let coef = svd.solve(&b, 1e-300).ok()?;
    let r = &a * &coef - b;
    let rms = (r.norm_squared() / n as f64).sqrt();
    Some((coef, rms, cond))
}

/// Fits `y = background + A (λ − λ_c)^φ` with `φ` fixed. The search for
/// `λ_c` runs over `λ_c < min λ`; `guess`, if below the samples, widens the
/// search range to include it.
pub fn fit_power_law(
    samples: &[(f64, f64)],
    phi: f64,
    background: Background,
    guess: Option<f64>,
) -> Result<PowerLawFit, CavityError> {
    let needed = background.n_params() + 2;
    if samples.len() < needed {
        return Err(CavityError::InsufficientSamples {
            needed,
            got: samples.len(),
        });
    }
    if samples.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(CavityError::IllConditioned("non-finite sample".into()));
    }
    let min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let max = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if !(span > 0.0) {
        return Err(CavityError::IllConditioned("all samples at the same lambda".into()));
    }
    let scaled = Scaled {
        lam: samples.iter().map(|s| (s.0 - min) / span).collect(),
        y: samples.iter().map(|s| s.1).collect(),
        origin: min,
        span,
    };
    let mut u_hi: f64 = 20.0;
    if let Some(g) = guess {
        if g < min {
            u_hi = u_hi.max(4.0 * (min - g) / span);
        }
    }
    let u_lo: f64 = 1e-12;
    let cost = |log_u: f64| {
        solve_linear(&scaled, log_u.exp(), phi, background)
            .map(|(_, rms, _)| rms)
            .unwrap_or(f64::INFINITY)
    };
    let (a, b) = (u_lo.ln(), u_hi.ln());
    const GRID: usize = 400;
    let grid: Vec<f64> = (0..=GRID).map(|j| a + (b - a) * j as f64 / GRID as f64).collect();
    let costs: Vec<f64> = grid.iter().map(|&x| cost(x)).collect();
    let best = (0..=GRID)
        .min_by(|&i, &j| costs[i].total_cmp(&costs[j]))
        .expect("nonempty grid");
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(GRID)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut c1, mut c2) = (cost(x1), cost(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if c1 <= c2 {
            hi = x2;
            x2 = x1;
            c2 = c1;
            x1 = hi - ratio * (hi - lo);
            c1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            c1 = c2;
            x2 = lo + ratio * (hi - lo);
            c2 = cost(x2);
        }
    }
    let candidates = [(x1, c1), (x2, c2), (grid[best], costs[best])];
    let (log_u, _) = candidates
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("nonempty");
    let u = log_u.exp();
    let (coef, rms, cond) = solve_linear(&scaled, u, phi, background)
        .ok_or_else(|| CavityError::IllConditioned("least-squares solve failed".into()))?;
    if !(cond < 1e13) {
        return Err(CavityError::IllConditioned(format!(
            "design matrix condition number {cond:.3e}"
        )));
    }
    let p = coef.len();
    let amplitude = coef[p - 1] * scaled.span.powf(-phi);
    let background_coef = match background {
        Background::Constant => vec![coef[0]],
        Background::Linear => {
            let slope = coef[1] / scaled.span;
            vec![coef[0] - slope * scaled.origin, slope]
        }
    };
    Ok(PowerLawFit {
        lambda_c: scaled.origin - u * scaled.span,
        exponent: phi,
        amplitude,
        background: background_coef,
        residual: rms,
    })
}

/// Fit with one of the fixed exponents and a linear background; at least
/// six samples are required.
pub fn fit_singularity(
    samples: &[(f64, f64)],
    exponent: CriticalExponent,
    lambda_c_guess: f64,
) -> Result<PowerLawFit, CavityError> {
    if samples.len() < 6 {
        return Err(CavityError::InsufficientSamples {
            needed: 6,
            got: samples.len(),
        });
    }
    fit_power_law(samples, exponent.value(), Background::Linear, Some(lambda_c_guess))
}

/// Fit with the exponent as a free parameter in `[phi_min, phi_max]`.
pub fn fit_power_law_free_exponent(
    samples: &[(f64, f64)],
    background: Background,
    guess: Option<f64>,
    (phi_min, phi_max): (f64, f64),
) -> Result<PowerLawFit, CavityError> {
    let cost = |phi: f64| {
        fit_power_law(samples, phi, background, guess)
            .map(|f| f.residual)
            .unwrap_or(f64::INFINITY)
    };
    const GRID: usize = 60;
    let grid: Vec<f64> = (0..=GRID)
        .map(|j| phi_min + (phi_max - phi_min) * j as f64 / GRID as f64)
        .collect();
    let costs: Vec<f64> = grid.iter().map(|&p| cost(p)).collect();
    let best = (0..=GRID)
        .min_by(|&i, &j| costs[i].total_cmp(&costs[j]))
        .expect("nonempty grid");
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(GRID)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = hi - ratio * (hi - lo);
        let x2 = lo + ratio * (hi - lo);
        if cost(x1) <= cost(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let phi = 0.5 * (lo + hi);
    let phi = if cost(phi) <= costs[best] { phi } else { grid[best] };
    fit_power_law(samples, phi, background, guess)
}
