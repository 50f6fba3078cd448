//! Critical fugacity of a random ensemble from the square-root singularity
//! of `⟨n⟩`, and the density `α_c` at which `|λ_c(α)| = 2^{-k}`.
//!
//! Near `λ_c` the occupation density behaves as
//! `⟨n⟩ = n_c + B (λ − λ_c)^{1/2}` with a finite `n_c`, so the offset is fit
//! together with `λ_c` and `B`. The exponent check refits the whole window
//! with the exponent free.

use serde::{Deserialize, Serialize};

use super::{popdyn_evolve, MessagePopulation, PopdynError, PopdynOutcome, PopdynSpec, RunConfig};
use crate::cavity::{fit_power_law, fit_power_law_free_exponent, Background, PowerLawFit};

/// Accepted range for the free-exponent universality check.
pub const EXPONENT_WINDOW: (f64, f64) = (0.4, 0.6);

const MIN_STABLE: usize = 4;
const MAX_WINDOW: usize = 10;
const MIN_WINDOW: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSample {
    pub lambda: f64,
    pub n: f64,
    pub n_stderr: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityFit {
    pub lambda_c: f64,
    pub n_c: f64,
    pub amplitude: f64,
    /// Exponent from a fit with the exponent left free.
    pub exponent_check: f64,
    pub exponent_lambda_c: f64,
    pub residual: f64,
    /// Stable samples used in the fit, ordered from far to near `λ_c`.
    pub samples: Vec<LambdaSample>,
    /// All stable samples of the scan.
    pub all_samples: Vec<LambdaSample>,
    pub last_stable_lambda: f64,
    pub breakdown_lambda: Option<f64>,
}

impl SingularityFit {
    pub fn exponent_in(&self, (lo, hi): (f64, f64)) -> bool {
        (lo..=hi).contains(&self.exponent_check)
    }
}

fn points(samples: &[LambdaSample]) -> Vec<(f64, f64)> {
    samples.iter().map(|s| (s.lambda, s.n)).collect()
}

fn reduced_chi2(fit: &PowerLawFit, samples: &[LambdaSample]) -> f64 {
    let se2 = samples.iter().map(|s| s.n_stderr.powi(2)).sum::<f64>() / samples.len() as f64;
    if se2 > 0.0 {
        fit.residual.powi(2) / se2
    } else {
        0.0
    }
}

/// Fits the innermost stable samples (closest to breakdown), shrinking the
/// window from 10 towards 6 points while the residual exceeds twice the
/// statistical noise.
pub fn fit_samples(
    stable: &[LambdaSample],
    breakdown: Option<f64>,
) -> Result<SingularityFit, PopdynError> {
    if stable.len() < MIN_STABLE {
        return Err(PopdynError::InsufficientData {
            needed: MIN_STABLE,
            got: stable.len(),
        });
    }
    let mut sorted = stable.to_vec();
    sorted.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    let mut start = sorted.len().saturating_sub(MAX_WINDOW);
    let mut fit;
    loop {
        let window = &sorted[start..];
        fit = fit_power_law(&points(window), 0.5, Background::Constant, breakdown)?;
        if window.len() <= MIN_WINDOW || reduced_chi2(&fit, window) <= 4.0 {
            break;
        }
        start += 1;
    }
    let window = sorted[start..].to_vec();
    let outer = &sorted[sorted.len().saturating_sub(MAX_WINDOW)..];
    let free = fit_power_law_free_exponent(&points(outer), Background::Constant, breakdown, (0.1, 1.5))?;
    Ok(SingularityFit {
        lambda_c: fit.lambda_c,
        n_c: fit.background[0],
        amplitude: fit.amplitude,
        exponent_check: free.exponent,
        exponent_lambda_c: free.lambda_c,
        residual: fit.residual,
        last_stable_lambda: sorted.last().expect("nonempty").lambda,
        samples: window,
        all_samples: sorted,
        breakdown_lambda: breakdown,
    })
}

fn sample_of(pop: &super::PopdynRun) -> LambdaSample {
    LambdaSample {
        lambda: pop.population.lambda,
        n: pop.estimates.n_marginal,
        n_stderr: pop.estimates.n_stderr,
        f: pop.estimates.f,
    }
}

fn run_at(from: &MessagePopulation, lambda: f64, cfg: &RunConfig) -> PopdynOutcome {
    let mut p = from.clone();
    p.lambda = lambda;
    popdyn_evolve(p, cfg)
}

/// Runs the grid in order, each point warm-started from the previous
/// population, and fits the stable points before the first breakdown.
pub fn estimate_lambda_c(
    spec: &PopdynSpec,
    grid: &[f64],
    cfg: &RunConfig,
    seed: u64,
) -> Result<SingularityFit, PopdynError> {
    spec.validate()?;
    let mut pop = MessagePopulation::new(*spec, grid.first().copied().unwrap_or(0.0), cfg.population, seed);
    let mut stable = Vec::new();
    let mut breakdown = None;
    for &lam in grid {
        match run_at(&pop, lam, cfg) {
            PopdynOutcome::Converged(run) => {
                stable.push(sample_of(&run));
                pop = run.population;
            }
            PopdynOutcome::Breakdown(_) => {
                breakdown = Some(lam);
                break;
            }
        }
    }
    fit_samples(&stable, breakdown)
}

/// `λ_c` of the `(t, k)` tree with `t − 1` equal to the mean excess degree.
fn regular_guess(spec: &PopdynSpec) -> f64 {
    let k = spec.k as f64;
    let excess = match spec.degree_law {
        super::DegreeLaw::Poisson => k * spec.alpha,
        super::DegreeLaw::Regular { t } => t as f64 - 1.0,
    };
    -((k - 1.0).powf(k - 1.0) / k.powf(k)) / excess.max(1e-3)
}

/// Locates breakdown with a coarse scan and bisection, then samples `⟨n⟩`
/// on a grid geometric in the distance to breakdown and fits it.
pub fn adaptive_lambda_scan(
    spec: &PopdynSpec,
    cfg: &RunConfig,
    seed: u64,
) -> Result<SingularityFit, PopdynError> {
    spec.validate()?;
    let guess = regular_guess(spec).max(-0.99);
    let step = guess / 8.0;
    let mut pop = MessagePopulation::new(*spec, step, cfg.population, seed);
    let mut coarse: Vec<MessagePopulation> = Vec::new();
    let mut bad = None;
    for j in 1..=64 {
        let lam = step * j as f64;
        if lam <= -1.0 {
            break;
        }
        match run_at(&pop, lam, cfg) {
            PopdynOutcome::Converged(run) => {
                pop = run.population;
                coarse.push(pop.clone());
            }
            PopdynOutcome::Breakdown(_) => {
                bad = Some(lam);
                break;
            }
        }
    }
    let mut bad = bad.ok_or(PopdynError::NoBreakdown(step * 64.0))?;
    let mut good = match coarse.last() {
        Some(p) => p.clone(),
        None => return Err(PopdynError::InsufficientData { needed: MIN_STABLE, got: 0 }),
    };
    for _ in 0..10 {
        let mid = 0.5 * (good.lambda + bad);
        match run_at(&good, mid, cfg) {
            PopdynOutcome::Converged(run) => good = run.population,
            PopdynOutcome::Breakdown(_) => bad = mid,
        }
    }
    let centre = 0.5 * (good.lambda + bad);
    // a regular ensemble has no sampling noise and tolerates a grid much
    // closer to breakdown
    let (far, near) = match spec.degree_law {
        super::DegreeLaw::Regular { .. } => (0.02, 2e-4),
        super::DegreeLaw::Poisson => (0.1, 2e-3),
    };
    let d_max = far * centre.abs();
    let d_min = f64::max(2.0 * (good.lambda - bad), near * centre.abs());
    let n_points = 10;
    let grid: Vec<f64> = (0..n_points)
        .map(|j| {
            let t = j as f64 / (n_points - 1) as f64;
            centre + d_max * (d_min / d_max).powf(t)
        })
        .collect();
    let mut start = coarse
        .iter()
        .rev()
        .find(|p| p.lambda >= grid[0])
        .cloned()
        .unwrap_or_else(|| MessagePopulation::new(*spec, grid[0], cfg.population, seed));
    let mut stable = Vec::new();
    let mut breakdown = Some(bad);
    for &lam in &grid {
        match run_at(&start, lam, cfg) {
            PopdynOutcome::Converged(run) => {
                stable.push(sample_of(&run));
                start = run.population;
            }
            PopdynOutcome::Breakdown(_) => {
                breakdown = Some(lam);
                break;
            }
        }
    }
    fit_samples(&stable, breakdown)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCConfig {
    pub run: RunConfig,
    /// Bisection stops when the bracket is narrower than this.
    pub alpha_tol: f64,
    pub alpha_start: f64,
    /// Continuation steps from `λ = 0` to `−2^{-k}`.
    pub path_steps: usize,
    /// Also estimate `λ_c(α)` by singularity fits at the bracket ends.
    pub curve: bool,
}

impl Default for AlphaCConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            alpha_tol: 0.01,
            alpha_start: 1.0,
            path_steps: 6,
            curve: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaC {
    pub k: usize,
    pub alpha_c: f64,
    /// `λ_c` is beyond `−2^{-k}` at the lower end and short of it at the
    /// upper end.
    pub bracket: (f64, f64),
    pub target_lambda: f64,
    /// `α_c > 1`: entangled satisfiable states for some `α > 1`.
    pub entsat: bool,
    /// Every evaluated `(α, stable at −2^{-k})`.
    pub evaluations: Vec<(f64, bool)>,
    /// `(α, fitted λ_c)` when requested.
    pub lambda_curve: Vec<(f64, f64)>,
}

fn stable_at_target(k: usize, alpha: f64, cfg: &AlphaCConfig, seed: u64) -> bool {
    let spec = PopdynSpec::poisson(k, alpha);
    let target = -(0.5f64.powi(k as i32));
    let steps = cfg.path_steps.max(1);
    let mut pop = MessagePopulation::new(spec, target / steps as f64, cfg.run.population, seed);
    for j in 1..=steps {
        match run_at(&pop, target * j as f64 / steps as f64, &cfg.run) {
            PopdynOutcome::Converged(run) => pop = run.population,
            PopdynOutcome::Breakdown(_) => return false,
        }
    }
    true
}

/// Bisects in `α` for `|λ_c(α)| = 2^{-k}`: at density `α` the fugacity
/// `−2^{-k}` is reachable from `λ = 0` exactly when `|λ_c(α)| > 2^{-k}`.
pub fn alpha_c(k: usize, cfg: &AlphaCConfig, seed: u64) -> Result<AlphaC, PopdynError> {
    if k < 5 {
        return Err(PopdynError::InvalidParameter(format!(
            "population dynamics does not converge for k = {k} < 5"
        )));
    }
    let mut evaluations = Vec::new();
    let eval = |alpha: f64, evaluations: &mut Vec<(f64, bool)>| {
        let s = stable_at_target(k, alpha, cfg, seed);
        evaluations.push((alpha, s));
        s
    };
    let factor = 1.25;
    let mut a = cfg.alpha_start;
    let (mut lo, mut hi);
    if eval(a, &mut evaluations) {
        lo = a;
        loop {
            a *= factor;
            if a > 0.573 * 2f64.powi(k as i32) {
                return Err(PopdynError::NonMonotone(format!(
                    "still stable at alpha = {a}, above the known upper bound"
                )));
            }
            if !eval(a, &mut evaluations) {
                hi = a;
                break;
            }
            lo = a;
        }
    } else {
        hi = a;
        loop {
            a /= factor;
            if a < 1e-3 {
                return Err(PopdynError::NonMonotone(format!("unstable down to alpha = {a}")));
            }
            if eval(a, &mut evaluations) {
                lo = a;
                break;
            }
            hi = a;
        }
    }
    while hi - lo > cfg.alpha_tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut evaluations) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let max_stable = evaluations.iter().filter(|e| e.1).map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
    let min_unstable = evaluations.iter().filter(|e| !e.1).map(|e| e.0).fold(f64::INFINITY, f64::min);
    if max_stable >= min_unstable {
        return Err(PopdynError::NonMonotone(format!(
            "stable at alpha = {max_stable} but unstable at alpha = {min_unstable}"
        )));
    }
    let mut lambda_curve = Vec::new();
    if cfg.curve {
        for alpha in [lo, hi] {
            let fit = adaptive_lambda_scan(&PopdynSpec::poisson(k, alpha), &cfg.run, seed)?;
            lambda_curve.push((alpha, fit.lambda_c));
        }
    }
    let alpha_c = 0.5 * (lo + hi);
    Ok(AlphaC {
        k,
        alpha_c,
        bracket: (lo, hi),
        target_lambda: -(0.5f64.powi(k as i32)),
        entsat: alpha_c > 1.0,
        evaluations,
        lambda_curve,
    })
}
