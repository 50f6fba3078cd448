//! Population dynamics for the hard-core gas on random k-uniform
//! hypergraph ensembles.
//!
//! The distributions of `q` and `l` messages over the infinite random graph
//! are represented by pools of `P` samples each and updated with the BP
//! equations until stationary.
//!
//! Random streams: sweep `g`, phase `φ` (0 = q update, 1 = l update,
//! 2 = measurement) uses a ChaCha8 key derived from `(seed, g, φ)`, and slot
//! `s` draws from stream `s` of that key. Results therefore do not depend on
//! the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::CavityError;

mod threshold;

pub use threshold::{
    adaptive_lambda_scan, alpha_c, estimate_lambda_c, fit_samples, AlphaC, AlphaCConfig, LambdaSample,
    SingularityFit, EXPONENT_WINDOW,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PopdynError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least {needed} stable grid points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("lambda_c(alpha) is not monotone: {0}")]
    NonMonotone(String),
    #[error("no breakdown found down to lambda = {0}")]
    NoBreakdown(f64),
    #[error(transparent)]
    Fit(#[from] CavityError),
}

/// Law of the number of hyperedges at a site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DegreeLaw {
    /// Poisson with mean `k α`; the excess degree has the same law.
    Poisson,
    /// Every site in exactly `t` hyperedges (excess degree `t − 1`).
    Regular { t: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopdynSpec {
    pub k: usize,
    /// Hyperedges per site. For [`DegreeLaw::Regular`] this is `t / k`.
    pub alpha: f64,
    pub degree_law: DegreeLaw,
}

impl PopdynSpec {
    pub fn poisson(k: usize, alpha: f64) -> Self {
        Self {
            k,
            alpha,
            degree_law: DegreeLaw::Poisson,
        }
    }

    pub fn regular(t: usize, k: usize) -> Self {
        Self {
            k,
            alpha: t as f64 / k as f64,
            degree_law: DegreeLaw::Regular { t },
        }
    }

    pub fn validate(&self) -> Result<(), PopdynError> {
        if self.k < 2 {
            return Err(PopdynError::InvalidParameter(format!("k = {} must be >= 2", self.k)));
        }
        match self.degree_law {
            DegreeLaw::Poisson if !(self.alpha > 0.0 && self.alpha.is_finite()) => Err(
                PopdynError::InvalidParameter(format!("alpha = {} must be positive", self.alpha)),
            ),
            DegreeLaw::Regular { t } if t < 1 => {
                Err(PopdynError::InvalidParameter("regular degree t must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    fn mean_degree(&self) -> f64 {
        match self.degree_law {
            DegreeLaw::Poisson => self.k as f64 * self.alpha,
            DegreeLaw::Regular { t } => t as f64,
        }
    }

    /// Degrees above this are counted as rare high-degree sites.
    pub fn high_degree_cutoff(&self) -> usize {
        1usize.checked_shl(self.k as u32).unwrap_or(usize::MAX)
    }
}

struct DegreeSampler {
    poisson: Option<Poisson<f64>>,
    fixed: usize,
}

impl DegreeSampler {
    fn new(spec: &PopdynSpec, excess: bool) -> Self {
        match spec.degree_law {
            DegreeLaw::Poisson => {
                let mean = spec.mean_degree();
                Self {
                    poisson: (mean > 0.0).then(|| Poisson::new(mean).expect("positive mean")),
                    fixed: 0,
                }
            }
            DegreeLaw::Regular { t } => Self {
                poisson: None,
                fixed: if excess { t - 1 } else { t },
            },
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        match &self.poisson {
            Some(p) => p.sample(rng) as usize,
            None => self.fixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessagePopulation {
    pub spec: PopdynSpec,
    pub lambda: f64,
    pub q: Vec<f64>,
    pub l: Vec<f64>,
    pub seed: u64,
    /// Number of sweeps applied so far; selects the random streams.
    pub generation: u64,
}

impl MessagePopulation {
    /// Pools at the isolated-edge values `λ / (1 + λ)` (zero at `λ = 0`).
    pub fn new(spec: PopdynSpec, lambda: f64, size: usize, seed: u64) -> Self {
        let v = lambda / (1.0 + lambda);
        Self {
            spec,
            lambda,
            q: vec![v; size],
            l: vec![v; size],
            seed,
            generation: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.q.len()
    }

    /// `(mean q, mean q², mean l, mean l²)`.
    pub fn moments(&self) -> [f64; 4] {
        self.moments_with_noise().0
    }

    /// Moments together with their sampling noise `sqrt(Var / P)`, the
    /// spread expected from resampling alone.
    fn moments_with_noise(&self) -> ([f64; 4], [f64; 4]) {
        let n = self.size().max(1) as f64;
        let stats = |v: &[f64]| {
            let m = |p: i32| v.iter().map(|x| x.powi(p)).sum::<f64>() / n;
            let (m1, m2, m4) = (m(1), m(2), m(4));
            let s1 = ((m2 - m1 * m1).max(0.0) / n).sqrt();
            let s2 = ((m4 - m2 * m2).max(0.0) / n).sqrt();
            ([m1, m2], [s1, s2])
        };
        let (mq, sq) = stats(&self.q);
        let (ml, sl) = stats(&self.l);
        ([mq[0], mq[1], ml[0], ml[1]], [sq[0], sq[1], sl[0], sl[1]])
    }
}

fn phase_key(seed: u64, generation: u64, phase: u64) -> [u8; 32] {
    let mix = seed
        ^ generation.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ phase.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    ChaCha8Rng::seed_from_u64(mix).get_seed()
}

fn slot_rng(key: [u8; 32], slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(slot as u64);
    rng
}

/// Redraws allowed per slot before the old value is kept.
const MAX_REDRAWS: u32 = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub updates: u64,
    pub rejections: u64,
    /// Slots that exhausted their redraws and kept the old value.
    pub failures: u64,
    pub high_degree: u64,
}

impl StepStats {
    pub fn rejection_fraction(&self) -> f64 {
        self.rejections as f64 / (self.updates + self.rejections).max(1) as f64
    }

    fn add(self, o: Self) -> Self {
        Self {
            updates: self.updates + o.updates,
            rejections: self.rejections + o.rejections,
            failures: self.failures + o.failures,
            high_degree: self.high_degree + o.high_degree,
        }
    }
}

fn update_pool(
    size: usize,
    key: [u8; 32],
    old: &[f64],
    draw: impl Fn(&mut ChaCha8Rng, &mut StepStats) -> Option<f64> + Sync,
) -> (Vec<f64>, StepStats) {
    let out: Vec<(f64, StepStats)> = (0..size)
        .into_par_iter()
        .map(|s| {
            let mut rng = slot_rng(key, s);
            let mut stats = StepStats::default();
            for _ in 0..MAX_REDRAWS {
                if let Some(v) = draw(&mut rng, &mut stats) {
                    stats.updates += 1;
                    return (v, stats);
                }
                stats.rejections += 1;
            }
            stats.failures += 1;
            (old[s], stats)
        })
        .collect();
    let stats = out.iter().fold(StepStats::default(), |acc, &(_, s)| acc.add(s));
    (out.into_iter().map(|(v, _)| v).collect(), stats)
}

/// One sweep: every `q` slot is redrawn from `l` messages of a random
/// excess-degree cavity, then every `l` slot from `k − 1` of the new `q`
/// messages. Singular draws, and draws with a non-positive cavity
/// partition function, are rejected and redrawn.
pub fn popdyn_step(pop: &MessagePopulation) -> (MessagePopulation, StepStats) {
    let lambda = pop.lambda;
    let size = pop.size();
    let mut next = pop.clone();
    next.generation += 1;
    if lambda == 0.0 {
        next.q.iter_mut().for_each(|v| *v = 0.0);
        next.l.iter_mut().for_each(|v| *v = 0.0);
        return (next, StepStats::default());
    }
    let k = pop.spec.k;
    let excess = DegreeSampler::new(&pop.spec, true);
    let cutoff = pop.spec.high_degree_cutoff();
    let key_q = phase_key(pop.seed, pop.generation, 0);
    let (q, sq) = update_pool(size, key_q, &pop.q, |rng, stats| {
        let d = excess.sample(rng);
        if d + 1 > cutoff {
            stats.high_degree += 1;
        }
        let mut s = 0.0;
        for _ in 0..d {
            let l = pop.l[rng.random_range(0..size)];
            if l == 1.0 {
                return None;
            }
            s += l / (1.0 - l);
        }
        // a non-positive cavity partition function marks a local region
        // already past its own threshold
        let den = lambda + 1.0 + s;
        if !(den > 0.0) {
            return None;
        }
        let v = lambda / den;
        v.is_finite().then_some(v)
    });
    let key_l = phase_key(pop.seed, pop.generation, 1);
    let (l, sl) = update_pool(size, key_l, &pop.l, |rng, _| {
        let mut prod = 1.0;
        for _ in 1..k {
            let qb = q[rng.random_range(0..size)];
            if qb == 0.0 {
                return None;
            }
            prod *= lambda / qb - lambda;
        }
        let den = lambda + prod;
        if !(den > 0.0) {
            return None;
        }
        let v = lambda / den;
        v.is_finite().then_some(v)
    });
    next.q = q;
    next.l = l;
    (next, sq.add(sl))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub population: usize,
    pub min_sweeps: usize,
    pub max_sweeps: usize,
    /// Moments are compared between consecutive windows of this many sweeps.
    pub window: usize,
    pub rel_tol: f64,
    /// Sweeps averaged for the estimates after convergence.
    pub measure_sweeps: usize,
    /// Rejection fraction in a sweep above which the run breaks down.
    pub max_rejection: f64,
    /// Step in `λ` for the derivative estimate of `⟨n⟩`; `None` skips it.
    pub derivative_step: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            population: 100_000,
            min_sweeps: 200,
            max_sweeps: 2000,
            window: 25,
            rel_tol: 1e-4,
            measure_sweeps: 20,
            max_rejection: 1e-2,
            derivative_step: None,
        }
    }
}

impl RunConfig {
    /// Reduced population for quick runs, with proportionally wider error
    /// bars.
    pub fn desk() -> Self {
        Self {
            population: 10_000,
            min_sweeps: 100,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    /// Disorder-averaged free energy per site.
    pub f: f64,
    pub f_stderr: f64,
    /// Occupation density from edge marginals.
    pub n_marginal: f64,
    pub n_stderr: f64,
    /// `λ ∂f/∂λ` by a symmetric difference, when requested.
    pub n_derivative: Option<f64>,
    pub n_derivative_stderr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub population: usize,
    pub sweeps: usize,
    pub rejections: u64,
    pub updates: u64,
    pub failures: u64,
    pub high_degree_fraction: f64,
    pub measurement_rejections: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopdynRun {
    pub population: MessagePopulation,
    pub estimates: Estimates,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum PopdynBreakdownReason {
    Rejections { fraction: f64 },
    Divergence,
    NoConvergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopdynBreakdown {
    pub lambda: f64,
    pub sweeps: usize,
    pub reason: PopdynBreakdownReason,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PopdynOutcome {
    Converged(Box<PopdynRun>),
    Breakdown(PopdynBreakdown),
}

impl PopdynOutcome {
    pub fn converged(&self) -> Option<&PopdynRun> {
        match self {
            Self::Converged(r) => Some(r),
            Self::Breakdown(_) => None,
        }
    }

    pub fn into_converged(self) -> Option<PopdynRun> {
        match self {
            Self::Converged(r) => Some(*r),
            Self::Breakdown(_) => None,
        }
    }
}

/// Stationarity over the last two windows: each moment fluctuates no more
/// than resampling noise allows, and the window means agree to `rel_tol`
/// or to within that noise.
fn window_stable(history: &[([f64; 4], [f64; 4])], window: usize, rel_tol: f64) -> bool {
    if history.len() < 2 * window {
        return false;
    }
    let n = history.len();
    let all = &history[n - 2 * window..];
    (0..4).all(|m| {
        let mean = |w: &[([f64; 4], [f64; 4])]| w.iter().map(|h| h.0[m]).sum::<f64>() / w.len() as f64;
        let (a, b) = (mean(&all[..window]), mean(&all[window..]));
        let mu = (a + b) / 2.0;
        let spread = (all.iter().map(|h| (h.0[m] - mu).powi(2)).sum::<f64>() / all.len() as f64).sqrt();
        let noise = all.iter().map(|h| h.1[m]).sum::<f64>() / all.len() as f64;
        let floor = 1e-12 * mu.abs().max(1e-300);
        spread <= NOISE_FACTOR * noise + floor
            && (a - b).abs() <= f64::max(rel_tol * mu.abs(), NOISE_FACTOR * noise) + floor
    })
}

/// Allowed ratio of observed moment fluctuations to pure resampling noise.
/// Pools carry over between sweeps, so stationary fluctuations exceed the
/// single-sweep noise by a correlation factor.
const NOISE_FACTOR: f64 = 10.0;

/// Runs sweeps from the given population until the first two moments of
/// both pools are stationary, then measures `f` and `⟨n⟩`.
pub fn popdyn_evolve(mut pop: MessagePopulation, cfg: &RunConfig) -> PopdynOutcome {
    let mut history = Vec::with_capacity(cfg.max_sweeps);
    let mut total = StepStats::default();
    let provenance = |pop: &MessagePopulation, total: &StepStats, sweeps: usize| Provenance {
        seed: pop.seed,
        population: pop.size(),
        sweeps,
        rejections: total.rejections,
        updates: total.updates,
        failures: total.failures,
        high_degree_fraction: total.high_degree as f64 / (total.updates / 2).max(1) as f64,
        measurement_rejections: 0,
    };
    let breakdown = |pop: &MessagePopulation, total: &StepStats, sweeps, reason| {
        PopdynOutcome::Breakdown(PopdynBreakdown {
            lambda: pop.lambda,
            sweeps,
            reason,
            provenance: provenance(pop, total, sweeps),
        })
    };
    let mut sweeps = 0;
    loop {
        if sweeps >= cfg.max_sweeps {
            return breakdown(&pop, &total, sweeps, PopdynBreakdownReason::NoConvergence);
        }
        let (next, stats) = popdyn_step(&pop);
        pop = next;
        sweeps += 1;
        total = total.add(stats);
        let frac = stats.rejection_fraction();
        if frac > cfg.max_rejection || stats.failures > 0 {
            return breakdown(
                &pop,
                &total,
                sweeps,
                PopdynBreakdownReason::Rejections { fraction: frac },
            );
        }
        let (m, noise) = pop.moments_with_noise();
        if m.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return breakdown(&pop, &total, sweeps, PopdynBreakdownReason::Divergence);
        }
        history.push((m, noise));
        if sweeps >= cfg.min_sweeps && window_stable(&history, cfg.window, cfg.rel_tol) {
            break;
        }
    }
    let (pop, mut estimates, meas_rej) = measure(pop, cfg.measure_sweeps, &mut total);
    if let Some(h) = cfg.derivative_step {
        let side = |lam: f64| {
            let mut p = pop.clone();
            p.lambda = lam;
            let quick = RunConfig {
                derivative_step: None,
                ..*cfg
            };
            popdyn_evolve(p, &quick).into_converged().map(|r| r.estimates)
        };
        let lam = pop.lambda;
        if let (Some(up), Some(down)) = (side(lam + h), side(lam - h)) {
            estimates.n_derivative = Some(lam * (up.f - down.f) / (2.0 * h));
            let se = (up.f_stderr.powi(2) + down.f_stderr.powi(2)).sqrt();
            estimates.n_derivative_stderr = Some(lam.abs() * se / (2.0 * h));
        }
    }
    let mut prov = provenance(&pop, &total, sweeps);
    prov.measurement_rejections = meas_rej;
    PopdynOutcome::Converged(Box::new(PopdynRun {
        population: pop,
        estimates,
        provenance: prov,
    }))
}

/// Fresh run at `λ` from isolated-edge pools.
pub fn popdyn_run(spec: &PopdynSpec, lambda: f64, cfg: &RunConfig, seed: u64) -> Result<PopdynOutcome, PopdynError> {
    spec.validate()?;
    if cfg.population < 1000 {
        return Err(PopdynError::InvalidParameter(format!(
            "population {} is below the minimum of 1000",
            cfg.population
        )));
    }
    if !(lambda > -1.0 && lambda.is_finite()) {
        return Err(PopdynError::InvalidParameter(format!("lambda = {lambda} must exceed -1")));
    }
    let pop = MessagePopulation::new(*spec, lambda, cfg.population, seed);
    Ok(popdyn_evolve(pop, cfg))
}

struct Accumulator {
    sum: f64,
    sum_sq: f64,
    n: u64,
}

impl Accumulator {
    fn new() -> Self {
        Self { sum: 0.0, sum_sq: 0.0, n: 0 }
    }

    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.n += 1;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n.max(1) as f64
    }

    fn stderr(&self) -> f64 {
        let n = self.n.max(2) as f64;
        let var = (self.sum_sq / n - self.mean().powi(2)).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Samples the three Bethe terms and the edge marginal over random local
/// neighbourhoods while continuing to sweep.
fn measure(mut pop: MessagePopulation, sweeps: usize, total: &mut StepStats) -> (MessagePopulation, Estimates, u64) {
    let lambda = pop.lambda;
    let spec = pop.spec;
    let k = spec.k;
    let alpha = spec.alpha;
    let mut fa = Accumulator::new();
    let mut fi = Accumulator::new();
    let mut fai = Accumulator::new();
    let mut ni = Accumulator::new();
    let mut rejected = 0u64;
    if lambda == 0.0 {
        let zero = Estimates {
            f: 0.0,
            f_stderr: 0.0,
            n_marginal: 0.0,
            n_stderr: 0.0,
            n_derivative: None,
            n_derivative_stderr: None,
        };
        return (pop, zero, 0);
    }
    let degree = DegreeSampler::new(&spec, false);
    for _ in 0..sweeps.max(1) {
        let size = pop.size();
        let key = phase_key(pop.seed, pop.generation, 2);
        let terms: Vec<Option<[f64; 4]>> = (0..size)
            .into_par_iter()
            .map(|s| {
                let mut rng = slot_rng(key, s);
                let d = degree.sample(&mut rng);
                let ls: Vec<f64> = (0..d).map(|_| pop.l[rng.random_range(0..size)]).collect();
                let empty: f64 = ls.iter().map(|l| 1.0 - l).product();
                let one: f64 = (0..d)
                    .map(|j| {
                        ls[j] * ls
                            .iter()
                            .enumerate()
                            .filter(|&(m, _)| m != j)
                            .map(|(_, l)| 1.0 - l)
                            .product::<f64>()
                    })
                    .sum();
                let site = empty + one;
                let qs: Vec<f64> = (0..k).map(|_| pop.q[rng.random_range(0..size)]).collect();
                let e_empty: f64 = qs.iter().map(|q| 1.0 - q).product();
                let e_occ = lambda * qs.iter().map(|q| q / lambda).product::<f64>();
                let edge = e_empty + e_occ;
                let q = pop.q[rng.random_range(0..size)];
                let l = pop.l[rng.random_range(0..size)];
                let link = (1.0 - l) * (1.0 - q) + l * q / lambda;
                (site > 0.0 && edge > 0.0 && link > 0.0)
                    .then(|| [site.ln(), edge.ln(), link.ln(), e_occ / edge])
            })
            .collect();
        for t in terms {
            match t {
                Some([a, i, ai, n]) => {
                    fa.push(a);
                    fi.push(i);
                    fai.push(ai);
                    ni.push(n);
                }
                None => rejected += 1,
            }
        }
        let (next, stats) = popdyn_step(&pop);
        *total = total.add(stats);
        pop = next;
    }
    let kf = k as f64;
    let f = fa.mean() + alpha * fi.mean() - kf * alpha * fai.mean();
    let f_stderr = (fa.stderr().powi(2) + (alpha * fi.stderr()).powi(2) + (kf * alpha * fai.stderr()).powi(2)).sqrt();
    let estimates = Estimates {
        f,
        f_stderr,
        n_marginal: alpha * ni.mean(),
        n_stderr: alpha * ni.stderr(),
        n_derivative: None,
        n_derivative_stderr: None,
    };
    (pop, estimates, rejected)
}
