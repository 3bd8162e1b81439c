//! Monte Carlo estimates of cover and hitting times, and the trajectory
//! coupling between k walks and the auxiliary chain.
//!
//! Trial `i` draws from its own ChaCha stream (`seed`, stream `i`), so results
//! do not depend on how trials are scheduled across threads, and a trial that
//! completes under some step cap completes identically under any larger cap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::aux::{aux_transition_probability, multiple_kernel, AuxState, WalkVector};
use crate::scalar::Scalar;
use crate::state_set::{StateId, StateSet};
use crate::{MarkovChain, Rational};

const TRIALS_PER_CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("trials and max_steps must be positive")]
    InvalidConfig,
    #[error("all {trials} trials reached the step cap of {max_steps}")]
    AllTrialsTruncated { trials: u64, max_steps: u64 },
    #[error("target set is empty")]
    EmptyTargetSet,
    #[error("walk start is invalid for this chain")]
    InvalidStart,
    #[error("internal: coupled step {step} has mismatched probabilities")]
    CouplingMismatch { step: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub max_steps: u64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64, max_steps: u64) -> Result<Self, SimError> {
        if trials == 0 || max_steps == 0 {
            return Err(SimError::InvalidConfig);
        }
        Ok(Self {
            trials,
            seed,
            max_steps,
        })
    }
}

/// `samples` counts every trial; the mean and standard error are over the
/// `samples - truncated` trials that finished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSummary {
    pub samples: u64,
    pub mean: f64,
    pub std_error: f64,
    pub truncated: u64,
}

impl SimSummary {
    pub fn completed(&self) -> u64 {
        self.samples - self.truncated
    }

    /// Distance from `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.mean - value).abs();
        if self.std_error == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / self.std_error
        }
    }
}

/// Mergeable running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    truncated: u64,
}

impl Moments {
    fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        let count = self.count + other.count;
        if count == 0 {
            return Moments {
                truncated: self.truncated + other.truncated,
                ..Moments::default()
            };
        }
        let delta = other.mean - self.mean;
        let weight = other.count as f64 / count as f64;
        Moments {
            count,
            mean: self.mean + delta * weight,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * weight,
            truncated: self.truncated + other.truncated,
        }
    }
}

/// Cumulative distribution of each row, for inverse-transform sampling.
#[derive(Debug, Clone)]
pub struct Sampler {
    rows: Vec<(Vec<f64>, Vec<StateId>)>,
}

impl Sampler {
    pub fn new(chain: &MarkovChain) -> Self {
        let rows = chain
            .state_ids()
            .map(|x| {
                let mut acc = Rational::from_integer(0.into());
                let mut cdf = Vec::new();
                let mut dest = Vec::new();
                for (y, p) in chain.row(x) {
                    acc += p;
                    cdf.push(acc.to_f64_lossy());
                    dest.push(*y);
                }
                (cdf, dest)
            })
            .collect();
        Self { rows }
    }

    pub fn step<R: Rng>(&self, x: StateId, rng: &mut R) -> StateId {
        let (cdf, dest) = &self.rows[x.0];
        let u: f64 = rng.random();
        let i = cdf.partition_point(|&c| c <= u).min(dest.len() - 1);
        dest[i]
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs every trial and reduces chunk summaries in a fixed order.
fn run_trials<F>(cfg: &SimConfig, trial: F) -> Result<SimSummary, SimError>
where
    F: Fn(&mut ChaCha8Rng) -> Option<u64> + Sync,
{
    let chunks = cfg.trials.div_ceil(TRIALS_PER_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            let end = ((c + 1) * TRIALS_PER_CHUNK).min(cfg.trials);
            for i in c * TRIALS_PER_CHUNK..end {
                match trial(&mut trial_rng(cfg.seed, i)) {
                    Some(t) => m.push(t as f64),
                    None => m.truncated += 1,
                }
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    if total.count == 0 {
        return Err(SimError::AllTrialsTruncated {
            trials: cfg.trials,
            max_steps: cfg.max_steps,
        });
    }
    let std_error = if total.count < 2 {
        0.0
    } else {
        (total.m2 / (total.count - 1) as f64 / total.count as f64).sqrt()
    };
    Ok(SimSummary {
        samples: cfg.trials,
        mean: total.mean,
        std_error,
        truncated: total.truncated,
    })
}

fn check_start(chain: &MarkovChain, k: usize, start: &WalkVector) -> Result<(), SimError> {
    if k == 0 || start.k() != k || start.positions().iter().any(|x| x.0 >= chain.len()) {
        return Err(SimError::InvalidStart);
    }
    Ok(())
}

/// Estimates the expected time for `k` walks from `start` to visit every state.
pub fn simulate_cover(
    chain: &MarkovChain,
    k: usize,
    start: &WalkVector,
    cfg: &SimConfig,
) -> Result<SimSummary, SimError> {
    check_start(chain, k, start)?;
    let sampler = Sampler::new(chain);
    let n = chain.len();
    run_trials(cfg, |rng| {
        let mut visited = vec![false; n];
        let mut remaining = n;
        let mut positions = start.positions().to_vec();
        for x in &positions {
            if !std::mem::replace(&mut visited[x.0], true) {
                remaining -= 1;
            }
        }
        let mut t = 0;
        while remaining > 0 {
            if t == cfg.max_steps {
                return None;
            }
            for x in positions.iter_mut() {
                *x = sampler.step(*x, rng);
                if !std::mem::replace(&mut visited[x.0], true) {
                    remaining -= 1;
                }
            }
            t += 1;
        }
        Some(t)
    })
}

/// Estimates `E_start[τ_S]`.
pub fn simulate_hitting(
    chain: &MarkovChain,
    start: StateId,
    targets: &StateSet,
    cfg: &SimConfig,
) -> Result<SimSummary, SimError> {
    if targets.is_empty() {
        return Err(SimError::EmptyTargetSet);
    }
    if start.0 >= chain.len() || targets.width() != chain.len() {
        return Err(SimError::InvalidStart);
    }
    let sampler = Sampler::new(chain);
    run_trials(cfg, |rng| {
        let mut x = start;
        let mut t = 0;
        while !targets.contains(x) {
            if t == cfg.max_steps {
                return None;
            }
            x = sampler.step(x, rng);
            t += 1;
        }
        Some(t)
    })
}

/// One k-walk trajectory and its image in the auxiliary chain.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    /// Walk positions at times `0..=horizon`.
    pub walks: Vec<WalkVector>,
    /// `(walks_t, union of all positions up to t)`.
    pub aux: Vec<AuxState>,
    /// Auxiliary transition probability of each step.
    pub step_probabilities: Vec<Rational>,
}

impl CoupledRun {
    /// First time the walks have jointly visited every state.
    pub fn cover_time(&self) -> Option<usize> {
        let width = self.aux[0].visited.width();
        let mut seen = StateSet::empty(width);
        self.walks.iter().position(|w| {
            for &x in w.positions() {
                seen.insert(x);
            }
            seen.is_full()
        })
    }

    /// First time the auxiliary trajectory is in the covering layer.
    pub fn aux_hitting_time(&self) -> Option<usize> {
        self.aux.iter().position(AuxState::is_covering)
    }

    /// The auxiliary trajectory with the visited sets dropped.
    pub fn forget_visited(&self) -> Vec<WalkVector> {
        self.aux.iter().map(|s| s.walks.clone()).collect()
    }
}

/// Samples `horizon` steps of `k` walks and maps them through the coupling,
/// checking each auxiliary step against the product of the walk steps.
pub fn coupled_trajectories(
    chain: &MarkovChain,
    k: usize,
    start: &WalkVector,
    seed: u64,
    horizon: usize,
) -> Result<CoupledRun, SimError> {
    check_start(chain, k, start)?;
    let sampler = Sampler::new(chain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut walks = vec![start.clone()];
    let mut aux = vec![AuxState::initial(start.clone(), chain.len())];
    let mut step_probabilities = Vec::with_capacity(horizon);
    for step in 0..horizon {
        let current = walks.last().expect("nonempty");
        let mut per_walk = Rational::from_integer(1.into());
        let next: Vec<StateId> = current
            .positions()
            .iter()
            .map(|&x| {
                let y = sampler.step(x, &mut rng);
                per_walk *= chain.probability(x, y);
                y
            })
            .collect();
        let next = WalkVector::new(next).expect("k >= 1");
        let image = aux[step].advance(next.clone());
        let q = aux_transition_probability(chain, &aux[step], &image);
        if q != per_walk
            || q != multiple_kernel(chain, current, &next)
            || q == Rational::from_integer(0.into())
        {
            return Err(SimError::CouplingMismatch { step });
        }
        step_probabilities.push(q);
        walks.push(next);
        aux.push(image);
    }
    Ok(CoupledRun {
        walks,
        aux,
        step_probabilities,
    })
}
