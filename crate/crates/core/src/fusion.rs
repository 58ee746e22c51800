//! Posterior over component counts, sequential selection (SDMS) and Fixed Share.
//!
//! Per-k slices are positional: element `i` belongs to `k = k_min + i`.

use serde::{Deserialize, Serialize};

use crate::complexity::ModelPosterior;
use crate::error::{Error, Result};

/// Temperature of the model posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    /// `beta = 1 / sqrt(N)`.
    InvSqrtN,
    Fixed(f64),
}

impl BetaMode {
    pub fn value(self, n: usize) -> f64 {
        match self {
            BetaMode::InvSqrtN => 1.0 / (n as f64).sqrt(),
            BetaMode::Fixed(b) => b,
        }
    }
}

impl std::str::FromStr for BetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inv_sqrt_n" => Ok(BetaMode::InvSqrtN),
            other => match other.parse::<f64>() {
                Ok(b) if b >= 0.0 && b.is_finite() => Ok(BetaMode::Fixed(b)),
                _ => Err(Error::Config(format!("beta must be 'inv_sqrt_n' or a non-negative number, got '{other}'"))),
            },
        }
    }
}

impl std::fmt::Display for BetaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BetaMode::InvSqrtN => f.write_str("inv_sqrt_n"),
            BetaMode::Fixed(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Transition-prior mass moved to neighbouring counts.
    pub alpha: f64,
    pub beta: BetaMode,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { k_min: 1, k_max: 8, alpha: 0.1, beta: BetaMode::InvSqrtN }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 1 || self.k_min > self.k_max {
            return Err(Error::Config(format!(
                "candidate range {}..={} is invalid",
                self.k_min, self.k_max
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn candidates(&self) -> impl DoubleEndedIterator<Item = usize> + Clone {
        self.k_min..=self.k_max
    }

    pub fn num_candidates(&self) -> usize {
        self.k_max - self.k_min + 1
    }

    fn check(&self, k: usize) -> Result<()> {
        if (self.k_min..=self.k_max).contains(&k) {
            Ok(())
        } else {
            Err(Error::InvalidCandidate { k, k_min: self.k_min, k_max: self.k_max })
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_candidates() {
            return Err(Error::InvalidInput(format!(
                "expected {} per-k values, got {len}",
                self.num_candidates()
            )));
        }
        Ok(())
    }
}

/// Sticky transition prior `p(k | k_prev)`.
pub fn transition_prior(k: usize, k_prev: usize, cfg: &FusionConfig) -> Result<f64> {
    cfg.check(k)?;
    cfg.check(k_prev)?;
    let at_boundary = k_prev == cfg.k_min || k_prev == cfg.k_max;
    Ok(if k == k_prev {
        // A singleton candidate set has nowhere to move.
        if cfg.k_min == cfg.k_max {
            1.0
        } else if at_boundary {
            1.0 - cfg.alpha / 2.0
        } else {
            1.0 - cfg.alpha
        }
    } else if k.abs_diff(k_prev) == 1 {
        cfg.alpha / 2.0
    } else {
        0.0
    })
}

/// Penalized lengths `L(k) - log p(k | k_prev)`; `+inf` where the prior is zero.
fn penalized(code_lengths: &[f64], k_prev: usize, cfg: &FusionConfig) -> Result<Vec<f64>> {
    cfg.check_len(code_lengths.len())?;
    if let Some(i) = code_lengths.iter().position(|l| !l.is_finite()) {
        return Err(Error::InvalidInput(format!("code length for k={} is not finite", cfg.k_min + i)));
    }
    cfg.candidates()
        .zip(code_lengths)
        .map(|(k, &l)| Ok(l - transition_prior(k, k_prev, cfg)?.ln()))
        .collect()
}

/// `p(k) ∝ exp(-beta (L(k) - log p(k | k_prev)))`, normalized in the log domain.
pub fn model_posterior(code_lengths: &[f64], k_prev: usize, cfg: &FusionConfig, n: usize) -> Result<ModelPosterior> {
    let pen = penalized(code_lengths, k_prev, cfg)?;
    let beta = cfg.beta.value(n);
    let support: Vec<usize> = cfg.candidates().collect();
    if beta == 0.0 {
        let m = support.len();
        return ModelPosterior::new(support, vec![1.0 / m as f64; m]);
    }
    let logits: Vec<f64> = pen.iter().map(|p| -beta * p).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    ModelPosterior::new(support, unnorm.iter().map(|u| u / total).collect())
}

/// SDMS: `argmin_k L(k) - log p(k | k_prev)`, ties toward smaller `k`.
pub fn sdms_select(code_lengths: &[f64], k_prev: usize, cfg: &FusionConfig) -> Result<usize> {
    let pen = penalized(code_lengths, k_prev, cfg)?;
    Ok(cfg.k_min + argmin(&pen))
}

/// Unpenalized `argmin_k L(k)`, used before any count has been selected.
pub fn initial_select(code_lengths: &[f64], cfg: &FusionConfig) -> Result<usize> {
    cfg.check_len(code_lengths.len())?;
    Ok(cfg.k_min + argmin(code_lengths))
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &x)| if x < bv { (i, x) } else { (bi, bv) })
        .0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedShareConfig {
    pub share: f64,
    /// Learning rate; `None` means `1 / sqrt(N)`.
    pub eta: Option<f64>,
}

impl Default for FixedShareConfig {
    fn default() -> Self {
        FixedShareConfig { share: 0.05, eta: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorState {
    pub k_min: usize,
    pub k_prev: usize,
    pub fs_weights: Vec<f64>,
}

impl SelectorState {
    pub fn new(cfg: &FusionConfig, k_prev: usize) -> Self {
        let m = cfg.num_candidates();
        SelectorState { k_min: cfg.k_min, k_prev, fs_weights: vec![1.0 / m as f64; m] }
    }
}

/// One Fixed Share round: exponential-weights update followed by uniform sharing.
/// Returns the new state and the count with the largest shared weight.
pub fn fixed_share_step(state: &SelectorState, losses: &[f64], share: f64, eta: f64) -> Result<(SelectorState, usize)> {
    let m = state.fs_weights.len();
    if losses.len() != m {
        return Err(Error::InvalidInput(format!("expected {m} losses, got {}", losses.len())));
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidInput("Fixed Share losses must be finite".into()));
    }
    if !(0.0..1.0).contains(&share) || !(eta > 0.0) {
        return Err(Error::InvalidInput("Fixed Share needs 0 <= share < 1 and eta > 0".into()));
    }
    let min_loss = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let updated: Vec<f64> = state
        .fs_weights
        .iter()
        .zip(losses)
        .map(|(w, l)| w * (-eta * (l - min_loss)).exp())
        .collect();
    let total: f64 = updated.iter().sum();
    let shared: Vec<f64> = updated
        .iter()
        .map(|w| (1.0 - share) * w / total + share / m as f64)
        .collect();
    let norm: f64 = shared.iter().sum();
    let fs_weights: Vec<f64> = shared.iter().map(|w| w / norm).collect();
    let best = fs_weights
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &w)| if w > bv { (i, w) } else { (bi, bv) })
        .0;
    Ok((SelectorState { k_min: state.k_min, k_prev: state.k_prev, fs_weights }, state.k_min + best))
}
