//! Mixture complexity, its fusion over component counts, and the pseudo-Ddim score.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::gmm::Responsibilities;

/// Plug-in estimate of `I(Z; X)` in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct McValue(pub f64);

impl McValue {
    pub fn nats(self) -> f64 {
        self.0
    }
}

static NEGATIVE_CLAMPS: AtomicU64 = AtomicU64::new(0);

/// Number of MC values that came out slightly negative and were clamped to zero.
pub fn negative_clamp_count() -> u64 {
    NEGATIVE_CLAMPS.load(Ordering::Relaxed)
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 { x * x.ln() } else { 0.0 }
}

/// `H(Z) - H(Z|X)` with `pi_i = mean_n gamma_i(x_n)`.
pub fn mixture_complexity(resp: &Responsibilities) -> Result<McValue> {
    let (n, k) = (resp.n(), resp.k());
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput("empty responsibility matrix".into()));
    }
    let mut col_sums = vec![0.0; k];
    let mut neg_cond_entropy = 0.0;
    for row in resp.rows() {
        for (s, &g) in col_sums.iter_mut().zip(row) {
            *s += g;
            neg_cond_entropy += xlogx(g);
        }
    }
    let nf = n as f64;
    let entropy: f64 = -col_sums.iter().map(|s| xlogx(s / nf)).sum::<f64>();
    let mc = entropy + neg_cond_entropy / nf;
    if mc < 0.0 {
        NEGATIVE_CLAMPS.fetch_add(1, Ordering::Relaxed);
        return Ok(McValue(0.0));
    }
    Ok(McValue(mc))
}

/// Probability distribution over candidate component counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPosterior {
    support: Vec<usize>,
    probs: Vec<f64>,
}

impl ModelPosterior {
    pub fn new(support: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::InvalidInput("posterior support and probabilities differ in length".into()));
        }
        if support[0] == 0 || support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("posterior support must be ascending, distinct and >= 1".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("posterior probabilities must sum to one".into()));
        }
        Ok(ModelPosterior { support, probs })
    }

    pub fn point_mass(k: usize) -> Self {
        ModelPosterior { support: vec![k], probs: vec![1.0] }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.support.binary_search(&k).map_or(0.0, |i| self.probs[i])
    }
}

/// `sum_k p(K=k) * MC_k`.
pub fn mc_fusion(posterior: &ModelPosterior, mc_by_k: &BTreeMap<usize, McValue>) -> Result<McValue> {
    let mut total = 0.0;
    for (k, p) in posterior.iter() {
        let mc = mc_by_k.get(&k).ok_or(Error::MissingComponentCount(k))?;
        total += p * mc.0;
    }
    // Keep the convex combination inside the hull despite rounding.
    let (lo, hi) = posterior
        .support
        .iter()
        .map(|k| mc_by_k[k].0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(McValue(total.clamp(lo, hi)))
}

/// Expected component count under the posterior.
pub fn ddim_score(posterior: &ModelPosterior) -> f64 {
    let (lo, hi) = (posterior.support[0] as f64, *posterior.support.last().unwrap() as f64);
    posterior.iter().map(|(k, p)| p * k as f64).sum::<f64>().clamp(lo, hi)
}

/// Continuous cluster count `exp(MC)`.
pub fn effective_clusters(mc: McValue) -> f64 {
    mc.0.exp()
}
