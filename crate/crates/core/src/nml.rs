//! Complete-variable NML code lengths for Gaussian mixtures.
//!
//! `L(x, z; k) = -log p(x, z; theta_hat(x, z), k) + log C_N(k)`, in nats.
//!
//! Two penalties are available. [`ComplexityMode::AsymptoticBic`] charges
//! `(d_k / 2) log N`. [`ComplexityMode::ExactLatent`] charges the exact
//! multinomial complexity of the latent labels plus, for every non-empty
//! cluster, the Gaussian complexity on a bounded parameter domain, using the
//! Fisher-information expansion
//! `log C_n = (p/2) log(n / 2pi) + log \int sqrt(det I(theta)) dtheta`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gmm::{self, CovType, HardAssignment, MixtureParams};
use crate::panel::TimePanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityMode {
    ExactLatent,
    AsymptoticBic,
}

impl std::str::FromStr for ComplexityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_latent" | "exact" => Ok(ComplexityMode::ExactLatent),
            "asymptotic_bic" | "bic" => Ok(ComplexityMode::AsymptoticBic),
            other => Err(Error::Config(format!("unknown NML mode '{other}'"))),
        }
    }
}

/// Parameter domain over which the Gaussian complexity integral is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianDomain {
    /// Bound on the Euclidean norm of the mean.
    pub radius: f64,
    pub eig_min: f64,
    pub eig_max: f64,
}

impl Default for GaussianDomain {
    fn default() -> Self {
        GaussianDomain { radius: 1e3, eig_min: 1e-6, eig_max: 1e3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmlConfig {
    pub mode: ComplexityMode,
    pub cov_type: CovType,
    pub cov_floor: f64,
    pub domain: GaussianDomain,
}

impl Default for NmlConfig {
    fn default() -> Self {
        NmlConfig {
            mode: ComplexityMode::AsymptoticBic,
            cov_type: CovType::Full,
            cov_floor: 1e-6,
            domain: GaussianDomain::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeLength {
    pub nats: f64,
    pub k: usize,
    pub neg_complete_loglik: f64,
    pub log_parametric_complexity: f64,
    /// Clusters that received no points under the assignment.
    pub empty_clusters: usize,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 { x * x.ln() } else { 0.0 }
}

/// `log sum_h binom(n,h) (h/n)^h ((n-h)/n)^(n-h)`, memoized by `n`.
fn log_binary_complexity(n: u64) -> f64 {
    static CACHE: OnceLock<RwLock<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&v) = cache.read().unwrap().get(&n) {
        return v;
    }
    let nf = n as f64;
    let log_n_fact = ln_gamma(nf + 1.0);
    let terms: Vec<f64> = (0..=n)
        .map(|h| {
            let hf = h as f64;
            let rest = nf - hf;
            log_n_fact - ln_gamma(hf + 1.0) - ln_gamma(rest + 1.0) + xlogx(hf) + xlogx(rest) - nf * nf.ln()
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    cache.write().unwrap().insert(n, v);
    v
}

/// Log parametric complexity of a `k`-valued multinomial over `n` draws, via
/// `C_1 = 1`, `C_{m+1} = C_m + (n/m) C_{m-1}`.
pub fn log_multinomial_complexity(k: usize, n: usize) -> f64 {
    assert!(k >= 1 && n >= 1, "k and n must be positive");
    if k == 1 {
        return 0.0;
    }
    let ln_n = (n as f64).ln();
    let (mut prev, mut cur) = (0.0, log_binary_complexity(n as u64));
    for m in 2..k {
        let next = log_add(cur, ln_n - (m as f64 - 1.0).ln() + prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// `log` of the volume of the `d`-ball of radius `r`.
fn log_ball_volume(d: usize, r: f64) -> f64 {
    let df = d as f64;
    0.5 * df * PI.ln() + df * r.ln() - ln_gamma(0.5 * df + 1.0)
}

/// `\int_1^b y^e dy`.
fn power_integral(e: f64, b: f64) -> f64 {
    if (e + 1.0).abs() < 1e-12 {
        b.ln()
    } else {
        (b.powf(e + 1.0) - 1.0) / (e + 1.0)
    }
}

/// `\int_1^b y^e ln(y) dy`.
fn power_log_integral(e: f64, b: f64) -> f64 {
    if (e + 1.0).abs() < 1e-12 {
        0.5 * b.ln().powi(2)
    } else {
        let s = e + 1.0;
        b.powf(s) * b.ln() / s - (b.powf(s) - 1.0) / (s * s)
    }
}

/// `\int\int_{[1,b]^2} sgn(y - x) x^p y^q dx dy`.
fn signed_pair_integral(p: f64, q: f64, b: f64) -> f64 {
    let (inner, f_at_b) = if (p + 1.0).abs() < 1e-12 {
        (power_log_integral(q, b), b.ln())
    } else {
        (
            (power_integral(q + p + 1.0, b) - power_integral(q, b)) / (p + 1.0),
            (b.powf(p + 1.0) - 1.0) / (p + 1.0),
        )
    };
    2.0 * inner - f_at_b * power_integral(q, b)
}

/// `log \int_{a <= l_1 < ... < l_d <= b} prod_{i<j} (l_j - l_i) prod_i l_i^{-(d+2)/2} dl`,
/// evaluated as a Pfaffian (de Bruijn's identity) in the rescaled variable `u = l / a`.
fn log_ordered_eigen_integral(d: usize, a: f64, b: f64) -> f64 {
    let ratio = b / a;
    let expo: Vec<f64> = (0..d).map(|j| j as f64 - (d as f64 + 2.0) / 2.0).collect();
    let size = d + d % 2;
    let mut m = DMatrix::<f64>::zeros(size, size);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                m[(i, j)] = signed_pair_integral(expo[i], expo[j], ratio);
            }
        }
        if d % 2 == 1 {
            let bi = power_integral(expo[i], ratio);
            m[(i, d)] = bi;
            m[(d, i)] = -bi;
        }
    }
    // Pf(M)^2 = det(M); the integral is positive.
    let log_pf = 0.5 * m.determinant().abs().ln();
    // Scaling l = a u contributes a^(d + d(d-1)/2 - d(d+2)/2) = a^(-d/2).
    log_pf - 0.5 * d as f64 * a.ln()
}

/// `log \int sqrt(det I(mu, Sigma))` over `|mu| <= radius` and covariance
/// eigenvalues in `[eig_min, eig_max]`.
pub fn log_fisher_volume(d: usize, cov_type: CovType, domain: &GaussianDomain) -> f64 {
    let df = d as f64;
    let (a, b) = (domain.eig_min, domain.eig_max);
    let log_mean_part = log_ball_volume(d, domain.radius);
    let log_cov_part = match cov_type {
        CovType::Spherical => {
            0.5 * (df / 2.0).ln() + ((2.0 / df) * (a.powf(-df / 2.0) - b.powf(-df / 2.0))).ln()
        }
        CovType::Diagonal => df * (2f64.sqrt() * (a.powf(-0.5) - b.powf(-0.5))).ln(),
        CovType::Full => {
            // Lebesgue measure on symmetric matrices in eigen coordinates (ordered eigenvalues).
            let log_weyl = df * (df + 1.0) / 4.0 * PI.ln()
                - (1..=d).map(|j| ln_gamma(j as f64 / 2.0)).sum::<f64>();
            -0.5 * df * 2f64.ln() + log_weyl + log_ordered_eigen_integral(d, a, b)
        }
    };
    log_mean_part + log_cov_part
}

/// Gaussian complexity of a cluster of `n` points; zero for an empty cluster.
pub fn log_gaussian_complexity(n: usize, d: usize, cov_type: CovType, domain: &GaussianDomain) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = cov_type.gaussian_params(d) as f64;
    (0.5 * p * (n as f64 / (2.0 * PI)).ln() + log_fisher_volume(d, cov_type, domain)).max(0.0)
}

/// Model-class penalty `log C_N(k)` from `(k, N, d)` alone. In exact mode the
/// per-cluster Gaussian terms use the balanced split of `n` into `k` parts.
pub fn log_parametric_complexity(
    k: usize,
    n: usize,
    d: usize,
    cov_type: CovType,
    mode: ComplexityMode,
    domain: &GaussianDomain,
) -> f64 {
    match mode {
        ComplexityMode::AsymptoticBic => {
            let dk = (k - 1) + k * cov_type.gaussian_params(d);
            0.5 * dk as f64 * (n as f64).ln()
        }
        ComplexityMode::ExactLatent => {
            let sizes = (0..k).map(|i| n / k + usize::from(i < n % k));
            log_multinomial_complexity(k, n) + sizes.map(|s| log_gaussian_complexity(s, d, cov_type, domain)).sum::<f64>()
        }
    }
}

/// Complete-data MLE for given assignments; empty clusters get weight 0.
pub fn complete_data_mle(panel: &TimePanel, assign: &HardAssignment, k: usize, cfg: &NmlConfig) -> Result<(MixtureParams, Vec<usize>)> {
    if assign.z.len() != panel.len() {
        return Err(Error::InvalidInput(format!(
            "assignment has {} labels for {} points",
            assign.z.len(),
            panel.len()
        )));
    }
    if let Some((index, &label)) = assign.z.iter().enumerate().find(|(_, &z)| z >= k) {
        return Err(Error::InvalidAssignment { index, label, k });
    }
    let d = panel.dim();
    let mut counts = vec![0usize; k];
    for &z in &assign.z {
        counts[z] += 1;
    }
    let n = panel.len() as f64;
    let mut means = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            means.push(vec![0.0; d]);
            covariances.push(DMatrix::identity(d, d));
            continue;
        }
        let (m, cov) = gmm::weighted_moments(
            panel,
            |row| if assign.z[row] == i { 1.0 } else { 0.0 },
            c as f64,
            cfg.cov_type,
            cfg.cov_floor,
        );
        means.push(m);
        covariances.push(cov);
    }
    let weights = counts.iter().map(|&c| c as f64 / n).collect();
    Ok((MixtureParams { weights, means, covariances }, counts))
}

pub fn nml_code_length(panel: &TimePanel, assign: &HardAssignment, k: usize, cfg: &NmlConfig) -> Result<CodeLength> {
    let (params, counts) = complete_data_mle(panel, assign, k, cfg)?;
    let neg_complete_loglik = -gmm::complete_log_likelihood(&params, panel, assign)?;
    let (n, d) = (panel.len(), panel.dim());
    let log_parametric_complexity = match cfg.mode {
        ComplexityMode::AsymptoticBic => {
            log_parametric_complexity(k, n, d, cfg.cov_type, cfg.mode, &cfg.domain)
        }
        ComplexityMode::ExactLatent => {
            log_multinomial_complexity(k, n)
                + counts.iter().map(|&c| log_gaussian_complexity(c, d, cfg.cov_type, &cfg.domain)).sum::<f64>()
        }
    };
    Ok(CodeLength {
        nats: neg_complete_loglik + log_parametric_complexity,
        k,
        neg_complete_loglik,
        log_parametric_complexity,
        empty_clusters: counts.iter().filter(|&&c| c == 0).count(),
    })
}
