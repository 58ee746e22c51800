//! Gaussian mixture fitting by expectation-maximization.
//!
//! All likelihoods are natural-log (nats). Component labels are zero-based.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::TimePanel;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovType {
    Full,
    Diagonal,
    Spherical,
}

impl CovType {
    /// Free parameters of one `d`-dimensional Gaussian (mean plus covariance).
    pub fn gaussian_params(self, d: usize) -> usize {
        match self {
            CovType::Full => d + d * (d + 1) / 2,
            CovType::Diagonal => 2 * d,
            CovType::Spherical => d + 1,
        }
    }
}

impl std::str::FromStr for CovType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(CovType::Full),
            "diagonal" | "diag" => Ok(CovType::Diagonal),
            "spherical" => Ok(CovType::Spherical),
            other => Err(Error::Config(format!("unknown covariance type '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once the log-likelihood gain falls below `rel_tol * |loglik|`.
    pub rel_tol: f64,
    pub restarts: usize,
    pub cov_type: CovType,
    /// Lower bound on every covariance eigenvalue.
    pub cov_floor: f64,
    pub warm_start: bool,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: 200,
            rel_tol: 1e-6,
            restarts: 5,
            cov_type: CovType::Full,
            cov_floor: 1e-6,
            warm_start: true,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config("rel_tol must be > 0".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Config("restarts must be >= 1".into()));
        }
        if !(self.cov_floor > 0.0) || !self.cov_floor.is_finite() {
            return Err(Error::Config("cov_floor must be a positive finite number".into()));
        }
        Ok(())
    }
}

/// Weights, means and covariances of a `k`-component Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || covariances.len() != k {
            return Err(Error::InvalidInput("mixture parameter lengths disagree".into()));
        }
        let d = means[0].len();
        if d == 0
            || means.iter().any(|m| m.len() != d)
            || covariances.iter().any(|c| c.nrows() != d || c.ncols() != d)
        {
            return Err(Error::InvalidInput("mixture parameter dimensions disagree".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("mixture weights must be a probability vector".into()));
        }
        Ok(MixtureParams { weights, means, covariances })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Components reordered so that new component `i` is old component `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        MixtureParams {
            weights: perm.iter().map(|&i| self.weights[i]).collect(),
            means: perm.iter().map(|&i| self.means[i].clone()).collect(),
            covariances: perm.iter().map(|&i| self.covariances[i].clone()).collect(),
        }
    }
}

/// Row-stochastic `n x k` matrix of posterior component probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    n: usize,
    k: usize,
    gamma: Vec<f64>,
}

impl Responsibilities {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || k == 0 {
            return Err(Error::InvalidInput("empty responsibility matrix".into()));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("ragged responsibility matrix".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|g| !(0.0..=1.0).contains(g)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("responsibility row {i} is not a distribution")));
            }
        }
        Ok(Responsibilities { n: rows.len(), k, gamma: rows.concat() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.gamma.chunks_exact(self.k)
    }
}

/// Per-point most probable component (zero-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardAssignment {
    pub z: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FittedMixture {
    pub params: MixtureParams,
    pub resp: Responsibilities,
    pub assign: HardAssignment,
    /// Incomplete-data log-likelihood.
    pub loglik: f64,
    /// Complete-data log-likelihood at the hard assignments.
    pub complete_loglik: f64,
    /// Log-likelihood after every E-step of the winning run.
    pub loglik_trace: Vec<f64>,
}

/// Result of a single EM run from one initialization.
#[derive(Debug, Clone)]
pub struct EmRun {
    pub params: MixtureParams,
    pub resp: Responsibilities,
    pub loglik: f64,
    pub loglik_trace: Vec<f64>,
}

/// A component prepared for repeated density evaluation.
struct PreparedComponent {
    log_weight: f64,
    mean: Vec<f64>,
    /// Row-major lower Cholesky factor.
    chol: Vec<f64>,
    inv_diag: Vec<f64>,
    log_norm: f64,
}

impl PreparedComponent {
    fn new(weight: f64, mean: &[f64], cov: &DMatrix<f64>) -> Option<Self> {
        let d = mean.len();
        let chol = cov.clone().cholesky()?;
        let l = chol.l();
        let mut log_det = 0.0;
        let mut flat = vec![0.0; d * d];
        for i in 0..d {
            log_det += 2.0 * l[(i, i)].ln();
            for j in 0..=i {
                flat[i * d + j] = l[(i, j)];
            }
        }
        if !log_det.is_finite() {
            return None;
        }
        Some(PreparedComponent {
            log_weight: weight.ln(),
            mean: mean.to_vec(),
            inv_diag: (0..d).map(|i| 1.0 / flat[i * d + i]).collect(),
            chol: flat,
            log_norm: -0.5 * (d as f64 * (2.0 * PI).ln() + log_det),
        })
    }

    fn log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.mean.len();
        let mut quad = 0.0;
        for i in 0..d {
            let mut v = x[i] - self.mean[i];
            let row = &self.chol[i * d..i * d + i];
            for (lij, yj) in row.iter().zip(scratch.iter()) {
                v -= lij * yj;
            }
            let y = v * self.inv_diag[i];
            scratch[i] = y;
            quad += y * y;
        }
        self.log_norm - 0.5 * quad
    }
}

fn prepare(params: &MixtureParams) -> Result<Vec<PreparedComponent>> {
    params
        .weights
        .iter()
        .zip(&params.means)
        .zip(&params.covariances)
        .enumerate()
        .map(|(i, ((&w, m), c))| {
            PreparedComponent::new(w, m, c)
                .ok_or_else(|| Error::DegenerateFit(format!("covariance of component {i} is not positive definite")))
        })
        .collect()
}

fn check_dims(params: &MixtureParams, panel: &TimePanel) -> Result<()> {
    if params.dim() != panel.dim() {
        return Err(Error::InvalidInput(format!(
            "mixture has dimension {}, panel has {}",
            params.dim(),
            panel.dim()
        )));
    }
    Ok(())
}

/// E-step: returns responsibilities and the incomplete-data log-likelihood.
fn e_step(comps: &[PreparedComponent], panel: &TimePanel) -> Result<(Responsibilities, f64)> {
    let k = comps.len();
    let mut gamma = vec![0.0; panel.len() * k];
    let mut scratch = vec![0.0; panel.dim()];
    let mut loglik = 0.0;
    for (n, (x, row)) in panel.rows().zip(gamma.chunks_exact_mut(k)).enumerate() {
        let mut max = f64::NEG_INFINITY;
        for (slot, c) in row.iter_mut().zip(comps) {
            *slot = c.log_weight + c.log_density(x, &mut scratch);
            max = max.max(*slot);
        }
        if !max.is_finite() {
            return Err(Error::NumericalUnderflow(n));
        }
        let mut total = 0.0;
        for slot in row.iter_mut() {
            // Below e^-50 a term cannot change `total` at double precision.
            let z = *slot - max;
            *slot = if z < -50.0 { 0.0 } else { z.exp() };
            total += *slot;
        }
        for slot in row.iter_mut() {
            *slot /= total;
        }
        loglik += max + total.ln();
    }
    Ok((Responsibilities { n: panel.len(), k, gamma }, loglik))
}

/// Project a symmetric matrix onto the set with eigenvalues at least `floor`,
/// restricted to the structure implied by `cov_type`.
pub(crate) fn floor_covariance(mut cov: DMatrix<f64>, cov_type: CovType, floor: f64) -> DMatrix<f64> {
    let d = cov.nrows();
    match cov_type {
        CovType::Full => {
            cov = (&cov + cov.transpose()) * 0.5;
            // Cheap exit: a Cholesky factor of `cov - floor I` exists iff every eigenvalue exceeds the floor.
            let shifted = &cov - DMatrix::from_diagonal_element(d, d, floor);
            if shifted.cholesky().is_some() {
                return cov;
            }
            let eig = SymmetricEigen::new(cov.clone());
            if eig.eigenvalues.iter().all(|&l| l >= floor) {
                return cov;
            }
            let clipped = eig.eigenvalues.map(|l| l.max(floor));
            let v = &eig.eigenvectors;
            let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
            (&out + out.transpose()) * 0.5
        }
        CovType::Diagonal => DMatrix::from_fn(d, d, |i, j| if i == j { cov[(i, i)].max(floor) } else { 0.0 }),
        CovType::Spherical => {
            let v = (cov.trace() / d as f64).max(floor);
            DMatrix::from_diagonal_element(d, d, v)
        }
    }
}

/// Weighted mean and floored covariance for one component.
pub(crate) fn weighted_moments(
    panel: &TimePanel,
    weight_of: impl Fn(usize) -> f64,
    total: f64,
    cov_type: CovType,
    floor: f64,
) -> (Vec<f64>, DMatrix<f64>) {
    let d = panel.dim();
    let mut mean = vec![0.0; d];
    for (n, x) in panel.rows().enumerate() {
        let w = weight_of(n);
        if w != 0.0 {
            for (m, xi) in mean.iter_mut().zip(x) {
                *m += w * xi;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut acc = vec![0.0; d * d];
    let mut diff = vec![0.0; d];
    for (n, x) in panel.rows().enumerate() {
        let w = weight_of(n);
        if w == 0.0 {
            continue;
        }
        for i in 0..d {
            diff[i] = x[i] - mean[i];
        }
        for i in 0..d {
            let wi = w * diff[i];
            for j in 0..=i {
                acc[i * d + j] += wi * diff[j];
            }
        }
    }
    let cov = DMatrix::from_fn(d, d, |i, j| {
        let (a, b) = if j <= i { (i, j) } else { (j, i) };
        acc[a * d + b] / total
    });
    (mean, floor_covariance(cov, cov_type, floor))
}

fn m_step(panel: &TimePanel, resp: &Responsibilities, prev: &MixtureParams, cfg: &EmConfig) -> MixtureParams {
    let (k, d) = (resp.k(), panel.dim());
    let mut nk = vec![0.0; k];
    let mut sums = vec![0.0; k * d];
    for (x, g) in panel.rows().zip(resp.rows()) {
        for (i, &w) in g.iter().enumerate() {
            nk[i] += w;
            for (s, xj) in sums[i * d..(i + 1) * d].iter_mut().zip(x) {
                *s += w * xj;
            }
        }
    }
    let alive: Vec<bool> = nk.iter().map(|&v| v > f64::MIN_POSITIVE).collect();
    let means: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            if alive[i] {
                sums[i * d..(i + 1) * d].iter().map(|s| s / nk[i]).collect()
            } else {
                prev.means[i].clone()
            }
        })
        .collect();

    // Lower triangles of the weighted scatter matrices, one block per component.
    let mut acc = vec![0.0; k * d * d];
    let mut diff = vec![0.0; d];
    for (x, g) in panel.rows().zip(resp.rows()) {
        for (i, &w) in g.iter().enumerate() {
            if w == 0.0 || !alive[i] {
                continue;
            }
            for ((df, xj), mj) in diff.iter_mut().zip(x).zip(&means[i]) {
                *df = xj - mj;
            }
            let block = &mut acc[i * d * d..(i + 1) * d * d];
            for a in 0..d {
                let wa = w * diff[a];
                for b in 0..=a {
                    block[a * d + b] += wa * diff[b];
                }
            }
        }
    }

    let n = panel.len() as f64;
    let mut weights = Vec::with_capacity(k);
    let mut covariances = Vec::with_capacity(k);
    for i in 0..k {
        if !alive[i] {
            // Dead component: zero weight, parameters frozen.
            weights.push(0.0);
            covariances.push(prev.covariances[i].clone());
            continue;
        }
        let block = &acc[i * d * d..(i + 1) * d * d];
        let cov = DMatrix::from_fn(d, d, |a, b| {
            let (r, c) = if b <= a { (a, b) } else { (b, a) };
            block[r * d + c] / nk[i]
        });
        weights.push(nk[i] / n);
        covariances.push(floor_covariance(cov, cfg.cov_type, cfg.cov_floor));
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    MixtureParams { weights, means, covariances }
}

fn sample_covariance(panel: &TimePanel, cfg: &EmConfig) -> DMatrix<f64> {
    weighted_moments(panel, |_| 1.0, panel.len() as f64, cfg.cov_type, cfg.cov_floor).1
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding of the means; sample covariance and uniform weights.
pub fn kmeanspp_init(panel: &TimePanel, k: usize, cfg: &EmConfig, seed: u64) -> MixtureParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = panel.len();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(panel.row(rng.random_range(0..n)).to_vec());
    let mut d2: Vec<f64> = panel.rows().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&w| {
                    acc += w;
                    acc > target
                })
                .unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap_or(n - 1))
        } else {
            rng.random_range(0..n)
        };
        let c = panel.row(pick).to_vec();
        for (dist, x) in d2.iter_mut().zip(panel.rows()) {
            *dist = dist.min(sq_dist(x, &c));
        }
        centers.push(c);
    }
    let cov = sample_covariance(panel, cfg);
    MixtureParams {
        weights: vec![1.0 / k as f64; k],
        means: centers,
        covariances: vec![cov; k],
    }
}

/// Run EM from a single initialization until convergence or `max_iter` M-steps.
pub fn run_em(panel: &TimePanel, init: MixtureParams, cfg: &EmConfig) -> Result<EmRun> {
    check_dims(&init, panel)?;
    let mut params = init;
    let (mut resp, mut loglik) = e_step(&prepare(&params)?, panel)?;
    let mut trace = vec![loglik];
    for _ in 0..cfg.max_iter {
        let next = m_step(panel, &resp, &params, cfg);
        let (next_resp, next_ll) = e_step(&prepare(&next)?, panel)?;
        if !next_ll.is_finite() {
            return Err(Error::DegenerateFit("log-likelihood is not finite".into()));
        }
        // A step that gains less than the tolerance is discarded, so restarting
        // from a converged solution reproduces it exactly.
        if next_ll - loglik <= cfg.rel_tol * next_ll.abs() {
            break;
        }
        trace.push(next_ll);
        params = next;
        resp = next_resp;
        loglik = next_ll;
    }
    Ok(EmRun { params, resp, loglik, loglik_trace: trace })
}

/// Fit a `k`-component mixture, keeping the best of `cfg.restarts` seeded runs
/// plus the optional `init` candidate.
pub fn fit_em(panel: &TimePanel, k: usize, cfg: &EmConfig, init: Option<&MixtureParams>) -> Result<FittedMixture> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    if panel.len() < k {
        return Err(Error::InsufficientData { n: panel.len(), k });
    }
    if let Some(p) = init {
        if p.k() != k {
            return Err(Error::InvalidInput(format!("initial mixture has {} components, expected {k}", p.k())));
        }
        check_dims(p, panel)?;
    }

    let seeded = (0..cfg.restarts).map(|r| kmeanspp_init(panel, k, cfg, derive_seed(cfg.seed, &[r as u64])));
    let candidates = seeded.chain(init.cloned());

    let mut best: Option<EmRun> = None;
    let mut last_err = None;
    for start in candidates {
        match run_em(panel, start, cfg) {
            Ok(run) => {
                if best.as_ref().is_none_or(|b| run.loglik > b.loglik) {
                    best = Some(run);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let run = best.ok_or_else(|| {
        Error::DegenerateFit(format!(
            "all restarts failed{}",
            last_err.map(|e| format!(" (last: {e})")).unwrap_or_default()
        ))
    })?;
    let assign = hard_assign(&run.resp);
    let complete_loglik = complete_log_likelihood(&run.params, panel, &assign)?;
    Ok(FittedMixture {
        params: run.params,
        resp: run.resp,
        assign,
        loglik: run.loglik,
        complete_loglik,
        loglik_trace: run.loglik_trace,
    })
}

pub fn responsibilities(params: &MixtureParams, panel: &TimePanel) -> Result<Responsibilities> {
    check_dims(params, panel)?;
    Ok(e_step(&prepare(params)?, panel)?.0)
}

/// `sum_n [log pi_{z_n} + log g(x_n; mu_{z_n}, Sigma_{z_n})]`.
pub fn complete_log_likelihood(params: &MixtureParams, panel: &TimePanel, assign: &HardAssignment) -> Result<f64> {
    check_dims(params, panel)?;
    if assign.z.len() != panel.len() {
        return Err(Error::InvalidInput(format!(
            "assignment has {} labels for {} points",
            assign.z.len(),
            panel.len()
        )));
    }
    let k = params.k();
    if let Some((index, &label)) = assign.z.iter().enumerate().find(|(_, &z)| z >= k) {
        return Err(Error::InvalidAssignment { index, label, k });
    }
    let comps = prepare(params)?;
    let mut scratch = vec![0.0; panel.dim()];
    Ok(panel
        .rows()
        .zip(&assign.z)
        .map(|(x, &z)| comps[z].log_weight + comps[z].log_density(x, &mut scratch))
        .sum())
}

/// Row-wise argmax; ties go to the lowest component index.
pub fn hard_assign(resp: &Responsibilities) -> HardAssignment {
    let z = resp
        .rows()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
                .0
        })
        .collect();
    HardAssignment { z }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn two_cluster_panel(seed: u64, n_each: usize) -> TimePanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        for center in [0.0, 10.0] {
            for _ in 0..n_each {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(center + z);
                data.push(StandardNormal.sample(&mut rng));
                data.push(StandardNormal.sample(&mut rng));
            }
        }
        TimePanel::new(1, 2 * n_each, 3, data).unwrap()
    }

    fn unit_params(weights: Vec<f64>, means: Vec<Vec<f64>>) -> MixtureParams {
        let d = means[0].len();
        let k = weights.len();
        MixtureParams::new(weights, means, vec![DMatrix::identity(d, d); k]).unwrap()
    }

    #[test]
    fn single_component_is_sample_moments() {
        let panel = two_cluster_panel(3, 50);
        let fit = fit_em(&panel, 1, &EmConfig::default(), None).unwrap();
        let n = panel.len() as f64;
        for j in 0..3 {
            let mean: f64 = panel.rows().map(|r| r[j]).sum::<f64>() / n;
            assert!((fit.params.means[0][j] - mean).abs() < 1e-10);
        }
        assert_eq!(fit.params.weights, vec![1.0]);
        assert!(fit.resp.rows().all(|r| r == [1.0]));
    }

    #[test]
    fn recovers_two_separated_clusters() {
        let panel = two_cluster_panel(11, 500);
        let fit = fit_em(&panel, 2, &EmConfig::default(), None).unwrap();
        // Oracle: sample means of the two generated halves.
        let half_mean = |lo: usize| -> Vec<f64> {
            (0..3).map(|j| (lo..lo + 500).map(|i| panel.row(i)[j]).sum::<f64>() / 500.0).collect()
        };
        let (a, b) = (half_mean(0), half_mean(500));
        let mut means = fit.params.means.clone();
        if means[0][0] > means[1][0] {
            means.swap(0, 1);
        }
        for (fitted, truth) in means.iter().zip([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]) {
            for j in 0..3 {
                assert!((fitted[j] - truth[j]).abs() < 0.2);
            }
        }
        for j in 0..3 {
            assert!((means[0][j] - a[j]).abs() < 1e-3);
            assert!((means[1][j] - b[j]).abs() < 1e-3);
        }
        for w in &fit.params.weights {
            assert!((w - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn repeated_point_hits_the_floor() {
        let panel = TimePanel::new(1, 20, 2, [1.5, -2.0].repeat(20)).unwrap();
        let cfg = EmConfig { cov_type: CovType::Spherical, ..EmConfig::default() };
        let fit = fit_em(&panel, 1, &cfg, None).unwrap();
        assert_eq!(fit.params.covariances[0], DMatrix::from_diagonal_element(2, 2, cfg.cov_floor));
    }

    #[test]
    fn insufficient_data_is_reported() {
        let panel = TimePanel::new(1, 2, 1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            fit_em(&panel, 3, &EmConfig::default(), None),
            Err(Error::InsufficientData { n: 2, k: 3 })
        ));
    }

    #[test]
    fn identical_components_give_uniform_responsibilities() {
        let params = unit_params(vec![1.0 / 3.0; 3], vec![vec![0.5, 0.5]; 3]);
        let panel = two_cluster_panel(1, 5);
        let panel = TimePanel::new(1, 10, 2, panel.as_slice()[..20].to_vec()).unwrap();
        let resp = responsibilities(&params, &panel).unwrap();
        for r in resp.rows() {
            for g in r {
                assert!((g - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn far_component_gets_negligible_responsibility() {
        let params = unit_params(vec![0.5, 0.5], vec![vec![0.0], vec![20.0]]);
        let panel = TimePanel::new(1, 1, 1, vec![0.0]).unwrap();
        let resp = responsibilities(&params, &panel).unwrap();
        assert!(resp.row(0)[0] >= 1.0 - 1e-9);
    }

    #[test]
    fn standard_normal_at_mode() {
        let params = unit_params(vec![1.0], vec![vec![0.0]]);
        let panel = TimePanel::new(1, 1, 1, vec![0.0]).unwrap();
        let ll = complete_log_likelihood(&params, &panel, &HardAssignment { z: vec![0] }).unwrap();
        assert!((ll + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn complete_loglik_matches_naive_evaluator() {
        // Oracle: explicit 2x2 inverse and determinant, plain exp/ln.
        let cov_a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let cov_b = DMatrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 1.5]);
        let params = MixtureParams::new(
            vec![0.3, 0.7],
            vec![vec![0.0, 1.0], vec![2.0, -1.0]],
            vec![cov_a.clone(), cov_b.clone()],
        )
        .unwrap();
        let pts = [[0.1, 0.2], [1.7, -0.4], [-1.0, 2.0], [3.0, 0.0]];
        let z = vec![0, 1, 0, 1];
        let panel = TimePanel::from_rows(1, &pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap();
        let naive = |x: [f64; 2], w: f64, m: [f64; 2], c: &DMatrix<f64>| {
            let (a, b, d) = (c[(0, 0)], c[(0, 1)], c[(1, 1)]);
            let det = a * d - b * b;
            let (u, v) = (x[0] - m[0], x[1] - m[1]);
            let q = (d * u * u - 2.0 * b * u * v + a * v * v) / det;
            (w * (-0.5 * q).exp() / (2.0 * PI * det.sqrt())).ln()
        };
        let expected = naive(pts[0], 0.3, [0.0, 1.0], &cov_a)
            + naive(pts[1], 0.7, [2.0, -1.0], &cov_b)
            + naive(pts[2], 0.3, [0.0, 1.0], &cov_a)
            + naive(pts[3], 0.7, [2.0, -1.0], &cov_b);
        let got = complete_log_likelihood(&params, &panel, &HardAssignment { z: z.clone() }).unwrap();
        assert!((got - expected).abs() < 1e-12);

        let doubled: Vec<Vec<f64>> = pts.iter().chain(pts.iter()).map(|p| p.to_vec()).collect();
        let panel2 = TimePanel::from_rows(1, &doubled).unwrap();
        let z2 = HardAssignment { z: z.repeat(2) };
        let got2 = complete_log_likelihood(&params, &panel2, &z2).unwrap();
        assert!((got2 - 2.0 * got).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_label() {
        let params = unit_params(vec![1.0], vec![vec![0.0]]);
        let panel = TimePanel::new(1, 1, 1, vec![0.0]).unwrap();
        assert!(matches!(
            complete_log_likelihood(&params, &panel, &HardAssignment { z: vec![1] }),
            Err(Error::InvalidAssignment { index: 0, label: 1, k: 1 })
        ));
    }

    #[test]
    fn hard_assign_ties_and_argmax() {
        let resp = Responsibilities::from_rows(&[vec![0.2, 0.8], vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(hard_assign(&resp).z, vec![1, 0, 1, 0]);
    }

    #[test]
    fn floor_clips_eigenvalues() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let floored = floor_covariance(cov, CovType::Full, 1e-3);
        let eig = SymmetricEigen::new(floored);
        assert!(eig.eigenvalues.iter().all(|&l| l >= 1e-3 * (1.0 - 1e-9)));
    }

    #[test]
    fn warm_start_candidate_is_considered() {
        let panel = two_cluster_panel(5, 100);
        let cfg = EmConfig { restarts: 1, ..EmConfig::default() };
        let first = fit_em(&panel, 2, &cfg, None).unwrap();
        let again = fit_em(&panel, 2, &cfg, Some(&first.params)).unwrap();
        assert!(again.loglik >= first.loglik);
    }
}
