//! Per-time fitting, scoring, selection and detection over a panel series.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{ddim_score, mc_fusion, mixture_complexity, McValue, ModelPosterior};
use crate::detect::{self, DetectorConfig, EvalResult, Transition};
use crate::error::{Error, Result};
use crate::fusion::{self, FixedShareConfig, FusionConfig, SelectorState};
use crate::gmm::{fit_em, EmConfig, MixtureParams};
use crate::nml::{nml_code_length, CodeLength, NmlConfig};
use crate::panel::TimePanel;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    McFusion,
    Ddim,
    Sdms,
    Fs,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Mc, Method::McFusion, Method::Ddim, Method::Sdms, Method::Fs];

    /// Name used in output tables.
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::McFusion => "mc_fusion",
            Method::Ddim => "ddim",
            Method::Sdms => "sdms_k",
            Method::Fs => "fs_k",
        }
    }

    /// Value the detector watches: MC and MC fusion as is, Ddim on a log
    /// scale, the selected counts as is.
    pub fn detection_value(self, score: f64) -> f64 {
        match self {
            Method::Ddim => score.ln(),
            _ => score,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(Method::Mc),
            "mc_fusion" => Ok(Method::McFusion),
            "ddim" => Ok(Method::Ddim),
            "sdms" | "sdms_k" => Ok(Method::Sdms),
            "fs" | "fs_k" => Ok(Method::Fs),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub em: EmConfig,
    pub fusion: FusionConfig,
    pub nml: NmlConfig,
    pub fixed_share: FixedShareConfig,
    pub detector: DetectorConfig,
    pub delta_grid: Vec<f64>,
    pub methods: Vec<Method>,
    /// Known transition period; evaluation runs only when set.
    pub transition: Option<Transition>,
    /// Benefit horizon `U`.
    pub benefit_horizon: usize,
    /// Fresh restarts for fits that also have a warm-start candidate;
    /// `None` uses `em.restarts` everywhere.
    pub warm_restarts: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            em: EmConfig::default(),
            fusion: FusionConfig::default(),
            nml: NmlConfig::default(),
            fixed_share: FixedShareConfig::default(),
            detector: DetectorConfig::default(),
            delta_grid: detect::default_delta_grid(),
            methods: Method::ALL.to_vec(),
            transition: None,
            benefit_horizon: 25,
            warm_restarts: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.em.validate()?;
        self.fusion.validate()?;
        if self.detector.window < 1 || !(self.detector.delta >= 0.0) {
            return Err(Error::Config("detector needs window >= 1 and delta >= 0".into()));
        }
        if self.delta_grid.is_empty() || self.delta_grid.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Config("delta grid must be non-empty and non-negative".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.warm_restarts == Some(0) {
            return Err(Error::Config("warm_restarts must be >= 1".into()));
        }
        if self.benefit_horizon < 1 {
            return Err(Error::Config("benefit horizon must be >= 1".into()));
        }
        let fs = &self.fixed_share;
        if !(0.0..1.0).contains(&fs.share) || fs.eta.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::Config("fixed share needs 0 <= share < 1 and eta > 0".into()));
        }
        Ok(())
    }
}

/// Everything computed at one time step.
#[derive(Debug, Clone)]
pub struct TimeRecord {
    pub t: usize,
    pub n: usize,
    /// Indexed by `k - k_min`.
    pub code_lengths: Vec<CodeLength>,
    pub mc_by_k: BTreeMap<usize, McValue>,
    pub posterior: ModelPosterior,
    pub k_sdms: usize,
    pub k_fs: usize,
    pub mc: f64,
    pub mc_fusion: f64,
    pub ddim: f64,
}

impl TimeRecord {
    pub fn score(&self, method: Method) -> f64 {
        match method {
            Method::Mc => self.mc,
            Method::McFusion => self.mc_fusion,
            Method::Ddim => self.ddim,
            Method::Sdms => self.k_sdms as f64,
            Method::Fs => self.k_fs as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TimeRecord>,
    pub methods: Vec<Method>,
    pub alarms: BTreeMap<Method, Vec<usize>>,
    pub eval: BTreeMap<Method, EvalResult>,
    pub detector: DetectorConfig,
    pub transition: Option<Transition>,
}

impl RunOutput {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn series(&self, method: Method) -> Vec<f64> {
        self.records.iter().map(|r| r.score(method)).collect()
    }

    pub fn detection_series(&self, method: Method) -> Vec<f64> {
        self.records.iter().map(|r| method.detection_value(r.score(method))).collect()
    }
}

struct KFit {
    params: MixtureParams,
    code_length: CodeLength,
    mc: McValue,
}

fn fit_one(panel: &TimePanel, k: usize, cfg: &RunConfig, nml: &NmlConfig, warm: Option<&MixtureParams>) -> Result<KFit> {
    // Restart seeds depend on k only, so identical panels give identical fits.
    let restarts = match (warm, cfg.warm_restarts) {
        (Some(_), Some(r)) => r,
        _ => cfg.em.restarts,
    };
    let em = EmConfig { seed: derive_seed(cfg.em.seed, &[k as u64]), restarts, ..cfg.em.clone() };
    let fit = fit_em(panel, k, &em, warm)?;
    let code_length = nml_code_length(panel, &fit.assign, k, nml)?;
    let mc = mixture_complexity(&fit.resp)?;
    Ok(KFit { params: fit.params, code_length, mc })
}

/// Score every time step, then raise alarms and evaluate when a transition
/// is known.
pub fn analyze_series(panels: &[TimePanel], cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let first = panels.first().ok_or_else(|| Error::InvalidInput("no panels to analyze".into()))?;
    let d = first.dim();
    if let Some(p) = panels.iter().find(|p| p.dim() != d) {
        return Err(Error::at_time(p.t(), Error::InvalidInput(format!("dimension {} differs from {d}", p.dim()))));
    }
    let nml = NmlConfig { cov_type: cfg.em.cov_type, ..cfg.nml };
    let fcfg = &cfg.fusion;
    let candidates: Vec<usize> = fcfg.candidates().collect();

    let mut warm: Vec<Option<MixtureParams>> = vec![None; candidates.len()];
    let mut state: Option<SelectorState> = None;
    let mut records = Vec::with_capacity(panels.len());

    for panel in panels {
        let t = panel.t();
        let mut step = || -> Result<TimeRecord> {
            let fits = candidates
                .par_iter()
                .zip(warm.par_iter())
                .map(|(&k, w)| fit_one(panel, k, cfg, &nml, if cfg.em.warm_start { w.as_ref() } else { None }))
                .collect::<Result<Vec<_>>>()?;
            let lengths: Vec<f64> = fits.iter().map(|f| f.code_length.nats).collect();
            let n = panel.len();

            let prev = match &state {
                Some(s) => s.clone(),
                None => SelectorState::new(fcfg, fusion::initial_select(&lengths, fcfg)?),
            };
            let posterior = fusion::model_posterior(&lengths, prev.k_prev, fcfg, n)?;
            let k_sdms = fusion::sdms_select(&lengths, prev.k_prev, fcfg)?;
            let eta = cfg.fixed_share.eta.unwrap_or(1.0 / (n as f64).sqrt());
            let losses: Vec<f64> = lengths.iter().map(|l| l / n as f64).collect();
            let (mut next, k_fs) = fusion::fixed_share_step(&prev, &losses, cfg.fixed_share.share, eta)?;
            next.k_prev = k_sdms;

            let mc_by_k: BTreeMap<usize, McValue> = candidates.iter().copied().zip(fits.iter().map(|f| f.mc)).collect();
            let record = TimeRecord {
                t,
                n,
                mc: mc_by_k[&k_sdms].0,
                mc_fusion: mc_fusion(&posterior, &mc_by_k)?.0,
                ddim: ddim_score(&posterior),
                code_lengths: fits.iter().map(|f| f.code_length).collect(),
                mc_by_k,
                posterior,
                k_sdms,
                k_fs,
            };
            warm = fits.into_iter().map(|f| Some(f.params)).collect();
            state = Some(next);
            Ok(record)
        };
        records.push(step().map_err(|e| Error::at_time(t, e))?);
    }

    let mut alarms = BTreeMap::new();
    let mut eval = BTreeMap::new();
    for &method in &cfg.methods {
        let y: Vec<f64> = records.iter().map(|r| method.detection_value(r.score(method))).collect();
        alarms.insert(method, detect::alarms(&y, &cfg.detector));
        if let Some(tr) = cfg.transition {
            eval.insert(method, detect::evaluate(&y, tr, cfg.benefit_horizon, &cfg.detector, &cfg.delta_grid)?);
        }
    }
    Ok(RunOutput {
        records,
        methods: cfg.methods.clone(),
        alarms,
        eval,
        detector: cfg.detector,
        transition: cfg.transition,
    })
}
