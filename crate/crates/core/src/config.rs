//! TOML run configuration.
//!
//! Every key is optional and overrides the built-in default:
//!
//! ```toml
//! seed = 7
//! k_min = 1
//! k_max = 8
//! alpha = 0.1
//! beta = "inv_sqrt_n"      # or a number
//! nml_mode = "asymptotic_bic"
//! window = 5
//! delta = 0.01
//! direction = "two_sided"
//! methods = ["mc", "mc_fusion", "ddim", "sdms", "fs"]
//! delta_grid = [10.0, 1.0, 0.1]
//! transition = [26, 75]
//! benefit_horizon = 25
//! warm_restarts = 1        # fresh restarts when a warm start exists
//!
//! [em]
//! max_iter = 200
//! restarts = 5
//!
//! [fixed_share]
//! share = 0.05
//!
//! [domain]
//! radius = 1000.0
//!
//! [schedule]
//! name = "moving_overlap"
//! direction = "forward"
//! ```

use serde::Deserialize;

use crate::datagen::DriftSchedule;
use crate::detect::{Direction, Transition};
use crate::error::{Error, Result};
use crate::fusion::{BetaMode, FixedShareConfig};
use crate::gmm::EmConfig;
use crate::nml::{ComplexityMode, GaussianDomain};
use crate::pipeline::{Method, RunConfig};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Number(f64),
    Name(String),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<BetaSpec>,
    pub nml_mode: Option<ComplexityMode>,
    pub window: Option<usize>,
    pub delta: Option<f64>,
    pub direction: Option<Direction>,
    pub methods: Option<Vec<Method>>,
    pub delta_grid: Option<Vec<f64>>,
    pub transition: Option<[usize; 2]>,
    pub benefit_horizon: Option<usize>,
    pub warm_restarts: Option<usize>,
    pub em: Option<EmConfig>,
    pub fixed_share: Option<FixedShareConfig>,
    pub domain: Option<GaussianDomain>,
    pub schedule: Option<DriftSchedule>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Overlay the keys present in the file onto `cfg`.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(em) = &self.em {
            cfg.em = em.clone();
        }
        if let Some(seed) = self.seed {
            cfg.em.seed = seed;
        }
        if let Some(v) = self.k_min {
            cfg.fusion.k_min = v;
        }
        if let Some(v) = self.k_max {
            cfg.fusion.k_max = v;
        }
        if let Some(v) = self.alpha {
            cfg.fusion.alpha = v;
        }
        match &self.beta {
            Some(BetaSpec::Number(b)) => cfg.fusion.beta = b.to_string().parse::<BetaMode>()?,
            Some(BetaSpec::Name(s)) => cfg.fusion.beta = s.parse()?,
            None => {}
        }
        if let Some(v) = self.nml_mode {
            cfg.nml.mode = v;
        }
        if let Some(v) = self.domain {
            cfg.nml.domain = v;
        }
        if let Some(v) = self.window {
            cfg.detector.window = v;
        }
        if let Some(v) = self.delta {
            cfg.detector.delta = v;
        }
        if let Some(v) = self.direction {
            cfg.detector.direction = v;
        }
        if let Some(v) = &self.methods {
            cfg.methods = v.clone();
        }
        if let Some(v) = &self.delta_grid {
            cfg.delta_grid = v.clone();
        }
        if let Some([start, end]) = self.transition {
            cfg.transition = Some(Transition { start, end });
        }
        if let Some(v) = self.benefit_horizon {
            cfg.benefit_horizon = v;
        }
        if let Some(v) = self.warm_restarts {
            cfg.warm_restarts = Some(v);
        }
        if let Some(v) = self.fixed_share {
            cfg.fixed_share = v;
        }
        cfg.validate()
    }
}

/// Parse a configuration and apply it on top of the defaults.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    ConfigFile::parse(text)?.apply(&mut cfg)?;
    Ok(cfg)
}
