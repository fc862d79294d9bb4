use std::path::{Path, PathBuf};

use lrip_core::decoder::DecoderOptions;
use lrip_core::spaces::Pseudometric;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Certify,
    Decode,
    IopExperiment,
    RecommendM,
    ConcentrationSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Certify => "certify",
            Experiment::Decode => "decode",
            Experiment::IopExperiment => "iop-experiment",
            Experiment::RecommendM => "recommend-m",
            Experiment::ConcentrationSweep => "concentration-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Random,
    KSparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub s: usize,
    #[serde(rename = "N", alias = "n", default = "one")]
    pub n: usize,
    #[serde(rename = "M", alias = "norm_bound", default = "unit")]
    pub norm_bound: f64,
    #[serde(default = "random_kind")]
    pub kind: ModelKind,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorChoice {
    LinearGaussian,
    RandomFourier,
    /// Identity matrix (`m = d`), for exact fixtures.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorChoice,
    #[serde(default)]
    pub m: Option<usize>,
    /// Input dimension; must match the model when given.
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorMode {
    Uniform,
    Anchored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifierConfig {
    /// Pairs per LRIP estimate.
    pub pairs: usize,
    /// Pairs per boundedness estimate (defaults to `pairs`).
    pub bp_pairs: Option<usize>,
    /// Independent operator draws per configuration.
    pub operator_draws: usize,
    /// Decode / IOP trials.
    pub trials: usize,
    /// Operator draws per concentration estimate.
    pub draws: usize,
    /// Concentration repetitions (medians are reported).
    pub repetitions: usize,
    pub t_grid: Vec<f64>,
    pub t: f64,
    pub rho: f64,
    pub c0: f64,
    pub eta: f64,
    pub lambda: f64,
    pub anchor_mode: AnchorMode,
    pub eps_near: Option<f64>,
    pub bp_scale: f64,
    pub noise_scale: f64,
    pub model_error_scale: f64,
    /// Infimize `d'` over sampled model points as well as the projection.
    pub uniform_iop: bool,
    /// Pairs for the LRIP induced by the decoder (0 skips it).
    pub induced_pairs: usize,
    /// Measurement counts to sweep. `certify` always runs the operator's `m` as
    /// well; `concentration-sweep` falls back to it when the sweep is empty.
    pub m_sweep: Vec<usize>,
    pub alpha_threshold: Option<f64>,
    pub beta_threshold: Option<f64>,
    /// Fixed pair for the concentration sweep (defaults to two model points).
    pub pair: Option<(Vec<f64>, Vec<f64>)>,
}

impl Default for CertifierConfig {
    fn default() -> Self {
        Self {
            pairs: 1000,
            bp_pairs: None,
            operator_draws: 1,
            trials: 100,
            draws: 200,
            repetitions: 5,
            t_grid: vec![0.0, 0.1, 0.2, 0.3, 0.5],
            t: 0.5,
            rho: 0.01,
            c0: 1.0,
            eta: 0.0,
            lambda: 0.0,
            anchor_mode: AnchorMode::Uniform,
            eps_near: Some(0.1),
            bp_scale: 1.0,
            noise_scale: 0.0,
            model_error_scale: 0.0,
            uniform_iop: false,
            induced_pairs: 0,
            m_sweep: Vec::new(),
            alpha_threshold: None,
            beta_threshold: None,
            pair: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Series to write as `<name>.csv`.
    pub csv: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; `None` uses the rayon default. Results do not depend on it.
    #[serde(default)]
    pub workers: Option<usize>,
    pub model: ModelConfig,
    pub operator: OperatorConfig,
    /// Defaults to the kernel metric for Fourier operators, Euclidean otherwise.
    #[serde(default)]
    pub metric: Option<Pseudometric<f64>>,
    #[serde(default)]
    pub decoder: DecoderOptions<f64>,
    #[serde(default)]
    pub certifier: CertifierConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn random_kind() -> ModelKind {
    ModelKind::Random
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> LabResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn sigma(&self) -> f64 {
        self.operator.sigma.unwrap_or(1.0)
    }

    pub fn m(&self) -> usize {
        match self.operator.kind {
            OperatorChoice::Identity => self.model.d,
            _ => self.operator.m.unwrap_or(self.model.d),
        }
    }

    pub fn metric(&self) -> Pseudometric<f64> {
        match (&self.metric, self.operator.kind) {
            (Some(m), _) => *m,
            (None, OperatorChoice::RandomFourier) => Pseudometric::GaussianKernel { sigma: self.sigma() },
            (None, _) => Pseudometric::Euclidean,
        }
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> LabResult<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        let m = &self.model;
        if m.d == 0 || m.s == 0 || m.s > m.d || m.n == 0 {
            return bad(format!("model needs 1 <= s <= d and N >= 1 (d={}, s={}, N={})", m.d, m.s, m.n));
        }
        if !(m.norm_bound >= 0.0) || !m.norm_bound.is_finite() {
            return bad("model norm bound M must be finite and >= 0".into());
        }
        if m.kind == ModelKind::KSparse && m.n != 1 && m.n != binomial(m.d, m.s) {
            return bad(format!("k-sparse model has C(d, s) = {} subspaces, config says N = {}", binomial(m.d, m.s), m.n));
        }
        if let Some(d) = self.operator.d {
            if d != m.d {
                return Err(LabError::Dimension(format!("operator input dimension {d} vs model dimension {}", m.d)));
            }
        }
        match self.operator.kind {
            OperatorChoice::Identity => {
                if let Some(om) = self.operator.m {
                    if om != m.d {
                        return Err(LabError::Dimension(format!("identity operator needs m = d = {}, got {om}", m.d)));
                    }
                }
            }
            _ => {
                if self.operator.m == Some(0) {
                    return bad("operator needs m >= 1".into());
                }
            }
        }
        if let Some(s) = self.operator.sigma {
            if !(s > 0.0) || !s.is_finite() {
                return bad("operator sigma must be positive".into());
            }
        }
        if let Some(metric) = &self.metric {
            metric.validate().map_err(LabError::from)?;
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        let c = &self.certifier;
        if c.pairs == 0 || c.operator_draws == 0 || c.repetitions == 0 {
            return bad("pairs, operator_draws and repetitions must be >= 1".into());
        }
        if c.m_sweep.contains(&0) {
            return bad("m_sweep entries must be >= 1".into());
        }
        if self.decoder.restarts == 0 {
            return bad("decoder.restarts must be >= 1".into());
        }
        if let Some((x, xp)) = &c.pair {
            if x.len() != m.d || xp.len() != m.d {
                return Err(LabError::Dimension(format!("concentration pair must have length d = {}", m.d)));
            }
        }
        for &t in &c.t_grid {
            if !(t >= 0.0) || !t.is_finite() {
                return bad("t_grid entries must be finite and >= 0".into());
            }
        }
        Ok(())
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}
