//! Run configuration: a JSON document selecting the mode, the seeds and the
//! scenario. Unknown keys are rejected everywhere.

use std::path::PathBuf;

use ambilearn_core::ambiguity::RadiusMode;
use ambilearn_core::noise::NoiseSpec;
use ambilearn_core::predictors::{
    AlphaSchedule, Environment, MixtureCoefficients, Predictor, PredictorRegistry, PredictorSet, Probe, Truth,
};
use ambilearn_core::robot_sim::{ScenarioConfig, ZoneMap};
use ambilearn_core::{seeded_rng, Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Simulate,
    Verify,
    Sweep,
}

/// Either a seed count (starting at `seed`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(usize),
    List(Vec<u64>),
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::Count(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seeds: Seeds,
    /// First seed when `seeds` is a count.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Overrides the radius mode of the scenario when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_mode: Option<RadiusMode>,
    #[serde(default = "default_true")]
    pub plots: bool,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub sweep: SweepSettings,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    Robot {
        #[serde(default)]
        config: ScenarioConfig,
        #[serde(default)]
        zones: ZoneMap,
    },
    Generic(GenericSpec),
}

/// A registry-built predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSpec {
    pub name: String,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    /// Dynamics known exactly.
    Known(PredictorSpec),
    /// Mixture of `predictors`; `(start_t, α★)` pieces, the first at `t = 0`.
    Mixture { pieces: Vec<(usize, Vec<f64>)> },
}

/// Environment `x⁺ = f(t, x, d) + w` with a constant input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericSpec {
    #[serde(default)]
    pub predictors: Vec<PredictorSpec>,
    pub truth: TruthSpec,
    pub noise: NoiseSpec,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub input: Vec<f64>,
    pub steps: usize,
    pub t0: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Noise level used by the bounds; defaults to the noise model's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "default_sv_threshold")]
    pub sv_threshold: f64,
    #[serde(default)]
    pub unscaled_components: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_constant: Option<f64>,
    /// Points for the predictor independence test; defaults to seeded
    /// perturbations of `x0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<Probe>>,
}

fn default_beta() -> f64 {
    0.05
}

fn default_theta() -> f64 {
    0.01
}

fn default_sv_threshold() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    /// Robot: check every `stride`-th step.
    pub stride: usize,
    /// Size of the true-law sample; robot default is one atom per window entry.
    pub reference_atoms: Option<usize>,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            stride: 500,
            reference_atoms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    pub t0_grid: Vec<usize>,
    /// Theoretical curves use `γ = gamma_ratio · n · c`.
    pub gamma_ratio: f64,
    pub stride: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            t0_grid: vec![50, 100, 300, 600],
            gamma_ratio: 1.1,
            stride: 100,
        }
    }
}

/// A generic environment, ready to run.
pub struct GenericSetup {
    pub env: Environment,
    /// Predictor set of a mixture truth.
    pub set: Option<PredictorSet>,
    pub known: Option<Predictor>,
    pub x0: nalgebra::DVector<f64>,
    pub input: nalgebra::DVector<f64>,
    pub sigma: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Seeds::Count(n) => ambilearn_core::verification::seed_range(self.seed, *n),
            Seeds::List(v) => v.clone(),
        }
    }

    /// Robot scenario with the command-level overrides applied.
    pub fn robot(&self) -> Option<(ScenarioConfig, ZoneMap)> {
        match &self.scenario {
            ScenarioSpec::Robot { config, zones } => {
                let mut cfg = config.clone();
                if let Some(mode) = self.radius_mode {
                    cfg.radius.mode = mode;
                }
                Some((cfg, zones.clone()))
            }
            ScenarioSpec::Generic(_) => None,
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if self.seed_list().is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        match &self.scenario {
            ScenarioSpec::Robot { .. } => {
                let (cfg, zones) = self.robot().expect("robot scenario");
                cfg.validate()?;
                zones.alpha_stars(&cfg.predictor_offsets)?;
            }
            ScenarioSpec::Generic(g) => {
                g.build()?;
                if self.mode == Mode::Sweep {
                    return Err(Error::InvalidConfig("sweep mode needs a robot scenario".into()));
                }
            }
        }
        if self.mode == Mode::Verify && self.verify.stride == 0 {
            return Err(Error::InvalidConfig("`verify.stride` must be positive".into()));
        }
        if self.mode == Mode::Sweep {
            if self.sweep.t0_grid.is_empty() {
                return Err(Error::InvalidConfig("`sweep.t0_grid` must not be empty".into()));
            }
            if self.sweep.t0_grid.contains(&0) || self.sweep.stride == 0 {
                return Err(Error::InvalidConfig(
                    "sweep window lengths and stride must be positive".into(),
                ));
            }
            if self.sweep.gamma_ratio.is_nan() || self.sweep.gamma_ratio <= 1.0 {
                return Err(Error::InvalidConfig("`sweep.gamma_ratio` must exceed 1".into()));
            }
        }
        Ok(())
    }
}

impl GenericSpec {
    pub fn build(&self) -> Result<GenericSetup> {
        if self.steps == 0 || self.t0 == 0 {
            return Err(Error::InvalidConfig("`steps` and `t0` must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "`beta` must lie in (0, 1), got {}",
                self.beta
            )));
        }
        let registry = PredictorRegistry::builtin();
        let noise = self.noise.build()?;
        let sigma = self.sigma.unwrap_or(noise.sigma());
        if noise.sigma() > sigma {
            return Err(Error::InvalidConfig(format!(
                "noise sigma {} exceeds `sigma` {sigma}",
                noise.sigma()
            )));
        }
        let x0 = nalgebra::DVector::from_vec(self.x0.clone());
        let input = nalgebra::DVector::from_vec(self.input.clone());
        let (truth, set, known) = match &self.truth {
            TruthSpec::Known(spec) => {
                let f = registry.build(&spec.name, &spec.params)?;
                (Truth::Known(f.clone()), None, Some(f))
            }
            TruthSpec::Mixture { pieces } => {
                if self.predictors.is_empty() {
                    return Err(Error::InvalidConfig("a mixture truth needs `predictors`".into()));
                }
                let preds = self
                    .predictors
                    .iter()
                    .map(|p| registry.build(&p.name, &p.params))
                    .collect::<Result<Vec<_>>>()?;
                let probes = self.probes.clone().unwrap_or_else(|| self.default_probes(&preds));
                let set = PredictorSet::new(preds, &probes)?;
                let pieces = pieces
                    .iter()
                    .map(|(t, a)| Ok((*t, MixtureCoefficients::from_slice(a)?)))
                    .collect::<Result<Vec<_>>>()?;
                let schedule = AlphaSchedule::piecewise(pieces)?;
                (
                    Truth::Mixture {
                        set: set.clone(),
                        schedule,
                    },
                    Some(set),
                    None,
                )
            }
        };
        let env = Environment::new(truth, noise)?;
        if env.dim_state() != x0.len() || env.dim_input() != input.len() {
            return Err(Error::InvalidConfig(format!(
                "`x0`/`input` have lengths {}/{}, the dynamics expect {}/{}",
                x0.len(),
                input.len(),
                env.dim_state(),
                env.dim_input()
            )));
        }
        Ok(GenericSetup {
            env,
            set,
            known,
            x0,
            input,
            sigma,
        })
    }

    fn default_probes(&self, preds: &[Predictor]) -> Vec<Probe> {
        let mut rng = seeded_rng(0);
        (0..3 * preds.len().max(1))
            .map(|k| Probe {
                t: k,
                x: self.x0.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect(),
                d: self.input.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect(),
            })
            .collect()
    }
}
