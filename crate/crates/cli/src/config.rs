//! Experiment configuration files.
//!
//! A config is a TOML document with an optional top-level `seed` and one
//! table per experiment, named after its subcommand:
//!
//! ```toml
//! seed = 7
//!
//! [shadow]
//! state = { kind = "bell" }
//! gamma = 1.0
//! dt = 0.01
//! t = 6.0
//! samples = 100000
//! ```
//!
//! Unknown keys are rejected and parse errors carry line and column. A
//! `--seed` flag overrides the file; a run without any seed is refused.
//! Input file paths are taken relative to the working directory and stored
//! as absolute paths in the manifest.

use std::fmt;
use std::path::{Path, PathBuf};

use qdiff_core::decoder::InitialEstimate;
use qdiff_core::ensembles::SourceEnsemble;
use qdiff_core::petz::{Boundary, TwirlMethod, DEFAULT_SPD_FLOOR};
use qdiff_core::ScheduleMode;
use serde::{Deserialize, Serialize};

use crate::error::{io_error, Result, RunError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ForwardVerify,
    Generate,
    Decode,
    TrainReverse,
    ReverseEval,
    Shadow,
    PetzTfim,
    Blochfp,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::ForwardVerify,
        ExperimentKind::Generate,
        ExperimentKind::Decode,
        ExperimentKind::TrainReverse,
        ExperimentKind::ReverseEval,
        ExperimentKind::Shadow,
        ExperimentKind::PetzTfim,
        ExperimentKind::Blochfp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ForwardVerify => "forward-verify",
            ExperimentKind::Generate => "generate",
            ExperimentKind::Decode => "decode",
            ExperimentKind::TrainReverse => "train-reverse",
            ExperimentKind::ReverseEval => "reverse-eval",
            ExperimentKind::Shadow => "shadow",
            ExperimentKind::PetzTfim => "petz-tfim",
            ExperimentKind::Blochfp => "blochfp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn uniform_schedule() -> ScheduleMode {
    ScheduleMode::UniformRandom
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

/// Initial state of the forward check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// `|0…0⟩`.
    Zero,
    /// Every qubit along `(1, 1, 1)/√3`, so all single-qubit Paulis are nonzero.
    #[default]
    Tilted,
    /// Haar-random pure state drawn from the run seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardVerify {
    pub n: Vec<usize>,
    pub gamma: Vec<f64>,
    pub t: Vec<f64>,
    pub dt: f64,
    pub trajectories: usize,
    #[serde(default = "uniform_schedule")]
    pub schedule: ScheduleMode,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default = "one")]
    pub max_weight: usize,
}

/// Decoded expectation series written next to a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    #[serde(default)]
    pub estimate: InitialEstimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_cutoff: Option<usize>,
    #[serde(default = "one")]
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generate {
    pub source: SourceEnsemble,
    pub gamma: f64,
    pub dt: f64,
    pub t: f64,
    pub members: usize,
    #[serde(default = "uniform_schedule")]
    pub schedule: ScheduleMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidecar: Option<Sidecar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decode {
    /// Records file written by `generate`.
    pub records: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_cutoff: Option<usize>,
}

fn default_hidden() -> usize {
    32
}

fn default_epochs() -> usize {
    20
}

fn default_batch() -> usize {
    256
}

fn default_learning_rate() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainReverse {
    pub source: SourceEnsemble,
    pub gamma: f64,
    pub dt: f64,
    pub t: f64,
    pub members: usize,
    #[serde(default = "uniform_schedule")]
    pub schedule: ScheduleMode,
    #[serde(default)]
    pub estimate: InitialEstimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_cutoff: Option<usize>,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditioningSource {
    /// Expectations of the state being generated.
    #[default]
    SelfConditioned,
    /// Decoded forward series of each evaluation member.
    Decoded,
}

fn default_stride() -> usize {
    10
}

fn default_flow_scale() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReverseEval {
    /// Model file written by `train-reverse`.
    pub model: PathBuf,
    pub source: SourceEnsemble,
    pub gamma: f64,
    pub t: f64,
    pub members: usize,
    #[serde(default = "uniform_schedule")]
    pub schedule: ScheduleMode,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_flow_scale")]
    pub flow_scale: f64,
    #[serde(default)]
    pub conditioning: ConditioningSource,
    #[serde(default)]
    pub estimate: InitialEstimate,
}

/// Known source state of the shadow experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShadowState {
    Zero {
        n: usize,
    },
    /// `(|00⟩ + |11⟩)/√2`.
    Bell,
    /// Ginibre-random full-rank state drawn from the run seed.
    RandomMixed {
        n: usize,
    },
}

fn default_weight_floor() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shadow {
    pub state: ShadowState,
    pub gamma: f64,
    pub dt: f64,
    pub t: f64,
    pub samples: usize,
    #[serde(default = "two")]
    pub max_weight: usize,
    #[serde(default = "uniform_schedule")]
    pub schedule: ScheduleMode,
    #[serde(default = "default_weight_floor")]
    pub weight_floor: f64,
}

/// Where the local priors of the Petz maps come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSource {
    /// Reduced states of the exact ground state.
    #[default]
    Exact,
    /// Shadow estimates from `samples` records of duration `t`.
    Shadow {
        samples: usize,
        t: f64,
        #[serde(default = "default_weight_floor")]
        weight_floor: f64,
    },
}

fn default_spd_floor() -> f64 {
    DEFAULT_SPD_FLOOR
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PetzTfim {
    pub n: usize,
    pub j: f64,
    pub bx: Vec<f64>,
    pub gamma: f64,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "one")]
    pub half_width: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default = "default_spd_floor")]
    pub spd_floor: f64,
    #[serde(default)]
    pub method: TwirlMethod,
    #[serde(default)]
    pub fidelity_stride: usize,
    #[serde(default)]
    pub prior: PriorSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub l: usize,
    pub m: i64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_theta: usize,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blochfp {
    pub gamma: f64,
    #[serde(default = "one")]
    pub n: usize,
    pub t: f64,
    pub l_max: usize,
    /// Harmonic coefficients added to the uniform density.
    #[serde(default)]
    pub modes: Vec<Mode>,
    /// Resolutions of the backward solve; the field table uses the last one.
    pub grids: Vec<GridSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_verify: Option<ForwardVerify>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<Generate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decode: Option<Decode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_reverse: Option<TrainReverse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverse_eval: Option<ReverseEval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow: Option<Shadow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub petz_tfim: Option<PetzTfim>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blochfp: Option<Blochfp>,
}

/// One experiment with its settings.
#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    ForwardVerify(ForwardVerify),
    Generate(Generate),
    Decode(Decode),
    TrainReverse(TrainReverse),
    ReverseEval(ReverseEval),
    Shadow(Shadow),
    PetzTfim(PetzTfim),
    Blochfp(Blochfp),
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::ForwardVerify(_) => ExperimentKind::ForwardVerify,
            Experiment::Generate(_) => ExperimentKind::Generate,
            Experiment::Decode(_) => ExperimentKind::Decode,
            Experiment::TrainReverse(_) => ExperimentKind::TrainReverse,
            Experiment::ReverseEval(_) => ExperimentKind::ReverseEval,
            Experiment::Shadow(_) => ExperimentKind::Shadow,
            Experiment::PetzTfim(_) => ExperimentKind::PetzTfim,
            Experiment::Blochfp(_) => ExperimentKind::Blochfp,
        }
    }
}

/// An experiment together with the seed it runs under.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub experiment: Experiment,
}

impl RunConfig {
    pub fn new(seed: u64, experiment: Experiment) -> Self {
        RunConfig { seed, experiment }
    }

    /// Single-section config that reproduces this run.
    pub fn to_config_file(&self) -> ConfigFile {
        let mut file = ConfigFile { seed: Some(self.seed), ..Default::default() };
        match &self.experiment {
            Experiment::ForwardVerify(c) => file.forward_verify = Some(c.clone()),
            Experiment::Generate(c) => file.generate = Some(c.clone()),
            Experiment::Decode(c) => file.decode = Some(c.clone()),
            Experiment::TrainReverse(c) => file.train_reverse = Some(c.clone()),
            Experiment::ReverseEval(c) => file.reverse_eval = Some(c.clone()),
            Experiment::Shadow(c) => file.shadow = Some(c.clone()),
            Experiment::PetzTfim(c) => file.petz_tfim = Some(c.clone()),
            Experiment::Blochfp(c) => file.blochfp = Some(c.clone()),
        }
        file
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        let mut file =
            Self::parse(&text).map_err(|e| RunError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        file.anchor_paths(Path::new("."));
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| RunError::Invalid(format!("config cannot be written as TOML: {e}")))
    }

    /// Makes input file paths relative to `base` absolute.
    pub fn anchor_paths(&mut self, base: &Path) {
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                let joined = base.join(&*p);
                *p = std::fs::canonicalize(&joined).unwrap_or(joined);
            }
        };
        if let Some(d) = &mut self.decode {
            anchor(&mut d.records);
        }
        if let Some(r) = &mut self.reverse_eval {
            anchor(&mut r.model);
        }
    }

    /// Picks the section for `kind` and the seed (`seed_override` wins).
    pub fn resolve(&self, kind: ExperimentKind, seed_override: Option<u64>) -> Result<RunConfig> {
        let missing = || RunError::MissingSection(kind.name());
        let experiment = match kind {
            ExperimentKind::ForwardVerify => {
                Experiment::ForwardVerify(self.forward_verify.clone().ok_or_else(missing)?)
            }
            ExperimentKind::Generate => Experiment::Generate(self.generate.clone().ok_or_else(missing)?),
            ExperimentKind::Decode => Experiment::Decode(self.decode.clone().ok_or_else(missing)?),
            ExperimentKind::TrainReverse => Experiment::TrainReverse(self.train_reverse.clone().ok_or_else(missing)?),
            ExperimentKind::ReverseEval => Experiment::ReverseEval(self.reverse_eval.clone().ok_or_else(missing)?),
            ExperimentKind::Shadow => Experiment::Shadow(self.shadow.clone().ok_or_else(missing)?),
            ExperimentKind::PetzTfim => Experiment::PetzTfim(self.petz_tfim.clone().ok_or_else(missing)?),
            ExperimentKind::Blochfp => Experiment::Blochfp(self.blochfp.clone().ok_or_else(missing)?),
        };
        let seed = seed_override.or(self.seed).ok_or(RunError::MissingSeed)?;
        Ok(RunConfig { seed, experiment })
    }
}
