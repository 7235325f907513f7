//! Experiment runners.
//!
//! Each runner returns a typed report, and the report renders its output
//! files. Independent random streams are derived from the run seed by
//! XOR-ing a fixed tag per purpose, and member `i` of an ensemble always
//! uses stream `i`, so outputs do not depend on the thread count.

pub mod blochfp;
pub mod dataset;
pub mod forward;
pub mod petz;
pub mod reverse;
pub mod shadow;

use qdiff_core::{ScheduleMode, SchedulePolicy};

use crate::config::{Experiment, RunConfig};
use crate::error::Result;
use crate::output::Artifact;

/// Initial states of ensemble members.
pub(crate) const STATE_STREAM: u64 = 0x5354_4154;
/// Measurement axes, qubits and outcomes.
pub(crate) const MEASUREMENT_STREAM: u64 = 0x4d45_4153;
/// Network initialization and minibatch order.
pub(crate) const MODEL_STREAM: u64 = 0x4d4f_444c;
/// Evaluation members, kept apart from the training members.
pub(crate) const EVAL_STREAM: u64 = 0x4556_414c;
/// Independent target samples for distance estimates.
pub(crate) const TARGET_STREAM: u64 = 0x5441_5247;

pub(crate) fn policy(mode: ScheduleMode, seed: u64) -> SchedulePolicy {
    SchedulePolicy { mode, seed: seed ^ MEASUREMENT_STREAM }
}

/// Runs an experiment and renders its output files.
pub fn run(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let seed = cfg.seed;
    match &cfg.experiment {
        Experiment::ForwardVerify(c) => forward::run(c, seed)?.artifacts(),
        Experiment::Generate(c) => dataset::generate(c, seed)?.artifacts(),
        Experiment::Decode(c) => dataset::decode(c)?.artifacts(),
        Experiment::TrainReverse(c) => reverse::train_reverse(c, seed)?.artifacts(),
        Experiment::ReverseEval(c) => reverse::reverse_eval(c, seed)?.artifacts(),
        Experiment::Shadow(c) => shadow::run(c, seed)?.artifacts(),
        Experiment::PetzTfim(c) => petz::run(c, seed)?.artifacts(),
        Experiment::Blochfp(c) => blochfp::run(c)?.artifacts(),
    }
}
