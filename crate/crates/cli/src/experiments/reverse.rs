//! Training the reverse control model and evaluating generated ensembles.

use qdiff_core::decoder::{decode, default_weight_cutoff};
use qdiff_core::forward::{simulate_member, step_count};
use qdiff_core::reverse_learn::{
    reverse_generate, simulate_training_set, train, wasserstein1_detail, Conditioning, ControlModel, ReverseOptions,
    TrainConfig, Wasserstein,
};
use qdiff_core::rng::stream;
use qdiff_core::{PauliVector, PureState};
use rayon::prelude::*;

use super::{policy, EVAL_STREAM, MODEL_STREAM, STATE_STREAM, TARGET_STREAM};
use crate::config::{ConditioningSource, ReverseEval, TrainReverse};
use crate::error::{io_error, Result, RunError};
use crate::output::{csv_bytes, num, Artifact};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub model: ControlModel,
    pub initial_loss: f64,
    pub loss_curve: Vec<f64>,
    pub pairs: usize,
}

pub fn train_reverse(cfg: &TrainReverse, seed: u64) -> Result<TrainedModel> {
    let n = cfg.source.n();
    let steps = step_count(cfg.t, cfg.dt)?;
    let cutoff = cfg.weight_cutoff.unwrap_or_else(|| default_weight_cutoff(n));
    let (pairs, _) = simulate_training_set(
        &cfg.source,
        &policy(cfg.schedule, seed),
        cfg.gamma,
        cfg.dt,
        steps,
        cfg.members,
        seed ^ STATE_STREAM,
        cfg.estimate,
        cutoff,
    )?;
    let mut model = ControlModel::new(n, cfg.dt, cfg.t, cfg.hidden, cutoff, seed ^ MODEL_STREAM);
    let opts = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        seed: seed ^ MODEL_STREAM,
        ..Default::default()
    };
    let report = train(&mut model, &pairs, &opts)?;
    Ok(TrainedModel { model, initial_loss: report.initial_loss, loss_curve: report.loss_curve, pairs: pairs.len() })
}

impl TrainedModel {
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut json = self.model.to_json()?;
        json.push('\n');
        let header = ["epoch", "loss"].map(String::from);
        let losses = std::iter::once(self.initial_loss).chain(self.loss_curve.iter().copied());
        let rows = losses.enumerate().map(|(e, l)| vec![e.to_string(), num(l)]);
        Ok(vec![Artifact::new("model.json", json.into_bytes()), Artifact::new("loss.csv", csv_bytes(&header, rows)?)])
    }
}

/// `W₁` between the generated ensemble and fresh source samples, from `t = T`
/// down to `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReverseCurve {
    pub times: Vec<f64>,
    pub distances: Vec<Wasserstein>,
}

impl ReverseCurve {
    /// `W₁(t = 0) / W₁(t = T)`.
    pub fn ratio(&self) -> f64 {
        match (self.distances.first(), self.distances.last()) {
            (Some(a), Some(b)) => b.value / a.value,
            _ => f64::NAN,
        }
    }

    /// Largest rise between consecutive points in units of their combined
    /// standard error; values up to 2 are within noise.
    pub fn max_rise(&self) -> f64 {
        self.distances
            .windows(2)
            .map(|w| (w[1].value - w[0].value) / w[0].std_error.hypot(w[1].std_error).max(1e-300))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let header = ["t", "w1", "std_error", "samples"].map(String::from);
        let rows = self
            .times
            .iter()
            .zip(&self.distances)
            .map(|(t, w)| vec![num(*t), num(w.value), num(w.std_error), w.samples.to_string()]);
        Ok(vec![Artifact::new("w1.csv", csv_bytes(&header, rows)?)])
    }
}

pub fn load_model(cfg: &ReverseEval) -> Result<ControlModel> {
    let text = std::fs::read_to_string(&cfg.model).map_err(io_error(&cfg.model))?;
    Ok(ControlModel::from_json(&text)?)
}

pub fn reverse_eval(cfg: &ReverseEval, seed: u64) -> Result<ReverseCurve> {
    evaluate_model(&load_model(cfg)?, cfg, seed)
}

/// Runs `members` forward trajectories to `T`, reverses them with `model`
/// and measures the distance to an independent source sample at every
/// snapshot.
pub fn evaluate_model(model: &ControlModel, cfg: &ReverseEval, seed: u64) -> Result<ReverseCurve> {
    if cfg.source.n() != model.n {
        return Err(RunError::Invalid(format!("model acts on {} qubits, source has {}", model.n, cfg.source.n())));
    }
    let steps = step_count(cfg.t, model.dt)?;
    let schedule = policy(cfg.schedule, seed);
    let cutoff = model.input_strings.iter().map(|p| p.weight()).max().unwrap_or(1);
    let forward: Vec<(PureState, Option<Vec<PauliVector>>)> = (0..cfg.members)
        .into_par_iter()
        .map(|i| {
            let psi0 = cfg.source.sample(&mut stream(seed ^ EVAL_STREAM, i as u64))?;
            let (fin, record) = simulate_member(&psi0, &schedule, cfg.gamma, model.dt, steps, i as u64)?;
            let series = match cfg.conditioning {
                ConditioningSource::SelfConditioned => None,
                ConditioningSource::Decoded => Some(decode(&record, cfg.estimate, &psi0, cutoff)?.z_series),
            };
            Ok((fin, series))
        })
        .collect::<Result<_>>()?;
    let (start, series): (Vec<PureState>, Vec<Option<Vec<PauliVector>>>) = forward.into_iter().unzip();
    let series: Vec<Vec<PauliVector>> = series.into_iter().flatten().collect();
    let target: Vec<PureState> = (0..cfg.members)
        .map(|i| Ok(cfg.source.sample(&mut stream(seed ^ TARGET_STREAM, i as u64))?))
        .collect::<Result<_>>()?;
    let conditioning = match cfg.conditioning {
        ConditioningSource::SelfConditioned => Conditioning::SelfConditioned,
        ConditioningSource::Decoded => Conditioning::Decoded(&series),
    };
    let opts = ReverseOptions { steps, stride: cfg.stride, flow_scale: cfg.flow_scale, conditioning };
    let run = reverse_generate(model, &start, &opts)?;
    let distances = run.snapshots.iter().map(|s| Ok(wasserstein1_detail(s, &target)?)).collect::<Result<_>>()?;
    Ok(ReverseCurve { times: run.times, distances })
}
