//! Shadow reconstruction of a known source state.

use qdiff_core::ensembles::{random_mixed, sample_from_mixed};
use qdiff_core::forward::{simulate_member, step_count};
use qdiff_core::linalg::CMat;
use qdiff_core::pauli::strings_up_to_weight;
use qdiff_core::rng::stream;
use qdiff_core::shadows::{reconstruct, ReconstructOptions, ShadowEstimate};
use qdiff_core::{DensityMatrix, MeasurementRecord, PureState, C64};
use rayon::prelude::*;

use super::{policy, STATE_STREAM};
use crate::config::{Shadow, ShadowState};
use crate::error::Result;
use crate::output::{csv_bytes, num, Artifact};

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowRow {
    pub estimate: ShadowEstimate,
    pub truth: f64,
}

impl ShadowRow {
    pub fn z_score(&self) -> f64 {
        (self.estimate.mean - self.truth) / self.estimate.std_error
    }

    /// Single-record variance over the squared shadow norm `‖P‖²_sh`.
    pub fn variance_ratio(&self) -> f64 {
        self.estimate.variance / self.estimate.shadow_norm
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowReport {
    pub rows: Vec<ShadowRow>,
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell_state() -> PureState {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = C64::new(0.0, 0.0);
    PureState::from_slice(&[s, zero, zero, s]).expect("unit vector")
}

enum Source {
    Pure(PureState),
    Mixed(CMat),
}

impl Source {
    fn new(state: &ShadowState, seed: u64) -> Self {
        match *state {
            ShadowState::Zero { n } => Source::Pure(PureState::basis(n, 0)),
            ShadowState::Bell => Source::Pure(bell_state()),
            ShadowState::RandomMixed { n } => Source::Mixed(random_mixed(n, &mut stream(seed ^ STATE_STREAM, 0))),
        }
    }

    fn density(&self) -> CMat {
        match self {
            Source::Pure(psi) => psi.projector().into_matrix(),
            Source::Mixed(rho) => rho.clone(),
        }
    }

    fn member(&self, i: usize, seed: u64) -> Result<PureState> {
        match self {
            Source::Pure(psi) => Ok(psi.clone()),
            Source::Mixed(rho) => Ok(sample_from_mixed(rho, &mut stream(seed ^ STATE_STREAM, i as u64 + 1))?),
        }
    }
}

pub fn run(cfg: &Shadow, seed: u64) -> Result<ShadowReport> {
    let source = Source::new(&cfg.state, seed);
    let rho = DensityMatrix::new(source.density())?;
    let steps = step_count(cfg.t, cfg.dt)?;
    let schedule = policy(cfg.schedule, seed);
    let records: Vec<MeasurementRecord> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| Ok(simulate_member(&source.member(i, seed)?, &schedule, cfg.gamma, cfg.dt, steps, i as u64)?.1))
        .collect::<Result<_>>()?;
    let targets = strings_up_to_weight(rho.n(), cfg.max_weight);
    let opts = ReconstructOptions { weight_floor: cfg.weight_floor, ..Default::default() };
    let rows = reconstruct(&records, &targets, &opts)?
        .into_iter()
        .map(|estimate| {
            let truth = rho.expectation(&estimate.string);
            ShadowRow { estimate, truth }
        })
        .collect();
    Ok(ShadowReport { rows })
}

impl ShadowReport {
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let header = [
            "string",
            "weight",
            "estimate",
            "std_error",
            "truth",
            "z_score",
            "shadow_norm",
            "variance_ratio",
            "samples",
        ]
        .map(String::from);
        let rows = self.rows.iter().map(|r| {
            let e = &r.estimate;
            vec![
                e.string.label(),
                e.string.weight().to_string(),
                num(e.mean),
                num(e.std_error),
                num(r.truth),
                num(r.z_score()),
                num(e.shadow_norm),
                num(r.variance_ratio()),
                e.samples.to_string(),
            ]
        });
        Ok(vec![Artifact::new("shadow.csv", csv_bytes(&header, rows)?)])
    }
}
