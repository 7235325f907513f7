//! Local Petz recovery of decohered TFIM ground states.

use std::collections::BTreeSet;

use qdiff_core::forward::{simulate_member, step_count};
use qdiff_core::pauli::strings_on;
use qdiff_core::petz::{
    build_schedule, forward_state, round_robin, run_recovery, tfim_ground_state, RecoveryOptions, RecoveryPoint,
    RegionPriors,
};
use qdiff_core::shadows::{reconstruct, ReconstructOptions};
use qdiff_core::states::fidelity_with_pure;
use qdiff_core::{DensityMatrix, MeasurementRecord, PauliString, PauliVector, PureState, ScheduleMode};
use rayon::prelude::*;

use super::policy;
use crate::config::{PetzTfim, PriorSource};
use crate::error::Result;
use crate::output::{csv_bytes, num, Artifact};

#[derive(Clone, Debug, PartialEq)]
pub struct FieldResult {
    pub bx: f64,
    pub energy: f64,
    pub gap: f64,
    pub start_fidelity: f64,
    pub final_fidelity: f64,
    pub trace: Vec<RecoveryPoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PetzReport {
    pub fields: Vec<FieldResult>,
}

/// Priors from classical shadows of `samples` weak-measurement records of the
/// ground state, covering every string supported on a region.
fn shadow_priors(
    ground: &PureState,
    regions: &[Vec<usize>],
    cfg: &PetzTfim,
    samples: usize,
    t: f64,
    weight_floor: f64,
    seed: u64,
) -> Result<RegionPriors> {
    let n = cfg.n;
    let steps = step_count(t, cfg.dt)?;
    let schedule = policy(ScheduleMode::UniformRandom, seed);
    let records: Vec<MeasurementRecord> = (0..samples)
        .into_par_iter()
        .map(|i| Ok(simulate_member(ground, &schedule, cfg.gamma, cfg.dt, steps, i as u64)?.1))
        .collect::<Result<_>>()?;
    let strings: BTreeSet<PauliString> =
        regions.iter().flat_map(|r| strings_on(n, r)).filter(|p| !p.is_identity()).collect();
    let strings: Vec<PauliString> = strings.into_iter().collect();
    let opts = ReconstructOptions { weight_floor, ..Default::default() };
    let mut z = PauliVector::new(n);
    for e in reconstruct(&records, &strings, &opts)? {
        z.set(e.string, e.mean);
    }
    Ok(RegionPriors::from_pauli(&z, regions, cfg.spd_floor)?)
}

pub fn run(cfg: &PetzTfim, seed: u64) -> Result<PetzReport> {
    let steps = step_count(cfg.t_max, cfg.dt)?;
    let mut fields = Vec::with_capacity(cfg.bx.len());
    for &bx in &cfg.bx {
        let ground = tfim_ground_state(cfg.n, cfg.j, bx)?;
        let rho0 = ground.state.projector().into_matrix();
        let schedule =
            build_schedule(&round_robin(cfg.n, steps), cfg.n, cfg.half_width, cfg.boundary, cfg.gamma, cfg.dt)?;
        let regions = schedule.regions();
        let priors = match cfg.prior {
            PriorSource::Exact => RegionPriors::from_state(&rho0, cfg.n, &regions, cfg.spd_floor)?,
            PriorSource::Shadow { samples, t, weight_floor } => {
                shadow_priors(&ground.state, &regions, cfg, samples, t, weight_floor, seed)?
            }
        };
        let start = forward_state(&rho0, cfg.n, &schedule.final_counts, cfg.gamma, cfg.dt);
        let start_fidelity = fidelity_with_pure(&DensityMatrix::new(start.clone())?, ground.state.amplitudes())?;
        let opts = RecoveryOptions { method: cfg.method, fidelity_stride: cfg.fidelity_stride, ..Default::default() };
        let outcome = run_recovery(&schedule, &priors, &start, Some(&rho0), &opts)?;
        fields.push(FieldResult {
            bx,
            energy: ground.energy,
            gap: ground.gap,
            start_fidelity,
            final_fidelity: outcome.final_fidelity.unwrap_or(f64::NAN),
            trace: outcome.trace,
        });
    }
    Ok(PetzReport { fields })
}

impl PetzReport {
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let header = ["bx", "energy", "gap", "start_fidelity", "final_fidelity"].map(String::from);
        let rows = self
            .fields
            .iter()
            .map(|f| vec![num(f.bx), num(f.energy), num(f.gap), num(f.start_fidelity), num(f.final_fidelity)]);
        let summary = csv_bytes(&header, rows)?;
        let header = ["bx", "step", "t", "fidelity", "min_prior_eigenvalue"].map(String::from);
        let rows = self.fields.iter().flat_map(|f| {
            f.trace.iter().map(move |p| {
                vec![
                    num(f.bx),
                    p.step.to_string(),
                    num(p.t),
                    p.fidelity.map(num).unwrap_or_default(),
                    num(p.min_prior_eigenvalue),
                ]
            })
        });
        let trace = csv_bytes(&header, rows)?;
        Ok(vec![Artifact::new("petz_tfim.csv", summary), Artifact::new("petz_trace.csv", trace)])
    }
}
