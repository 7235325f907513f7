//! Monte-Carlo check of the averaged channel.

use qdiff_core::ensembles::random_pure;
use qdiff_core::forward::{channel_weight_f, ensemble_expectations, step_count};
use qdiff_core::pauli::strings_up_to_weight;
use qdiff_core::rng::stream;
use qdiff_core::{BlochProduct, PauliString, PureState};

use super::{policy, STATE_STREAM};
use crate::config::{ForwardVerify, InitialState};
use crate::error::Result;
use crate::output::{csv_bytes, num, Artifact};

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardRow {
    pub n: usize,
    pub gamma: f64,
    pub t: f64,
    pub string: PauliString,
    pub initial: f64,
    pub mean: f64,
    pub std_error: f64,
    pub closed_form: f64,
}

impl ForwardRow {
    /// Deviation from the closed form in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.mean - self.closed_form) / self.std_error
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardReport {
    pub rows: Vec<ForwardRow>,
}

pub fn initial_state(kind: InitialState, n: usize, seed: u64) -> Result<PureState> {
    Ok(match kind {
        InitialState::Zero => PureState::basis(n, 0),
        InitialState::Tilted => {
            let s = 1.0 / 3f64.sqrt();
            PureState::from_bloch(&BlochProduct::new(vec![[s, s, s]; n])?)
        }
        InitialState::Random => random_pure(n, &mut stream(seed ^ STATE_STREAM, n as u64)),
    })
}

pub fn run(cfg: &ForwardVerify, seed: u64) -> Result<ForwardReport> {
    let mut rows = Vec::new();
    for &n in &cfg.n {
        let psi = initial_state(cfg.initial, n, seed)?;
        let strings = strings_up_to_weight(n, cfg.max_weight);
        for &gamma in &cfg.gamma {
            for &t in &cfg.t {
                let steps = step_count(t, cfg.dt)?;
                let est = ensemble_expectations(
                    &psi,
                    &policy(cfg.schedule, seed),
                    gamma,
                    cfg.dt,
                    steps,
                    &strings,
                    cfg.trajectories,
                )?;
                for (i, p) in strings.iter().enumerate() {
                    let initial = psi.expectation(p);
                    rows.push(ForwardRow {
                        n,
                        gamma,
                        t,
                        string: *p,
                        initial,
                        mean: est.mean[i],
                        std_error: est.std_error[i],
                        closed_form: channel_weight_f(gamma, n, t, p.weight()) * initial,
                    });
                }
            }
        }
    }
    Ok(ForwardReport { rows })
}

impl ForwardReport {
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let header =
            ["n", "gamma", "t", "string", "weight", "initial", "mc_mean", "mc_std_error", "closed_form", "z_score"];
        let rows = self.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                num(r.gamma),
                num(r.t),
                r.string.label(),
                r.string.weight().to_string(),
                num(r.initial),
                num(r.mean),
                num(r.std_error),
                num(r.closed_form),
                num(r.z_score()),
            ]
        });
        Ok(vec![Artifact::new("forward_verify.csv", csv_bytes(&header.map(String::from), rows)?)])
    }
}
