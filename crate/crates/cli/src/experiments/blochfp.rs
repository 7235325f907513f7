//! Fokker-Planck round trip on the Bloch sphere.

use qdiff_core::blochfp::{backward_fp, forward_fp, SphereField, SphereGrid};
use qdiff_core::forward::channel_weight_f;

use crate::config::Blochfp;
use crate::error::{Result, RunError};
use crate::output::{csv_bytes, num, Artifact};

#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow {
    pub l: usize,
    pub m: i64,
    pub initial: f64,
    pub evolved: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub n_theta: usize,
    pub n_phi: usize,
    pub dt: f64,
    pub steps: usize,
    pub l2_error: f64,
    pub mass_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlochfpReport {
    pub gamma: f64,
    pub n: usize,
    pub t: f64,
    pub decay: Vec<DecayRow>,
    pub grids: Vec<GridResult>,
    /// `(θ, φ, initial, recovered)` on the last grid.
    pub field: Vec<[f64; 4]>,
}

pub fn initial_field(cfg: &Blochfp) -> Result<SphereField> {
    let mut field = SphereField::uniform(cfg.l_max);
    for mode in &cfg.modes {
        if mode.l == 0 || mode.l > cfg.l_max || mode.m.unsigned_abs() as usize > mode.l {
            return Err(RunError::Invalid(format!("mode (l={}, m={}) outside 1 ≤ l ≤ {}", mode.l, mode.m, cfg.l_max)));
        }
        field.set(mode.l, mode.m, mode.value);
    }
    Ok(field)
}

pub fn run(cfg: &Blochfp) -> Result<BlochfpReport> {
    if cfg.grids.is_empty() {
        return Err(RunError::Invalid("blochfp needs at least one grid".into()));
    }
    let p0 = initial_field(cfg)?;
    let evolved = forward_fp(&p0, cfg.gamma, cfg.n, cfg.t);
    let mut decay = Vec::new();
    for l in 0..=cfg.l_max {
        for m in -(l as i64)..=l as i64 {
            decay.push(DecayRow { l, m, initial: p0.coefficient(l, m), evolved: evolved.coefficient(l, m) });
        }
    }
    let mut grids = Vec::with_capacity(cfg.grids.len());
    let mut field = Vec::new();
    for (k, grid_cfg) in cfg.grids.iter().enumerate() {
        let grid = SphereGrid::new(grid_cfg.n_theta, 2 * grid_cfg.n_theta);
        let start = grid.sample(&evolved);
        let target = grid.sample(&p0);
        let report = backward_fp(&grid, &start, &p0, cfg.gamma, cfg.n, cfg.t, grid_cfg.dt)?;
        grids.push(GridResult {
            n_theta: grid.n_theta,
            n_phi: grid.n_phi,
            dt: grid_cfg.dt,
            steps: report.steps,
            l2_error: grid.l2_distance(&report.q, &target),
            mass_drift: report.mass_drift,
        });
        if k + 1 == cfg.grids.len() {
            let cells = grid.theta.iter().flat_map(|&th| grid.phi.iter().map(move |&ph| (th, ph)));
            field = cells.zip(target.iter().zip(&report.q)).map(|((th, ph), (a, b))| [th, ph, *a, *b]).collect();
        }
    }
    Ok(BlochfpReport { gamma: cfg.gamma, n: cfg.n, t: cfg.t, decay, grids, field })
}

impl BlochfpReport {
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let header = ["n_theta", "n_phi", "dt", "steps", "l2_error", "mass_drift"].map(String::from);
        let rows = self.grids.iter().map(|g| {
            vec![
                g.n_theta.to_string(),
                g.n_phi.to_string(),
                num(g.dt),
                g.steps.to_string(),
                num(g.l2_error),
                num(g.mass_drift),
            ]
        });
        let summary = csv_bytes(&header, rows)?;
        let header = ["l", "m", "initial", "evolved", "ratio", "channel_weight"].map(String::from);
        let channel = channel_weight_f(self.gamma, self.n, self.t, 1);
        let rows = self.decay.iter().map(|d| {
            let ratio = if d.initial != 0.0 { num(d.evolved / d.initial) } else { String::new() };
            let weight = if d.l == 1 { num(channel) } else { String::new() };
            vec![d.l.to_string(), d.m.to_string(), num(d.initial), num(d.evolved), ratio, weight]
        });
        let decay = csv_bytes(&header, rows)?;
        let header = ["theta", "phi", "initial", "recovered"].map(String::from);
        let rows = self.field.iter().map(|r| r.iter().map(|&x| num(x)).collect());
        let field = csv_bytes(&header, rows)?;
        Ok(vec![
            Artifact::new("blochfp.csv", summary),
            Artifact::new("decay.csv", decay),
            Artifact::new("field.csv", field),
        ])
    }
}
