//! Measurement datasets: generation, the records file format and decoding.
//!
//! A records file is JSON lines. The first line is a [`RecordsHeader`] and
//! every following line is one [`MeasurementRecord`]; member `i` is line
//! `i + 2`. An empty dataset is a file holding only the header.

use std::path::{Path, PathBuf};

use qdiff_core::decoder::{decode as decode_record, default_weight_cutoff, mle_initial_state};
use qdiff_core::ensembles::SourceEnsemble;
use qdiff_core::forward::{simulate_member, step_count};
use qdiff_core::pauli::strings_up_to_weight;
use qdiff_core::rng::stream;
use qdiff_core::{MeasurementRecord, PauliString, PauliVector, PureState, SchedulePolicy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{policy, STATE_STREAM};
use crate::config::{Decode, Generate};
use crate::error::{io_error, Result, RunError};
use crate::output::{csv_bytes, num, Artifact};

pub const RECORDS_FORMAT: &str = "qdiff-records/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordsHeader {
    pub format: String,
    pub source: SourceEnsemble,
    pub n: usize,
    pub gamma: f64,
    pub dt: f64,
    pub steps: usize,
    pub members: usize,
    /// Member `i` starts from `source` sampled with stream `i` of this seed.
    pub state_seed: u64,
    pub schedule: SchedulePolicy,
}

impl RecordsHeader {
    /// The source state of member `i`.
    pub fn initial_state(&self, i: usize) -> Result<PureState> {
        Ok(self.source.sample(&mut stream(self.state_seed, i as u64))?)
    }
}

/// Decoded expectation series of one member, sampled every `stride` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesRows {
    pub member: usize,
    pub steps: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: RecordsHeader,
    pub records: Vec<MeasurementRecord>,
    pub strings: Vec<PauliString>,
    pub series: Option<Vec<SeriesRows>>,
}

pub fn generate(cfg: &Generate, seed: u64) -> Result<Dataset> {
    let n = cfg.source.n();
    let steps = step_count(cfg.t, cfg.dt)?;
    let header = RecordsHeader {
        format: RECORDS_FORMAT.to_string(),
        source: cfg.source.clone(),
        n,
        gamma: cfg.gamma,
        dt: cfg.dt,
        steps,
        members: cfg.members,
        state_seed: seed ^ STATE_STREAM,
        schedule: policy(cfg.schedule, seed),
    };
    let cutoff = cfg.sidecar.as_ref().and_then(|s| s.weight_cutoff).unwrap_or_else(|| default_weight_cutoff(n));
    let strings = strings_up_to_weight(n, cutoff);
    let members: Vec<(MeasurementRecord, Option<SeriesRows>)> = (0..cfg.members)
        .into_par_iter()
        .map(|i| {
            let psi0 = header.initial_state(i)?;
            let (_, record) = simulate_member(&psi0, &header.schedule, cfg.gamma, cfg.dt, steps, i as u64)?;
            let series = match &cfg.sidecar {
                Some(side) => {
                    let decoded = decode_record(&record, side.estimate, &psi0, cutoff)?;
                    let stride = side.stride.max(1);
                    let picked: Vec<usize> = (0..=steps).filter(|k| k % stride == 0 || *k == steps).collect();
                    let values =
                        picked.iter().map(|&k| strings.iter().map(|p| decoded.z_series[k].get(p)).collect()).collect();
                    Some(SeriesRows { member: i, steps: picked, values })
                }
                None => None,
            };
            Ok((record, series))
        })
        .collect::<Result<_>>()?;
    let (records, series): (Vec<_>, Vec<_>) = members.into_iter().unzip();
    let series = cfg.sidecar.as_ref().map(|_| series.into_iter().flatten().collect());
    Ok(Dataset { header, records, strings, series })
}

pub fn records_bytes(header: &RecordsHeader, records: &[MeasurementRecord]) -> Result<Vec<u8>> {
    let mut out = serde_json::to_string(header)?;
    out.push('\n');
    for r in records {
        out.push_str(&r.to_json_line()?);
        out.push('\n');
    }
    Ok(out.into_bytes())
}

/// Reads a records file, checking every record against the header.
pub fn read_records(path: &Path) -> Result<(RecordsHeader, Vec<MeasurementRecord>)> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let bad = |line: usize, message: String| RunError::Records { path: path.to_path_buf(), line, message };
    let mut lines = text.lines();
    let header: RecordsHeader = serde_json::from_str(lines.next().ok_or_else(|| bad(1, "missing header".into()))?)
        .map_err(|e| bad(1, e.to_string()))?;
    if header.format != RECORDS_FORMAT {
        return Err(bad(1, format!("unsupported format {:?}", header.format)));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let record = MeasurementRecord::from_json_line(line).map_err(|e| bad(i + 2, e.to_string()))?;
        if record.n != header.n || record.gamma != header.gamma || record.dt != header.dt {
            return Err(bad(i + 2, "record parameters differ from the header".into()));
        }
        records.push(record);
    }
    if records.len() != header.members {
        return Err(bad(records.len() + 1, format!("expected {} records, found {}", header.members, records.len())));
    }
    Ok((header, records))
}

impl Dataset {
    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut out = vec![Artifact::new("records.jsonl", records_bytes(&self.header, &self.records)?)];
        if let Some(series) = &self.series {
            let mut header: Vec<String> = ["member", "step", "t"].map(String::from).to_vec();
            header.extend(self.strings.iter().map(|p| p.label()));
            let dt = self.header.dt;
            let rows = series.iter().flat_map(|s| {
                s.steps.iter().zip(&s.values).map(move |(&k, v)| {
                    let mut row = vec![s.member.to_string(), k.to_string(), num(k as f64 * dt)];
                    row.extend(v.iter().map(|&x| num(x)));
                    row
                })
            });
            out.push(Artifact::new("zseries.csv", csv_bytes(&header, rows)?));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodedMember {
    pub member: usize,
    pub ln_likelihood: f64,
    pub gap: f64,
    pub degenerate: bool,
    /// `|⟨ψ₀|ψ̂₀⟩|²` with the regenerated source state.
    pub overlap: f64,
    pub expectations: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeReport {
    pub records: PathBuf,
    pub strings: Vec<PauliString>,
    pub members: Vec<DecodedMember>,
}

/// Maximum-likelihood initial states for every record of a dataset.
pub fn decode(cfg: &Decode) -> Result<DecodeReport> {
    let (header, records) = read_records(&cfg.records)?;
    let cutoff = cfg.weight_cutoff.unwrap_or_else(|| default_weight_cutoff(header.n));
    let strings = strings_up_to_weight(header.n, cutoff);
    let members = records
        .par_iter()
        .enumerate()
        .map(|(i, record)| {
            let est = mle_initial_state(record)?;
            let truth = header.initial_state(i)?;
            let z = PauliVector::from_state(est.state.as_slice(), &strings)?;
            Ok(DecodedMember {
                member: i,
                ln_likelihood: est.ln_likelihood,
                gap: est.gap,
                degenerate: est.degenerate,
                overlap: truth.overlap(&est.state).norm_sqr(),
                expectations: strings.iter().map(|p| z.get(p)).collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(DecodeReport { records: cfg.records.clone(), strings, members })
}

impl DecodeReport {
    pub fn mean_overlap(&self) -> f64 {
        self.members.iter().map(|m| m.overlap).sum::<f64>() / self.members.len().max(1) as f64
    }

    pub fn artifacts(&self) -> Result<Vec<Artifact>> {
        let mut header: Vec<String> =
            ["member", "ln_likelihood", "gap", "degenerate", "overlap"].map(String::from).to_vec();
        header.extend(self.strings.iter().map(|p| p.label()));
        let rows = self.members.iter().map(|m| {
            let mut row =
                vec![m.member.to_string(), num(m.ln_likelihood), num(m.gap), m.degenerate.to_string(), num(m.overlap)];
            row.extend(m.expectations.iter().map(|&x| num(x)));
            row
        });
        Ok(vec![Artifact::new("decoded.csv", csv_bytes(&header, rows)?)])
    }
}
