//! Monte-Carlo sweeps: every (sweep value, drop) pair is one instance on
//! which every configured scheme runs; results are averaged per
//! (value, scheme).

use std::io::Write;
use std::path::Path;

use nomafl_core::{run_scheme, SchemeId, SolveReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::sampling::sample_instance;

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub scheme: String,
    /// Infeasible drops count as error 1.
    pub mean_error: f64,
    pub feasible_frac: f64,
    pub mean_iters: f64,
    /// Mean per-device energy per round over the feasible drops (0 if none).
    pub mean_energy_j: f64,
}

/// All reports of one (value, drop) instance, in scheme order.
#[derive(Debug, Clone)]
pub struct DropRuns {
    pub sweep_value: f64,
    pub drop_index: usize,
    pub reports: Vec<SolveReport>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub runs: Vec<DropRuns>,
}

pub fn run_sweep(config: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    Ok(run_sweep_detailed(config)?.rows)
}

pub fn run_sweep_detailed(config: &ScenarioConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let mut values = config.sweep.values.clone();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut schemes = config.schemes.clone();
    schemes.sort();
    schemes.dedup();

    let jobs: Vec<(f64, usize)> = values
        .iter()
        .flat_map(|&v| (0..config.drops).map(move |d| (v, d)))
        .collect();
    // Indexed parallel collect keeps job order, so the output does not
    // depend on scheduling.
    let runs: Vec<DropRuns> = jobs
        .par_iter()
        .map(|&(value, drop_index)| {
            let inst = sample_instance(config, drop_index, value);
            DropRuns {
                sweep_value: value,
                drop_index,
                reports: schemes.iter().map(|&s| run_scheme(&inst, s)).collect(),
            }
        })
        .collect();

    let param = config.sweep.param.name().to_string();
    let mut rows = Vec::with_capacity(values.len() * schemes.len());
    for (vi, &value) in values.iter().enumerate() {
        let block = &runs[vi * config.drops..(vi + 1) * config.drops];
        for (si, &scheme) in schemes.iter().enumerate() {
            rows.push(aggregate(
                &param,
                value,
                scheme,
                block.iter().map(|r| &r.reports[si]),
            ));
        }
    }
    Ok(SweepOutcome { rows, runs })
}

fn aggregate<'a>(
    param: &str,
    value: f64,
    scheme: SchemeId,
    reports: impl Iterator<Item = &'a SolveReport>,
) -> ResultRow {
    let (mut n, mut feasible, mut err, mut iters, mut energy) = (0usize, 0usize, 0.0, 0.0, 0.0);
    for r in reports {
        n += 1;
        err += r.learning_error;
        iters += r.iterations as f64;
        if r.feasible {
            feasible += 1;
            energy += r.mean_energy_j();
        }
    }
    let nf = n as f64;
    ResultRow {
        sweep_param: param.to_string(),
        sweep_value: value,
        scheme: scheme.name().to_string(),
        mean_error: err / nf,
        feasible_frac: feasible as f64 / nf,
        mean_iters: iters / nf,
        mean_energy_j: if feasible > 0 {
            energy / feasible as f64
        } else {
            0.0
        },
    }
}

pub fn write_csv_to(rows: &[ResultRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Csv {
            line: 0,
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| HarnessError::Csv {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv_to(rows, file)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_csv_from(file)
}

pub fn read_csv_from(input: impl std::io::Read) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: ResultRow = rec.map_err(|e| HarnessError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}
