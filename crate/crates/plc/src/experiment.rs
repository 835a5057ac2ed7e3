//! Repeated seeded trials over methods and labeled proportions.
//!
//! Every cell `(method, ρ, trial)` uses the seed `base_seed + trial` for
//! candidate synthesis, the split and the method itself, so each cell can
//! be rerun alone. Cells run in parallel on a pool of `PLC_WORKERS`
//! threads (all cores when unset) and are collected in cell order.

use std::time::Instant;

use plc_core::{evaluate, finalize, kmeans_baseline, run_plc, sc_baseline, split_transductive, synthesize_candidates};
use plc_core::{PlcConfig, SplitWarning};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, LoadedData, Method};
use crate::error::{Error, Result};

pub const WORKERS_ENV: &str = "PLC_WORKERS";

/// Outcome of one cell. A failed cell keeps its coordinates and carries the
/// error message instead of metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    pub method: Method,
    pub rho: f64,
    /// `None` when the candidate sets came from a file.
    pub r: Option<usize>,
    pub trial: usize,
    pub seed: u64,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Over all rows.
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    /// Over the unlabeled rows only.
    pub acc_test: Option<f64>,
    pub nmi_test: Option<f64>,
    pub iterations: usize,
    pub converged: Option<bool>,
    pub objective_trace: Vec<f64>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl ResultRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Wall-clock time of one cell, kept apart from the records so that those
/// stay reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub method: Method,
    pub rho: f64,
    pub trial: usize,
    pub seconds: f64,
}

/// Mean and sample standard deviation over the successful trials of one
/// `(method, ρ)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub rho: f64,
    pub trials: usize,
    pub failures: usize,
    pub acc_mean: Option<f64>,
    pub acc_std: Option<f64>,
    pub nmi_mean: Option<f64>,
    pub nmi_std: Option<f64>,
    pub acc_test_mean: Option<f64>,
    pub acc_test_std: Option<f64>,
    pub nmi_test_mean: Option<f64>,
    pub nmi_test_std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub aggregates: Vec<Aggregate>,
    pub timings: Vec<CellTiming>,
}

impl ExperimentOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.failed()).count()
    }
}

/// Sample mean and standard deviation (`n − 1` denominator, 0 for a single
/// value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// One aggregate per `(method, ρ)`, in order of first appearance.
pub fn aggregate(records: &[ResultRecord]) -> Vec<Aggregate> {
    let mut keys: Vec<(Method, u64)> = Vec::new();
    for r in records {
        let key = (r.method, r.rho.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, bits)| {
            let rho = f64::from_bits(bits);
            let members: Vec<&ResultRecord> = records.iter().filter(|r| r.method == method && r.rho.to_bits() == bits).collect();
            let ok: Vec<&ResultRecord> = members.iter().copied().filter(|r| !r.failed()).collect();
            let stat = |f: fn(&ResultRecord) -> Option<f64>| mean_std(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            let acc = stat(|r| r.acc);
            let nmi = stat(|r| r.nmi);
            let acc_test = stat(|r| r.acc_test);
            let nmi_test = stat(|r| r.nmi_test);
            Aggregate {
                method,
                rho,
                trials: ok.len(),
                failures: members.len() - ok.len(),
                acc_mean: acc.map(|s| s.0),
                acc_std: acc.map(|s| s.1),
                nmi_mean: nmi.map(|s| s.0),
                nmi_std: nmi.map(|s| s.1),
                acc_test_mean: acc_test.map(|s| s.0),
                acc_test_std: acc_test.map(|s| s.1),
                nmi_test_mean: nmi_test.map(|s| s.0),
                nmi_test_std: nmi_test.map(|s| s.1),
            }
        })
        .collect()
}

/// Coordinates of one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub rho: f64,
    pub trial: usize,
    pub plc: PlcConfig,
}

/// Runs one cell. Errors end up in the record, never in the return value.
pub fn run_cell(data: &LoadedData, name: &str, r: usize, base_seed: u64, clusters: Option<usize>, cell: &Cell) -> ResultRecord {
    let seed = base_seed.wrapping_add(cell.trial as u64);
    let mut record = ResultRecord {
        dataset: name.to_string(),
        method: cell.method,
        rho: cell.rho,
        r: data.candidates.is_none().then_some(r),
        trial: cell.trial,
        seed,
        k: cell.plc.k,
        alpha: cell.plc.alpha,
        beta: cell.plc.beta,
        acc: None,
        nmi: None,
        acc_test: None,
        nmi_test: None,
        iterations: 0,
        converged: None,
        objective_trace: Vec::new(),
        warnings: Vec::new(),
        error: None,
    };
    if let Err(e) = fill(&mut record, data, r, clusters, cell) {
        log::warn!("{} rho={} trial={}: {e}", cell.method, cell.rho, cell.trial);
        record.error = Some(e.to_string());
    }
    record
}

fn fill(record: &mut ResultRecord, data: &LoadedData, r: usize, clusters: Option<usize>, cell: &Cell) -> Result<()> {
    let dataset = &data.dataset;
    let truth = dataset.truth().ok_or_else(|| Error::Config("dataset has no ground truth to evaluate".into()))?;
    let q = dataset.class_count();
    let l = clusters.unwrap_or(q);
    let seed = record.seed;
    let y = match &data.candidates {
        Some(y) => y.clone(),
        None => synthesize_candidates(truth, q, r, seed)?,
    };
    let problem = split_transductive(dataset.clone(), &y, cell.rho, seed)?;
    for w in problem.warnings() {
        let SplitWarning::FewerLabeledThanClasses { labeled, classes } = w;
        record.warnings.push(format!("{labeled} labeled rows for {classes} classes"));
    }
    let x = dataset.features();
    let pred = match cell.method.variant() {
        Some(variant) => {
            let cfg = PlcConfig { variant, seed, clusters: l, ..cell.plc.clone() };
            let state = run_plc(&problem, &cfg)?;
            record.iterations = state.iterations_run;
            record.converged = Some(state.converged);
            record.objective_trace = state.objective_trace.clone();
            finalize(&state, &cfg)?.assignment
        }
        None if cell.method == Method::Kmeans => kmeans_baseline(x, l, seed)?,
        None => sc_baseline(x, cell.plc.k, l, seed)?,
    };
    let all = evaluate(&pred, truth, None)?;
    let test = evaluate(&pred, truth, Some(problem.train_mask()))?;
    record.acc = Some(all.acc);
    record.nmi = Some(all.nmi);
    record.acc_test = Some(test.acc);
    record.nmi_test = Some(test.nmi);
    Ok(())
}

/// Thread count from `PLC_WORKERS`; `None` lets the pool use every core.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::Config(format!("{WORKERS_ENV}={v:?} is not a thread count"))),
        },
    }
}

/// Runs the cells on a pool of `workers` threads and returns the records
/// and timings in cell order.
pub fn run_cells(
    data: &LoadedData,
    config: &ExperimentConfig,
    cells: &[Cell],
    workers: Option<usize>,
) -> Result<(Vec<ResultRecord>, Vec<CellTiming>)> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let p = &config.protocol;
    let results: Vec<(ResultRecord, CellTiming)> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let start = Instant::now();
                let record = run_cell(data, &config.dataset.name, p.r, p.base_seed, p.clusters, cell);
                let timing = CellTiming { method: cell.method, rho: cell.rho, trial: cell.trial, seconds: start.elapsed().as_secs_f64() };
                log::info!("{} rho={} trial={} done in {:.2}s", cell.method, cell.rho, cell.trial, timing.seconds);
                (record, timing)
            })
            .collect()
    });
    Ok(results.into_iter().unzip())
}

fn cells_for(config: &ExperimentConfig, plc: &PlcConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &method in &config.methods {
        for &rho in &config.protocol.rho {
            for trial in 0..config.protocol.trials {
                cells.push(Cell { method, rho, trial, plc: plc.clone() });
            }
        }
    }
    cells
}

/// Every `(method, ρ, trial)` cell of the config, then the aggregates.
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentOutput> {
    config.validate()?;
    let data = config.dataset.load()?;
    let cells = cells_for(config, &config.plc);
    let (records, timings) = run_cells(&data, config, &cells, workers)?;
    let aggregates = aggregate(&records);
    Ok(ExperimentOutput { records, aggregates, timings })
}

/// Axes of a hyperparameter sweep. An empty axis keeps the config's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub k: Vec<usize>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl SweepGrid {
    pub fn is_empty(&self) -> bool {
        self.k.is_empty() && self.alpha.is_empty() && self.beta.is_empty()
    }

    /// Cartesian product in `k`, then `α`, then `β` order.
    pub fn points(&self, base: &PlcConfig) -> Vec<PlcConfig> {
        let or = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
        let ks = if self.k.is_empty() { vec![base.k] } else { self.k.clone() };
        let mut points = Vec::new();
        for &k in &ks {
            for &alpha in &or(&self.alpha, base.alpha) {
                for &beta in &or(&self.beta, base.beta) {
                    points.push(PlcConfig { k, alpha, beta, ..base.clone() });
                }
            }
        }
        points
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(flatten)]
    pub aggregate: Aggregate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub records: Vec<ResultRecord>,
    pub timings: Vec<CellTiming>,
}

/// The experiment at every grid point; one row per point, method and ρ.
pub fn sweep(config: &ExperimentConfig, grid: &SweepGrid, workers: Option<usize>) -> Result<SweepOutput> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    config.validate()?;
    let data = config.dataset.load()?;
    let points = grid.points(&config.plc);
    for p in &points {
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
    }
    let cells: Vec<Cell> = points.iter().flat_map(|p| cells_for(config, p)).collect();
    let (records, timings) = run_cells(&data, config, &cells, workers)?;
    let per_point = records.len() / points.len();
    let rows = points
        .iter()
        .zip(records.chunks(per_point))
        .flat_map(|(p, chunk)| {
            aggregate(chunk).into_iter().map(move |aggregate| SweepRow { k: p.k, alpha: p.alpha, beta: p.beta, aggregate })
        })
        .collect();
    Ok(SweepOutput { rows, records, timings })
}
