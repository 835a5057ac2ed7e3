//! Result files under `<output>/<dataset>/`:
//!
//! ```text
//! <method>/records.json     raw records of one method
//! tables/summary.csv        method,rho,acc_mean,acc_std,nmi_mean,nmi_std (all rows)
//! tables/test_only.csv      the same over unlabeled rows
//! tables/sweep.csv          one row per grid point, method and rho
//! series/<metric>_<method>.dat   "rho mean std" lines for plotting
//! timings.csv               wall-clock seconds per cell
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{Method, ReportFormat};
use crate::error::{Error, Result};
use crate::experiment::{aggregate, Aggregate, CellTiming, ResultRecord, SweepRow};

pub const SUMMARY_HEADER: [&str; 6] = ["method", "rho", "acc_mean", "acc_std", "nmi_mean", "nmi_std"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().from_writer(create(path)?))
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn methods_of(records: &[ResultRecord]) -> Vec<Method> {
    let mut methods: Vec<Method> = Vec::new();
    for r in records {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods
}

/// Serialized records, exactly as written to `records.json`.
pub fn records_json(records: &[ResultRecord]) -> Result<String> {
    let mut text = serde_json::to_string_pretty(records)?;
    text.push('\n');
    Ok(text)
}

pub fn records_path(dir: &Path, method: Method) -> PathBuf {
    dir.join(method.name()).join("records.json")
}

fn write_summary(path: &Path, aggregates: &[Aggregate], test_only: bool) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for a in aggregates {
        let (am, asd, nm, nsd) = if test_only {
            (a.acc_test_mean, a.acc_test_std, a.nmi_test_mean, a.nmi_test_std)
        } else {
            (a.acc_mean, a.acc_std, a.nmi_mean, a.nmi_std)
        };
        w.write_record([a.method.name().to_string(), a.rho.to_string(), cell(am), cell(asd), cell(nm), cell(nsd)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_series(path: &Path, rows: &[(f64, Option<f64>, Option<f64>)]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "# rho mean std").map_err(io)?;
    for &(rho, mean, std) in rows {
        if let (Some(m), Some(s)) = (mean, std) {
            writeln!(out, "{rho} {m} {s}").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// Writes the requested formats for `records` into the dataset directory
/// `dir` and returns the files written. Aggregates are recomputed from the
/// records.
pub fn emit_report(dir: &Path, records: &[ResultRecord], formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let aggregates = aggregate(records);
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Json) {
        for method in methods_of(records) {
            let mine: Vec<ResultRecord> = records.iter().filter(|r| r.method == method).cloned().collect();
            let path = records_path(dir, method);
            let mut out = create(&path)?;
            out.write_all(records_json(&mine)?.as_bytes()).map_err(|e| Error::io(&path, e))?;
            out.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    if formats.contains(&ReportFormat::Csv) {
        for (name, test_only) in [("summary.csv", false), ("test_only.csv", true)] {
            let path = dir.join("tables").join(name);
            write_summary(&path, &aggregates, test_only)?;
            written.push(path);
        }
    }
    if formats.contains(&ReportFormat::Series) {
        for method in methods_of(records) {
            let mine: Vec<&Aggregate> = aggregates.iter().filter(|a| a.method == method).collect();
            let acc: Vec<_> = mine.iter().map(|a| (a.rho, a.acc_mean, a.acc_std)).collect();
            let nmi: Vec<_> = mine.iter().map(|a| (a.rho, a.nmi_mean, a.nmi_std)).collect();
            for (metric, rows) in [("acc", acc), ("nmi", nmi)] {
                let path = dir.join("series").join(format!("{metric}_{}.dat", method.name()));
                write_series(&path, &rows)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

pub fn write_timings(dir: &Path, timings: &[CellTiming]) -> Result<PathBuf> {
    let path = dir.join("timings.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["method", "rho", "trial", "seconds"])?;
    for t in timings {
        w.write_record([t.method.name().to_string(), t.rho.to_string(), t.trial.to_string(), t.seconds.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<PathBuf> {
    if rows.is_empty() {
        return Err(Error::NoRecords);
    }
    let path = dir.join("tables").join("sweep.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["k", "alpha", "beta", "method", "rho", "acc_mean", "acc_std", "nmi_mean", "nmi_std"])?;
    for row in rows {
        let a = &row.aggregate;
        w.write_record([
            row.k.to_string(),
            row.alpha.to_string(),
            row.beta.to_string(),
            a.method.name().to_string(),
            a.rho.to_string(),
            cell(a.acc_mean),
            cell(a.acc_std),
            cell(a.nmi_mean),
            cell(a.nmi_std),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads every `<method>/records.json` under a dataset directory, in method
/// order.
pub fn read_records(dir: &Path) -> Result<Vec<ResultRecord>> {
    let mut records = Vec::new();
    for method in Method::ALL {
        let path = records_path(dir, method);
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut mine: Vec<ResultRecord> = serde_json::from_str(&text)?;
        records.append(&mut mine);
    }
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(records)
}
