use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use plc::config::{BlobSpec, DatasetSpec, ExperimentConfig, Method, Protocol, ReportFormat};
use plc::experiment::{run_experiment, sweep, workers_from_env, SweepGrid};
use plc::{io, report};
use plc_core::PlcConfig;

/// Partial label clustering experiments.
///
/// Worker threads for `run` and `sweep` come from PLC_WORKERS (all cores
/// when unset). The exit code is 0 only if every cell succeeded.
#[derive(Parser)]
#[command(name = "plc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a dataset (blobs or existing files) with synthetic candidate sets.
    Synthesize(SynthesizeArgs),
    /// Run every (method, rho, trial) cell and write the results.
    Run(RunArgs),
    /// Run the experiment over a grid of k, alpha and beta.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "grid-k", value_delimiter = ',')]
        grid_k: Vec<usize>,
        #[arg(long = "grid-alpha", value_delimiter = ',')]
        grid_alpha: Vec<f64>,
        #[arg(long = "grid-beta", value_delimiter = ',')]
        grid_beta: Vec<f64>,
    },
    /// Rebuild tables and series from the records under a dataset directory.
    Report {
        /// `<output>/<dataset>` of an earlier run.
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = parse_format)]
        formats: Vec<ReportFormat>,
    },
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Directory for features.csv, labels.csv and candidates.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, requires = "labels")]
    features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    labels: Option<PathBuf>,
    /// Blobs as per_class,classes,dim,separation (ignored with --features).
    #[arg(long, value_delimiter = ',', default_values_t = [100.0, 3.0, 2.0, 10.0])]
    blobs: Vec<f64>,
    /// False-positive labels per row; no candidates.csv without it.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Blobs as per_class,classes,dim,separation.
    #[arg(long, value_delimiter = ',')]
    blobs: Option<Vec<f64>>,
    /// Keep raw feature scales.
    #[arg(long)]
    no_standardize: bool,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    formats: Option<Vec<ReportFormat>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Constrain all pairs, not only labeled ones.
    #[arg(long)]
    all_pairs: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    match s.to_ascii_lowercase().as_str() {
        "csv" => Ok(ReportFormat::Csv),
        "series" => Ok(ReportFormat::Series),
        "json" => Ok(ReportFormat::Json),
        _ => Err(format!("unknown format {s:?}; expected csv, series or json")),
    }
}

fn blob_spec(v: &[f64], seed: u64) -> anyhow::Result<BlobSpec> {
    if v.len() != 4 {
        bail!("--blobs takes per_class,classes,dim,separation, got {} values", v.len());
    }
    let int = |x: f64, what: &str| -> anyhow::Result<usize> {
        if x >= 1.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            bail!("blobs {what} must be a positive integer, got {x}")
        }
    };
    Ok(BlobSpec { per_class: int(v[0], "per_class")?, classes: int(v[1], "classes")?, dim: int(v[2], "dim")?, separation: v[3], seed })
}

impl RunArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => {
                // r is unused when the candidate sets are given
                let r = self.r.or(self.candidates.as_ref().map(|_| 0));
                let (Some(r), Some(rho)) = (r, self.rho.clone()) else {
                    bail!("without --config, --rho and either --r or --candidates are required");
                };
                ExperimentConfig {
                    dataset: DatasetSpec {
                        name: String::new(),
                        features: None,
                        labels: None,
                        candidates: None,
                        blobs: None,
                        standardize: true,
                    },
                    protocol: Protocol { r, rho, trials: 10, base_seed: 0, clusters: None },
                    plc: PlcConfig::default(),
                    methods: vec![Method::Plc],
                    output: PathBuf::from("out"),
                    formats: vec![ReportFormat::Csv, ReportFormat::Series, ReportFormat::Json],
                }
            }
        };
        let d = &mut config.dataset;
        if self.features.is_some() || self.labels.is_some() {
            d.features = self.features.clone();
            d.labels = self.labels.clone();
            d.blobs = None;
        }
        if let Some(v) = &self.blobs {
            d.blobs = Some(blob_spec(v, self.base_seed.unwrap_or(config.protocol.base_seed))?);
            d.features = None;
            d.labels = None;
        }
        if let Some(c) = &self.candidates {
            d.candidates = Some(c.clone());
        }
        if let Some(name) = &self.name {
            d.name = name.clone();
        }
        if d.name.is_empty() {
            d.name = match (&d.features, &d.blobs) {
                (Some(f), _) => f.parent().and_then(Path::file_name).map_or("data".into(), |s| s.to_string_lossy().into_owned()),
                _ => "blobs".into(),
            };
        }
        if self.no_standardize {
            d.standardize = false;
        }
        let p = &mut config.protocol;
        p.r = self.r.unwrap_or(p.r);
        if let Some(rho) = &self.rho {
            p.rho = rho.clone();
        }
        p.trials = self.trials.unwrap_or(p.trials);
        p.base_seed = self.base_seed.unwrap_or(p.base_seed);
        p.clusters = self.clusters.or(p.clusters);
        if let Some(m) = &self.methods {
            config.methods = m.clone();
        }
        if let Some(o) = &self.output {
            config.output = o.clone();
        }
        if let Some(f) = &self.formats {
            config.formats = f.clone();
        }
        let c = &mut config.plc;
        c.k = self.k.unwrap_or(c.k);
        c.alpha = self.alpha.unwrap_or(c.alpha);
        c.beta = self.beta.unwrap_or(c.beta);
        c.gamma = self.gamma.unwrap_or(c.gamma);
        c.max_outer = self.max_outer.unwrap_or(c.max_outer);
        c.rel_tol = self.rel_tol.unwrap_or(c.rel_tol);
        c.all_pairs |= self.all_pairs;
        config.validate()?;
        Ok(config)
    }
}

fn print_table(rows: &[plc::Aggregate]) {
    println!("{:<8} {:>6} {:>15} {:>15} {:>6}", "method", "rho", "acc", "nmi", "failed");
    let fmt = |m: Option<f64>, s: Option<f64>| match (m, s) {
        (Some(m), Some(s)) => format!("{m:.3} ± {s:.3}"),
        _ => "-".into(),
    };
    for a in rows {
        println!(
            "{:<8} {:>6} {:>15} {:>15} {:>6}",
            a.method.name(),
            a.rho,
            fmt(a.acc_mean, a.acc_std),
            fmt(a.nmi_mean, a.nmi_std),
            a.failures
        );
    }
}

fn synthesize(args: &SynthesizeArgs) -> anyhow::Result<()> {
    let dataset = match (&args.features, &args.labels) {
        (Some(f), Some(l)) => io::load_dataset(f, l, false)?,
        _ => {
            let b = blob_spec(&args.blobs, args.seed)?;
            plc_core::make_blobs(b.per_class, b.classes, b.dim, b.separation, b.seed)?
        }
    };
    let truth = dataset.truth().context("dataset has no labels")?;
    io::write_features(&args.out.join("features.csv"), dataset.features())?;
    io::write_labels(&args.out.join("labels.csv"), truth)?;
    if let Some(r) = args.r {
        let y = plc_core::synthesize_candidates(truth, dataset.class_count(), r, args.seed)?;
        io::write_candidates(&args.out.join("candidates.csv"), &y)?;
    }
    println!("wrote {} rows to {}", dataset.len(), args.out.display());
    Ok(())
}

fn run(args: &RunArgs) -> anyhow::Result<bool> {
    let config = args.config()?;
    let out = run_experiment(&config, workers_from_env()?)?;
    let dir = config.dataset_dir();
    report::emit_report(&dir, &out.records, &config.formats)?;
    report::write_timings(&dir, &out.timings)?;
    print_table(&out.aggregates);
    println!("results in {}", dir.display());
    Ok(out.failures() == 0)
}

fn run_sweep(args: &RunArgs, grid: SweepGrid) -> anyhow::Result<bool> {
    let config = args.config()?;
    let out = sweep(&config, &grid, workers_from_env()?)?;
    let dir = config.dataset_dir().join("sweep");
    report::write_sweep(&dir, &out.rows)?;
    report::write_timings(&dir, &out.timings)?;
    let json = dir.join("records.json");
    std::fs::write(&json, report::records_json(&out.records)?).with_context(|| json.display().to_string())?;
    println!("{:>4} {:>8} {:>8} {:<8} {:>6} {:>15}", "k", "alpha", "beta", "method", "rho", "acc");
    for row in &out.rows {
        let a = &row.aggregate;
        let acc = match (a.acc_mean, a.acc_std) {
            (Some(m), Some(s)) => format!("{m:.3} ± {s:.3}"),
            _ => "-".into(),
        };
        println!("{:>4} {:>8} {:>8} {:<8} {:>6} {:>15}", row.k, row.alpha, row.beta, a.method.name(), a.rho, acc);
    }
    Ok(out.records.iter().all(|r| !r.failed()))
}

fn report_cmd(dir: &Path, formats: &[ReportFormat]) -> anyhow::Result<bool> {
    let records = report::read_records(dir)?;
    let formats = if formats.is_empty() { vec![ReportFormat::Csv, ReportFormat::Series] } else { formats.to_vec() };
    for path in report::emit_report(dir, &records, &formats)? {
        println!("{}", path.display());
    }
    Ok(records.iter().all(|r| !r.failed()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synthesize(args) => synthesize(args).map(|()| true),
        Command::Run(args) => run(args),
        Command::Sweep { run, grid_k, grid_alpha, grid_beta } => {
            run_sweep(run, SweepGrid { k: grid_k.clone(), alpha: grid_alpha.clone(), beta: grid_beta.clone() })
        }
        Command::Report { dir, formats } => report_cmd(dir, formats),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some cells failed; see the error fields in records.json");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
