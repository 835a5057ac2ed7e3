//! Experiment configuration, read from TOML.
//!
//! ```toml
//! output = "out"
//! methods = ["PLC", "PLC-LD", "SC"]
//!
//! [dataset]
//! name = "blobs"
//! blobs = { per_class = 100, classes = 3, dim = 2, separation = 10.0, seed = 7 }
//!
//! [protocol]
//! r = 1
//! rho = [0.05, 0.1, 0.2]
//! trials = 10
//! base_seed = 0
//!
//! [plc]
//! k = 10
//! ```
//!
//! File datasets give `features` and `labels` (and optionally `candidates`)
//! instead of `blobs`; relative paths resolve against the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use plc_core::{Dataset, Matrix, PlcConfig, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "PLC")]
    Plc,
    #[serde(rename = "PLC-CW")]
    PlcCw,
    #[serde(rename = "PLC-LD")]
    PlcLd,
    #[serde(rename = "PLC-SD")]
    PlcSd,
    #[serde(rename = "KMEANS")]
    Kmeans,
    #[serde(rename = "SC")]
    Sc,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Plc, Method::PlcCw, Method::PlcLd, Method::PlcSd, Method::Kmeans, Method::Sc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Plc => "PLC",
            Method::PlcCw => "PLC-CW",
            Method::PlcLd => "PLC-LD",
            Method::PlcSd => "PLC-SD",
            Method::Kmeans => "KMEANS",
            Method::Sc => "SC",
        }
    }

    /// Solver variant, `None` for the baselines.
    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::Plc => Some(Variant::Full),
            Method::PlcCw => Some(Variant::Cw),
            Method::PlcLd => Some(Variant::Ld),
            Method::PlcSd => Some(Variant::Sd),
            Method::Kmeans | Method::Sc => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method {s:?}; expected one of PLC, PLC-CW, PLC-LD, PLC-SD, KMEANS, SC"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// Aggregate tables under `tables/`.
    Csv,
    /// Metric-vs-ρ series under `series/`.
    Series,
    /// Raw records per method.
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub per_class: usize,
    pub classes: usize,
    pub dim: usize,
    pub separation: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Given candidate sets replace the synthetic ones; `protocol.r` is
    /// then ignored.
    #[serde(default)]
    pub candidates: Option<PathBuf>,
    #[serde(default)]
    pub blobs: Option<BlobSpec>,
    /// Z-score features at load time.
    #[serde(default = "yes")]
    pub standardize: bool,
}

fn yes() -> bool {
    true
}

/// A loaded dataset with its optional fixed candidate sets.
#[derive(Clone, Debug)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub candidates: Option<Matrix>,
}

impl DatasetSpec {
    pub fn load(&self) -> Result<LoadedData> {
        let dataset = match (&self.blobs, &self.features, &self.labels) {
            (Some(b), None, None) => {
                let d = plc_core::make_blobs(b.per_class, b.classes, b.dim, b.separation, b.seed)?;
                if self.standardize {
                    d.standardized()
                } else {
                    d
                }
            }
            (None, Some(f), Some(l)) => crate::io::load_dataset(f, l, self.standardize)?,
            _ => return Err(Error::Config("dataset needs either `blobs` or both `features` and `labels`".into())),
        };
        let candidates = match &self.candidates {
            Some(path) => Some(crate::io::read_candidates(path, dataset.class_count())?),
            None => None,
        };
        if let Some(y) = &candidates {
            if y.rows() != dataset.len() {
                return Err(Error::Alignment { features: dataset.len(), labels: y.rows() });
            }
        }
        Ok(LoadedData { dataset, candidates })
    }

    fn resolve(&mut self, base: &Path) {
        for path in [&mut self.features, &mut self.labels, &mut self.candidates].into_iter().flatten() {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    /// False-positive labels per labeled example.
    pub r: usize,
    pub rho: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Final cluster count; the class count when absent.
    #[serde(default)]
    pub clusters: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub protocol: Protocol,
    #[serde(default)]
    pub plc: PlcConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Plc]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Csv, ReportFormat::Series, ReportFormat::Json]
}

impl ExperimentConfig {
    /// Parses and validates a config file, resolving relative dataset paths
    /// against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig =
            toml::from_str(&text).map_err(|source| Error::Toml { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.dataset.resolve(base);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.protocol.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.protocol.rho.is_empty() {
            return bad("rho list is empty".into());
        }
        if let Some(rho) = self.protocol.rho.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
            return bad(format!("rho {rho} is outside (0, 1)"));
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.protocol.clusters == Some(0) {
            return bad("clusters must be at least 1".into());
        }
        if self.dataset.name.is_empty() || self.dataset.name.contains(['/', '\\']) {
            return bad(format!("dataset name {:?} is not a plain directory name", self.dataset.name));
        }
        self.plc.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Output directory of this dataset.
    pub fn dataset_dir(&self) -> PathBuf {
        self.output.join(&self.dataset.name)
    }
}
