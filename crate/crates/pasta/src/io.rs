//! On-disk formats.
//!
//! Catalogs and instances are JSON, datasets, traces and sweep results are
//! CSV. Every file uses one-based item indices; a dataset choice of `0` means
//! the customer bought nothing.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use pasta_core::datagen::{Instance, InstanceConfig, ThetaMode};
use pasta_core::likelihood::{FitResult, OfflineDataset, Record};
use pasta_core::rng::StreamSeed;
use pasta_core::solver::SolveTrace;
use pasta_core::{Assortment, Catalog, ParamVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Field { path: String, line: u64, message: String },
    #[error("{path}: {source}")]
    Model {
        path: String,
        #[source]
        source: pasta_core::Error,
    },
}

impl FormatError {
    /// Whether the failure lies in the file contents rather than in the
    /// filesystem.
    pub fn is_invalid_input(&self) -> bool {
        match self {
            FormatError::Io { .. } => false,
            FormatError::Csv { source, .. } => !source.is_io_error(),
            _ => true,
        }
    }
}

type Result<T> = std::result::Result<T, FormatError>;

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| FormatError::Io { path: display(path), source })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| FormatError::Io { path: display(path), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|source| FormatError::Json { path: display(path), source })?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|source| FormatError::Io { path: display(path), source })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|source| FormatError::Io { path: display(path), source })?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json { path: display(path), source })
}

/// Sorted one-based indices.
pub fn to_one_based(s: &Assortment) -> Vec<usize> {
    s.items().iter().map(|i| i + 1).collect()
}

pub fn from_one_based(items: &[usize]) -> std::result::Result<Assortment, String> {
    let zero: Vec<usize> = items
        .iter()
        .map(|&i| i.checked_sub(1).ok_or_else(|| "item indices start at 1".to_string()))
        .collect::<std::result::Result<_, _>>()?;
    Assortment::new(zero).map_err(|e| e.to_string())
}

/// `2;5;7`, or the empty string for the empty set.
pub fn format_assortment(s: &Assortment) -> String {
    to_one_based(s).iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

pub fn parse_assortment(text: &str) -> std::result::Result<Assortment, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Assortment::empty());
    }
    let items = text
        .split(';')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad item index {t:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    from_one_based(&items)
}

fn format_vector(v: &[f64]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

/// The catalog JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogFile {
    pub n_items: usize,
    pub d: usize,
    pub revenues: Vec<f64>,
    pub features: Vec<Vec<f64>>,
}

impl CatalogFile {
    pub fn from_catalog(c: &Catalog) -> Self {
        Self {
            n_items: c.n_items(),
            d: c.dim(),
            revenues: c.revenues().to_vec(),
            features: c.features().map(|x| x.to_vec()).collect(),
        }
    }

    pub fn to_catalog(&self) -> std::result::Result<Catalog, String> {
        if self.features.len() != self.n_items || self.revenues.len() != self.n_items {
            return Err(format!(
                "n_items is {} but there are {} feature rows and {} revenues",
                self.n_items,
                self.features.len(),
                self.revenues.len()
            ));
        }
        if let Some(row) = self.features.iter().find(|x| x.len() != self.d) {
            return Err(format!("d is {} but a feature row has {} entries", self.d, row.len()));
        }
        Catalog::new(self.features.clone(), self.revenues.clone()).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub n_items: usize,
    pub cardinality: usize,
    pub dim: usize,
    pub theta_mode: ThetaModeName,
    pub threshold: f64,
    pub revenue_range: [f64; 2],
    pub seed: u64,
    pub replication: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaModeName {
    UnitSphere,
    IidUniform,
}

impl From<ThetaMode> for ThetaModeName {
    fn from(m: ThetaMode) -> Self {
        match m {
            ThetaMode::UnitSphere => ThetaModeName::UnitSphere,
            ThetaMode::UniformCube => ThetaModeName::IidUniform,
        }
    }
}

impl From<ThetaModeName> for ThetaMode {
    fn from(m: ThetaModeName) -> Self {
        match m {
            ThetaModeName::UnitSphere => ThetaMode::UnitSphere,
            ThetaModeName::IidUniform => ThetaMode::UniformCube,
        }
    }
}

impl From<&InstanceConfig> for ConfigFile {
    fn from(c: &InstanceConfig) -> Self {
        Self {
            n_items: c.n_items,
            cardinality: c.cardinality,
            dim: c.dim,
            theta_mode: c.theta_mode.into(),
            threshold: c.threshold,
            revenue_range: [c.revenue_range.0, c.revenue_range.1],
            seed: c.seed.master,
            replication: c.seed.replication,
        }
    }
}

impl From<&ConfigFile> for InstanceConfig {
    fn from(c: &ConfigFile) -> Self {
        InstanceConfig {
            n_items: c.n_items,
            cardinality: c.cardinality,
            dim: c.dim,
            theta_mode: c.theta_mode.into(),
            threshold: c.threshold,
            revenue_range: (c.revenue_range[0], c.revenue_range[1]),
            seed: StreamSeed::new(c.seed, c.replication),
        }
    }
}

/// A catalog file, optionally carrying the ground truth of a synthetic
/// instance. Plain catalog files parse with every truth field absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(flatten)]
    pub catalog: CatalogFile,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_star: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub s_star: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub v_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<ConfigFile>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            catalog: CatalogFile::from_catalog(&inst.catalog),
            theta_star: Some(inst.theta_star.to_vec()),
            s_star: Some(to_one_based(&inst.s_star)),
            v_star: Some(inst.v_star),
            config: Some((&inst.config).into()),
        }
    }

    /// The full instance, or `None` for a bare catalog.
    pub fn to_instance(&self) -> std::result::Result<Option<Instance>, String> {
        let catalog = self.catalog.to_catalog()?;
        match (&self.theta_star, &self.s_star, self.v_star, &self.config) {
            (Some(theta), Some(s), Some(v), Some(cfg)) => {
                if theta.len() != catalog.dim() {
                    return Err("theta_star has the wrong dimension".into());
                }
                let s_star = from_one_based(s)?;
                if s_star.items().iter().any(|&i| i >= catalog.n_items()) {
                    return Err("s_star references an item outside the catalog".into());
                }
                let config = InstanceConfig::from(cfg);
                config.validate().map_err(|e| e.to_string())?;
                Ok(Some(Instance {
                    catalog,
                    theta_star: ParamVector::new(theta.clone()),
                    s_star,
                    v_star: v,
                    config,
                }))
            }
            (None, None, None, None) => Ok(None),
            _ => Err("theta_star, s_star, v_star and config must appear together".into()),
        }
    }
}

pub fn write_catalog(path: &Path, catalog: &Catalog) -> Result<()> {
    write_json(path, &CatalogFile::from_catalog(catalog))
}

pub fn read_catalog(path: &Path) -> Result<Catalog> {
    let file: CatalogFile = read_json(path)?;
    file.to_catalog()
        .map_err(|message| FormatError::Field { path: display(path), line: 0, message })
}

pub fn write_instance(path: &Path, inst: &Instance) -> Result<()> {
    write_json(path, &InstanceFile::from_instance(inst))
}

/// Reads a catalog or instance file; the instance is `None` for a bare catalog.
pub fn read_instance_or_catalog(path: &Path) -> Result<(Catalog, Option<Instance>)> {
    let file: InstanceFile = read_json(path)?;
    let field = |message| FormatError::Field { path: display(path), line: 0, message };
    let catalog = file.catalog.to_catalog().map_err(field)?;
    let inst = file.to_instance().map_err(field)?;
    Ok((catalog, inst))
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    read_instance_or_catalog(path)?.1.ok_or_else(|| FormatError::Field {
        path: display(path),
        line: 0,
        message: "file holds a catalog without ground truth".into(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRow {
    sample_id: u64,
    assortment: String,
    choice: usize,
    revenue: f64,
}

pub const DATASET_HEADER: &str = "sample_id,assortment,choice,revenue";

pub fn write_dataset_to<W: Write>(writer: W, ds: &OfflineDataset) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for (k, r) in ds.records().iter().enumerate() {
        out.serialize(DatasetRow {
            sample_id: k as u64 + 1,
            assortment: format_assortment(&r.assortment),
            choice: r.choice.map_or(0, |i| i + 1),
            revenue: r.revenue,
        })?;
    }
    if ds.is_empty() {
        out.write_record(DATASET_HEADER.split(','))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_dataset(path: &Path, ds: &OfflineDataset) -> Result<()> {
    write_dataset_to(create(path)?, ds).map_err(|source| FormatError::Csv { path: display(path), source })
}

pub fn read_dataset_from<R: Read>(reader: R, path: &str) -> Result<OfflineDataset> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input
        .headers()
        .map_err(|source| FormatError::Csv { path: path.into(), source })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != DATASET_HEADER {
        return Err(FormatError::Field {
            path: path.into(),
            line: 1,
            message: format!("expected header {DATASET_HEADER:?}, found {header:?}"),
        });
    }
    let mut records = Vec::new();
    for row in input.deserialize::<DatasetRow>() {
        let row = row.map_err(|source| FormatError::Csv { path: path.into(), source })?;
        let line = records.len() as u64 + 2;
        let field = |message| FormatError::Field { path: path.into(), line, message };
        let assortment = parse_assortment(&row.assortment).map_err(field)?;
        let choice = match row.choice {
            0 => None,
            i => Some(i - 1),
        };
        records.push(Record { assortment, choice, revenue: row.revenue });
    }
    OfflineDataset::new(records).map_err(|source| FormatError::Model { path: path.into(), source })
}

pub fn read_dataset(path: &Path) -> Result<OfflineDataset> {
    read_dataset_from(open(path)?, &display(path))
}

/// A fitted parameter vector together with the fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaFile {
    pub theta: Vec<f64>,
    pub loss: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&FitResult> for ThetaFile {
    fn from(fit: &FitResult) -> Self {
        Self {
            theta: fit.theta.to_vec(),
            loss: fit.loss,
            grad_norm: fit.grad_norm,
            iterations: fit.iterations,
            converged: fit.converged,
        }
    }
}

pub fn write_theta(path: &Path, fit: &FitResult) -> Result<()> {
    write_json(path, &ThetaFile::from(fit))
}

pub fn read_theta(path: &Path) -> Result<ThetaFile> {
    read_json(path)
}

pub const TRACE_HEADER: &str = "iter,assortment,theta,worst_value";

pub fn write_trace_to<W: Write>(writer: W, trace: &SolveTrace) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(TRACE_HEADER.split(','))?;
    for r in &trace.records {
        out.write_record([
            r.iter.to_string(),
            format_assortment(&r.assortment),
            format_vector(&r.theta),
            r.worst_value.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &SolveTrace) -> Result<()> {
    write_trace_to(create(path)?, trace).map_err(|source| FormatError::Csv { path: display(path), source })
}
