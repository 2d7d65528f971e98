//! Replicated experiments comparing the pessimistic solver with the
//! estimate-then-optimize baseline.
//!
//! Replication `r` of every sweep point uses `StreamSeed::new(master, r)`,
//! so an n-sweep reuses one instance per replication and its datasets grow by
//! extension, while p- and d-sweeps share common random numbers.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use pasta_core::datagen::{generate_dataset, generate_instance, InstanceConfig, SamplingDesign};
use pasta_core::metrics::{assortment_accuracy, regret};
use pasta_core::rng::StreamSeed;
use pasta_core::solver::{baseline_solve, pasta_solve, PastaOptions};
use pasta_core::ParamSpace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    N,
    P,
    D,
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVar::N => "n",
            SweepVar::P => "p",
            SweepVar::D => "d",
        })
    }
}

impl FromStr for SweepVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "n" => Ok(SweepVar::N),
            "p" => Ok(SweepVar::P),
            "d" => Ok(SweepVar::D),
            _ => Err(format!("unknown sweep variable {s:?} (expected n, p or d)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pasta,
    Baseline,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Pasta, Method::Baseline];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pasta => "pasta",
            Method::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Instance settings at the base point; its seed is replaced per
    /// replication.
    pub instance: InstanceConfig,
    pub n: usize,
    pub p: f64,
    pub theta_max: f64,
    pub pasta: PastaOptions,
    pub variable: SweepVar,
    pub values: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
    /// When false every `wall_time_ms` is written as zero, which makes the
    /// result file a pure function of the configuration.
    pub record_wall_time: bool,
}

pub const DEFAULT_REPLICATIONS: usize = 50;

impl SweepConfig {
    /// The n-sweep defaults: `N = 40`, `K = 8`, `d = 16`, `p = 0.9`.
    pub fn new(variable: SweepVar, values: Vec<f64>, master_seed: u64) -> Self {
        Self {
            instance: InstanceConfig::new(40, 8, 16, StreamSeed::new(master_seed, 0)),
            n: 150,
            p: 0.9,
            theta_max: ParamSpace::DEFAULT_THETA_MAX,
            pasta: PastaOptions::default(),
            variable,
            values,
            replications: DEFAULT_REPLICATIONS,
            master_seed,
            record_wall_time: true,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.values.is_empty() {
            return Err("sweep needs at least one value".into());
        }
        if self.replications == 0 {
            return Err("replications must be at least 1".into());
        }
        for &v in &self.values {
            let point = self.point(v)?;
            point.instance.validate().map_err(|e| e.to_string())?;
            SamplingDesign::new(point.p, point.instance.n_items, point.instance.cardinality)
                .map_err(|e| e.to_string())?;
            ParamSpace::new(point.instance.dim, self.theta_max).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    fn point(&self, v: f64) -> Result<Point, String> {
        let count = |what: &str| -> Result<usize, String> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(format!("{what} must be a positive integer, got {v}"))
            }
        };
        let mut point = Point {
            instance: self.instance,
            n: self.n,
            p: self.p,
        };
        match self.variable {
            SweepVar::N => point.n = count("n")?,
            SweepVar::D => point.instance.dim = count("d")?,
            SweepVar::P => {
                if !(v > 0.0 && v < 1.0) {
                    return Err(format!("p must lie in (0, 1), got {v}"));
                }
                point.p = v;
            }
        }
        if point.n == 0 {
            return Err("n must be at least 1".into());
        }
        Ok(point)
    }
}

struct Point {
    instance: InstanceConfig,
    n: usize,
    p: f64,
}

/// One method's result on one replication. A failed replication is kept as
/// a row whose regret and accuracy are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub rep: usize,
    pub method: Method,
    pub regret: f64,
    pub accuracy: f64,
    pub wall_time_ms: f64,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.regret.is_nan()
    }
}

fn run_replication(cfg: &SweepConfig, value: f64, rep: usize) -> Vec<ResultRow> {
    let row = |method, regret, accuracy, wall_time_ms| ResultRow {
        sweep_var: cfg.variable,
        sweep_value: value,
        rep,
        method,
        regret,
        accuracy,
        wall_time_ms,
    };
    let failure = || Method::ALL.iter().map(|&m| row(m, f64::NAN, f64::NAN, 0.0)).collect();
    let Ok(point) = cfg.point(value) else {
        return failure();
    };
    let seed = StreamSeed::new(cfg.master_seed, rep as u64);
    let setup = || -> pasta_core::Result<_> {
        let instance = generate_instance(&InstanceConfig { seed, ..point.instance })?;
        let design = SamplingDesign::new(point.p, point.instance.n_items, point.instance.cardinality)?;
        let dataset = generate_dataset(&instance, &design, point.n, seed)?;
        let space = ParamSpace::new(point.instance.dim, cfg.theta_max)?;
        Ok((instance, dataset, space))
    };
    let Ok((instance, dataset, space)) = setup() else {
        return failure();
    };
    let cons = instance.constraints();

    Method::ALL
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let chosen = match method {
                Method::Pasta => pasta_solve(&dataset, &instance.catalog, &cons, &space, &cfg.pasta).map(|o| o.assortment),
                Method::Baseline => baseline_solve(&dataset, &instance.catalog, &cons, &space, &cfg.pasta.fit),
            };
            let elapsed = if cfg.record_wall_time {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            let scored = chosen.and_then(|s| Ok((regret(&instance, &s)?, assortment_accuracy(&s, &instance.s_star)?)));
            match scored {
                Ok((r, a)) => row(method, r, a, elapsed),
                Err(_) => row(method, f64::NAN, f64::NAN, elapsed),
            }
        })
        .collect()
}

/// Runs every (value, replication) pair in parallel; rows come back ordered
/// by value position, replication and method.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ResultRow>, String> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.values.len())
        .flat_map(|v| (0..cfg.replications).map(move |r| (v, r)))
        .collect();
    let mut chunks: Vec<((usize, usize), Vec<ResultRow>)> = jobs
        .par_iter()
        .map(|&(v, r)| ((v, r), run_replication(cfg, cfg.values[v], r)))
        .collect();
    chunks.sort_by_key(|(key, _)| *key);
    Ok(chunks.into_iter().flat_map(|(_, rows)| rows).collect())
}

pub const RESULTS_HEADER: &str = "sweep_var,sweep_value,rep,method,regret,accuracy,wall_time_ms";

pub fn write_results<W: Write>(writer: W, rows: &[ResultRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        out.write_record(RESULTS_HEADER.split(','))?;
    }
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(reader: R) -> csv::Result<Vec<ResultRow>> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> std::io::Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_results(file, rows).map_err(std::io::Error::other)
}

pub fn parse_csv(path: &Path) -> std::io::Result<Vec<ResultRow>> {
    let rows = read_results(std::io::BufReader::new(std::fs::File::open(path)?));
    rows.map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Regret,
    Accuracy,
}

impl Metric {
    pub fn of(&self, row: &ResultRow) -> f64 {
        match self {
            Metric::Regret => row.regret,
            Metric::Accuracy => row.accuracy,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Metric::Regret => "regret",
            Metric::Accuracy => "assortment accuracy",
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "regret" => Ok(Metric::Regret),
            "accuracy" => Ok(Metric::Accuracy),
            _ => Err(format!("unknown metric {s:?} (expected regret or accuracy)")),
        }
    }
}

/// Mean and standard error of one method at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryPoint {
    pub method: Method,
    pub sweep_value: f64,
    pub mean: f64,
    /// Zero when fewer than two replications succeeded.
    pub std_error: f64,
    pub count: usize,
    pub failures: usize,
}

/// Summaries in (method, sweep value) order; failed rows are counted but
/// left out of the statistics.
pub fn summarize(rows: &[ResultRow], metric: Metric) -> Vec<SummaryPoint> {
    let mut keys: Vec<(Method, f64)> = rows.iter().map(|r| (r.method, r.sweep_value)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(method, sweep_value)| {
            let group = rows.iter().filter(|r| r.method == method && r.sweep_value == sweep_value);
            let failures = group.clone().filter(|r| r.failed()).count();
            let xs: Vec<f64> = group.filter(|r| !r.failed()).map(|r| metric.of(r)).collect();
            let count = xs.len();
            let mean = if count == 0 { f64::NAN } else { xs.iter().sum::<f64>() / count as f64 };
            let std_error = if count < 2 {
                0.0
            } else {
                let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1) as f64;
                (var / count as f64).sqrt()
            };
            SummaryPoint {
                method,
                sweep_value,
                mean,
                std_error,
                count,
                failures,
            }
        })
        .collect()
}
