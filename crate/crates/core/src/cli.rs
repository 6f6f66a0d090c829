//! Experiment configuration files, dispatch and CSV output.
//!
//! Configs are flat `key = value` documents, one pair per line. Blank lines
//! and lines starting with `#` are ignored. Lists are comma-separated; a noise
//! matrix is given row by row with repeated `sigma_row` keys.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::harness::{ConvergenceMode, ConvergenceReport, Harness, Observable, TraceReport, WeakReference};
use crate::integrators::{SchemeId, SolverSettings};
use crate::models::{self, ModelKind, SystemModel};
use crate::state::State;
use crate::stochastic::DEFAULT_SEED;

pub const DEFAULT_TRACE_SAMPLES: usize = 10_000;
pub const DEFAULT_STRONG_SAMPLES: usize = 1_000;
pub const DEFAULT_WEAK_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Trace,
    Strong,
    Weak,
    Single,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace" => Ok(Command::Trace),
            "strong" => Ok(Command::Strong),
            "weak" => Ok(Command::Weak),
            "single" => Ok(Command::Single),
            _ => Err(invalid("command", format!("unknown command `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSpec {
    /// The model's default noise.
    Default,
    /// Scalar noise on the first component.
    Scalar(f64),
    /// Full `n×d` matrix.
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub model_id: String,
    pub schemes: Vec<SchemeId>,
    pub sigma: SigmaSpec,
    pub initial_value: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub h_list: Vec<f64>,
    pub h_ref: Option<f64>,
    pub t_end: f64,
    pub samples: usize,
    pub seed: u64,
    pub observable: Observable,
    pub moments: Vec<ConvergenceMode>,
    pub reference_scheme: Option<SchemeId>,
    pub settings: SolverSettings,
    pub output_path: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "command",
    "model",
    "scheme",
    "sigma",
    "sigma_row",
    "initial_value",
    "h",
    "h_list",
    "h_ref",
    "t_end",
    "samples",
    "seed",
    "observable",
    "moments",
    "reference_scheme",
    "fp_tolerance",
    "fp_max_iters",
    "quadrature_nodes",
    "output",
];

fn invalid(key: &str, detail: impl Into<String>) -> Error {
    Error::InvalidValue {
        key: key.to_string(),
        detail: detail.into(),
    }
}

fn parse_real(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| invalid(key, format!("`{value}` is not a finite number")))
}

fn parse_positive(key: &str, value: &str) -> Result<f64> {
    let v = parse_real(key, value)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive, got {value}")))
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_real(key, v.trim())).collect()
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    match value.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(invalid(key, format!("`{value}` is not a positive integer"))),
    }
}

pub fn parse_seed(value: &str) -> Result<u64> {
    let parsed = match value.strip_prefix("0x").or_else(|| value.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => value.parse::<u64>(),
    };
    parsed.map_err(|_| invalid("seed", format!("`{value}` is not a 64-bit integer")))
}

/// Parses and validates a config document, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut single: Vec<(&str, &str)> = Vec::new();
    let mut sigma_rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| invalid(line, format!("line {} is not `key = value`", lineno + 1)))?;
        if !KEYS.contains(&key) {
            return Err(Error::UnknownKey(key.to_string()));
        }
        if key == "sigma_row" {
            sigma_rows.push(parse_list(key, value)?);
        } else if single.iter().any(|(k, _)| *k == key) {
            return Err(invalid(key, "given more than once"));
        } else {
            single.push((key, value));
        }
    }
    let get = |key: &str| single.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    let require = |key: &str| get(key).ok_or_else(|| Error::MissingRequired(key.to_string()));

    let command: Command = require("command")?.parse()?;
    let model_id = require("model")?.to_string();
    let schemes = get("scheme")
        .unwrap_or("dp")
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<SchemeId>()
                .map_err(|_| invalid("scheme", format!("unknown scheme `{}`", s.trim())))
        })
        .collect::<Result<Vec<_>>>()?;

    let sigma = match (get("sigma"), sigma_rows.is_empty()) {
        (Some(_), false) => return Err(invalid("sigma", "use either `sigma` or `sigma_row`, not both")),
        (Some(v), true) => SigmaSpec::Scalar(parse_real("sigma", v)?),
        (None, false) => SigmaSpec::Rows(sigma_rows),
        (None, true) => SigmaSpec::Default,
    };

    let initial_value = get("initial_value")
        .map(|v| parse_list("initial_value", v))
        .transpose()?;
    let t_end = parse_positive("t_end", require("t_end")?)?;

    let (h, h_list, h_ref) = match command {
        Command::Trace | Command::Single => (Some(parse_positive("h", require("h")?)?), Vec::new(), None),
        Command::Strong | Command::Weak => {
            let list = parse_list("h_list", require("h_list")?)?;
            if list.iter().any(|h| *h <= 0.0) {
                return Err(invalid("h_list", "step sizes must be positive"));
            }
            let h_ref = match command {
                Command::Strong => Some(parse_positive("h_ref", require("h_ref")?)?),
                _ => get("h_ref").map(|v| parse_positive("h_ref", v)).transpose()?,
            };
            (None, list, h_ref)
        }
    };

    let samples = match get("samples") {
        Some(v) => parse_count("samples", v)?,
        None => match command {
            Command::Trace => DEFAULT_TRACE_SAMPLES,
            Command::Strong => DEFAULT_STRONG_SAMPLES,
            Command::Weak => DEFAULT_WEAK_SAMPLES,
            Command::Single => 1,
        },
    };
    let seed = get("seed").map(parse_seed).transpose()?.unwrap_or(DEFAULT_SEED);
    let observable = get("observable")
        .map(|v| {
            v.parse::<Observable>()
                .map_err(|_| invalid("observable", format!("unknown observable `{v}`")))
        })
        .transpose()?
        .unwrap_or(Observable::Energy);
    let moments = get("moments")
        .unwrap_or("m1,m2")
        .split(',')
        .map(|m| match m.trim() {
            "m1" => Ok(ConvergenceMode::WeakM1),
            "m2" => Ok(ConvergenceMode::WeakM2),
            other => Err(invalid("moments", format!("unknown moment `{other}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let reference_scheme = get("reference_scheme")
        .map(|v| {
            v.parse::<SchemeId>()
                .map_err(|_| invalid("reference_scheme", format!("unknown scheme `{v}`")))
        })
        .transpose()?;

    let mut settings = SolverSettings::default();
    if let Some(v) = get("fp_tolerance") {
        settings.fp_tolerance = parse_positive("fp_tolerance", v)?;
    }
    if let Some(v) = get("fp_max_iters") {
        settings.fp_max_iters = parse_count("fp_max_iters", v)?;
    }
    if let Some(v) = get("quadrature_nodes") {
        settings.quadrature_nodes = parse_count("quadrature_nodes", v)?;
    }
    settings
        .validate()
        .map_err(|e| invalid("quadrature_nodes", e.to_string()))?;

    let config = ExperimentConfig {
        command,
        model_id,
        schemes,
        sigma,
        initial_value,
        h,
        h_list,
        h_ref,
        t_end,
        samples,
        seed,
        observable,
        moments,
        reference_scheme,
        settings,
        output_path: get("output").map(PathBuf::from),
    };
    let model = config.build_model()?;
    for scheme in &config.schemes {
        scheme
            .check_model(&model)
            .map_err(|e| invalid("scheme", e.to_string()))?;
    }
    Ok(config)
}

impl ExperimentConfig {
    pub fn build_model(&self) -> Result<SystemModel> {
        let model = match (&self.sigma, self.model_id.as_str()) {
            (_, id) if !["oscillator", "pendulum", "rigid_body"].contains(&id) => {
                return Err(invalid("model", format!("unknown model `{id}`")));
            }
            (SigmaSpec::Default, id) => models::model_by_id(id)?,
            (SigmaSpec::Scalar(s), "rigid_body") => models::make_rigid_body_scalar(*s)?,
            (SigmaSpec::Scalar(s), "pendulum") => models::make_pendulum(*s)?,
            (SigmaSpec::Scalar(s), _) => models::make_oscillator(*s)?,
            (SigmaSpec::Rows(rows), id) => {
                let n = if id == "rigid_body" { 3 } else { 2 };
                if rows.len() != n {
                    return Err(Error::DimensionMismatch {
                        key: "sigma_row".into(),
                        detail: format!("{} rows given, model `{id}` has dimension {n}", rows.len()),
                    });
                }
                let d = rows[0].len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch {
                        key: "sigma_row".into(),
                        detail: "rows have different lengths".into(),
                    });
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                models::model_with_sigma(id, DMatrix::from_row_slice(n, d, &flat))
                    .map_err(|e| invalid("sigma_row", e.to_string()))?
            }
        };
        match &self.initial_value {
            Some(x0) if x0.len() != model.dim() => Err(Error::DimensionMismatch {
                key: "initial_value".into(),
                detail: format!("{} components, model dimension is {}", x0.len(), model.dim()),
            }),
            Some(x0) => model.with_initial_value(State::from_slice(x0)),
            None => Ok(model),
        }
    }

    fn default_reference(&self, model: &SystemModel) -> SchemeId {
        self.reference_scheme
            .unwrap_or(if model.kind() == ModelKind::Oscillator {
                SchemeId::Stm
            } else {
                SchemeId::Dp
            })
    }
}

/// Output of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Trace(Vec<TraceReport>),
    Convergence(Vec<ConvergenceReport>),
    Trajectory(Vec<(f64, State)>),
}

/// Runs the experiment described by `config`.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<Report> {
    let model = config.build_model()?;
    let harness = Harness::new(config.settings, workers);
    match config.command {
        Command::Trace => {
            let h = config.h.expect("validated");
            config
                .schemes
                .iter()
                .map(|s| {
                    harness.run_trace(
                        &model,
                        *s,
                        h,
                        config.t_end,
                        config.samples,
                        config.seed,
                        config.observable,
                    )
                })
                .collect::<Result<_>>()
                .map(Report::Trace)
        }
        Command::Single => {
            let h = config.h.expect("validated");
            harness
                .run_single(&model, config.schemes[0], h, config.t_end, config.seed)
                .map(Report::Trajectory)
        }
        Command::Strong => {
            let h_ref = config.h_ref.expect("validated");
            let reference = config.default_reference(&model);
            config
                .schemes
                .iter()
                .map(|s| {
                    harness.run_strong(
                        &model,
                        *s,
                        &config.h_list,
                        h_ref,
                        config.t_end,
                        config.samples,
                        config.seed,
                        reference,
                    )
                })
                .collect::<Result<_>>()
                .map(Report::Convergence)
        }
        Command::Weak => {
            let reference = match (model.kind(), config.h_ref) {
                (ModelKind::Oscillator, _) => WeakReference::Exact,
                (_, Some(h_ref)) => WeakReference::Surrogate {
                    scheme: config.reference_scheme.unwrap_or(SchemeId::Dp),
                    h_ref,
                },
                (_, None) => return Err(Error::MissingRequired("h_ref".into())),
            };
            let mut out = Vec::new();
            for s in &config.schemes {
                out.extend(harness.run_weak(
                    &model,
                    *s,
                    &config.h_list,
                    config.t_end,
                    config.samples,
                    config.seed,
                    &config.moments,
                    reference,
                )?);
            }
            Ok(Report::Convergence(out))
        }
    }
}

/// Writes `report` as CSV. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_csv<W: Write>(report: &Report, out: &mut W) -> std::io::Result<()> {
    match report {
        Report::Trace(traces) => {
            writeln!(out, "t,mean,std_error,predicted,scheme,observable")?;
            for r in traces {
                for i in 0..r.time_grid.len() {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.time_grid[i], r.sample_mean[i], r.std_error[i], r.predicted[i], r.scheme, r.observable
                    )?;
                }
            }
        }
        Report::Convergence(reports) => {
            writeln!(out, "h,error,mode,scheme")?;
            for r in reports {
                for (h, e) in r.step_sizes.iter().zip(&r.errors) {
                    writeln!(out, "{h},{e},{},{}", r.mode, r.scheme)?;
                }
                writeln!(out, "# fitted_slope={}", r.fitted_slope)?;
            }
        }
        Report::Trajectory(rows) => {
            let n = rows.first().map_or(0, |(_, x)| x.len());
            write!(out, "t")?;
            for i in 1..=n {
                write!(out, ",x_{i}")?;
            }
            writeln!(out)?;
            for (t, x) in rows {
                write!(out, "{t}")?;
                for v in x.iter() {
                    write!(out, ",{v}")?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

/// Writes `report` to `path` as CSV.
pub fn emit_csv(report: &Report, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    write_csv(report, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}
