//! File formats: CSV tables and line-oriented weight files.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! written value parses back to the identical bits and repeated runs with the
//! same seed produce byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use honu::controller::{ClosedLoopResult, ControllerState, XiLayout};
use honu::identification::IdentifiedModel;
use honu::series::TimeSeries;
use honu::training::TrainingReport;
use honu::unit::{Architecture, LinearUnit, NeuralUnit, QuadraticUnit, RegressorLayout};

use crate::error::AppError;

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<(), AppError> {
    let mut w = BufWriter::new(File::create(path)?);
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Dataset table: `k,t,u,y_real`.
pub fn write_dataset_csv(path: &Path, series: &TimeSeries) -> Result<(), AppError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "k,t,u,y_real")?;
    for k in 0..series.len() {
        writeln!(w, "{k},{},{},{}", series.time(k), series.u[k], series.y_real[k])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a dataset table written by [`write_dataset_csv`].
pub fn read_dataset_csv(path: &Path) -> Result<TimeSeries, AppError> {
    let reader = BufReader::new(
        File::open(path).map_err(|e| AppError::Io(format!("cannot open {}: {e}", path.display())))?,
    );
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| AppError::config(format!("{}: empty file", path.display())))??;
    if header.trim() != "k,t,u,y_real" {
        return Err(AppError::config(format!(
            "{}: expected header `k,t,u,y_real`, got `{header}`",
            path.display()
        )));
    }
    let mut t_values: Vec<f64> = Vec::new();
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(AppError::config(format!(
                "{} line {}: expected 4 columns, got {}",
                path.display(),
                i + 2,
                cols.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64, AppError> {
            s.trim().parse().map_err(|e| {
                AppError::config(format!(
                    "{} line {}: bad {what} value `{s}`: {e}",
                    path.display(),
                    i + 2
                ))
            })
        };
        t_values.push(parse(cols[1], "t")?);
        u.push(parse(cols[2], "u")?);
        y.push(parse(cols[3], "y_real")?);
    }
    if u.len() < 2 {
        return Err(AppError::config(format!(
            "{}: need at least 2 samples",
            path.display()
        )));
    }
    let dt = t_values[1] - t_values[0];
    Ok(TimeSeries::new(dt, u, y)?)
}

/// Training report table: `epoch,sse`. Wall-clock cost is reported on stdout
/// instead, so the file is reproducible byte for byte.
pub fn write_report_csv(path: &Path, sse_per_epoch: &[f64]) -> Result<(), AppError> {
    let mut lines = vec!["epoch,sse".to_string()];
    lines.extend(
        sse_per_epoch
            .iter()
            .enumerate()
            .map(|(i, sse)| format!("{},{}", i + 1, sse)),
    );
    write_lines(path, lines)
}

/// Evaluation table: `k,t,u,y_real,y_model,e`.
pub fn write_eval_csv(path: &Path, series: &TimeSeries) -> Result<(), AppError> {
    let y_model = series
        .y_model
        .as_deref()
        .ok_or_else(|| AppError::config("evaluation series lacks model outputs"))?;
    let e = series
        .e
        .as_deref()
        .ok_or_else(|| AppError::config("evaluation series lacks errors"))?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "k,t,u,y_real,y_model,e")?;
    for k in 0..series.len() {
        writeln!(
            w,
            "{k},{},{},{},{},{}",
            series.time(k),
            series.u[k],
            series.y_real[k],
            y_model[k],
            e[k]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Controller tuning table: `epoch,sse_reg`.
pub fn write_tuning_csv(path: &Path, sse_reg_per_epoch: &[f64]) -> Result<(), AppError> {
    let mut lines = vec!["epoch,sse_reg".to_string()];
    lines.extend(
        sse_reg_per_epoch
            .iter()
            .enumerate()
            .map(|(i, sse)| format!("{},{}", i + 1, sse)),
    );
    write_lines(path, lines)
}

/// Closed-loop trace table: `k,t,d,q,y,e_reg`.
pub fn write_closed_loop_csv(path: &Path, result: &ClosedLoopResult) -> Result<(), AppError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "k,t,d,q,y,e_reg")?;
    for k in 0..result.len() {
        writeln!(
            w,
            "{k},{},{},{},{},{}",
            k as f64 * result.dt,
            result.desired[k],
            result.q[k],
            result.y[k],
            result.e_reg[k]
        )?;
    }
    w.flush()?;
    Ok(())
}

const MODEL_MAGIC: &str = "honu-model v1";
const CONTROLLER_MAGIC: &str = "honu-controller v1";

fn arch_tag_model(a: Architecture) -> &'static str {
    match a {
        Architecture::Lnu => "dlnu",
        Architecture::Qnu => "dqnu",
    }
}

fn arch_tag_controller(a: Architecture) -> &'static str {
    match a {
        Architecture::Lnu => "lnu",
        Architecture::Qnu => "qnu",
    }
}

/// Versioned line-oriented model weight file.
pub fn write_model(path: &Path, model: &IdentifiedModel) -> Result<(), AppError> {
    let mut lines = vec![
        MODEL_MAGIC.to_string(),
        format!("architecture {}", arch_tag_model(model.unit.architecture())),
        format!("n_y {}", model.layout.n_y),
        format!("n_u {}", model.layout.n_u),
        format!("dt {}", model.dt),
        format!("weights {}", model.unit.weight_count()),
    ];
    lines.extend(model.unit.weights().iter().map(|w| w.to_string()));
    write_lines(path, lines)
}

struct KeyedReader {
    lines: Vec<String>,
    pos: usize,
    path: String,
}

impl KeyedReader {
    fn open(path: &Path, magic: &str) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Io(format!("cannot read {}: {e}", path.display())))?;
        let lines: Vec<String> = text.lines().map(|l| l.to_string()).collect();
        if lines.first().map(|s| s.as_str()) != Some(magic) {
            return Err(AppError::config(format!(
                "{}: expected `{magic}` header",
                path.display()
            )));
        }
        Ok(Self {
            lines,
            pos: 1,
            path: path.display().to_string(),
        })
    }

    fn field(&mut self, key: &str) -> Result<String, AppError> {
        let line = self.lines.get(self.pos).ok_or_else(|| {
            AppError::config(format!("{}: unexpected end of file, wanted `{key}`", self.path))
        })?;
        let (k, v) = line.split_once(' ').ok_or_else(|| {
            AppError::config(format!("{} line {}: malformed field", self.path, self.pos + 1))
        })?;
        if k != key {
            return Err(AppError::config(format!(
                "{} line {}: expected field `{key}`, got `{k}`",
                self.path,
                self.pos + 1
            )));
        }
        self.pos += 1;
        Ok(v.to_string())
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, AppError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.field(key)?;
        v.parse().map_err(|e| {
            AppError::config(format!("{}: bad `{key}` value `{v}`: {e}", self.path))
        })
    }

    fn weights(&mut self, count: usize) -> Result<Vec<f64>, AppError> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let line = self.lines.get(self.pos).ok_or_else(|| {
                AppError::config(format!("{}: fewer weights than declared", self.path))
            })?;
            out.push(line.trim().parse().map_err(|e| {
                AppError::config(format!(
                    "{} line {}: bad weight `{line}`: {e}",
                    self.path,
                    self.pos + 1
                ))
            })?);
            self.pos += 1;
        }
        Ok(out)
    }
}

fn unit_from_parts(
    tag: &str,
    lnu_tag: &str,
    qnu_tag: &str,
    weights: Vec<f64>,
    input_len: usize,
    path: &str,
) -> Result<NeuralUnit, AppError> {
    if tag == lnu_tag {
        Ok(NeuralUnit::Linear(LinearUnit::from_weights(weights)?))
    } else if tag == qnu_tag {
        Ok(NeuralUnit::Quadratic(QuadraticUnit::from_weights(
            weights, input_len,
        )?))
    } else {
        Err(AppError::config(format!(
            "{path}: unknown architecture `{tag}`"
        )))
    }
}

/// Read a model weight file. The training report is not stored in the file;
/// the returned model carries an empty one.
pub fn read_model(path: &Path) -> Result<IdentifiedModel, AppError> {
    let mut r = KeyedReader::open(path, MODEL_MAGIC)?;
    let arch = r.field("architecture")?;
    let n_y: usize = r.parse("n_y")?;
    let n_u: usize = r.parse("n_u")?;
    let dt: f64 = r.parse("dt")?;
    let count: usize = r.parse("weights")?;
    let weights = r.weights(count)?;
    let layout = RegressorLayout::new(n_y, n_u);
    let unit = unit_from_parts(&arch, "dlnu", "dqnu", weights, layout.len(), &r.path)?;
    let report = TrainingReport {
        sse_per_epoch: Vec::new(),
        final_unit: unit.clone(),
        per_step_seconds: 0.0,
    };
    Ok(IdentifiedModel::new(unit, layout, dt, report)?)
}

/// Versioned line-oriented controller weight file.
pub fn write_controller(path: &Path, controller: &ControllerState) -> Result<(), AppError> {
    let mut lines = vec![
        CONTROLLER_MAGIC.to_string(),
        format!(
            "architecture {}",
            arch_tag_controller(controller.unit.architecture())
        ),
        format!("n_qy {}", controller.layout.n_qy),
        format!("n_qe {}", controller.layout.n_qe),
        format!("resample_stride {}", controller.resample_stride),
        format!(
            "q_limit {}",
            controller
                .q_limit
                .map_or("none".to_string(), |v| v.to_string())
        ),
        format!("weights {}", controller.unit.weight_count()),
    ];
    lines.extend(controller.unit.weights().iter().map(|w| w.to_string()));
    write_lines(path, lines)
}

/// Read a controller weight file.
pub fn read_controller(path: &Path) -> Result<ControllerState, AppError> {
    let mut r = KeyedReader::open(path, CONTROLLER_MAGIC)?;
    let arch = r.field("architecture")?;
    let n_qy: usize = r.parse("n_qy")?;
    let n_qe: usize = r.parse("n_qe")?;
    let stride: usize = r.parse("resample_stride")?;
    let q_limit_raw = r.field("q_limit")?;
    let count: usize = r.parse("weights")?;
    let weights = r.weights(count)?;
    let layout = XiLayout::new(n_qy, n_qe);
    let unit = unit_from_parts(&arch, "lnu", "qnu", weights, layout.len(), &r.path)?;
    let mut state = ControllerState::new(unit, layout, stride)?;
    if q_limit_raw != "none" {
        let limit: f64 = q_limit_raw.parse().map_err(|e| {
            AppError::config(format!("{}: bad q_limit `{q_limit_raw}`: {e}", r.path))
        })?;
        state = state.with_q_limit(limit)?;
    }
    Ok(state)
}
