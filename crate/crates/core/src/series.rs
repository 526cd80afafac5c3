//! Uniformly sampled input/output records.

use crate::error::{HonuError, Result};

/// A uniformly sampled record of plant input `u(k)`, plant output
/// `y_real(k)`, and optionally the model output `y_model(k)` and prediction
/// error `e(k) = y_real(k) - y_model(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Sample period in seconds.
    pub dt: f64,
    /// Plant input (wheelset yaw torque).
    pub u: Vec<f64>,
    /// Plant output (lateral skew).
    pub y_real: Vec<f64>,
    /// Model output, filled by evaluation.
    pub y_model: Option<Vec<f64>>,
    /// Prediction error, filled by evaluation.
    pub e: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(dt: f64, u: Vec<f64>, y_real: Vec<f64>) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(HonuError::InvalidConfig(format!(
                "sample period must be positive, got {dt}"
            )));
        }
        if u.len() != y_real.len() {
            return Err(HonuError::DimensionMismatch {
                context: "time series columns",
                expected: u.len(),
                actual: y_real.len(),
            });
        }
        Ok(Self {
            dt,
            u,
            y_real,
            y_model: None,
            e: None,
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Time of sample `k` in seconds.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Attach model outputs and recompute `e = y_real - y_model`.
    pub fn with_model_outputs(mut self, y_model: Vec<f64>) -> Result<Self> {
        if y_model.len() != self.y_real.len() {
            return Err(HonuError::DimensionMismatch {
                context: "model output column",
                expected: self.y_real.len(),
                actual: y_model.len(),
            });
        }
        let e = self
            .y_real
            .iter()
            .zip(&y_model)
            .map(|(yr, ym)| yr - ym)
            .collect();
        self.y_model = Some(y_model);
        self.e = Some(e);
        Ok(self)
    }
}

/// Per-channel affine standardization of a series: each channel is mapped to
/// `(v - offset) / scale`. Off by default; training on raw data keeps the
/// learning-rate semantics unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesScaler {
    pub u_offset: f64,
    pub u_scale: f64,
    pub y_offset: f64,
    pub y_scale: f64,
}

impl SeriesScaler {
    /// Fit offsets and scales to the series mean and standard deviation.
    /// A constant channel keeps unit scale.
    pub fn fit(series: &TimeSeries) -> Self {
        let guard = |s: f64| if s > 0.0 { s } else { 1.0 };
        Self {
            u_offset: mean(&series.u),
            u_scale: guard(std_dev(&series.u)),
            y_offset: mean(&series.y_real),
            y_scale: guard(std_dev(&series.y_real)),
        }
    }

    /// Map a raw series into standardized coordinates.
    pub fn apply(&self, series: &TimeSeries) -> Result<TimeSeries> {
        TimeSeries::new(
            series.dt,
            series
                .u
                .iter()
                .map(|v| (v - self.u_offset) / self.u_scale)
                .collect(),
            series
                .y_real
                .iter()
                .map(|v| (v - self.y_offset) / self.y_scale)
                .collect(),
        )
    }

    /// Map a model output from standardized back to raw coordinates.
    pub fn invert_output(&self, y_scaled: f64) -> f64 {
        y_scaled * self.y_scale + self.y_offset
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation, used for relative error bounds.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Root-mean-square of a slice.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}
