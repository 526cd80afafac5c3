//! Weight-update regimes for the neural units.
//!
//! Two paths are implemented. The incremental (RTRL) path updates weights
//! sample by sample,
//!
//! ```text
//! w <- w + eta * e(k) * dy/dw,      eta = mu  or  mu / (v·v + 1)
//! ```
//!
//! where the normalization vector `v` is the regressor for an LNU and its
//! quadratic expansion for a QNU. The batch (BPTT) path runs the model over
//! the whole series with frozen weights, stacks the per-sample gradients into
//! a Jacobian, and applies one Levenberg–Marquardt update per epoch:
//!
//! ```text
//! dw = (J'J + (1/mu) I)^-1 J' e
//! ```
//!
//! Both paths use the static gradient: `dy/dw` is the instantaneous regressor
//! (or its expansion) with no sensitivity propagation through fed-back model
//! outputs. The batch path takes the learning rate `mu` itself; the
//! normalization of the incremental path does not apply there.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{HonuError, Result};
use crate::series::TimeSeries;
use crate::unit::{
    build_regressor, quadratic_expand, LinearUnit, NeuralUnit, QuadraticUnit, RegressorLayout,
    RegressorVector,
};

/// Training method selector: incremental sample-by-sample updates or one
/// Levenberg–Marquardt batch update per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingMethod {
    Rtrl,
    Bptt,
}

impl std::fmt::Display for TrainingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainingMethod::Rtrl => write!(f, "rtrl"),
            TrainingMethod::Bptt => write!(f, "bptt"),
        }
    }
}

/// Hyperparameters shared by both training paths.
///
/// `normalize` selects the normalized learning rate on the RTRL path and is
/// forced off on the BPTT path. `n_y`/`n_u` describe the regressor lag
/// structure used when sweeping a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningConfig {
    /// Learning rate mu.
    pub mu: f64,
    pub epochs: usize,
    /// Apply the normalized learning rate on the RTRL path.
    pub normalize: bool,
    pub n_y: usize,
    pub n_u: usize,
}

impl LearningConfig {
    pub fn layout(&self) -> RegressorLayout {
        RegressorLayout::new(self.n_y, self.n_u)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu <= 0.0 || !self.mu.is_finite() {
            return Err(HonuError::InvalidConfig(format!(
                "learning rate must be positive and finite, got {}",
                self.mu
            )));
        }
        if self.epochs == 0 {
            return Err(HonuError::InvalidConfig(
                "epoch count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a training run: the per-epoch sum of squared errors, the final
/// unit, and the mean wall-clock cost of one sample update.
#[derive(Debug, Clone)]
pub struct TrainingReport {
    /// Sum of squared errors per epoch, warm-up samples excluded. Always
    /// finite; divergence aborts the run with an error instead.
    pub sse_per_epoch: Vec<f64>,
    /// Unit holding the final weights.
    pub final_unit: NeuralUnit,
    /// Mean wall-clock seconds per sample update.
    pub per_step_seconds: f64,
}

/// Normalized learning rate `mu / (v·v + 1)` where `v` is the regressor for
/// an LNU or its quadratic expansion (colx) for a QNU. The denominator is at
/// least 1, so the result is always finite.
pub fn normalized_rate(mu: f64, v: &[f64]) -> f64 {
    mu / (v.iter().map(|x| x * x).sum::<f64>() + 1.0)
}

fn effective_rate(cfg: &LearningConfig, v: &[f64]) -> f64 {
    if cfg.normalize {
        normalized_rate(cfg.mu, v)
    } else {
        cfg.mu
    }
}

/// One incremental update of an LNU: `w <- w + eta * e_k * x`.
pub fn rtrl_step_lnu(
    unit: &LinearUnit,
    x: &RegressorVector,
    e_k: f64,
    cfg: &LearningConfig,
) -> Result<LinearUnit> {
    let values = x.values();
    if values.len() != unit.input_len() {
        return Err(HonuError::DimensionMismatch {
            context: "RTRL step (LNU)",
            expected: unit.input_len(),
            actual: values.len(),
        });
    }
    let eta = effective_rate(cfg, values);
    let step = eta * e_k;
    let weights: Vec<f64> = unit
        .weights()
        .iter()
        .zip(values)
        .map(|(w, xv)| w + step * xv)
        .collect();
    LinearUnit::from_weights(weights)
}

/// One incremental update of a QNU: `colW <- colW + eta * e_k * colx`.
pub fn rtrl_step_qnu(
    unit: &QuadraticUnit,
    x: &RegressorVector,
    e_k: f64,
    cfg: &LearningConfig,
) -> Result<QuadraticUnit> {
    if x.len() != unit.input_len() {
        return Err(HonuError::DimensionMismatch {
            context: "RTRL step (QNU)",
            expected: unit.input_len(),
            actual: x.len(),
        });
    }
    let colx = quadratic_expand(x);
    let eta = effective_rate(cfg, colx.values());
    let step = eta * e_k;
    let weights: Vec<f64> = unit
        .weights()
        .iter()
        .zip(colx.values())
        .map(|(w, xv)| w + step * xv)
        .collect();
    QuadraticUnit::from_weights(weights, unit.input_len())
}

/// One incremental update of either unit type.
pub fn rtrl_step(
    unit: &NeuralUnit,
    x: &RegressorVector,
    e_k: f64,
    cfg: &LearningConfig,
) -> Result<NeuralUnit> {
    match unit {
        NeuralUnit::Linear(u) => Ok(NeuralUnit::Linear(rtrl_step_lnu(u, x, e_k, cfg)?)),
        NeuralUnit::Quadratic(u) => Ok(NeuralUnit::Quadratic(rtrl_step_qnu(u, x, e_k, cfg)?)),
    }
}

/// Levenberg–Marquardt batch update: solves
/// `(J'J + (1/mu) I) dw = J' e` for `dw`.
///
/// The system is solved by Cholesky factorization; the regularized matrix is
/// positive definite for finite `J` and `mu > 0`, so a factorization failure
/// signals NaN contamination upstream.
pub fn bptt_lm_update(jacobian: &[Vec<f64>], errors: &[f64], mu: f64) -> Result<Vec<f64>> {
    if mu <= 0.0 || !mu.is_finite() {
        return Err(HonuError::InvalidConfig(format!(
            "learning rate must be positive and finite, got {mu}"
        )));
    }
    let n = jacobian.len();
    if n == 0 {
        return Err(HonuError::InvalidConfig(
            "Jacobian must have at least one row".into(),
        ));
    }
    if errors.len() != n {
        return Err(HonuError::DimensionMismatch {
            context: "LM error vector",
            expected: n,
            actual: errors.len(),
        });
    }
    let m = jacobian[0].len();
    for row in jacobian {
        if row.len() != m {
            return Err(HonuError::DimensionMismatch {
                context: "LM Jacobian row",
                expected: m,
                actual: row.len(),
            });
        }
    }
    let j = DMatrix::from_row_iterator(n, m, jacobian.iter().flatten().copied());
    let e = DVector::from_column_slice(errors);
    let mut jtj = j.transpose() * &j;
    let damping = 1.0 / mu;
    for d in 0..m {
        jtj[(d, d)] += damping;
    }
    let jte = j.transpose() * e;
    let chol = Cholesky::new(jtj).ok_or_else(|| HonuError::SolveFailed {
        context: "regularized normal equations are not positive definite".into(),
    })?;
    let dw = chol.solve(&jte);
    if dw.iter().any(|v| !v.is_finite()) {
        return Err(HonuError::SolveFailed {
            context: "non-finite Levenberg–Marquardt step".into(),
        });
    }
    Ok(dw.as_slice().to_vec())
}

/// Central-difference gradient of the unit output with respect to each
/// weight. The unit output is exactly linear in the weights, so this is an
/// oracle for the analytic gradients used by the update rules.
pub fn finite_difference_gradient(unit: &NeuralUnit, x: &RegressorVector, h: f64) -> Vec<f64> {
    let count = unit.weight_count();
    let mut grad = Vec::with_capacity(count);
    let mut direction = vec![0.0; count];
    for i in 0..count {
        direction[i] = 1.0;
        let plus = unit
            .with_update(&direction, h)
            .and_then(|u| u.predict(x))
            .expect("finite perturbation");
        let minus = unit
            .with_update(&direction, -h)
            .and_then(|u| u.predict(x))
            .expect("finite perturbation");
        grad.push((plus - minus) / (2.0 * h));
        direction[i] = 0.0;
    }
    grad
}

/// Sweep a series once in free-run (parallel) mode: the regressor feeds back
/// model outputs, with the first `warmup` model outputs copied from the plant
/// so the lags are defined. Calls `on_sample` for every post-warm-up sample
/// with the regressor, prediction and error; the closure may return an
/// updated unit (RTRL) or `None` to keep weights frozen (BPTT, evaluation).
fn free_run_sweep<F>(
    series: &TimeSeries,
    mut unit: NeuralUnit,
    layout: RegressorLayout,
    mut on_sample: F,
) -> Result<(NeuralUnit, f64)>
where
    F: FnMut(usize, &NeuralUnit, &RegressorVector, f64, f64) -> Result<Option<NeuralUnit>>,
{
    let n = series.len();
    let warmup = layout.warmup();
    let mut y_model = vec![0.0; n];
    y_model[..warmup].copy_from_slice(&series.y_real[..warmup]);
    let mut sse = 0.0;
    for k in warmup..n {
        let x = build_regressor(&y_model, &series.u, k, layout)?;
        let y_k = unit.predict(&x)?;
        let e_k = series.y_real[k] - y_k;
        sse += e_k * e_k;
        if let Some(updated) = on_sample(k, &unit, &x, y_k, e_k)? {
            unit = updated;
        }
        y_model[k] = y_k;
    }
    Ok((unit, sse))
}

/// Train a unit over a series for `cfg.epochs` epochs with the chosen method.
///
/// Samples are swept in chronological order. The RTRL path applies an
/// incremental update at every post-warm-up sample; the BPTT path assembles
/// the Jacobian from the frozen-weight sweep (row k is the regressor for an
/// LNU, colx for a QNU) and applies one LM update after the sweep. The
/// recorded SSE for an epoch is the sum over that epoch's sweep.
///
/// A non-finite weight or SSE aborts with [`HonuError::Diverged`] carrying
/// the epoch and sample index plus the SSE trace of completed epochs.
pub fn train_epochs(
    series: &TimeSeries,
    unit: NeuralUnit,
    cfg: &LearningConfig,
    method: TrainingMethod,
) -> Result<TrainingReport> {
    cfg.validate()?;
    let layout = cfg.layout();
    let warmup = layout.warmup();
    if unit.input_len() != layout.len() {
        return Err(HonuError::DimensionMismatch {
            context: "training unit vs lag structure",
            expected: layout.len(),
            actual: unit.input_len(),
        });
    }
    if series.len() < warmup + 2 {
        return Err(HonuError::InsufficientData {
            len: series.len(),
            required: warmup + 2,
        });
    }

    let mut current = unit;
    let mut sse_per_epoch: Vec<f64> = Vec::with_capacity(cfg.epochs);
    let samples_per_epoch = series.len() - warmup;
    let started = Instant::now();

    for epoch in 0..cfg.epochs {
        let diverged = |sample: usize, done: &[f64]| HonuError::Diverged {
            epoch,
            sample,
            completed_sse: done.to_vec(),
        };
        let (next, sse) = match method {
            TrainingMethod::Rtrl => {
                free_run_sweep(series, current, layout, |k, unit, x, _y, e_k| {
                    rtrl_step(unit, x, e_k, cfg)
                        .map(Some)
                        .map_err(|_| diverged(k, &sse_per_epoch))
                })?
            }
            TrainingMethod::Bptt => {
                // The batch path takes mu itself; normalization is forced off.
                let mut rows: Vec<Vec<f64>> = Vec::with_capacity(samples_per_epoch);
                let mut errs: Vec<f64> = Vec::with_capacity(samples_per_epoch);
                let (frozen, sse) =
                    free_run_sweep(series, current, layout, |_k, unit, x, _y, e_k| {
                        rows.push(unit.weight_gradient(x.values()));
                        errs.push(e_k);
                        Ok(None)
                    })?;
                if errs.iter().any(|e| !e.is_finite()) {
                    let sample = errs.iter().position(|e| !e.is_finite()).unwrap() + warmup;
                    return Err(diverged(sample, &sse_per_epoch));
                }
                let delta = bptt_lm_update(&rows, &errs, cfg.mu)
                    .map_err(|_| diverged(series.len() - 1, &sse_per_epoch))?;
                let updated = frozen
                    .with_update(&delta, 1.0)
                    .map_err(|_| diverged(series.len() - 1, &sse_per_epoch))?;
                (updated, sse)
            }
        };
        if !sse.is_finite() {
            return Err(diverged(series.len() - 1, &sse_per_epoch));
        }
        sse_per_epoch.push(sse);
        current = next;
    }

    let elapsed = started.elapsed().as_secs_f64();
    let per_step_seconds = elapsed / (cfg.epochs * samples_per_epoch) as f64;
    Ok(TrainingReport {
        sse_per_epoch,
        final_unit: current,
        per_step_seconds,
    })
}
