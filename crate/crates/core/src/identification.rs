//! Supervised identification of a dynamic neural model from recorded data.
//!
//! Training runs the unit in parallel (free-run) configuration: the regressor
//! feeds back the model's own outputs, with the first `max(n_y, n_u)` model
//! outputs copied from the plant record so the lags are defined. Evaluation
//! can run either in the same free-run mode or one-step-ahead
//! (series-parallel), where the regressor feeds back measured plant outputs.

use crate::error::{HonuError, Result};
use crate::series::{SeriesScaler, TimeSeries};
use crate::training::{train_epochs, LearningConfig, TrainingMethod, TrainingReport};
use crate::unit::{build_regressor, Architecture, NeuralUnit, RegressorLayout};

/// How evaluation fills the regressor's output lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Feed back measured plant outputs (series-parallel).
    OneStep,
    /// Feed back model outputs (parallel), matching the training
    /// configuration.
    FreeRun,
}

/// A trained dynamic model: the unit, its lag structure, the sample period of
/// the data it was trained on, and the training report. `scaler` is set only
/// by [`identify_standardized`]; it records the affine pre-scaling the model
/// was trained under so evaluation can map raw data in and raw outputs back
/// out.
#[derive(Debug, Clone)]
pub struct IdentifiedModel {
    pub unit: NeuralUnit,
    pub layout: RegressorLayout,
    pub dt: f64,
    pub report: TrainingReport,
    pub scaler: Option<SeriesScaler>,
}

impl IdentifiedModel {
    /// Assemble a model from parts, checking that the unit dimension matches
    /// the lag structure.
    pub fn new(
        unit: NeuralUnit,
        layout: RegressorLayout,
        dt: f64,
        report: TrainingReport,
    ) -> Result<Self> {
        if unit.input_len() != layout.len() {
            return Err(HonuError::DimensionMismatch {
                context: "identified model lag structure",
                expected: layout.len(),
                actual: unit.input_len(),
            });
        }
        Ok(Self {
            unit,
            layout,
            dt,
            report,
            scaler: None,
        })
    }
}

/// Train a dynamic LNU or QNU model on a recorded series.
///
/// The series must be long enough to fit the lag structure meaningfully
/// (at least ten times the deepest lag). Training is deterministic: zero
/// weight initialization, chronological sweep, no randomness.
pub fn identify(
    series: &TimeSeries,
    architecture: Architecture,
    cfg: &LearningConfig,
    method: TrainingMethod,
) -> Result<IdentifiedModel> {
    cfg.validate()?;
    let layout = cfg.layout();
    let required = 10 * layout.warmup().max(1);
    if series.len() < required {
        return Err(HonuError::InsufficientData {
            len: series.len(),
            required,
        });
    }
    let unit = NeuralUnit::zeros(architecture, layout.len());
    let report = train_epochs(series, unit, cfg, method)?;
    Ok(IdentifiedModel {
        unit: report.final_unit.clone(),
        layout,
        dt: series.dt,
        report,
        scaler: None,
    })
}

/// Like [`identify`], but standardize the series first and store the scaler
/// in the model. Note that standardization changes what a given learning
/// rate means, so the reference hyperparameters assume the raw-data path.
pub fn identify_standardized(
    series: &TimeSeries,
    architecture: Architecture,
    cfg: &LearningConfig,
    method: TrainingMethod,
) -> Result<IdentifiedModel> {
    let scaler = SeriesScaler::fit(series);
    let scaled = scaler.apply(series)?;
    let mut model = identify(&scaled, architecture, cfg, method)?;
    model.scaler = Some(scaler);
    Ok(model)
}

/// Run the model over a series and fill in `y_model` and `e`.
///
/// In one-step mode the regressor reads measured outputs and never the model
/// trace; in free-run mode it reads the model trace and touches `y_real` only
/// for the warm-up samples. The first `warmup` model outputs are copied from
/// the record in both modes. A model trained under standardization maps the
/// series through its scaler and reports outputs in raw units.
pub fn evaluate(model: &IdentifiedModel, series: &TimeSeries, mode: EvalMode) -> Result<TimeSeries> {
    let scaled_storage;
    let working = match &model.scaler {
        Some(scaler) => {
            scaled_storage = scaler.apply(series)?;
            &scaled_storage
        }
        None => series,
    };
    let layout = model.layout;
    let warmup = layout.warmup();
    let n = working.len();
    if n < warmup + 1 {
        return Err(HonuError::InsufficientData {
            len: n,
            required: warmup + 1,
        });
    }
    let mut y_model = vec![0.0; n];
    y_model[..warmup].copy_from_slice(&working.y_real[..warmup]);
    for k in warmup..n {
        let x = match mode {
            EvalMode::OneStep => build_regressor(&working.y_real, &working.u, k, layout)?,
            EvalMode::FreeRun => build_regressor(&y_model, &working.u, k, layout)?,
        };
        y_model[k] = model.unit.predict(&x)?;
    }
    if let Some(scaler) = &model.scaler {
        for v in &mut y_model {
            *v = scaler.invert_output(*v);
        }
    }
    series.clone().with_model_outputs(y_model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rms;
    use crate::unit::LinearUnit;

    /// Plant that literally is an LNU: y(k) = w* . [1, y(k-1), y(k-2), u(k-1)].
    fn hidden_lnu_series(w: &[f64; 4], n: usize) -> TimeSeries {
        let mut u = Vec::with_capacity(n);
        // Deterministic +-1 switching, rich enough to excite both lags.
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..n {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            u.push(if state >> 63 == 0 { 1.0 } else { -1.0 });
        }
        let mut y = vec![0.0; n];
        for k in 2..n {
            y[k] = w[0] + w[1] * y[k - 1] + w[2] * y[k - 2] + w[3] * u[k - 1];
        }
        TimeSeries::new(0.001, u, y).unwrap()
    }

    #[test]
    fn identify_recovers_hidden_lnu() {
        let w_true = [0.05, 0.6, -0.08, 0.4];
        let series = hidden_lnu_series(&w_true, 2000);
        let cfg = LearningConfig {
            mu: 1.0,
            epochs: 40,
            normalize: true,
            n_y: 2,
            n_u: 1,
        };
        let model = identify(&series, Architecture::Lnu, &cfg, TrainingMethod::Rtrl).unwrap();
        for (i, (&w, &t)) in model.unit.weights().iter().zip(&w_true).enumerate() {
            assert!(
                (w - t).abs() <= 1e-3,
                "weight {i}: recovered {w}, true {t}"
            );
        }
        let eval = evaluate(&model, &series, EvalMode::FreeRun).unwrap();
        let warm = model.layout.warmup();
        let e = &eval.e.as_deref().unwrap()[warm..];
        let std_y = crate::series::std_dev(&series.y_real);
        assert!(rms(e) <= 1e-3 * std_y, "free-run RMSE {} vs std {std_y}", rms(e));
    }

    #[test]
    fn identify_is_deterministic() {
        let series = hidden_lnu_series(&[0.0, 0.5, -0.1, 0.3], 600);
        let cfg = LearningConfig {
            mu: 0.8,
            epochs: 5,
            normalize: true,
            n_y: 2,
            n_u: 1,
        };
        let a = identify(&series, Architecture::Qnu, &cfg, TrainingMethod::Rtrl).unwrap();
        let b = identify(&series, Architecture::Qnu, &cfg, TrainingMethod::Rtrl).unwrap();
        assert_eq!(a.unit.weights(), b.unit.weights());
        assert_eq!(a.report.sse_per_epoch, b.report.sse_per_epoch);
    }

    #[test]
    fn constant_zero_series_keeps_zero_weights() {
        let series = TimeSeries::new(0.001, vec![0.0; 200], vec![0.0; 200]).unwrap();
        let cfg = LearningConfig {
            mu: 1.0,
            epochs: 3,
            normalize: true,
            n_y: 1,
            n_u: 1,
        };
        let model = identify(&series, Architecture::Lnu, &cfg, TrainingMethod::Rtrl).unwrap();
        assert!(model.unit.weights().iter().all(|&w| w == 0.0));
        assert!(model.report.sse_per_epoch.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn perfect_model_has_zero_one_step_error() {
        let w_true = [0.05, 0.6, -0.08, 0.4];
        let series = hidden_lnu_series(&w_true, 300);
        let unit = NeuralUnit::Linear(LinearUnit::from_weights(w_true.to_vec()).unwrap());
        let report = TrainingReport {
            sse_per_epoch: vec![],
            final_unit: unit.clone(),
            per_step_seconds: 0.0,
        };
        let model =
            IdentifiedModel::new(unit, RegressorLayout::new(2, 1), 0.001, report).unwrap();
        let eval = evaluate(&model, &series, EvalMode::OneStep).unwrap();
        let e = eval.e.as_deref().unwrap();
        assert!(e.iter().all(|&v| v.abs() < 1e-9), "max |e| = {}",
            e.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn zero_weight_model_echoes_y_real_as_error() {
        let series = hidden_lnu_series(&[0.1, 0.4, 0.0, 0.2], 100);
        let unit = NeuralUnit::zeros(Architecture::Lnu, 4);
        let report = TrainingReport {
            sse_per_epoch: vec![],
            final_unit: unit.clone(),
            per_step_seconds: 0.0,
        };
        let model =
            IdentifiedModel::new(unit, RegressorLayout::new(2, 1), 0.001, report).unwrap();
        let eval = evaluate(&model, &series, EvalMode::OneStep).unwrap();
        let warm = model.layout.warmup();
        let ym = eval.y_model.as_deref().unwrap();
        let e = eval.e.as_deref().unwrap();
        for k in warm..series.len() {
            assert_eq!(ym[k], 0.0);
            assert_eq!(e[k], series.y_real[k]);
        }
    }

    #[test]
    fn one_step_never_reads_model_trace_free_run_never_reads_poisoned_tail() {
        let w_true = [0.02, 0.55, -0.05, 0.35];
        let series = hidden_lnu_series(&w_true, 400);
        let cfg = LearningConfig {
            mu: 1.0,
            epochs: 10,
            normalize: true,
            n_y: 2,
            n_u: 1,
        };
        let model = identify(&series, Architecture::Lnu, &cfg, TrainingMethod::Rtrl).unwrap();
        let warm = model.layout.warmup();

        // One-step mode must ignore any pre-filled model trace.
        let mut poisoned = series.clone();
        poisoned.y_model = Some(vec![f64::MAX; series.len()]);
        poisoned.e = Some(vec![f64::MAX; series.len()]);
        let clean = evaluate(&model, &series, EvalMode::OneStep).unwrap();
        let dirty = evaluate(&model, &poisoned, EvalMode::OneStep).unwrap();
        assert_eq!(clean.y_model, dirty.y_model);

        // Free-run mode must ignore measured outputs after warm-up.
        let mut tail_poisoned = series.clone();
        for v in tail_poisoned.y_real.iter_mut().skip(warm) {
            *v = 1e9;
        }
        let clean = evaluate(&model, &series, EvalMode::FreeRun).unwrap();
        let dirty = evaluate(&model, &tail_poisoned, EvalMode::FreeRun).unwrap();
        assert_eq!(clean.y_model, dirty.y_model);
    }

    #[test]
    fn standardized_model_reports_raw_units() {
        // An offset-heavy series: standardization removes the offset before
        // training and restores it on output.
        let w_true = [0.05, 0.6, -0.08, 0.4];
        let base = hidden_lnu_series(&w_true, 1500);
        let shifted = TimeSeries::new(
            base.dt,
            base.u.iter().map(|v| v * 3.0 + 5.0).collect(),
            base.y_real.iter().map(|v| v * 3.0 + 5.0).collect(),
        )
        .unwrap();
        let cfg = LearningConfig {
            mu: 1.0,
            epochs: 40,
            normalize: true,
            n_y: 2,
            n_u: 1,
        };
        let model =
            identify_standardized(&shifted, Architecture::Lnu, &cfg, TrainingMethod::Rtrl)
                .unwrap();
        assert!(model.scaler.is_some());
        let eval = evaluate(&model, &shifted, EvalMode::OneStep).unwrap();
        let warm = model.layout.warmup();
        let e = &eval.e.as_deref().unwrap()[warm..];
        let rel = rms(e) / crate::series::std_dev(&shifted.y_real);
        assert!(rel < 1e-2, "one-step error on raw units: {rel}");
        // The reported outputs live on the raw scale, not the standardized.
        let ym = eval.y_model.as_deref().unwrap();
        let mean_ym = ym.iter().sum::<f64>() / ym.len() as f64;
        assert!((mean_ym - 5.0).abs() < 2.0, "mean model output {mean_ym}");
    }

    #[test]
    fn rejects_short_series() {
        let series = TimeSeries::new(0.001, vec![0.0; 15], vec![0.0; 15]).unwrap();
        let cfg = LearningConfig {
            mu: 1.0,
            epochs: 1,
            normalize: true,
            n_y: 2,
            n_u: 2,
        };
        assert!(matches!(
            identify(&series, Architecture::Lnu, &cfg, TrainingMethod::Rtrl),
            Err(HonuError::InsufficientData { .. })
        ));
    }
}
