//! Adaptive control loop: a second neural unit maps the xi vector to the
//! manipulated input q, tuned offline against the identified model.
//!
//! Each step of the loop builds
//!
//! ```text
//! xi = [1, y(k-1)..y(k-n_qy), (d(k-1)-y(k-1))..(d(k-n_qe)-y(k-n_qe))]
//! ```
//!
//! computes `q(k)` as the controller-unit output over xi, injects `q(k)` into
//! the model regressor's newest input slot, and lets the model (or, for
//! transfer evaluation, the surrogate plant) produce `y(k)`. The incremental
//! tuning rule is
//!
//! ```text
//! v <- v + mu * e_reg(k) * dy/dv,    e_reg(k) = d(k) - y(k)
//! ```
//!
//! applied every `resample_stride`-th sample, with the one-step chain rule
//! `dy/dv = (dy/dq) * (dq/dv)`: `dy/dq` is the identified model's derivative
//! with respect to its newest input slot at the current regressor, and
//! `dq/dv` is xi (LNU controller) or its quadratic expansion (QNU). No
//! sensitivity is propagated through older fed-back outputs, consistent with
//! the static gradient used in training. The batch path stacks those same
//! rows into a Jacobian and applies the Levenberg–Marquardt update once per
//! epoch.
//!
//! Scenarios may add an exogenous torque disturbance; it enters the loop at
//! the same summing junction as the command, so the value driving the model
//! is `q(k) + w(k)`.

use crate::error::{HonuError, Result};
use crate::identification::IdentifiedModel;
use crate::plant::PlantSimulator;
use crate::training::{bptt_lm_update, normalized_rate, LearningConfig, TrainingMethod};
use crate::unit::{build_regressor, NeuralUnit};

/// Lag structure of the controller input vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XiLayout {
    /// Count of lagged neural-model outputs.
    pub n_qy: usize,
    /// Count of lagged regulation errors `d - y`.
    pub n_qe: usize,
}

impl XiLayout {
    pub fn new(n_qy: usize, n_qe: usize) -> Self {
        Self { n_qy, n_qe }
    }

    pub fn len(&self) -> usize {
        1 + self.n_qy + self.n_qe
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn warmup(&self) -> usize {
        self.n_qy.max(self.n_qe)
    }
}

/// Controller input: bias, lagged model outputs, lagged regulation errors.
#[derive(Debug, Clone, PartialEq)]
pub struct XiVector {
    values: Vec<f64>,
    layout: XiLayout,
}

impl XiVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> XiLayout {
        self.layout
    }
}

/// Build the xi vector for sample `k`:
/// `[1, y(k-1)..y(k-n_qy), (d(k-1)-y(k-1))..(d(k-n_qe)-y(k-n_qe))]`.
pub fn build_xi(
    model_outputs: &[f64],
    desired: &[f64],
    k: usize,
    layout: XiLayout,
) -> Result<XiVector> {
    let required = layout.warmup();
    if k < required {
        return Err(HonuError::InsufficientHistory { k, required });
    }
    let mut values = Vec::with_capacity(layout.len());
    values.push(1.0);
    for lag in 1..=layout.n_qy {
        values.push(model_outputs[k - lag]);
    }
    for lag in 1..=layout.n_qe {
        values.push(desired[k - lag] - model_outputs[k - lag]);
    }
    Ok(XiVector { values, layout })
}

/// A neural controller: the unit over xi, the xi layout, the update stride,
/// and an optional symmetric clamp on the manipulated signal.
#[derive(Debug, Clone)]
pub struct ControllerState {
    pub unit: NeuralUnit,
    pub layout: XiLayout,
    /// Incremental updates are applied only at samples where
    /// `k % resample_stride == 0`; the loop itself runs every sample.
    pub resample_stride: usize,
    /// Actuator limit: `q` is clamped to `[-limit, limit]` when set.
    pub q_limit: Option<f64>,
}

impl ControllerState {
    pub fn new(unit: NeuralUnit, layout: XiLayout, resample_stride: usize) -> Result<Self> {
        if unit.input_len() != layout.len() {
            return Err(HonuError::DimensionMismatch {
                context: "controller xi layout",
                expected: layout.len(),
                actual: unit.input_len(),
            });
        }
        if resample_stride == 0 {
            return Err(HonuError::InvalidConfig(
                "resample stride must be at least 1".into(),
            ));
        }
        Ok(Self {
            unit,
            layout,
            resample_stride,
            q_limit: None,
        })
    }

    pub fn with_q_limit(mut self, limit: f64) -> Result<Self> {
        if limit <= 0.0 || !limit.is_finite() {
            return Err(HonuError::InvalidConfig(format!(
                "q limit must be positive, got {limit}"
            )));
        }
        self.q_limit = Some(limit);
        Ok(self)
    }

    fn clamp(&self, q: f64) -> f64 {
        match self.q_limit {
            Some(limit) => q.clamp(-limit, limit),
            None => q,
        }
    }
}

/// Controller output `q = v . xi` (LNU) or `rowxi . colV` (QNU), before any
/// clamp.
pub fn controller_output(state: &ControllerState, xi: &XiVector) -> Result<f64> {
    if xi.values().len() != state.unit.input_len() {
        return Err(HonuError::DimensionMismatch {
            context: "controller input",
            expected: state.unit.input_len(),
            actual: xi.values().len(),
        });
    }
    state.unit.output(xi.values())
}

/// One-step chain-rule gradient `dy/dv = (dy/dq) * (dq/dv)` at the current
/// regressor `x` (which must already hold `q` in its newest input slot) and
/// controller input `xi`.
pub fn closed_loop_gradient(
    model: &IdentifiedModel,
    controller: &ControllerState,
    xi: &XiVector,
    x: &crate::unit::RegressorVector,
) -> Result<Vec<f64>> {
    let slot = model
        .layout
        .newest_input_slot()
        .ok_or_else(|| HonuError::InvalidConfig(
            "model has no input lag for the controller to act through".into(),
        ))?;
    let dy_dq = model.unit.input_derivative(x.values(), slot);
    let mut grad = controller.unit.weight_gradient(xi.values());
    for g in &mut grad {
        *g *= dy_dq;
    }
    Ok(grad)
}

/// Trace of one closed-loop run plus, for tuning runs, the per-epoch
/// regulation-error sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopResult {
    pub dt: f64,
    /// Samples before this index carry no control action (undefined lags).
    pub warmup: usize,
    /// Desired lateral skew d(k).
    pub desired: Vec<f64>,
    /// Manipulated signal: the value fed as the model's newest input at k.
    pub q: Vec<f64>,
    /// Loop output y(k).
    pub y: Vec<f64>,
    /// Regulation error d(k) - y(k).
    pub e_reg: Vec<f64>,
    /// Sum of squared regulation errors per tuning epoch; empty for pure
    /// evaluation runs.
    pub sse_reg_per_epoch: Vec<f64>,
}

impl ClosedLoopResult {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Sum of squared regulation errors over the post-warm-up trace.
    pub fn sse(&self) -> f64 {
        self.e_reg[self.warmup..].iter().map(|e| e * e).sum()
    }
}

enum SweepAction<'a> {
    /// Frozen weights, record only.
    Frozen,
    /// Incremental updates every stride-th sample.
    Adapt { cfg: &'a LearningConfig, epoch: usize },
    /// Frozen weights, collect Jacobian rows and errors for the batch update.
    Collect {
        rows: &'a mut Vec<Vec<f64>>,
        errs: &'a mut Vec<f64>,
    },
}

struct SweepTrace {
    q: Vec<f64>,
    y: Vec<f64>,
    e_reg: Vec<f64>,
    sse: f64,
}

/// Core closed-loop sweep shared by tuning and evaluation. `y(k)` comes from
/// the identified model unless a plant simulator is supplied; tuning modes
/// require the model path.
fn closed_loop_sweep(
    model: &IdentifiedModel,
    controller: &mut ControllerState,
    desired: &[f64],
    disturbance: Option<&[f64]>,
    mut plant: Option<&mut PlantSimulator>,
    mut action: SweepAction<'_>,
) -> Result<SweepTrace> {
    let n = desired.len();
    let warmup = model.layout.warmup().max(controller.layout.warmup());
    if n < warmup + 1 {
        return Err(HonuError::InsufficientData {
            len: n,
            required: warmup + 1,
        });
    }
    if let Some(w) = disturbance {
        if w.len() != n {
            return Err(HonuError::DimensionMismatch {
                context: "disturbance length",
                expected: n,
                actual: w.len(),
            });
        }
    }
    let newest_slot = model.layout.newest_input_slot();
    if newest_slot.is_none() && !matches!(action, SweepAction::Frozen) {
        return Err(HonuError::InvalidConfig(
            "model has no input lag for the controller to act through".into(),
        ));
    }
    if model.scaler.is_some() {
        return Err(HonuError::InvalidConfig(
            "the closed loop expects a model trained on raw data".into(),
        ));
    }
    // The disturbance is an exogenous torque entering the loop at the same
    // summing junction as the controller command.
    let disturbance_at = |k: usize| disturbance.map_or(0.0, |w| w[k]);
    if let Some(p) = plant.as_deref_mut() {
        p.reset();
    }

    let mut q = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut e_reg = vec![0.0; n];
    // u_hist[k-1] holds the torque applied while producing y(k): the command
    // q(k) computed at step k plus the disturbance, occupying the u(k-1)
    // slot of the regressor.
    let mut u_hist = vec![0.0; n];
    let mut sse = 0.0;

    for k in 0..warmup {
        y[k] = match plant.as_deref_mut() {
            Some(p) => p.step(disturbance_at(k)),
            None => 0.0,
        };
        if k > 0 {
            u_hist[k - 1] = disturbance_at(k);
        }
        e_reg[k] = desired[k] - y[k];
    }

    for k in warmup..n {
        let xi = build_xi(&y, desired, k, controller.layout)?;
        let q_raw = controller.unit.output(xi.values())?;
        let q_k = controller.clamp(q_raw);
        q[k] = q_k;
        if k > 0 {
            u_hist[k - 1] = q_k + disturbance_at(k);
        }
        let (y_k, x) = match plant.as_deref_mut() {
            Some(p) => (p.step(q_k + disturbance_at(k)), None),
            None => {
                let x = build_regressor(&y, &u_hist, k, model.layout)?;
                (model.unit.predict(&x)?, Some(x))
            }
        };
        y[k] = y_k;
        let e = desired[k] - y_k;
        e_reg[k] = e;
        sse += e * e;

        match &mut action {
            SweepAction::Frozen => {}
            SweepAction::Adapt { cfg, epoch } => {
                if k % controller.resample_stride == 0 {
                    let x = x.as_ref().expect("tuning runs against the model");
                    // A clamped actuator has zero local gain, so skip.
                    if q_raw == q_k {
                        let grad = closed_loop_gradient(model, controller, &xi, x)?;
                        let eta = if cfg.normalize {
                            normalized_rate(cfg.mu, &controller.unit.weight_gradient(xi.values()))
                        } else {
                            cfg.mu
                        };
                        let updated = controller
                            .unit
                            .with_update(&grad, eta * e)
                            .map_err(|_| HonuError::Diverged {
                                epoch: *epoch,
                                sample: k,
                                completed_sse: Vec::new(),
                            })?;
                        controller.unit = updated;
                    }
                }
            }
            SweepAction::Collect { rows, errs } => {
                let x = x.as_ref().expect("tuning runs against the model");
                rows.push(closed_loop_gradient(model, controller, &xi, x)?);
                errs.push(e);
            }
        }
    }

    Ok(SweepTrace { q, y, e_reg, sse })
}

/// Run the loop with frozen weights. With a plant simulator supplied, the
/// tuned controller drives the surrogate plant instead of the model that it
/// was tuned against. An optional disturbance torque, added at the command
/// summing junction, models the running excitation the loop must reject.
pub fn run_closed_loop(
    model: &IdentifiedModel,
    controller: &ControllerState,
    desired: &[f64],
    disturbance: Option<&[f64]>,
    plant: Option<&mut PlantSimulator>,
) -> Result<ClosedLoopResult> {
    let mut snapshot = controller.clone();
    let trace = closed_loop_sweep(
        model,
        &mut snapshot,
        desired,
        disturbance,
        plant,
        SweepAction::Frozen,
    )?;
    Ok(ClosedLoopResult {
        dt: model.dt,
        warmup: model.layout.warmup().max(controller.layout.warmup()),
        desired: desired.to_vec(),
        q: trace.q,
        y: trace.y,
        e_reg: trace.e_reg,
        sse_reg_per_epoch: Vec::new(),
    })
}

/// Tune the controller against the identified model over `cfg.epochs` epochs
/// and return it together with a final frozen-weight trace.
///
/// The incremental path applies its update every `resample_stride`-th
/// sample; the batch path applies one
/// Levenberg–Marquardt update per epoch over all post-warm-up samples (the
/// stride and the normalized rate do not apply there). `cfg.n_y`/`cfg.n_u`
/// are ignored: the model and the controller carry their own lag structures.
///
/// The per-epoch entry in the returned trace is the sum of squared
/// regulation errors accumulated during that epoch's sweep.
pub fn tune_controller(
    model: &IdentifiedModel,
    desired: &[f64],
    disturbance: Option<&[f64]>,
    state: ControllerState,
    cfg: &LearningConfig,
    method: TrainingMethod,
) -> Result<(ControllerState, ClosedLoopResult)> {
    cfg.validate()?;
    let mut controller = state;
    let mut sse_trace: Vec<f64> = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let sse = match method {
            TrainingMethod::Rtrl => {
                let trace = closed_loop_sweep(
                    model,
                    &mut controller,
                    desired,
                    disturbance,
                    None,
                    SweepAction::Adapt { cfg, epoch },
                )
                .map_err(|e| attach_trace(e, &sse_trace))?;
                trace.sse
            }
            TrainingMethod::Bptt => {
                let mut rows = Vec::new();
                let mut errs = Vec::new();
                let trace = closed_loop_sweep(
                    model,
                    &mut controller,
                    desired,
                    disturbance,
                    None,
                    SweepAction::Collect {
                        rows: &mut rows,
                        errs: &mut errs,
                    },
                )?;
                if let Some(bad) = errs.iter().position(|e| !e.is_finite()) {
                    return Err(HonuError::Diverged {
                        epoch,
                        sample: bad + controller.layout.warmup().max(model.layout.warmup()),
                        completed_sse: sse_trace,
                    });
                }
                let delta = bptt_lm_update(&rows, &errs, cfg.mu).map_err(|_| {
                    HonuError::Diverged {
                        epoch,
                        sample: desired.len() - 1,
                        completed_sse: sse_trace.clone(),
                    }
                })?;
                controller.unit =
                    controller
                        .unit
                        .with_update(&delta, 1.0)
                        .map_err(|_| HonuError::Diverged {
                            epoch,
                            sample: desired.len() - 1,
                            completed_sse: sse_trace.clone(),
                        })?;
                trace.sse
            }
        };
        if !sse.is_finite() {
            return Err(HonuError::Diverged {
                epoch,
                sample: desired.len() - 1,
                completed_sse: sse_trace,
            });
        }
        sse_trace.push(sse);
    }

    let mut result = run_closed_loop(model, &controller, desired, disturbance, None)?;
    result.sse_reg_per_epoch = sse_trace;
    Ok((controller, result))
}

fn attach_trace(err: HonuError, trace: &[f64]) -> HonuError {
    match err {
        HonuError::Diverged { epoch, sample, .. } => HonuError::Diverged {
            epoch,
            sample,
            completed_sse: trace.to_vec(),
        },
        other => other,
    }
}
