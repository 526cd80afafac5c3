//! Higher-order neural units for adaptive identification and control.
//!
//! This crate implements the two-stage scheme for lateral-skew regulation of
//! a roller-rig wheelset: first a dynamic linear or quadratic neural unit
//! (LNU / QNU) is identified from input/output records of the plant, then a
//! second neural unit is tuned as a feedback controller against the
//! identified model. Training is either incremental (sample-by-sample
//! gradient descent with an optional normalized learning rate) or batch (one
//! Levenberg–Marquardt update per epoch).
//!
//! The plant data come from a built-in surrogate: a damped second-order
//! lateral-skew model with optional cubic stiffness, standing in for the
//! original multibody co-simulation. Every accuracy figure measured against
//! this surrogate is a property of the surrogate, not of the original rig.
//!
//! Modules:
//!
//! - [`unit`] — LNU/QNU architectures, regressor conventions, pure prediction
//! - [`training`] — incremental and batch weight updates, gradient oracles
//! - [`identification`] — supervised identification and evaluation harness
//! - [`controller`] — adaptive control loop and controller tuning
//! - [`plant`] — surrogate plant and excitation generators
//! - [`signal`] — desired-trajectory and disturbance profiles

pub mod controller;
pub mod error;
pub mod identification;
pub mod plant;
pub mod series;
pub mod signal;
pub mod training;
pub mod unit;

pub use controller::{
    build_xi, closed_loop_gradient, controller_output, run_closed_loop, tune_controller,
    ClosedLoopResult, ControllerState, XiLayout, XiVector,
};
pub use error::{HonuError, Result};
pub use identification::{evaluate, identify, identify_standardized, EvalMode, IdentifiedModel};
pub use plant::{
    generate_dataset, ExcitationKind, ExcitationSpec, PlantParams, PlantSimulator,
};
pub use series::{SeriesScaler, TimeSeries};
pub use signal::SignalProfile;
pub use training::{
    bptt_lm_update, finite_difference_gradient, normalized_rate, rtrl_step, rtrl_step_lnu,
    rtrl_step_qnu, train_epochs, LearningConfig, TrainingMethod, TrainingReport,
};
pub use unit::{
    build_regressor, lnu_predict, qnu_predict, quadratic_expand, Architecture, LinearUnit,
    NeuralUnit, QuadraticExpansion, QuadraticUnit, RegressorLayout, RegressorVector,
};
