//! End-to-end properties of identification and the closed loop on surrogate
//! data.

use honu::controller::{ControllerState, XiLayout};
use honu::identification::{evaluate, identify, EvalMode};
use honu::plant::{generate_dataset, ExcitationKind, ExcitationSpec, PlantParams, PlantSimulator};
use honu::series::rms;
use honu::signal::SignalProfile;
use honu::training::{train_epochs, LearningConfig, TrainingMethod};
use honu::unit::{Architecture, LinearUnit, NeuralUnit};
use honu::{run_closed_loop, tune_controller, TimeSeries};

fn surrogate_params() -> PlantParams {
    PlantParams {
        natural_freq: 170.0,
        damping: 1.5,
        gain: 26_010.0,
        cubic: 5_780.0,
        noise_std: 0.0,
    }
}

fn surrogate_dataset(seed: u64, horizon: f64) -> TimeSeries {
    let spec = ExcitationSpec {
        kind: ExcitationKind::Multisine,
        amplitude: 2.3,
        horizon,
        dt: 0.001,
        seed,
    };
    let mut sim = PlantSimulator::new(surrogate_params(), 0.001, 17).unwrap();
    generate_dataset(&mut sim, &spec).unwrap()
}

#[test]
fn sse_decreases_monotonically_on_matched_linear_plant() {
    // Noiseless plant that is itself an LNU on the model's lag structure:
    // RTRL with the normalized rate and mu <= 1 must descend every epoch.
    let n = 1500;
    let mut u = Vec::with_capacity(n);
    let mut state = 0x7c3a9d21u64;
    for _ in 0..n {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
        u.push(if state >> 63 == 0 { 0.8 } else { -0.8 });
    }
    let w = [0.02, 0.55, -0.12, 0.3];
    let mut y = vec![0.0; n];
    for k in 2..n {
        y[k] = w[0] + w[1] * y[k - 1] + w[2] * y[k - 2] + w[3] * u[k - 1];
    }
    let series = TimeSeries::new(0.001, u, y).unwrap();
    for mu in [1.0, 0.5] {
        let cfg = LearningConfig {
            mu,
            epochs: 12,
            normalize: true,
            n_y: 2,
            n_u: 1,
        };
        let report = train_epochs(
            &series,
            NeuralUnit::zeros(Architecture::Lnu, 4),
            &cfg,
            TrainingMethod::Rtrl,
        )
        .unwrap();
        // Strict descent until the trace hits the floating-point floor.
        for pair in report.sse_per_epoch.windows(2) {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-24,
                "mu={mu}: SSE rose {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }
}

#[test]
fn bptt_identification_descends_on_surrogate_data() {
    // Batch training of the free-run model needs heavy damping to stay
    // stable here; the incremental path is the workhorse for identification.
    let series = surrogate_dataset(10, 4.0);
    let cfg = LearningConfig {
        mu: 0.001,
        epochs: 8,
        normalize: false,
        n_y: 3,
        n_u: 5,
    };
    let report = train_epochs(
        &series,
        NeuralUnit::zeros(Architecture::Lnu, 9),
        &cfg,
        TrainingMethod::Bptt,
    )
    .unwrap();
    let first = report.sse_per_epoch[0];
    let last = *report.sse_per_epoch.last().unwrap();
    assert!(
        last < 0.2 * first,
        "batch path should descend: {first} -> {last}"
    );
}

#[test]
fn free_run_error_is_at_least_one_step_error() {
    // Error compounding: on an imperfect model the free-run residual cannot
    // beat the one-step residual. Checked over several seeded datasets with
    // a deliberately under-trained model.
    for seed in [10, 11, 12, 13, 14] {
        let series = surrogate_dataset(seed, 3.0);
        let cfg = LearningConfig {
            mu: 1.0,
            epochs: 2,
            normalize: true,
            n_y: 3,
            n_u: 5,
        };
        let model = identify(&series, Architecture::Lnu, &cfg, TrainingMethod::Rtrl).unwrap();
        let warm = model.layout.warmup();
        let one_step = evaluate(&model, &series, EvalMode::OneStep).unwrap();
        let free_run = evaluate(&model, &series, EvalMode::FreeRun).unwrap();
        let rms_one = rms(&one_step.e.as_deref().unwrap()[warm..]);
        let rms_free = rms(&free_run.e.as_deref().unwrap()[warm..]);
        assert!(
            rms_free >= rms_one,
            "seed {seed}: free-run {rms_free} < one-step {rms_one}"
        );
    }
}

#[test]
fn tuned_controller_transfers_to_the_plant_bounded() {
    // Tune against the identified model, then close the loop around the
    // surrogate plant itself: the output must stay bounded over the horizon.
    let series = surrogate_dataset(10, 10.0);
    let cfg = LearningConfig {
        mu: 1.0,
        epochs: 10,
        normalize: true,
        n_y: 3,
        n_u: 5,
    };
    let model = identify(&series, Architecture::Qnu, &cfg, TrainingMethod::Rtrl).unwrap();
    let n = series.len();
    let desired = SignalProfile::BandLimited {
        amplitude: 0.2,
        cutoff_hz: 1.0,
        components: 6,
        seed: 7,
    }
    .generate(n, 0.001);
    let disturbance = SignalProfile::PulseThenRipple {
        peak: 3.0,
        pulse_samples: 80,
        ripple_amplitude: 0.2,
        ripple_cutoff_hz: 2.0,
        ripple_components: 4,
        seed: 3,
    }
    .generate(n, 0.001);
    let tune_cfg = LearningConfig {
        mu: 1.0,
        epochs: 5,
        normalize: false,
        n_y: 0,
        n_u: 0,
    };
    let c0 = ControllerState::new(
        NeuralUnit::zeros(Architecture::Qnu, 4),
        XiLayout::new(0, 3),
        1,
    )
    .unwrap();
    let (tuned, model_run) = tune_controller(
        &model,
        &desired,
        Some(&disturbance),
        c0,
        &tune_cfg,
        TrainingMethod::Bptt,
    )
    .unwrap();

    for &plant_seed in &[17u64, 23, 99] {
        let mut sim = PlantSimulator::new(surrogate_params(), 0.001, plant_seed).unwrap();
        let plant_run = run_closed_loop(
            &model,
            &tuned,
            &desired,
            Some(&disturbance),
            Some(&mut sim),
        )
        .unwrap();
        let peak = plant_run.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak.is_finite() && peak < 10.0, "plant loop peak {peak}");
        // The transfer should be in the same quality class as the model
        // loop, not orders of magnitude worse.
        assert!(
            plant_run.sse() < 50.0 * model_run.sse().max(1e-9),
            "plant sse {} vs model sse {}",
            plant_run.sse(),
            model_run.sse()
        );
    }
}

#[test]
fn zero_weight_controller_issues_no_commands() {
    let series = surrogate_dataset(10, 10.0);
    let cfg = LearningConfig {
        mu: 1.0,
        epochs: 10,
        normalize: true,
        n_y: 3,
        n_u: 5,
    };
    let model = identify(&series, Architecture::Lnu, &cfg, TrainingMethod::Rtrl).unwrap();
    let controller = ControllerState::new(
        NeuralUnit::Linear(LinearUnit::zeros(4)),
        XiLayout::new(0, 3),
        1,
    )
    .unwrap();
    let d = vec![0.0; 500];
    let run = run_closed_loop(&model, &controller, &d, None, None).unwrap();
    assert!(run.q.iter().all(|&v| v == 0.0));
    // From rest the loop only drifts by the identified bias term; it must
    // stay near the model's natural fixed point, far below the data scale.
    let peak = run.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak < 0.1, "quiet loop drifted to {peak}");
}
