//! The four experiment commands: generate, identify, control, bench.

use std::path::{Path, PathBuf};
use std::time::Instant;

use honu::controller::{build_xi, ControllerState, XiLayout};
use honu::error::HonuError;
use honu::identification::{evaluate, identify, EvalMode};
use honu::plant::generate_dataset;
use honu::run_closed_loop;
use honu::tune_controller;
use honu::unit::{build_regressor, NeuralUnit};

use crate::config::ExperimentConfig;
use crate::error::AppError;
use crate::io;

fn ensure_out_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf, AppError> {
    let dir = out
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    std::fs::create_dir_all(&dir)
        .map_err(|e| AppError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

/// Generate the surrogate dataset and write it as CSV.
pub fn cmd_generate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), AppError> {
    let dir = ensure_out_dir(cfg, out)?;
    let spec = cfg.excitation.spec();
    let mut sim = cfg.plant.simulator(spec.dt)?;
    let series = generate_dataset(&mut sim, &spec)?;
    let path = dir.join("dataset.csv");
    io::write_dataset_csv(&path, &series)?;
    println!(
        "generated {} samples at dt={} s -> {}",
        series.len(),
        series.dt,
        path.display()
    );
    Ok(())
}

/// Train a model on a recorded dataset; write the weight file, the per-epoch
/// report and a free-run evaluation trace.
pub fn cmd_identify(
    cfg: &ExperimentConfig,
    dataset: &Path,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let dir = ensure_out_dir(cfg, out)?;
    let series = io::read_dataset_csv(dataset)?;
    let learn = cfg.identify.learning_config()?;
    let arch = cfg.identify.architecture.into();
    let method = cfg.identify.method.into();
    match identify(&series, arch, &learn, method) {
        Ok(model) => {
            io::write_model(&dir.join("model.txt"), &model)?;
            io::write_report_csv(&dir.join("report.csv"), &model.report.sse_per_epoch)?;
            let eval = evaluate(&model, &series, EvalMode::FreeRun)?;
            io::write_eval_csv(&dir.join("eval.csv"), &eval)?;
            println!(
                "identified {} over {} epochs: sse {} -> {}, {:.3} us/step -> {}",
                cfg.identify.architecture,
                learn.epochs,
                model.report.sse_per_epoch.first().unwrap_or(&0.0),
                model.report.sse_per_epoch.last().unwrap_or(&0.0),
                model.report.per_step_seconds * 1e6,
                dir.join("model.txt").display()
            );
            Ok(())
        }
        Err(HonuError::Diverged {
            epoch,
            sample,
            completed_sse,
        }) => {
            // Keep what finished, flag the failure, exit with the
            // divergence code.
            io::write_report_csv(&dir.join("report.csv"), &completed_sse)?;
            std::fs::write(
                dir.join("DIVERGED"),
                format!("epoch {epoch} sample {sample}\n"),
            )?;
            Err(AppError::Diverged {
                epoch,
                sample,
                completed_sse,
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Tune a controller against an identified model; write the controller file,
/// the per-epoch regulation-error table and the final closed-loop trace.
/// With `eval_plant` set, additionally re-evaluate the tuned controller
/// against the surrogate plant.
pub fn cmd_control(
    cfg: &ExperimentConfig,
    model_path: &Path,
    eval_plant: bool,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let dir = ensure_out_dir(cfg, out)?;
    let model = io::read_model(model_path)?;
    if (model.dt - cfg.excitation.dt_s).abs() > 1e-12 {
        return Err(AppError::config(format!(
            "model dt {} does not match configured dt {}",
            model.dt, cfg.excitation.dt_s
        )));
    }
    let n = cfg.excitation.sample_count()?;
    let desired = cfg
        .control
        .desired
        .to_profile("[control.desired]")?
        .generate(n, model.dt);
    let disturbance = cfg
        .control
        .disturbance
        .to_profile("[control.disturbance]")?
        .generate(n, model.dt);
    let learn = cfg.control.learning_config()?;
    let layout = XiLayout::new(cfg.control.n_qy, cfg.control.n_qe);
    let mut state = ControllerState::new(
        NeuralUnit::zeros(cfg.control.architecture.into(), layout.len()),
        layout,
        cfg.control.resample_stride,
    )?;
    if let Some(limit) = cfg.control.q_limit {
        state = state.with_q_limit(limit)?;
    }
    match tune_controller(
        &model,
        &desired,
        Some(&disturbance),
        state,
        &learn,
        cfg.control.method.into(),
    ) {
        Ok((tuned, result)) => {
            io::write_controller(&dir.join("controller.txt"), &tuned)?;
            io::write_tuning_csv(&dir.join("tuning.csv"), &result.sse_reg_per_epoch)?;
            io::write_closed_loop_csv(&dir.join("closedloop.csv"), &result)?;
            println!(
                "tuned {} controller over {} epochs: sse_reg {} -> {}, final trace sse {}",
                cfg.control.architecture,
                learn.epochs,
                result.sse_reg_per_epoch.first().unwrap_or(&0.0),
                result.sse_reg_per_epoch.last().unwrap_or(&0.0),
                result.sse()
            );
            if eval_plant {
                let mut sim = cfg.plant.simulator(model.dt)?;
                let plant_run =
                    run_closed_loop(&model, &tuned, &desired, Some(&disturbance), Some(&mut sim))?;
                io::write_closed_loop_csv(&dir.join("closedloop_plant.csv"), &plant_run)?;
                println!(
                    "plant-in-loop trace sse {} -> {}",
                    plant_run.sse(),
                    dir.join("closedloop_plant.csv").display()
                );
            }
            Ok(())
        }
        Err(HonuError::Diverged {
            epoch,
            sample,
            completed_sse,
        }) => {
            io::write_tuning_csv(&dir.join("tuning.csv"), &completed_sse)?;
            std::fs::write(
                dir.join("DIVERGED"),
                format!("epoch {epoch} sample {sample}\n"),
            )?;
            Err(AppError::Diverged {
                epoch,
                sample,
                completed_sse,
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Outcome of a latency measurement.
pub struct BenchReport {
    pub steps: usize,
    pub mean_ms: f64,
    pub p99_ms: f64,
}

/// Measure the combined controller+model step: build xi, compute the
/// command, build the regressor, predict, and apply one incremental
/// controller update — the unit of work a real-time loop runs every sample.
pub fn measure_step_cost(cfg: &ExperimentConfig, steps: usize) -> Result<BenchReport, AppError> {
    let model_layout = honu::unit::RegressorLayout::new(cfg.identify.n_y, cfg.identify.n_u);
    let model_arch: honu::unit::Architecture = cfg.identify.architecture.into();
    // Small nonzero weights keep the arithmetic honest without risking
    // divergence over the measurement run.
    let zero = NeuralUnit::zeros(model_arch, model_layout.len());
    let seed_weights: Vec<f64> = (0..zero.weight_count())
        .map(|i| 1e-3 * ((i % 7) as f64 - 3.0))
        .collect();
    let model_unit = zero.with_update(&seed_weights, 1.0).expect("finite weights");
    let xi_layout = XiLayout::new(cfg.control.n_qy, cfg.control.n_qe);
    let ctrl_arch: honu::unit::Architecture = cfg.control.architecture.into();
    let mut ctrl_unit = NeuralUnit::zeros(ctrl_arch, xi_layout.len());
    let mu = 1e-4;
    let newest_slot = model_layout
        .newest_input_slot()
        .ok_or_else(|| AppError::config("bench needs a model with input lags"))?;

    let warm = model_layout.warmup().max(xi_layout.warmup());
    let total = steps + warm;
    let mut y = vec![0.0; total];
    let mut u = vec![0.0; total];
    let desired: Vec<f64> = (0..total).map(|k| 0.1 * (k as f64 * 0.01).sin()).collect();
    for (k, v) in y.iter_mut().enumerate().take(warm) {
        *v = 0.01 * k as f64;
    }
    let mut costs = Vec::with_capacity(steps);
    for k in warm..total {
        let started = Instant::now();
        let xi = build_xi(&y, &desired, k, xi_layout)?;
        let q = ctrl_unit.output(xi.values())?;
        if k > 0 {
            u[k - 1] = q;
        }
        let x = build_regressor(&y, &u, k, model_layout)?;
        let y_k = model_unit.predict(&x)?;
        let e = desired[k] - y_k;
        // Incremental controller update through the one-step chain rule.
        let dy_dq = model_unit.input_derivative(x.values(), newest_slot);
        let grad = ctrl_unit.weight_gradient(xi.values());
        ctrl_unit = ctrl_unit
            .with_update(&grad, mu * e * dy_dq)
            .map_err(AppError::from)?;
        costs.push(started.elapsed());
        y[k] = y_k;
    }
    let mut sorted: Vec<f64> = costs.iter().map(|d| d.as_secs_f64() * 1e3).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean_ms = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let p99_ms = sorted[((sorted.len() as f64 * 0.99) as usize).min(sorted.len() - 1)];
    Ok(BenchReport {
        steps,
        mean_ms,
        p99_ms,
    })
}

/// Measure and report the per-step latency; fail with exit code 3 when the
/// mean exceeds the budget.
pub fn cmd_bench(cfg: &ExperimentConfig, budget_ms: f64, steps: usize) -> Result<(), AppError> {
    let report = measure_step_cost(cfg, steps)?;
    let verdict = if report.mean_ms <= budget_ms { "PASS" } else { "FAIL" };
    println!(
        "bench: model={}(n_y={},n_u={}) controller={}(n_qy={},n_qe={}) steps={} mean_ms={:.6} p99_ms={:.6} budget_ms={} -> {verdict}",
        cfg.identify.architecture,
        cfg.identify.n_y,
        cfg.identify.n_u,
        cfg.control.architecture,
        cfg.control.n_qy,
        cfg.control.n_qe,
        report.steps,
        report.mean_ms,
        report.p99_ms,
        budget_ms,
    );
    if report.mean_ms > budget_ms {
        return Err(AppError::BudgetExceeded {
            mean_ms: report.mean_ms,
            budget_ms,
        });
    }
    Ok(())
}
