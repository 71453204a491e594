//! The three run modes. Each returns whether the run passed; errors are
//! runtime failures.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use ambilearn_core::ambiguity::{
    composite_confidence, empirical_q, radius_epsilon_with, HistoryWindow, RadiusConfig, RadiusMode,
};
use ambilearn_core::estimator::{EstimatorConfig, RegularizerRule};
use ambilearn_core::learner::{LearnerConfig, PLearner};
use ambilearn_core::robot_sim::{run_scenario, RunLog, ScenarioConfig, ScenarioRunner, ZoneMap};
use ambilearn_core::transport::w1_distance;
use ambilearn_core::verification::{CoverageReport, KnownFExperiment, MixtureExperiment, RobotCoverage};
use ambilearn_core::{seeded_rng, Error, Result};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GenericSetup, GenericSpec, RunConfig, ScenarioSpec};
use crate::svg::{line_chart, trajectory_chart, Series};

/// Salt for the reference stream of sweep coverage checks.
const SWEEP_REFERENCE_SALT: u64 = 0x005E_ED0F_5EE9;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("csv output: {e}"))
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    write_json(&cfg.out_dir.join("config.json"), cfg)
}

fn radius_config(cfg: &RunConfig, g: &GenericSpec) -> RadiusConfig {
    RadiusConfig {
        mode: cfg.radius_mode.unwrap_or_default(),
        c_constant: g.c_constant,
    }
}

fn generic_learner(cfg: &RunConfig, g: &GenericSpec, setup: &GenericSetup) -> LearnerConfig {
    LearnerConfig {
        beta: g.beta,
        t0: Some(g.t0),
        estimator: EstimatorConfig {
            sigma: setup.sigma,
            theta: g.theta,
            sv_threshold: g.sv_threshold,
            regularizer: RegularizerRule {
                unscaled: g.unscaled_components.clone(),
            },
        },
        radius: radius_config(cfg, g),
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<bool> {
    prepare_out_dir(cfg)?;
    let seed = cfg.seed_list()[0];
    match &cfg.scenario {
        ScenarioSpec::Robot { .. } => {
            let (scenario, zones) = cfg.robot().expect("robot scenario");
            simulate_robot(cfg, ScenarioConfig { seed, ..scenario }, &zones)
        }
        ScenarioSpec::Generic(g) => simulate_generic(cfg, g, seed),
    }
}

fn simulate_robot(cfg: &RunConfig, scenario: ScenarioConfig, zones: &ZoneMap) -> Result<bool> {
    info!("robot run: {} steps, seed {}", scenario.steps, scenario.seed);
    let log = run_scenario(&scenario, zones)?;
    let csv_path = cfg.out_dir.join("run.csv");
    log.write_csv(create(&csv_path)?)?;
    write_json(&cfg.out_dir.join("summary.json"), &log.summary)?;
    println!(
        "simulated {} steps; final alpha {:?}, |alpha - alpha*|_inf = {:.3e}, zones {:?}",
        log.summary.steps, log.summary.final_alpha, log.summary.final_inf_error, log.summary.zone_sequence
    );
    if cfg.plots {
        robot_plots(&cfg.out_dir, &log, zones)?;
    }
    Ok(true)
}

fn robot_plots(dir: &Path, log: &RunLog, zones: &ZoneMap) -> Result<()> {
    let t = |r: &ambilearn_core::robot_sim::StepRecord| r.t as f64;
    let column = |f: &dyn Fn(&ambilearn_core::robot_sim::StepRecord) -> f64| {
        log.records.iter().map(|r| (t(r), f(r))).collect::<Vec<_>>()
    };
    let states: Vec<[f64; 3]> = log.records.iter().map(|r| r.state).collect();
    trajectory_chart(&dir.join("trajectory.svg"), zones, &states)?;
    let mut alpha = Vec::new();
    for i in 0..log.p.min(2) {
        alpha.push(Series::new(format!("alpha_{}", i + 1), column(&|r| r.alpha[i])));
        alpha.push(Series::new(format!("alpha*_{}", i + 1), column(&|r| r.alpha_star[i])));
    }
    line_chart(&dir.join("alpha.svg"), "estimated coefficients", "alpha", &alpha, false)?;
    line_chart(
        &dir.join("error.svg"),
        "coefficient error and its bound",
        "value",
        &[
            Series::new("|alpha - alpha*|_inf", column(&|r| r.inf_error)),
            Series::new("gamma", column(&|r| r.gamma)),
        ],
        true,
    )?;
    line_chart(
        &dir.join("radius.svg"),
        "ambiguity radius",
        "radius",
        &[
            Series::new("eps_hat", column(&|r| r.eps_hat)),
            Series::new("eps_hat (true alpha)", column(&|r| r.eps_hat_oracle)),
            Series::new("eps", column(&|r| r.eps)),
        ],
        true,
    )?;
    line_chart(
        &dir.join("confidence.svg"),
        "confidence bounds",
        "probability",
        &[
            Series::new("composite", column(&|r| r.confidence)),
            Series::new("naive", column(&|r| r.conf_naive)),
        ],
        false,
    )
}

#[derive(Debug, Serialize)]
struct GenericSummary {
    steps: usize,
    seed: u64,
    final_state: Vec<f64>,
    final_eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_alpha_star: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_inf_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_eps_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_confidence: Option<f64>,
    radius_mode: RadiusMode,
}

fn simulate_generic(cfg: &RunConfig, g: &GenericSpec, seed: u64) -> Result<bool> {
    let setup = g.build()?;
    let n = setup.env.dim_state();
    let mut rng = seeded_rng(seed);
    let mut x = setup.x0.clone();
    let d = setup.input.clone();
    let radius = radius_config(cfg, g);
    let csv_path = cfg.out_dir.join("run.csv");
    let mut w = csv_writer(&csv_path)?;
    let mut eps_series = Vec::new();
    let mut summary = GenericSummary {
        steps: g.steps,
        seed,
        final_state: Vec::new(),
        final_eps: f64::NAN,
        final_alpha: None,
        final_alpha_star: None,
        final_inf_error: None,
        final_eps_hat: None,
        final_confidence: None,
        radius_mode: radius.mode,
    };
    let states = |x: &nalgebra::DVector<f64>| x.iter().map(|v| v.to_string()).collect::<Vec<_>>();
    let state_cols = (1..=n).map(|j| format!("x{j}"));

    if let Some(set) = &setup.set {
        let p = set.len();
        let mut header = vec!["t".to_string()];
        header.extend((1..=p).map(|i| format!("alpha_{i}")));
        header.extend((1..=p).map(|i| format!("alpha_star_{i}")));
        header.extend(
            [
                "gamma",
                "sigma_min_A",
                "eta",
                "inf_error",
                "H",
                "eps",
                "eps_hat",
                "confidence",
                "conf_naive",
                "window_len",
            ]
            .map(String::from),
        );
        header.extend(state_cols);
        header.push("event".into());
        w.write_record(&header).map_err(csv_err)?;
        let mut learner = PLearner::new(set.clone(), x.clone(), generic_learner(cfg, g, &setup))?;
        let mut err_series = Vec::new();
        for t in 0..g.steps {
            x = setup.env.step(t, &x, &d, &mut rng).map_err(|e| e.at_step(t))?.next;
            learner.observe(d.clone(), x.clone()).map_err(|e| e.at_step(t))?;
            let step = learner.update(&d)?;
            let star = setup.env.alpha_star(t + 1, &x).expect("mixture truth");
            let err = step.alpha.inf_distance(&star);
            let mut row = vec![step.t.to_string()];
            row.extend(step.alpha.as_vector().iter().map(|v| v.to_string()));
            row.extend(star.as_vector().iter().map(|v| v.to_string()));
            row.extend(
                [
                    step.gamma,
                    step.sigma_min_a,
                    step.eta,
                    err,
                    step.h,
                    step.eps,
                    step.eps_hat,
                    step.composite.value,
                    step.naive.value,
                ]
                .map(|v| v.to_string()),
            );
            row.push(step.window_len.to_string());
            row.extend(states(&x));
            row.push(step.event.map_or("", |e| e.as_str()).to_string());
            w.write_record(&row).map_err(csv_err)?;
            eps_series.push((step.t as f64, step.eps_hat));
            err_series.push((step.t as f64, err));
            summary.final_eps = step.eps;
            summary.final_alpha = Some(step.alpha.as_vector().iter().copied().collect());
            summary.final_alpha_star = Some(star.as_vector().iter().copied().collect());
            summary.final_inf_error = Some(err);
            summary.final_eps_hat = Some(step.eps_hat);
            summary.final_confidence = Some(step.composite.value);
        }
        if cfg.plots {
            line_chart(
                &cfg.out_dir.join("error.svg"),
                "coefficient error",
                "|alpha - alpha*|_inf",
                &[Series::new("error", err_series)],
                true,
            )?;
        }
    } else {
        let f = setup.known.as_ref().expect("known truth");
        let mut header = vec!["t".to_string()];
        header.extend(state_cols);
        header.extend(["window_len", "eps", "q_spread"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        let mut window = HistoryWindow::new(x.clone(), Some(g.t0))?;
        for t in 0..g.steps {
            x = setup.env.step(t, &x, &d, &mut rng).map_err(|e| e.at_step(t))?.next;
            window.push(d.clone(), x.clone()).map_err(|e| e.at_step(t))?;
            let eps =
                radius_epsilon_with(window.len(), g.beta, n, setup.sigma, &radius).map_err(|e| e.at_step(t + 1))?;
            let q = empirical_q(&window, f, &d).map_err(|e| e.at_step(t + 1))?;
            let mean = q.atoms().iter().fold(nalgebra::DVector::zeros(n), |acc, a| acc + a) / q.len() as f64;
            let spread = q.atoms().iter().map(|a| (a - &mean).norm()).sum::<f64>() / q.len() as f64;
            let mut row = vec![(t + 1).to_string()];
            row.extend(states(&x));
            row.extend([window.len().to_string(), eps.to_string(), spread.to_string()]);
            w.write_record(&row).map_err(csv_err)?;
            eps_series.push(((t + 1) as f64, eps));
            summary.final_eps = eps;
        }
    }
    w.flush().map_err(|e| io_err(&csv_path, e))?;
    summary.final_state = x.iter().copied().collect();
    write_json(&cfg.out_dir.join("summary.json"), &summary)?;
    if cfg.plots {
        line_chart(
            &cfg.out_dir.join("radius.svg"),
            "ambiguity radius",
            "radius",
            &[Series::new("radius", eps_series)],
            true,
        )?;
    }
    println!("simulated {} steps; final radius {:.6e}", g.steps, summary.final_eps);
    Ok(true)
}

#[derive(Debug, Serialize)]
struct VerifyOutput<'a> {
    kind: &'a str,
    seeds: usize,
    report: &'a CoverageReport,
    passed: bool,
}

pub fn verify(cfg: &RunConfig) -> Result<bool> {
    prepare_out_dir(cfg)?;
    let seeds = cfg.seed_list();
    let (kind, report) = match &cfg.scenario {
        ScenarioSpec::Robot { .. } => {
            let (scenario, zones) = cfg.robot().expect("robot scenario");
            let exp = RobotCoverage {
                scenario,
                zones,
                stride: cfg.verify.stride,
                reference_atoms: cfg.verify.reference_atoms,
            };
            ("adaptive", exp.run(&seeds)?)
        }
        ScenarioSpec::Generic(g) => {
            let setup = g.build()?;
            if setup.known.is_some() {
                let exp = KnownFExperiment {
                    env: setup.env.clone(),
                    x0: setup.x0.clone(),
                    input: setup.input.clone(),
                    window: g.t0,
                    beta: g.beta,
                    radius: radius_config(cfg, g),
                    reference_atoms: cfg.verify.reference_atoms.unwrap_or(10_000),
                };
                ("known", exp.run(&seeds)?)
            } else {
                let exp = MixtureExperiment {
                    env: setup.env.clone(),
                    x0: setup.x0.clone(),
                    input: setup.input.clone(),
                    steps: g.steps,
                    learner: generic_learner(cfg, g, &setup),
                    reference_atoms: cfg.verify.reference_atoms.unwrap_or(2_000),
                };
                ("adaptive", exp.run(&seeds)?)
            }
        }
    };
    let passed = report.passed();
    println!(
        "{kind} coverage {:.4} ({}/{} checks over {} seeds), floor {:.6e}: {}",
        report.coverage,
        report.covered,
        report.checks,
        seeds.len(),
        report.floor,
        if passed { "PASS" } else { "FAIL" }
    );
    write_json(
        &cfg.out_dir.join("verify.json"),
        &VerifyOutput {
            kind,
            seeds: seeds.len(),
            report: &report,
            passed,
        },
    )?;
    Ok(passed)
}

/// One sampled step of a sweep run; coverage is checked only on steps whose
/// window lies inside one zone.
struct SweepPoint {
    t: usize,
    window_len: usize,
    theoretical: f64,
    logged: f64,
    covered: Option<bool>,
}

fn sweep_run(scenario: &ScenarioConfig, zones: &ZoneMap, stride: usize, ratio: f64) -> Result<Vec<SweepPoint>> {
    let mut runner = ScenarioRunner::new(scenario.clone(), zones.clone())?;
    let mut rrng = seeded_rng(scenario.seed ^ SWEEP_REFERENCE_SALT);
    let ramp_stride = (scenario.t0 / 20).max(1);
    let mut out = Vec::new();
    for _ in 0..scenario.steps {
        let rec = runner.step()?;
        let checked = rec.t % stride == 0;
        if !checked && !(rec.t <= scenario.t0 && rec.t % ramp_stride == 0) {
            continue;
        }
        let theoretical = if rec.c.is_finite() && rec.c > 0.0 {
            composite_confidence(rec.window_len, ratio * 3.0 * rec.c, rec.c, 3, scenario.beta)
                .map_err(|e| e.at_step(rec.t))?
                .value
        } else {
            0.0
        };
        let covered = if checked && rec.window_constant() {
            let amb = runner.ambiguity_set()?;
            let reference = runner.next_state_sample(amb.center.len(), &mut rrng)?;
            Some(w1_distance(&amb.center.to_measure(), &reference)? <= amb.radius)
        } else {
            None
        };
        out.push(SweepPoint {
            t: rec.t,
            window_len: rec.window_len,
            theoretical,
            logged: rec.confidence,
            covered,
        });
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    t0: usize,
    checks: usize,
    coverage: f64,
    steady_theoretical: f64,
    steady_logged: f64,
}

pub fn sweep(cfg: &RunConfig) -> Result<bool> {
    prepare_out_dir(cfg)?;
    let (base, zones) = cfg
        .robot()
        .ok_or_else(|| Error::InvalidConfig("sweep mode needs a robot scenario".into()))?;
    let seeds = cfg.seed_list();
    let path = cfg.out_dir.join("sweep.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["t0", "t", "window_len", "theoretical", "logged", "coverage", "checks"])
        .map_err(csv_err)?;
    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    for &t0 in &cfg.sweep.t0_grid {
        info!("sweep: T0 = {t0}, {} seeds", seeds.len());
        let scenario = ScenarioConfig { t0, ..base.clone() };
        let runs = seeds
            .par_iter()
            .map(|&seed| {
                sweep_run(
                    &ScenarioConfig {
                        seed,
                        ..scenario.clone()
                    },
                    &zones,
                    cfg.sweep.stride,
                    cfg.sweep.gamma_ratio,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        // merge by time step, seeds in order
        let mut by_t: std::collections::BTreeMap<usize, Vec<&SweepPoint>> = Default::default();
        for p in runs.iter().flatten() {
            by_t.entry(p.t).or_default().push(p);
        }
        let mut curve = Vec::new();
        for (t, pts) in &by_t {
            let m = pts.len() as f64;
            let theoretical = pts.iter().map(|p| p.theoretical).sum::<f64>() / m;
            let logged = pts.iter().map(|p| p.logged).sum::<f64>() / m;
            let flags: Vec<bool> = pts.iter().filter_map(|p| p.covered).collect();
            let coverage = if flags.is_empty() {
                f64::NAN
            } else {
                flags.iter().filter(|&&c| c).count() as f64 / flags.len() as f64
            };
            let window_len = pts[0].window_len;
            w.write_record([
                t0.to_string(),
                t.to_string(),
                window_len.to_string(),
                theoretical.to_string(),
                logged.to_string(),
                if coverage.is_nan() {
                    String::new()
                } else {
                    coverage.to_string()
                },
                flags.len().to_string(),
            ])
            .map_err(csv_err)?;
            curve.push((*t as f64, theoretical));
        }
        let all: Vec<bool> = runs.iter().flatten().filter_map(|p| p.covered).collect();
        let last = by_t.values().last();
        let steady = |f: fn(&SweepPoint) -> f64| {
            last.map_or(f64::NAN, |pts| pts.iter().map(|p| f(p)).sum::<f64>() / pts.len() as f64)
        };
        let summary = SweepSummary {
            t0,
            checks: all.len(),
            coverage: if all.is_empty() {
                f64::NAN
            } else {
                all.iter().filter(|&&c| c).count() as f64 / all.len() as f64
            },
            steady_theoretical: steady(|p| p.theoretical),
            steady_logged: steady(|p| p.logged),
        };
        println!(
            "T0 = {t0}: steady theoretical confidence {:.4}, empirical coverage {:.4} over {} checks",
            summary.steady_theoretical, summary.coverage, summary.checks
        );
        curves.push(Series::new(format!("T0 = {t0}"), curve));
        summaries.push(summary);
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    write_json(&cfg.out_dir.join("sweep.json"), &summaries)?;
    if cfg.plots {
        line_chart(
            &cfg.out_dir.join("sweep.svg"),
            "composite confidence by window length",
            "probability",
            &curves,
            false,
        )?;
    }
    Ok(true)
}
