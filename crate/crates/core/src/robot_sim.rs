//! Differential-drive robot crossing road zones with different wheel/road
//! offsets, learned online with three offset-shifted predictors.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ambiguity::{AmbiguitySet, RadiusConfig, RadiusMode};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, RegularizerRule};
use crate::learner::{LearnStep, LearnerConfig, PLearner};
use crate::noise::{NoiseModel, NoiseSpec};
use crate::predictors::{unicycle_e, MixtureCoefficients, Predictor, PredictorSet, Probe};
use crate::transport::DiscreteMeasure;
use crate::{seeded_rng, SimRng};

/// Wraps an angle into `[−π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Planar position and heading; the heading is kept in `[−π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl RobotState {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self {
            x1,
            x2,
            x3: wrap_angle(x3),
        }
    }

    pub fn to_vector(self) -> DVector<f64> {
        DVector::from_vec(vec![self.x1, self.x2, self.x3])
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Scenario constants. Defaults reproduce the reference setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Step length in seconds.
    pub h: f64,
    /// Wheel radius (m).
    pub r: f64,
    /// Half distance between wheels (m).
    #[serde(rename = "R")]
    pub big_r: f64,
    pub sigma: f64,
    pub t0: usize,
    pub beta: f64,
    pub theta: f64,
    pub x0: [f64; 3],
    /// `(e1, e2)` of each predictor.
    pub predictor_offsets: Vec<[f64; 2]>,
    pub steps: usize,
    pub seed: u64,
    /// Law of the wheel/road disturbance `w`; it enters the state as `h·w`.
    pub noise: NoiseSpec,
    /// Singular values of `A` at or below this are discarded.
    pub sv_threshold: f64,
    /// State components left out of the regularizer scaling.
    pub unscaled_components: Vec<usize>,
    pub radius: RadiusConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            r: 0.15,
            big_r: 0.4,
            sigma: 0.5,
            t0: 300,
            beta: 0.05,
            theta: 0.01,
            x0: [0.0, 0.0, 0.0],
            predictor_offsets: vec![[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]],
            steps: 6000,
            seed: 0,
            noise: NoiseSpec::gaussian_ball_mixture(3, 0.35, 0.35, 0.5),
            sv_threshold: 1e-12,
            unscaled_components: vec![2],
            radius: RadiusConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("h", self.h), ("r", self.r), ("R", self.big_r), ("sigma", self.sigma)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("`{name}` must be positive, got {v}")));
            }
        }
        if self.t0 == 0 {
            return Err(Error::InvalidConfig("`t0` must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "`beta` must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if !(self.theta >= 0.0) || !(self.sv_threshold >= 0.0) {
            return Err(Error::InvalidConfig(
                "`theta` and `sv_threshold` must be nonnegative".into(),
            ));
        }
        if self.predictor_offsets.is_empty() {
            return Err(Error::InvalidConfig("at least one predictor offset is needed".into()));
        }
        if self.unscaled_components.iter().any(|&j| j > 2) {
            return Err(Error::InvalidConfig(
                "`unscaled_components` entries must be 0, 1 or 2".into(),
            ));
        }
        let noise = self.noise.build()?;
        if noise.dim() != 3 {
            return Err(Error::InvalidConfig(format!(
                "robot noise must be 3-dimensional, got {}",
                noise.dim()
            )));
        }
        if noise.sigma() > self.sigma {
            return Err(Error::InvalidConfig(format!(
                "noise sigma {} exceeds scenario sigma {}",
                noise.sigma(),
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn x0_state(&self) -> RobotState {
        RobotState::new(self.x0[0], self.x0[1], self.x0[2])
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            beta: self.beta,
            t0: Some(self.t0),
            estimator: EstimatorConfig {
                sigma: self.sigma,
                theta: self.theta,
                sv_threshold: self.sv_threshold,
                regularizer: RegularizerRule {
                    unscaled: self.unscaled_components.clone(),
                },
            },
            radius: self.radius,
        }
    }

    pub fn with_radius_mode(mut self, mode: RadiusMode) -> Self {
        self.radius.mode = mode;
        self
    }
}

/// Wheel speeds `(v_l, v_r) = (10 − 0.5 sin(20hπt), 10 + 0.5 sin(20hπt))`.
pub fn wheel_plan(t: usize, h: f64) -> (f64, f64) {
    let s = 0.5 * (20.0 * h * PI * t as f64).sin();
    (10.0 - s, 10.0 + s)
}

pub fn wheel_input(t: usize, h: f64) -> DVector<f64> {
    let (vl, vr) = wheel_plan(t, h);
    DVector::from_vec(vec![vl, vr])
}

/// One step of the perturbed unicycle; the disturbance enters as `h·w` and the
/// heading is wrapped.
pub fn robot_step(state: RobotState, d: (f64, f64), e: [f64; 2], w: &DVector<f64>, cfg: &ScenarioConfig) -> RobotState {
    let (vl, vr) = d;
    let u1 = 0.5 * cfg.r * (vl + vr + e[0]);
    let u2 = cfg.r / (2.0 * cfg.big_r) * (vl - vr + e[1]);
    let h = cfg.h;
    RobotState {
        x1: state.x1 + h * state.x3.cos() * u1 + h * w[0],
        x2: state.x2 + h * state.x3.sin() * u1 + h * w[1],
        x3: wrap_angle(state.x3 - h * u2 + h * w[2]),
    }
}

/// The offset-shifted predictors `{f^(i)}`.
pub fn unicycle_predictors(cfg: &ScenarioConfig) -> Vec<Predictor> {
    cfg.predictor_offsets
        .iter()
        .map(|e| unicycle_e(e[0], e[1], cfg.r, cfg.big_r, cfg.h))
        .collect()
}

/// Probe points for the independence check: the start state and a few
/// perturbations of it under the wheel plan.
pub fn default_probes(cfg: &ScenarioConfig) -> Vec<Probe> {
    let [a, b, c] = cfg.x0;
    let shifts = [[0.0, 0.0, 0.0], [0.5, 0.2, 0.3], [1.0, -0.5, -0.2], [-0.7, 0.9, 1.1]];
    shifts
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (vl, vr) = wheel_plan(13 * k, cfg.h);
            Probe {
                t: 0,
                x: vec![a + s[0], b + s[1], c + s[2]],
                d: vec![vl + 0.2 * k as f64, vr],
            }
        })
        .collect()
}

pub fn predictor_set(cfg: &ScenarioConfig) -> Result<PredictorSet> {
    PredictorSet::new(unicycle_predictors(cfg), &default_probes(cfg))
}

/// Coefficients with `Σ αᵢ = 1` and `Σ αᵢ e^(i) = e`, making the mixture equal
/// to the dynamics with offset `e`. Errors if no exact solution exists.
pub fn alpha_star_for(e: [f64; 2], offsets: &[[f64; 2]]) -> Result<MixtureCoefficients> {
    let p = offsets.len();
    let m = DMatrix::from_fn(3, p, |row, i| if row == 0 { 1.0 } else { offsets[i][row - 1] });
    let rhs = DVector::from_vec(vec![1.0, e[0], e[1]]);
    let svd = m.clone().svd(true, true);
    let alpha = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidConfig(format!("offset system: {e}")))?;
    let residual = (&m * &alpha - &rhs).amax();
    if residual > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "offset ({}, {}) is not an affine combination of the predictor offsets",
            e[0], e[1]
        )));
    }
    MixtureCoefficients::new(alpha)
}

/// Planar region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// `[x_min, x_max) × [y_min, y_max)`.
    Rect {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    /// Simple polygon, vertices in order.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Region::Rect {
                x_min,
                x_max,
                y_min,
                y_max,
            } => x >= *x_min && x < *x_max && y >= *y_min && y < *y_max,
            Region::Polygon { vertices } => {
                let mut inside = false;
                let n = vertices.len();
                for i in 0..n {
                    let [xi, yi] = vertices[i];
                    let [xj, yj] = vertices[(i + n - 1) % n];
                    if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                        inside = !inside;
                    }
                }
                inside
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Region::Rect {
                x_min,
                x_max,
                y_min,
                y_max,
            } if x_min < x_max && y_min < y_max => Ok(()),
            Region::Polygon { vertices } if vertices.len() >= 3 => Ok(()),
            _ => Err(Error::InvalidConfig(format!("degenerate region {self:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub name: String,
    pub region: Region,
    pub e: [f64; 2],
}

/// Road zones; the first matching region wins, otherwise the default applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneMap {
    pub zones: Vec<Zone>,
    pub default_name: String,
    pub default_e: [f64; 2],
}

impl Default for ZoneMap {
    /// Slippery then sandy strip across the nominal path, smooth elsewhere.
    fn default() -> Self {
        Self {
            zones: vec![
                Zone {
                    name: "slippery".into(),
                    region: Region::Rect {
                        x_min: 2.0,
                        x_max: 4.0,
                        y_min: -5.0,
                        y_max: 5.0,
                    },
                    e: [4.0, 0.0],
                },
                Zone {
                    name: "sandy".into(),
                    region: Region::Rect {
                        x_min: 4.0,
                        x_max: 6.0,
                        y_min: -5.0,
                        y_max: 5.0,
                    },
                    e: [-6.0, 0.0],
                },
            ],
            default_name: "smooth".into(),
            default_e: [0.0, 0.0],
        }
    }
}

impl ZoneMap {
    /// A single zone everywhere.
    pub fn uniform(name: impl Into<String>, e: [f64; 2]) -> Self {
        Self {
            zones: Vec::new(),
            default_name: name.into(),
            default_e: e,
        }
    }

    /// Zone id at a point: `0` for the default, `i + 1` for `zones[i]`.
    pub fn lookup(&self, x: f64, y: f64) -> usize {
        self.zones
            .iter()
            .position(|z| z.region.contains(x, y))
            .map_or(0, |i| i + 1)
    }

    pub fn offset(&self, id: usize) -> [f64; 2] {
        if id == 0 {
            self.default_e
        } else {
            self.zones[id - 1].e
        }
    }

    pub fn name(&self, id: usize) -> &str {
        if id == 0 {
            &self.default_name
        } else {
            &self.zones[id - 1].name
        }
    }

    pub fn len(&self) -> usize {
        self.zones.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ground-truth coefficients for every zone id; fails if some zone's
    /// offset is not representable by the predictors.
    pub fn alpha_stars(&self, offsets: &[[f64; 2]]) -> Result<Vec<MixtureCoefficients>> {
        for z in &self.zones {
            z.region.validate()?;
        }
        (0..self.len())
            .map(|id| {
                alpha_star_for(self.offset(id), offsets)
                    .map_err(|e| Error::InvalidConfig(format!("zone `{}`: {e}", self.name(id))))
            })
            .collect()
    }
}

/// Inner product on `R² × S¹` with the heading compared by its shortest arc.
/// Standalone; the learning pipeline uses the flat `R³` inner product.
pub fn finsler_inner(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let gap = (a[2] - b[2]).abs().rem_euclid(2.0 * PI);
    a[0] * b[0] + a[1] * b[1] + gap.min(2.0 * PI - gap).cos()
}

pub fn finsler_norm(a: &[f64; 3]) -> f64 {
    finsler_inner(a, a).sqrt()
}

/// One logged time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub gamma: f64,
    pub c: f64,
    pub sigma_min_a: f64,
    pub eta: f64,
    pub inf_error: f64,
    pub eps: f64,
    pub eps_hat: f64,
    pub eps_hat_oracle: f64,
    pub h: f64,
    pub confidence: f64,
    pub conf_naive: f64,
    pub state: [f64; 3],
    pub zone_id: usize,
    /// Consecutive transitions, including the upcoming one, in the current zone.
    pub since_switch: usize,
    pub window_len: usize,
    pub event: Option<&'static str>,
}

impl StepRecord {
    /// Whether `α★` is constant over the window and the upcoming step.
    pub fn window_constant(&self) -> bool {
        self.since_switch > self.window_len
    }
}

/// Final-state summary written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub seed: u64,
    pub final_t: usize,
    pub final_alpha: Vec<f64>,
    pub final_alpha_star: Vec<f64>,
    pub final_inf_error: f64,
    pub final_gamma: f64,
    pub final_eps: f64,
    pub final_eps_hat: f64,
    pub final_confidence: f64,
    pub final_state: [f64; 3],
    pub zone_sequence: Vec<String>,
    /// Times at which the upcoming transition's zone changed.
    pub zone_switches: Vec<usize>,
    pub unidentifiable_steps: usize,
    pub max_inf_error: f64,
    /// Among window-constant steps with `γ ≥ ‖α − α★‖∞`, the fraction where
    /// the computable radius dominates the oracle one.
    pub oracle_dominance: f64,
    pub radius_mode: RadiusMode,
}

/// Per-step log of a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub p: usize,
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
}

fn push_f64(row: &mut Vec<String>, v: f64) {
    row.push(v.to_string());
}

impl RunLog {
    pub fn csv_header(p: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=p).map(|i| format!("alpha_{i}")));
        h.extend(
            [
                "gamma",
                "sigma_min_A",
                "eta",
                "inf_error",
                "radius",
                "confidence",
                "x1",
                "x2",
                "x3",
                "zone_id",
                "H",
                "eps",
                "eps_hat",
                "eps_hat_oracle",
                "conf_naive",
                "since_switch",
                "event",
            ]
            .map(String::from),
        );
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidConfig(format!("csv output: {e}"));
        w.write_record(Self::csv_header(self.p)).map_err(io)?;
        for r in &self.records {
            let mut row = vec![r.t.to_string()];
            for a in &r.alpha {
                push_f64(&mut row, *a);
            }
            for v in [r.gamma, r.sigma_min_a, r.eta, r.inf_error, r.eps_hat, r.confidence] {
                push_f64(&mut row, v);
            }
            for v in r.state {
                push_f64(&mut row, v);
            }
            row.push(r.zone_id.to_string());
            for v in [r.h, r.eps, r.eps_hat, r.eps_hat_oracle, r.conf_naive] {
                push_f64(&mut row, v);
            }
            row.push(r.since_switch.to_string());
            row.push(r.event.unwrap_or("").to_string());
            w.write_record(&row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidConfig(format!("csv output: {e}")))?;
        Ok(())
    }
}

/// Steps the robot and the learner together.
#[derive(Debug, Clone)]
pub struct ScenarioRunner {
    cfg: ScenarioConfig,
    zones: ZoneMap,
    alpha_stars: Vec<MixtureCoefficients>,
    noise: NoiseModel,
    learner: PLearner,
    state: RobotState,
    rng: SimRng,
    t: usize,
    zone_now: usize,
    since_switch: usize,
}

impl ScenarioRunner {
    pub fn new(cfg: ScenarioConfig, zones: ZoneMap) -> Result<Self> {
        cfg.validate()?;
        let alpha_stars = zones.alpha_stars(&cfg.predictor_offsets)?;
        let noise = cfg.noise.build()?;
        let set = predictor_set(&cfg)?;
        let state = cfg.x0_state();
        let learner = PLearner::new(set, state.to_vector(), cfg.learner_config())?;
        let zone_now = zones.lookup(state.x1, state.x2);
        Ok(Self {
            rng: seeded_rng(cfg.seed),
            cfg,
            zones,
            alpha_stars,
            noise,
            learner,
            state,
            t: 0,
            zone_now,
            since_switch: 1,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn zones(&self) -> &ZoneMap {
        &self.zones
    }

    pub fn learner(&self) -> &PLearner {
        &self.learner
    }

    pub fn state(&self) -> RobotState {
        self.state
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Zone of the upcoming transition.
    pub fn zone(&self) -> usize {
        self.zone_now
    }

    pub fn alpha_star(&self) -> &MixtureCoefficients {
        &self.alpha_stars[self.zone_now]
    }

    /// Advances one step: the robot moves, the learner observes the
    /// transition and publishes the estimate for the next one.
    pub fn step(&mut self) -> Result<StepRecord> {
        let t = self.t;
        let d = wheel_plan(t, self.cfg.h);
        let e = self.zones.offset(self.zone_now);
        let w = self.noise.sample(&mut self.rng);
        let next = robot_step(self.state, d, e, &w, &self.cfg);
        self.learner
            .observe(DVector::from_vec(vec![d.0, d.1]), next.to_vector())
            .map_err(|err| err.at_step(t))?;
        self.state = next;
        self.t += 1;

        let zone = self.zones.lookup(next.x1, next.x2);
        if zone == self.zone_now {
            self.since_switch += 1;
        } else {
            self.zone_now = zone;
            self.since_switch = 1;
        }
        let step = self.learner.update(&wheel_input(self.t, self.cfg.h))?;
        Ok(self.record(&step))
    }

    fn record(&self, step: &LearnStep) -> StepRecord {
        let star = &self.alpha_stars[self.zone_now];
        let inf_error = step.alpha.inf_distance(star);
        let eps_hat_oracle = if step.h == 0.0 {
            step.eps
        } else {
            step.eps + inf_error * step.h
        };
        StepRecord {
            t: step.t,
            alpha: step.alpha.as_vector().iter().copied().collect(),
            alpha_star: star.as_vector().iter().copied().collect(),
            gamma: step.gamma,
            c: step.c,
            sigma_min_a: step.sigma_min_a,
            eta: step.eta,
            inf_error,
            eps: step.eps,
            eps_hat: step.eps_hat,
            eps_hat_oracle,
            h: step.h,
            confidence: step.composite.value,
            conf_naive: step.naive.value,
            state: [self.state.x1, self.state.x2, self.state.x3],
            zone_id: self.zone_now,
            since_switch: self.since_switch,
            window_len: step.window_len,
            event: step.event.map(|e| e.as_str()),
        }
    }

    /// The published ambiguity set for the upcoming state.
    pub fn ambiguity_set(&self) -> Result<AmbiguitySet> {
        self.learner.ambiguity_set()
    }

    /// `count` draws from the true distribution of the upcoming state,
    /// using a caller-supplied stream so the run itself is unaffected.
    pub fn next_state_sample(&self, count: usize, rng: &mut SimRng) -> Result<DiscreteMeasure> {
        let d = wheel_plan(self.t, self.cfg.h);
        let e = self.zones.offset(self.zone_now);
        let atoms = (0..count)
            .map(|_| {
                let w = self.noise.sample(rng);
                robot_step(self.state, d, e, &w, &self.cfg).to_vector()
            })
            .collect();
        DiscreteMeasure::uniform(atoms)
    }
}

/// Runs the whole scenario and collects the log.
pub fn run_scenario(cfg: &ScenarioConfig, zones: &ZoneMap) -> Result<RunLog> {
    let mut runner = ScenarioRunner::new(cfg.clone(), zones.clone())?;
    let mut records = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        records.push(runner.step()?);
    }
    let p = cfg.predictor_offsets.len();
    let summary = summarize(cfg, zones, &records);
    Ok(RunLog { p, records, summary })
}

fn summarize(cfg: &ScenarioConfig, zones: &ZoneMap, records: &[StepRecord]) -> RunSummary {
    let mut zone_sequence = Vec::new();
    let mut zone_switches = Vec::new();
    let mut prev = None;
    for r in records {
        if prev != Some(r.zone_id) {
            if prev.is_some() {
                zone_switches.push(r.t);
            }
            zone_sequence.push(zones.name(r.zone_id).to_string());
            prev = Some(r.zone_id);
        }
    }
    let (mut eligible, mut dominated) = (0usize, 0usize);
    for r in records.iter().filter(|r| r.window_constant() && r.gamma >= r.inf_error) {
        eligible += 1;
        if r.eps_hat >= r.eps_hat_oracle {
            dominated += 1;
        }
    }
    let last = records.last();
    let pick = |f: fn(&StepRecord) -> f64| last.map_or(f64::NAN, f);
    RunSummary {
        steps: cfg.steps,
        seed: cfg.seed,
        final_t: last.map_or(0, |r| r.t),
        final_alpha: last.map_or_else(Vec::new, |r| r.alpha.clone()),
        final_alpha_star: last.map_or_else(Vec::new, |r| r.alpha_star.clone()),
        final_inf_error: pick(|r| r.inf_error),
        final_gamma: pick(|r| r.gamma),
        final_eps: pick(|r| r.eps),
        final_eps_hat: pick(|r| r.eps_hat),
        final_confidence: pick(|r| r.confidence),
        final_state: last.map_or(cfg.x0, |r| r.state),
        zone_sequence,
        zone_switches,
        unidentifiable_steps: records.iter().filter(|r| r.event == Some("unidentifiable")).count(),
        max_inf_error: records.iter().map(|r| r.inf_error).fold(0.0, f64::max),
        oracle_dominance: if eligible == 0 {
            1.0
        } else {
            dominated as f64 / eligible as f64
        },
        radius_mode: cfg.radius.mode,
    }
}
