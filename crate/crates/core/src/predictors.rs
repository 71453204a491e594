//! The environment model `x_{t+1} = f(t, x_t, d_t) + w_t`, the known predictor
//! class `{f^(i)}` and mixture evaluation `Σ αᵢ f^(i)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ambiguity::HistoryWindow;
use crate::error::{check_dim, Error, Result};
use crate::noise::NoiseModel;

/// Relative singular-value tolerance of the linear-independence probe.
pub const RANK_TOL: f64 = 1e-8;

type Field = dyn Fn(usize, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync;

/// A deterministic vector field `(t, x, d) ↦ f(t, x, d) ∈ R^n`.
#[derive(Clone)]
pub struct Predictor {
    name: String,
    dim_state: usize,
    dim_input: usize,
    field: Arc<Field>,
}

impl fmt::Debug for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predictor")
            .field("name", &self.name)
            .field("dim_state", &self.dim_state)
            .field("dim_input", &self.dim_input)
            .finish()
    }
}

impl Predictor {
    pub fn new<F>(name: impl Into<String>, dim_state: usize, dim_input: usize, field: F) -> Self
    where
        F: Fn(usize, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim_state,
            dim_input,
            field: Arc::new(field),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn dim_input(&self) -> usize {
        self.dim_input
    }

    /// Evaluates the field, checking input and output dimensions.
    pub fn eval(&self, t: usize, x: &DVector<f64>, d: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim_state, x.len())?;
        check_dim(self.dim_input, d.len())?;
        let out = (self.field)(t, x, d);
        check_dim(self.dim_state, out.len())?;
        Ok(out)
    }
}

/// A probe point `(t, x, d)` for the linear-independence check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    pub t: usize,
    pub x: Vec<f64>,
    pub d: Vec<f64>,
}

/// An ordered list of predictors sharing state and input dimensions, checked
/// for numerical linear independence at construction.
#[derive(Debug, Clone)]
pub struct PredictorSet {
    predictors: Vec<Predictor>,
    dim_state: usize,
    dim_input: usize,
    probe_singular_values: Vec<f64>,
}

impl PredictorSet {
    /// Builds the set; the `p × (n·#probes)` evaluation matrix must have
    /// numerical rank `p`.
    pub fn new(predictors: Vec<Predictor>, probes: &[Probe]) -> Result<Self> {
        let first = predictors
            .first()
            .ok_or_else(|| Error::InvalidConfig("predictor set is empty".into()))?;
        let (n, m) = (first.dim_state, first.dim_input);
        for p in &predictors {
            check_dim(n, p.dim_state)?;
            check_dim(m, p.dim_input)?;
        }
        if probes.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one probe point is needed for the independence check".into(),
            ));
        }
        let p = predictors.len();
        let mut rows = DMatrix::zeros(p, n * probes.len());
        for (j, probe) in probes.iter().enumerate() {
            let x = DVector::from_column_slice(&probe.x);
            let d = DVector::from_column_slice(&probe.d);
            for (i, pred) in predictors.iter().enumerate() {
                let v = pred.eval(probe.t, &x, &d)?;
                rows.view_mut((i, j * n), (1, n)).copy_from(&v.transpose());
            }
        }
        let mut sv: Vec<f64> = rows.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let largest = sv.first().copied().unwrap_or(0.0);
        let rank = sv.iter().filter(|&&s| s > RANK_TOL * largest).count();
        if largest == 0.0 || rank < p {
            return Err(Error::RankDeficient { rank, expected: p });
        }
        Ok(Self {
            predictors,
            dim_state: n,
            dim_input: m,
            probe_singular_values: sv,
        })
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn dim_input(&self) -> usize {
        self.dim_input
    }

    pub fn get(&self, i: usize) -> Option<&Predictor> {
        self.predictors.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Predictor> {
        self.predictors.iter()
    }

    /// Singular values of the probe evaluation matrix, descending.
    pub fn probe_singular_values(&self) -> &[f64] {
        &self.probe_singular_values
    }

    /// `[f^(1)(t,x,d), …, f^(p)(t,x,d)]`.
    pub fn evaluate_all(&self, t: usize, x: &DVector<f64>, d: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        self.predictors.iter().map(|f| f.eval(t, x, d)).collect()
    }
}

/// Mixture coefficients `α` with their cached sum `αᵀ1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCoefficients {
    alpha: DVector<f64>,
    sum: f64,
}

impl MixtureCoefficients {
    pub fn new(alpha: DVector<f64>) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("mixture coefficients must be finite"));
        }
        let sum = alpha.sum();
        Ok(Self { alpha, sum })
    }

    pub fn from_slice(alpha: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(alpha))
    }

    /// `1/p` in every entry.
    pub fn uniform(p: usize) -> Self {
        let alpha = DVector::from_element(p, 1.0 / p as f64);
        let sum = alpha.sum();
        Self { alpha, sum }
    }

    pub fn basis(p: usize, i: usize) -> Self {
        let mut alpha = DVector::zeros(p);
        alpha[i] = 1.0;
        Self { alpha, sum: 1.0 }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    /// `‖self − other‖∞`.
    pub fn inf_distance(&self, other: &MixtureCoefficients) -> f64 {
        (&self.alpha - &other.alpha).amax()
    }
}

/// `Σᵢ αᵢ f^(i)(t, x, d)`.
pub fn evaluate_mixture(
    set: &PredictorSet,
    alpha: &MixtureCoefficients,
    t: usize,
    x: &DVector<f64>,
    d: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim(set.len(), alpha.len())?;
    let mut out = DVector::zeros(set.dim_state());
    for (f, a) in set.iter().zip(alpha.as_vector().iter()) {
        out.axpy(*a, &f.eval(t, x, d)?, 1.0);
    }
    Ok(out)
}

type StateRule = dyn Fn(usize, &DVector<f64>) -> MixtureCoefficients + Send + Sync;

/// Ground-truth coefficients `α★` as a function of time and state.
#[derive(Clone)]
pub enum AlphaSchedule {
    Constant(MixtureCoefficients),
    /// `(start_t, α★)` pieces sorted by start time; the first must start at 0.
    Piecewise(Vec<(usize, MixtureCoefficients)>),
    /// `α★` chosen by a rule on `(t, x)`, e.g. a region lookup.
    StateDependent(Arc<StateRule>),
}

impl fmt::Debug for AlphaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSchedule::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            AlphaSchedule::Piecewise(p) => f.debug_tuple("Piecewise").field(p).finish(),
            AlphaSchedule::StateDependent(_) => f.write_str("StateDependent(..)"),
        }
    }
}

impl AlphaSchedule {
    pub fn piecewise(mut pieces: Vec<(usize, MixtureCoefficients)>) -> Result<Self> {
        pieces.sort_by_key(|(t, _)| *t);
        match pieces.first() {
            Some((0, _)) => {}
            _ => return Err(Error::InvalidConfig("piecewise schedule must start at t = 0".into())),
        }
        let p = pieces[0].1.len();
        for (_, a) in &pieces {
            check_dim(p, a.len())?;
        }
        Ok(AlphaSchedule::Piecewise(pieces))
    }

    pub fn at(&self, t: usize, x: &DVector<f64>) -> MixtureCoefficients {
        match self {
            AlphaSchedule::Constant(a) => a.clone(),
            AlphaSchedule::Piecewise(pieces) => {
                let idx = pieces.partition_point(|(start, _)| *start <= t).saturating_sub(1);
                pieces[idx].1.clone()
            }
            AlphaSchedule::StateDependent(rule) => rule(t, x),
        }
    }
}

/// The true mean dynamics.
#[derive(Debug, Clone)]
pub enum Truth {
    Known(Predictor),
    Mixture { set: PredictorSet, schedule: AlphaSchedule },
}

/// One sampled transition; `noise` is the drawn disturbance, kept for oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: DVector<f64>,
    pub noise: DVector<f64>,
}

/// The stochastic environment `x_{t+1} = f(t, x_t, d_t) + w_t`.
#[derive(Debug, Clone)]
pub struct Environment {
    truth: Truth,
    noise: NoiseModel,
}

impl Environment {
    pub fn new(truth: Truth, noise: NoiseModel) -> Result<Self> {
        let n = match &truth {
            Truth::Known(f) => f.dim_state(),
            Truth::Mixture { set, .. } => set.dim_state(),
        };
        check_dim(n, noise.dim())?;
        Ok(Self { truth, noise })
    }

    pub fn truth(&self) -> &Truth {
        &self.truth
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn dim_state(&self) -> usize {
        self.noise.dim()
    }

    pub fn dim_input(&self) -> usize {
        match &self.truth {
            Truth::Known(f) => f.dim_input(),
            Truth::Mixture { set, .. } => set.dim_input(),
        }
    }

    /// `α★` in force at `(t, x)`, for mixture truths.
    pub fn alpha_star(&self, t: usize, x: &DVector<f64>) -> Option<MixtureCoefficients> {
        match &self.truth {
            Truth::Known(_) => None,
            Truth::Mixture { schedule, .. } => Some(schedule.at(t, x)),
        }
    }

    /// The noiseless next state `f(t, x, d)`.
    pub fn mean_next(&self, t: usize, x: &DVector<f64>, d: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.truth {
            Truth::Known(f) => f.eval(t, x, d),
            Truth::Mixture { set, schedule } => evaluate_mixture(set, &schedule.at(t, x), t, x, d),
        }
    }

    /// Samples `x_{t+1}`.
    pub fn step<R: Rng + ?Sized>(
        &self,
        t: usize,
        x: &DVector<f64>,
        d: &DVector<f64>,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        let mean = self.mean_next(t, x, d)?;
        let noise = self.noise.sample(rng);
        Ok(StepOutcome {
            next: mean + &noise,
            noise,
        })
    }
}

/// Whether `α★` is the same for every transition of the window and for the
/// upcoming one. The learner's radius bound presumes it; it is reported, not
/// enforced.
pub fn window_constant_alpha(schedule: &AlphaSchedule, window: &HistoryWindow) -> bool {
    let current = schedule.at(window.current_t(), window.latest_state());
    window.entries().all(|e| schedule.at(e.k, &e.x_hat) == current)
}

/// Builds the unicycle predictor with road offsets `(e1, e2)`:
/// `x⁺ = (x1 + h cos(x3) u1, x2 + h sin(x3) u1, x3 − h u2)` with
/// `u1 = r/2 (v_l + v_r + e1)`, `u2 = r/(2R) (v_l − v_r + e2)`.
/// The heading is not wrapped, so mixtures stay linear.
pub fn unicycle_e(e1: f64, e2: f64, r: f64, big_r: f64, h: f64) -> Predictor {
    Predictor::new(format!("unicycle_e({e1},{e2})"), 3, 2, move |_t, x, d| {
        let u1 = 0.5 * r * (d[0] + d[1] + e1);
        let u2 = r / (2.0 * big_r) * (d[0] - d[1] + e2);
        DVector::from_vec(vec![
            x[0] + h * x[2].cos() * u1,
            x[1] + h * x[2].sin() * u1,
            x[2] - h * u2,
        ])
    })
}

/// `f(t, x, d) = M x + B d + c`.
pub fn affine(matrix: DMatrix<f64>, input_matrix: Option<DMatrix<f64>>, offset: DVector<f64>) -> Result<Predictor> {
    let n = matrix.nrows();
    check_dim(n, matrix.ncols())?;
    check_dim(n, offset.len())?;
    let m = match &input_matrix {
        Some(b) => {
            check_dim(n, b.nrows())?;
            b.ncols()
        }
        None => 0,
    };
    Ok(Predictor::new("affine", n, m, move |_t, x, d| {
        let mut out = &matrix * x + &offset;
        if let Some(b) = &input_matrix {
            out += b * d;
        }
        out
    }))
}

type Builder = Box<dyn Fn(&Value) -> Result<Predictor> + Send + Sync>;

/// Named predictor constructors for configuration-driven selection.
pub struct PredictorRegistry {
    builders: BTreeMap<String, Builder>,
}

impl fmt::Debug for PredictorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.builders.keys()).finish()
    }
}

fn number(params: &Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::InvalidConfig(format!("missing numeric parameter `{key}`")))
}

fn matrix_param(params: &Value, key: &str) -> Result<Option<DMatrix<f64>>> {
    let Some(v) = params.get(key) else {
        return Ok(None);
    };
    let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone())
        .map_err(|e| Error::InvalidConfig(format!("`{key}` must be a matrix: {e}")))?;
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidConfig(format!("`{key}` rows differ in length")));
    }
    Ok(Some(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])))
}

fn reject_unknown(params: &Value, allowed: &[&str]) -> Result<()> {
    let obj = params
        .as_object()
        .ok_or_else(|| Error::InvalidConfig("predictor parameters must be an object".into()))?;
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::InvalidConfig(format!("unknown predictor parameter `{k}`"))),
        None => Ok(()),
    }
}

impl PredictorRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    /// Registry with `unicycle_e` (params `e1, e2, r, R, h`) and `affine`
    /// (params `matrix`, optional `input_matrix`, optional `offset`).
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("unicycle_e", |p| {
            reject_unknown(p, &["e1", "e2", "r", "R", "h"])?;
            Ok(unicycle_e(
                number(p, "e1")?,
                number(p, "e2")?,
                number(p, "r")?,
                number(p, "R")?,
                number(p, "h")?,
            ))
        });
        reg.register("affine", |p| {
            reject_unknown(p, &["matrix", "input_matrix", "offset"])?;
            let matrix = matrix_param(p, "matrix")?
                .ok_or_else(|| Error::InvalidConfig("affine predictor needs `matrix`".into()))?;
            let input = matrix_param(p, "input_matrix")?;
            let offset = match p.get("offset") {
                Some(v) => {
                    let o: Vec<f64> = serde_json::from_value(v.clone())
                        .map_err(|e| Error::InvalidConfig(format!("`offset`: {e}")))?;
                    DVector::from_vec(o)
                }
                None => DVector::zeros(matrix.nrows()),
            };
            affine(matrix, input, offset)
        });
        reg
    }

    pub fn register<F>(&mut self, name: impl Into<String>, builder: F)
    where
        F: Fn(&Value) -> Result<Predictor> + Send + Sync + 'static,
    {
        self.builders.insert(name.into(), Box::new(builder));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, params: &Value) -> Result<Predictor> {
        let builder = self
            .builders
            .get(name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown predictor `{name}`")))?;
        builder(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;
    use serde_json::json;

    fn scalar(name: &str, f: fn(f64) -> f64) -> Predictor {
        Predictor::new(name, 1, 0, move |_, x, _| DVector::from_element(1, f(x[0])))
    }

    fn probes_1d() -> Vec<Probe> {
        vec![
            Probe {
                t: 0,
                x: vec![1.0],
                d: vec![],
            },
            Probe {
                t: 0,
                x: vec![2.0],
                d: vec![],
            },
        ]
    }

    fn robot_set() -> PredictorSet {
        let preds = vec![
            unicycle_e(0.0, 0.0, 0.15, 0.4, 1e-3),
            unicycle_e(10.0, 0.0, 0.15, 0.4, 1e-3),
            unicycle_e(0.0, 10.0, 0.15, 0.4, 1e-3),
        ];
        let probes = vec![
            Probe {
                t: 0,
                x: vec![0.0, 0.0, 0.0],
                d: vec![10.0, 10.0],
            },
            Probe {
                t: 0,
                x: vec![1.0, 0.5, 0.3],
                d: vec![9.5, 10.5],
            },
            Probe {
                t: 0,
                x: vec![-2.0, 1.0, -1.0],
                d: vec![10.0, 9.0],
            },
        ];
        PredictorSet::new(preds, &probes).unwrap()
    }

    #[test]
    fn rank_probe_rejects_dependent_predictors() {
        let a = scalar("x", |x| x);
        let b = scalar("2x", |x| 2.0 * x);
        let err = PredictorSet::new(vec![a.clone(), b], &probes_1d()).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 1, expected: 2 }));
        let c = scalar("one", |_| 1.0);
        assert!(PredictorSet::new(vec![a.clone(), c], &probes_1d()).is_ok());
        assert!(PredictorSet::new(vec![a], &[]).is_err());
        assert!(PredictorSet::new(vec![], &probes_1d()).is_err());
    }

    #[test]
    fn mixture_basis_and_zero() {
        let set = robot_set();
        let x = DVector::from_vec(vec![0.3, -0.2, 0.4]);
        let d = DVector::from_vec(vec![9.8, 10.1]);
        for i in 0..3 {
            let out = evaluate_mixture(&set, &MixtureCoefficients::basis(3, i), 5, &x, &d).unwrap();
            assert_eq!(out, set.get(i).unwrap().eval(5, &x, &d).unwrap());
        }
        let zero = MixtureCoefficients::new(DVector::zeros(3)).unwrap();
        assert_eq!(evaluate_mixture(&set, &zero, 0, &x, &d).unwrap(), DVector::zeros(3));
        let short = MixtureCoefficients::uniform(2);
        assert!(evaluate_mixture(&set, &short, 0, &x, &d).is_err());
    }

    #[test]
    fn slippery_mixture_matches_offset_dynamics() {
        let set = robot_set();
        let alpha = MixtureCoefficients::from_slice(&[0.6, 0.4, 0.0]).unwrap();
        let truth = unicycle_e(4.0, 0.0, 0.15, 0.4, 1e-3);
        let mut rng = seeded_rng(5);
        for _ in 0..100 {
            let x = DVector::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
            let d = DVector::from_fn(2, |_, _| rng.random_range(5.0..15.0));
            let mix = evaluate_mixture(&set, &alpha, 0, &x, &d).unwrap();
            let direct = truth.eval(0, &x, &d).unwrap();
            assert!((mix - direct).amax() < 1e-12);
        }
    }

    #[test]
    fn noiseless_step_equals_mixture() {
        let set = robot_set();
        let alpha = MixtureCoefficients::from_slice(&[1.6, -0.6, 0.0]).unwrap();
        let env = Environment::new(
            Truth::Mixture {
                set: set.clone(),
                schedule: AlphaSchedule::Constant(alpha.clone()),
            },
            NoiseModel::dirac_zero(3, 0.5).unwrap(),
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.0, 2.0, 0.1]);
        let d = DVector::from_vec(vec![10.0, 10.2]);
        let out = env.step(3, &x, &d, &mut seeded_rng(0)).unwrap();
        let expected = evaluate_mixture(&set, &alpha, 3, &x, &d).unwrap();
        assert!((out.next - expected).amax() <= 1e-15);
        assert_eq!(out.noise, DVector::zeros(3));
    }

    #[test]
    fn environment_rejects_noise_dimension_mismatch() {
        let f = scalar("x", |x| x);
        let noise = NoiseModel::dirac_zero(2, 0.5).unwrap();
        assert!(Environment::new(Truth::Known(f), noise).is_err());
    }

    #[test]
    fn seeded_trajectory_is_reproducible() {
        let f = scalar("half", |x| 0.5 * x + 1.0);
        let noise = NoiseModel::gaussian(DMatrix::from_element(1, 1, 0.25), 0.5).unwrap();
        let env = Environment::new(Truth::Known(f), noise).unwrap();
        let run = |seed| {
            let mut rng = seeded_rng(seed);
            let mut x = DVector::from_element(1, 0.0);
            let d = DVector::zeros(0);
            let mut traj = Vec::new();
            for t in 0..50 {
                x = env.step(t, &x, &d, &mut rng).unwrap().next;
                traj.push(x[0].to_bits());
            }
            traj
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn schedule_switch_shifts_mean_increment() {
        let one = scalar("one", |_| 1.0);
        let x_id = scalar("x", |x| x);
        let set = PredictorSet::new(vec![x_id, one], &probes_1d()).unwrap();
        let schedule = AlphaSchedule::piecewise(vec![
            (0, MixtureCoefficients::from_slice(&[1.0, 0.0]).unwrap()),
            (500, MixtureCoefficients::from_slice(&[1.0, 0.5]).unwrap()),
        ])
        .unwrap();
        let noise = NoiseModel::gaussian(DMatrix::from_element(1, 1, 0.25), 0.5).unwrap();
        let env = Environment::new(Truth::Mixture { set, schedule }, noise).unwrap();
        let mut rng = seeded_rng(21);
        let x = DVector::from_element(1, 0.0);
        let d = DVector::zeros(0);
        let trials = 10_000;
        let mean_increment = |t: usize, rng: &mut crate::SimRng| {
            (0..trials)
                .map(|_| env.step(t, &x, &d, rng).unwrap().next[0] - x[0])
                .sum::<f64>()
                / trials as f64
        };
        let before = mean_increment(499, &mut rng);
        let after = mean_increment(500, &mut rng);
        // standard error 0.5/100 = 0.005; the true shift is 0.5
        assert!(before.abs() < 0.02, "{before}");
        assert!((after - 0.5).abs() < 0.02, "{after}");
    }

    #[test]
    fn registry_builds_builtins() {
        let reg = PredictorRegistry::builtin();
        let u = reg
            .build(
                "unicycle_e",
                &json!({"e1": 10.0, "e2": 0.0, "r": 0.15, "R": 0.4, "h": 0.001}),
            )
            .unwrap();
        let x = DVector::zeros(3);
        let d = DVector::from_vec(vec![10.0, 10.0]);
        let out = u.eval(0, &x, &d).unwrap();
        assert!((out[0] - 1e-3 * 0.075 * 30.0).abs() < 1e-15);
        let a = reg
            .build("affine", &json!({"matrix": [[0.5]], "offset": [1.0]}))
            .unwrap();
        assert_eq!(
            a.eval(0, &DVector::from_element(1, 2.0), &DVector::zeros(0)).unwrap()[0],
            2.0
        );
        assert!(reg.build("nope", &json!({})).is_err());
        assert!(reg.build("affine", &json!({"matrix": [[1.0]], "bogus": 1})).is_err());
        assert!(reg.build("unicycle_e", &json!({"e1": 1.0})).is_err());
    }
}
