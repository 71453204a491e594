//! Sliding history windows, the empirical next-state distributions built from
//! them, and the Wasserstein radii that turn those into ambiguity sets.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::predictors::{MixtureCoefficients, Predictor, PredictorSet};
use crate::transport::DiscreteMeasure;

/// Below this `|αᵀ1|` the mixture prediction is treated as degenerate.
pub const DENOM_FLOOR: f64 = 1e-6;

/// One stored transition: state `x̂_k` and the input `d̂_k` applied at `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEntry {
    pub k: usize,
    pub x_hat: DVector<f64>,
    pub d_hat: DVector<f64>,
}

/// The last `T = min(t, T₀)` transitions plus the newest state `x̂_t`.
#[derive(Debug, Clone)]
pub struct HistoryWindow {
    entries: VecDeque<WindowEntry>,
    latest: DVector<f64>,
    current_t: usize,
    cap: Option<usize>,
    upcoming: Option<DVector<f64>>,
}

impl HistoryWindow {
    /// Empty window at `t = 0`. `cap = None` keeps the whole history.
    pub fn new(x0: DVector<f64>, cap: Option<usize>) -> Result<Self> {
        if cap == Some(0) {
            return Err(Error::InvalidConfig("window cap T0 must be positive".into()));
        }
        Ok(Self {
            entries: VecDeque::new(),
            latest: x0,
            current_t: 0,
            cap,
            upcoming: None,
        })
    }

    /// Builds a window from `states[0..=t]` and `inputs[0..t]`, keeping the
    /// last `cap` transitions.
    pub fn from_trajectory(states: &[DVector<f64>], inputs: &[DVector<f64>], cap: Option<usize>) -> Result<Self> {
        let (x0, rest) = states
            .split_first()
            .ok_or_else(|| Error::InvalidConfig("trajectory needs an initial state".into()))?;
        check_dim(rest.len(), inputs.len())?;
        let mut w = Self::new(x0.clone(), cap)?;
        for (d, x) in inputs.iter().zip(rest) {
            w.push(d.clone(), x.clone())?;
        }
        Ok(w)
    }

    /// Records the transition `x̂_t --d--> x_next` and advances `t`.
    pub fn push(&mut self, d_used: DVector<f64>, x_next: DVector<f64>) -> Result<()> {
        check_dim(self.latest.len(), x_next.len())?;
        if let Some(first) = self.entries.front() {
            check_dim(first.d_hat.len(), d_used.len())?;
        }
        let x_hat = std::mem::replace(&mut self.latest, x_next);
        self.entries.push_back(WindowEntry {
            k: self.current_t,
            x_hat,
            d_hat: d_used,
        });
        self.current_t += 1;
        if let Some(cap) = self.cap {
            while self.entries.len() > cap {
                self.entries.pop_front();
            }
        }
        self.upcoming = None;
        Ok(())
    }

    /// Sets the input `d` that will be applied at the current time.
    pub fn set_upcoming_input(&mut self, d: DVector<f64>) {
        self.upcoming = Some(d);
    }

    pub fn upcoming_input(&self) -> Option<&DVector<f64>> {
        self.upcoming.as_ref()
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &WindowEntry> + Clone {
        self.entries.iter()
    }

    /// Window length `T`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn current_t(&self) -> usize {
        self.current_t
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    /// `x̂_t`.
    pub fn latest_state(&self) -> &DVector<f64> {
        &self.latest
    }

    pub fn dim_state(&self) -> usize {
        self.latest.len()
    }

    /// First stored time index `t − T`.
    pub fn first_k(&self) -> usize {
        self.current_t - self.entries.len()
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.entries.is_empty() {
            Err(Error::EmptyWindow)
        } else {
            Ok(())
        }
    }

    pub fn entry(&self, k: usize) -> Result<&WindowEntry> {
        if k < self.first_k() || k >= self.current_t {
            return Err(Error::IndexOutOfWindow {
                k,
                first: self.first_k(),
                last: self.current_t.saturating_sub(1),
            });
        }
        Ok(&self.entries[k - self.first_k()])
    }

    /// `x̂_{k+1}` for a stored `k`.
    pub fn next_state(&self, k: usize) -> Result<&DVector<f64>> {
        self.entry(k)?;
        if k + 1 == self.current_t {
            Ok(&self.latest)
        } else {
            Ok(&self.entries[k + 1 - self.first_k()].x_hat)
        }
    }
}

/// Predictor evaluations at one stored step: `f^(i)(k, x̂_k, d̂_k)` and `x̂_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEval {
    pub k: usize,
    pub values: Vec<DVector<f64>>,
    pub next_state: DVector<f64>,
}

impl HistoryEval {
    pub fn compute(window: &HistoryWindow, set: &PredictorSet, k: usize) -> Result<Self> {
        let e = window.entry(k)?;
        Ok(Self {
            k,
            values: set.evaluate_all(k, &e.x_hat, &e.d_hat)?,
            next_state: window.next_state(k)?.clone(),
        })
    }
}

/// Everything the ambiguity and estimator formulas need from a window: the
/// per-step evaluations and the current predictions `f^(i)(t, x̂_t, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEvaluations {
    pub history: Vec<HistoryEval>,
    pub current: Vec<DVector<f64>>,
}

impl WindowEvaluations {
    pub fn compute(window: &HistoryWindow, set: &PredictorSet, d: &DVector<f64>) -> Result<Self> {
        window.require_nonempty()?;
        let history = (window.first_k()..window.current_t())
            .map(|k| HistoryEval::compute(window, set, k))
            .collect::<Result<Vec<_>>>()?;
        let current = set.evaluate_all(window.current_t(), window.latest_state(), d)?;
        Ok(Self { history, current })
    }
}

/// Equal-weight Dirac mixture `(1/T) Σ δ_{atom}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    atoms: Vec<DVector<f64>>,
}

impl EmpiricalDistribution {
    pub fn new(atoms: Vec<DVector<f64>>) -> Result<Self> {
        let first = atoms.first().ok_or(Error::EmptyWindow)?;
        let n = first.len();
        for a in &atoms {
            check_dim(n, a.len())?;
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[DVector<f64>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.atoms.len() as f64
    }

    pub fn to_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::uniform(self.atoms.clone()).expect("atoms validated at construction")
    }
}

/// `ξ_k(d) = f(t, x̂_t, d) + x̂_{k+1} − f(k, x̂_k, d̂_k)`.
pub fn residual_xi(window: &HistoryWindow, f: &Predictor, k: usize, d: &DVector<f64>) -> Result<DVector<f64>> {
    let e = window.entry(k)?;
    let now = f.eval(window.current_t(), window.latest_state(), d)?;
    let then = f.eval(k, &e.x_hat, &e.d_hat)?;
    Ok(now + window.next_state(k)? - then)
}

/// `Q_{t+1}`: residual atoms for a known `f`.
pub fn empirical_q(window: &HistoryWindow, f: &Predictor, d: &DVector<f64>) -> Result<EmpiricalDistribution> {
    window.require_nonempty()?;
    let now = f.eval(window.current_t(), window.latest_state(), d)?;
    let atoms = window
        .entries()
        .map(|e| {
            let then = f.eval(e.k, &e.x_hat, &e.d_hat)?;
            Ok(&now + window.next_state(e.k)? - then)
        })
        .collect::<Result<Vec<_>>>()?;
    EmpiricalDistribution::new(atoms)
}

fn check_denominator(alpha: &MixtureCoefficients) -> Result<()> {
    if alpha.sum().abs() < DENOM_FLOOR {
        Err(Error::DegenerateCoefficients { sum: alpha.sum() })
    } else {
        Ok(())
    }
}

/// `ξ_k^(i)(α, d) = f^(i)(t, x̂_t, d) + x̂_{k+1}/(αᵀ1) − f^(i)(k, x̂_k, d̂_k)`.
pub fn predictor_prediction_xi_i(
    window: &HistoryWindow,
    set: &PredictorSet,
    alpha: &MixtureCoefficients,
    i: usize,
    k: usize,
    d: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dim(set.len(), alpha.len())?;
    check_denominator(alpha)?;
    let f = set.get(i).ok_or(Error::DimensionMismatch {
        expected: set.len(),
        found: i + 1,
    })?;
    let e = window.entry(k)?;
    let now = f.eval(window.current_t(), window.latest_state(), d)?;
    let then = f.eval(k, &e.x_hat, &e.d_hat)?;
    Ok(now + window.next_state(k)? / alpha.sum() - then)
}

/// `P̂_{t+1}` atoms from cached evaluations; `current[i] = f^(i)(t, x̂_t, d)`.
pub fn p_hat_atoms(
    history: &[HistoryEval],
    current: &[DVector<f64>],
    alpha: &MixtureCoefficients,
) -> Result<Vec<DVector<f64>>> {
    check_dim(current.len(), alpha.len())?;
    check_denominator(alpha)?;
    let s = alpha.sum();
    let a = alpha.as_vector();
    Ok(history
        .iter()
        .map(|h| {
            let mut atom = DVector::zeros(h.next_state.len());
            for (i, (now, then)) in current.iter().zip(&h.values).enumerate() {
                let xi = now + &h.next_state / s - then;
                atom.axpy(a[i], &xi, 1.0);
            }
            atom
        })
        .collect())
}

/// `P̂_{t+1} = (1/T) Σ_k δ_{Σᵢ αᵢ ξ_k^(i)(α, d)}`.
pub fn empirical_p_hat(
    window: &HistoryWindow,
    set: &PredictorSet,
    alpha: &MixtureCoefficients,
    d: &DVector<f64>,
) -> Result<EmpiricalDistribution> {
    check_dim(set.len(), alpha.len())?;
    check_denominator(alpha)?;
    let evals = WindowEvaluations::compute(window, set, d)?;
    EmpiricalDistribution::new(p_hat_atoms(&evals.history, &evals.current, alpha)?)
}

/// Drift term from cached evaluations.
pub fn drift_from(history: &[HistoryEval], current: &[DVector<f64>]) -> f64 {
    let t_len = history.len();
    if t_len == 0 {
        return 0.0;
    }
    let total: f64 = history
        .iter()
        .map(|h| {
            h.values
                .iter()
                .zip(current)
                .map(|(then, now)| (then - now).norm())
                .sum::<f64>()
        })
        .sum();
    total / t_len as f64
}

/// `H = (1/T) Σᵢ Σ_k ‖f^(i)(k, x̂_k, d̂_k) − f^(i)(t, x̂_t, d)‖`.
pub fn drift_term_h(window: &HistoryWindow, set: &PredictorSet, d: &DVector<f64>) -> Result<f64> {
    let evals = WindowEvaluations::compute(window, set, d)?;
    Ok(drift_from(&evals.history, &evals.current))
}

/// Whether the radius keeps the higher-order term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMode {
    #[default]
    Full,
    /// Drops `c·r(T, n)`. For plotting only; guarantees use `Full`.
    ConcentrationOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusConfig {
    #[serde(default)]
    pub mode: RadiusMode,
    /// Replaces the built-in higher-order constant `c(n, σ)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_constant: Option<f64>,
}

/// Higher-order radius constant `c(n, σ)`. For `n ≥ 2` the multi-dimensional
/// formula is used.
pub fn higher_order_constant(n: usize, sigma: f64) -> f64 {
    let s3 = sigma.powi(3);
    if n == 1 {
        3f64.powf(3.5) * 1024.0 * s3
    } else {
        let nf = n as f64;
        (1.0 + 2f64.sqrt()) * (1.0 + 3f64.sqrt()) * 3f64.powf(3.5 - 1.0 / nf) * 128.0 * s3 * nf.powf(1.5)
    }
}

/// Higher-order rate `r(T, n)`.
pub fn higher_order_rate(t_len: usize, n: usize) -> Result<f64> {
    let t = t_len as f64;
    if n == 2 {
        if t_len < 2 {
            return Err(Error::domain("T must be at least 2 when n = 2"));
        }
        Ok((t.ln() / t).sqrt())
    } else {
        Ok(t.powf(-1.0 / n.max(2) as f64))
    }
}

/// `sqrt(2nσ² ln(1/β) / T)`.
pub fn concentration_term(t_len: usize, beta: f64, n: usize, sigma: f64) -> f64 {
    (2.0 * n as f64 * sigma * sigma * (1.0 / beta).ln() / t_len as f64).sqrt()
}

/// Perfect-information radius `ε` with the full higher-order term.
pub fn radius_epsilon(t_len: usize, beta: f64, n: usize, sigma: f64) -> Result<f64> {
    radius_epsilon_with(t_len, beta, n, sigma, &RadiusConfig::default())
}

pub fn radius_epsilon_with(t_len: usize, beta: f64, n: usize, sigma: f64, cfg: &RadiusConfig) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    if t_len == 0 {
        return Err(Error::EmptyWindow);
    }
    if n == 0 || !(sigma > 0.0) {
        return Err(Error::domain("n and sigma must be positive"));
    }
    let first = concentration_term(t_len, beta, n, sigma);
    match cfg.mode {
        RadiusMode::ConcentrationOnly => Ok(first),
        RadiusMode::Full => {
            let c = cfg.c_constant.unwrap_or_else(|| higher_order_constant(n, sigma));
            Ok(first + c * higher_order_rate(t_len, n)?)
        }
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be nonnegative, got {v}")))
    }
}

/// `ε̂ = ε + γ H`.
pub fn adaptive_radius(epsilon: f64, gamma: f64, h: f64) -> Result<f64> {
    check_nonnegative("epsilon", epsilon)?;
    check_nonnegative("gamma", gamma)?;
    check_nonnegative("H", h)?;
    Ok(epsilon + gamma * h)
}

/// `ε̂ = ε + ‖α★ − α‖∞ H`, available only when `α★` is known.
pub fn adaptive_radius_oracle(
    epsilon: f64,
    alpha_star: &MixtureCoefficients,
    alpha: &MixtureCoefficients,
    h: f64,
) -> Result<f64> {
    check_dim(alpha_star.len(), alpha.len())?;
    adaptive_radius(epsilon, alpha_star.inf_distance(alpha), h)
}

/// A probability lower bound; `vacuous` marks a violated precondition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBound {
    pub value: f64,
    pub vacuous: bool,
}

impl ConfidenceBound {
    pub const VACUOUS: ConfidenceBound = ConfidenceBound {
        value: 0.0,
        vacuous: true,
    };

    pub fn new(value: f64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            vacuous: false,
        }
    }
}

/// Exponent `(nc − γ)² T² / (2[(2T − 1)cγ + nc²])` shared by the parameter
/// and composite bounds.
pub fn concentration_exponent(t_len: usize, gamma: f64, c: f64, n: usize) -> f64 {
    let t = t_len as f64;
    let nc = n as f64 * c;
    (nc - gamma).powi(2) * t * t / (2.0 * ((2.0 * t - 1.0) * c * gamma + nc * c))
}

/// `(1 − β)(1 − exp(−exponent))`, vacuous when `γ ≤ nc`.
pub fn composite_confidence(t_len: usize, gamma: f64, c: f64, n: usize, beta: f64) -> Result<ConfidenceBound> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    if t_len == 0 {
        return Err(Error::EmptyWindow);
    }
    if !(gamma > n as f64 * c) {
        return Ok(ConfidenceBound::VACUOUS);
    }
    let e = concentration_exponent(t_len, gamma, c, n);
    Ok(ConfidenceBound::new((1.0 - beta) * -(-e).exp_m1()))
}

/// Which radius formula produced an ambiguity set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PerfectInfo,
    AdaptiveOracle,
    AdaptiveComputable,
}

/// A Wasserstein ball around an empirical distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySet {
    pub t: usize,
    pub center: EmpiricalDistribution,
    pub radius: f64,
    pub confidence: f64,
    pub provenance: Provenance,
}

/// Serialized form of an [`AmbiguitySet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityRecord {
    pub t: usize,
    pub radius: f64,
    pub confidence: f64,
    pub provenance: Provenance,
    pub atoms: Vec<Vec<f64>>,
}

impl AmbiguitySet {
    pub fn new(
        t: usize,
        center: EmpiricalDistribution,
        radius: f64,
        confidence: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        check_nonnegative("radius", radius)?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::domain(format!("confidence {confidence} outside [0, 1]")));
        }
        Ok(Self {
            t,
            center,
            radius,
            confidence,
            provenance,
        })
    }

    pub fn to_record(&self) -> AmbiguityRecord {
        AmbiguityRecord {
            t: self.t,
            radius: self.radius,
            confidence: self.confidence,
            provenance: self.provenance,
            atoms: self
                .center
                .atoms()
                .iter()
                .map(|a| a.iter().copied().collect())
                .collect(),
        }
    }

    /// Whether `other` lies in the ball, by exact transport distance.
    pub fn contains(&self, other: &DiscreteMeasure) -> Result<bool> {
        Ok(crate::transport::w1_distance(&self.center.to_measure(), other)? <= self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictors::Probe;
    use crate::transport::w1_distance;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn scalar(name: &str, f: fn(f64) -> f64) -> Predictor {
        Predictor::new(name, 1, 0, move |_, x, _| DVector::from_element(1, f(x[0])))
    }

    fn scalar_window(states: &[f64], cap: Option<usize>) -> HistoryWindow {
        let s: Vec<_> = states.iter().map(|&x| v(&[x])).collect();
        let d = vec![DVector::zeros(0); states.len() - 1];
        HistoryWindow::from_trajectory(&s, &d, cap).unwrap()
    }

    #[test]
    fn window_trims_to_cap() {
        let w = scalar_window(&[0.0, 1.0, 2.0, 3.0, 4.0], Some(3));
        assert_eq!(w.len(), 3);
        assert_eq!(w.first_k(), 1);
        assert_eq!(w.current_t(), 4);
        let ks: Vec<_> = w.entries().map(|e| e.k).collect();
        assert_eq!(ks, vec![1, 2, 3]);
        assert_eq!(w.next_state(3).unwrap()[0], 4.0);
        assert_eq!(w.next_state(1).unwrap()[0], 2.0);
        assert!(matches!(w.entry(0), Err(Error::IndexOutOfWindow { .. })));
        assert!(w.entry(4).is_err());
        assert!(HistoryWindow::new(v(&[0.0]), Some(0)).is_err());
    }

    #[test]
    fn residual_hand_example() {
        let w = scalar_window(&[1.0, 1.5], None);
        let f = scalar("x", |x| x);
        let xi = residual_xi(&w, &f, 0, &DVector::zeros(0)).unwrap();
        assert_eq!(xi[0], 2.0);
        assert!(residual_xi(&w, &f, 1, &DVector::zeros(0)).is_err());
    }

    #[test]
    fn zero_field_residuals_are_states() {
        let w = scalar_window(&[0.3, -0.2, 0.7, 0.1], None);
        let f = scalar("zero", |_| 0.0);
        let q = empirical_q(&w, &f, &DVector::zeros(0)).unwrap();
        let atoms: Vec<f64> = q.atoms().iter().map(|a| a[0]).collect();
        assert_eq!(atoms, vec![-0.2, 0.7, 0.1]);
    }

    #[test]
    fn noiseless_known_f_collapses_atoms() {
        let f = scalar("half", |x| 0.5 * x + 1.0);
        let mut states = vec![3.0];
        for _ in 0..6 {
            let last = *states.last().unwrap();
            states.push(0.5 * last + 1.0);
        }
        let w = scalar_window(&states, Some(4));
        let q = empirical_q(&w, &f, &DVector::zeros(0)).unwrap();
        let target = f.eval(w.current_t(), w.latest_state(), &DVector::zeros(0)).unwrap();
        for a in q.atoms() {
            assert!((a - &target).amax() < 1e-12);
        }
        let dirac = DiscreteMeasure::uniform(vec![target]).unwrap();
        assert!(w1_distance(&q.to_measure(), &dirac).unwrap() < 1e-12);
    }

    #[test]
    fn single_entry_window_gives_dirac() {
        let w = scalar_window(&[1.0, 2.0], None);
        let q = empirical_q(&w, &scalar("x", |x| x), &DVector::zeros(0)).unwrap();
        assert_eq!(q.len(), 1);
        let empty = scalar_window(&[1.0], None);
        assert!(matches!(
            empirical_q(&empty, &scalar("x", |x| x), &DVector::zeros(0)),
            Err(Error::EmptyWindow)
        ));
    }

    fn two_scalar_set() -> PredictorSet {
        let probes = vec![
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
        ];
        PredictorSet::new(vec![scalar("x", |x| x), scalar("one", |_| 1.0)], &probes).unwrap()
    }

    #[test]
    fn predictor_xi_hand_example() {
        let set = two_scalar_set();
        let w = scalar_window(&[1.0, 2.0], None);
        let alpha = MixtureCoefficients::from_slice(&[1.0, 0.0]).unwrap();
        let d = DVector::zeros(0);
        assert_eq!(predictor_prediction_xi_i(&w, &set, &alpha, 0, 0, &d).unwrap()[0], 3.0);
        assert_eq!(predictor_prediction_xi_i(&w, &set, &alpha, 1, 0, &d).unwrap()[0], 2.0);
        let degenerate = MixtureCoefficients::from_slice(&[0.5, -0.5]).unwrap();
        assert!(matches!(
            predictor_prediction_xi_i(&w, &set, &degenerate, 0, 0, &d),
            Err(Error::DegenerateCoefficients { .. })
        ));
        assert!(empirical_p_hat(&w, &set, &degenerate, &d).is_err());
    }

    #[test]
    fn single_predictor_matches_residual() {
        let f = scalar("sq", |x| 0.1 * x * x);
        let probes = vec![Probe {
            t: 0,
            x: vec![1.0],
            d: vec![],
        }];
        let set = PredictorSet::new(vec![f.clone()], &probes).unwrap();
        let w = scalar_window(&[0.5, 0.9, -0.4, 1.3], None);
        let d = DVector::zeros(0);
        let alpha = MixtureCoefficients::from_slice(&[1.0]).unwrap();
        let p = empirical_p_hat(&w, &set, &alpha, &d).unwrap();
        let q = empirical_q(&w, &f, &d).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn drift_hand_example_and_constant_trajectory() {
        let probes = vec![Probe {
            t: 0,
            x: vec![1.0],
            d: vec![],
        }];
        let set = PredictorSet::new(vec![scalar("x", |x| x)], &probes).unwrap();
        let w = scalar_window(&[1.0, 2.0], None);
        assert_eq!(drift_term_h(&w, &set, &DVector::zeros(0)).unwrap(), 1.0);
        let still = scalar_window(&[0.7; 6], None);
        assert_eq!(drift_term_h(&still, &set, &DVector::zeros(0)).unwrap(), 0.0);
    }

    #[test]
    fn radius_values() {
        let first = concentration_term(100, 0.05, 1, 0.5);
        assert!((first - 0.12238734153404083).abs() < 1e-15);
        assert!((higher_order_constant(1, 0.5) - 5_985.967_590_958_04).abs() < 1e-9);
        let eps = radius_epsilon(100, 0.05, 1, 0.5).unwrap();
        assert!((eps - 598.719_146_437_338).abs() < 1e-9);
        assert!((higher_order_constant(3, 0.5) - 17780.758974197115).abs() < 1e-8);
        assert!((radius_epsilon(300, 0.05, 3, 0.5).unwrap() - 2_656.214_976_153_396).abs() < 1e-8);
        assert!((higher_order_constant(2, 0.5) - 8_059.223_451_134_04).abs() < 1e-8);
        assert!((radius_epsilon(100, 0.05, 2, 0.5).unwrap() - 1729.6550542790637).abs() < 1e-8);
    }

    #[test]
    fn radius_domain_errors_and_limits() {
        assert!(radius_epsilon(10, 0.0, 1, 0.5).is_err());
        assert!(radius_epsilon(10, 1.0, 1, 0.5).is_err());
        assert!(radius_epsilon(1, 0.05, 2, 0.5).is_err());
        assert!(radius_epsilon(1, 0.05, 3, 0.5).is_ok());
        let conc = RadiusConfig {
            mode: RadiusMode::ConcentrationOnly,
            c_constant: None,
        };
        let near_one = radius_epsilon_with(10, 1.0 - 1e-12, 1, 0.5, &conc).unwrap();
        assert!(near_one < 1e-6);
        assert!(radius_epsilon(400, 0.05, 1, 0.5).unwrap() < radius_epsilon(100, 0.05, 1, 0.5).unwrap());
        let custom = RadiusConfig {
            mode: RadiusMode::Full,
            c_constant: Some(1.0),
        };
        let r = radius_epsilon_with(100, 0.05, 1, 0.5, &custom).unwrap();
        assert!((r - (0.12238734153404083 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_radius_values() {
        assert_eq!(adaptive_radius(0.3, 0.0, 5.0).unwrap(), 0.3);
        assert_eq!(adaptive_radius(0.3, 5.0, 0.0).unwrap(), 0.3);
        assert!((adaptive_radius(0.1224, 12.23, 0.05).unwrap() - 0.7339).abs() < 1e-12);
        assert!(adaptive_radius(-0.1, 1.0, 1.0).is_err());
        let a = MixtureCoefficients::from_slice(&[0.6, 0.4, 0.0]).unwrap();
        assert_eq!(adaptive_radius_oracle(0.5, &a, &a, 3.0).unwrap(), 0.5);
    }

    #[test]
    fn composite_values() {
        let (n, c) = (3, 4.0774);
        let gamma = 2.0 * n as f64 * c;
        let at = |t| composite_confidence(t, gamma, c, n, 0.05).unwrap().value;
        assert!((at(1) - 0.37379587327299825).abs() < 1e-12);
        assert!((at(2) - 0.5468457966068975).abs() < 1e-12);
        assert!((at(5) - 0.8180031875659016).abs() < 1e-12);
        assert!((at(10) - 0.929706347783743).abs() < 1e-12);
        assert!((concentration_exponent(300, gamma, c, n) - 112.5938).abs() < 1e-3);
        let v = at(300);
        assert!(v > 0.0 && v <= 0.95);
        let edge = composite_confidence(100, n as f64 * c, c, n, 0.05).unwrap();
        assert_eq!(edge, ConfidenceBound::VACUOUS);
        assert!(at(10) < at(100) && at(100) <= at(1000));
    }

    #[test]
    fn record_serializes() {
        let center = EmpiricalDistribution::new(vec![v(&[1.0, 2.0]), v(&[3.0, 4.0])]).unwrap();
        let set = AmbiguitySet::new(7, center, 0.5, 0.9, Provenance::AdaptiveComputable).unwrap();
        let json = serde_json::to_value(set.to_record()).unwrap();
        assert_eq!(json["provenance"], "adaptive_computable");
        assert_eq!(json["atoms"][1][0], 3.0);
        assert_eq!(json["t"], 7);
        assert!(AmbiguitySet::new(0, set.center.clone(), -1.0, 0.5, Provenance::PerfectInfo).is_err());
        let inside = DiscreteMeasure::uniform(vec![v(&[1.2, 2.0]), v(&[3.0, 4.0])]).unwrap();
        assert!(set.contains(&inside).unwrap());
    }
}
