//! The online learning loop: append data, re-estimate `α`, and publish the
//! adaptive ambiguity set for the next state.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{
    adaptive_radius, composite_confidence, drift_from, p_hat_atoms, radius_epsilon_with, AmbiguitySet, ConfidenceBound,
    EmpiricalDistribution, HistoryEval, HistoryWindow, Provenance, RadiusConfig, DENOM_FLOOR,
};
use crate::error::{check_dim, Error, Result};
use crate::estimator::{alpha_confidence, estimate, regularizer_diag, ConfidenceMode, EstimatorConfig, EstimatorState};
use crate::predictors::{MixtureCoefficients, PredictorSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub beta: f64,
    /// Window cap `T₀`; `None` keeps everything.
    pub t0: Option<usize>,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub radius: RadiusConfig,
}

/// Why a step reused the previous coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnEvent {
    Unidentifiable,
    DegenerateCoefficients,
}

impl LearnEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnEvent::Unidentifiable => "unidentifiable",
            LearnEvent::DegenerateCoefficients => "degenerate_coefficients",
        }
    }
}

/// Everything published at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnStep {
    pub t: usize,
    pub window_len: usize,
    pub alpha: MixtureCoefficients,
    pub gamma: f64,
    pub c: f64,
    pub sigma_min_a: f64,
    pub eta: f64,
    pub rank: usize,
    pub h: f64,
    pub eps: f64,
    pub eps_hat: f64,
    pub composite: ConfidenceBound,
    pub naive: ConfidenceBound,
    pub event: Option<LearnEvent>,
}

/// Owns the window, cached predictor evaluations and the current estimate.
#[derive(Debug, Clone)]
pub struct PLearner {
    set: PredictorSet,
    cfg: LearnerConfig,
    window: HistoryWindow,
    history: VecDeque<HistoryEval>,
    regs: VecDeque<DVector<f64>>,
    alpha: MixtureCoefficients,
    state: Option<EstimatorState>,
    current: Vec<DVector<f64>>,
    last: Option<LearnStep>,
}

impl PLearner {
    /// Starts at `t = 0` with uniform coefficients `1/p`.
    pub fn new(set: PredictorSet, x0: DVector<f64>, cfg: LearnerConfig) -> Result<Self> {
        check_dim(set.dim_state(), x0.len())?;
        if !(cfg.beta > 0.0 && cfg.beta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must lie in (0, 1), got {}",
                cfg.beta
            )));
        }
        let window = HistoryWindow::new(x0, cfg.t0)?;
        let alpha = MixtureCoefficients::uniform(set.len());
        Ok(Self {
            set,
            cfg,
            window,
            history: VecDeque::new(),
            regs: VecDeque::new(),
            alpha,
            state: None,
            current: Vec::new(),
            last: None,
        })
    }

    pub fn window(&self) -> &HistoryWindow {
        &self.window
    }

    pub fn set(&self) -> &PredictorSet {
        &self.set
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn alpha(&self) -> &MixtureCoefficients {
        &self.alpha
    }

    pub fn estimator_state(&self) -> Option<&EstimatorState> {
        self.state.as_ref()
    }

    pub fn last_step(&self) -> Option<&LearnStep> {
        self.last.as_ref()
    }

    /// Appends the observed transition `x̂_t --d--> x_next`.
    pub fn observe(&mut self, d_used: DVector<f64>, x_next: DVector<f64>) -> Result<()> {
        let k = self.window.current_t();
        let values = self.set.evaluate_all(k, self.window.latest_state(), &d_used)?;
        self.window.push(d_used, x_next.clone())?;
        self.regs
            .push_back(regularizer_diag(&values, &self.cfg.estimator.regularizer));
        self.history.push_back(HistoryEval {
            k,
            values,
            next_state: x_next,
        });
        while self.history.len() > self.window.len() {
            self.history.pop_front();
            self.regs.pop_front();
        }
        self.current.clear();
        Ok(())
    }

    /// Re-estimates `α` over the window and computes the radius for the
    /// upcoming input `d`.
    pub fn update(&mut self, d: &DVector<f64>) -> Result<LearnStep> {
        let t = self.window.current_t();
        self.step_inner(d).map_err(|e| e.at_step(t))
    }

    fn step_inner(&mut self, d: &DVector<f64>) -> Result<LearnStep> {
        if self.window.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let t = self.window.current_t();
        let t_len = self.window.len();
        let n = self.set.dim_state();
        self.window.set_upcoming_input(d.clone());
        self.current = self.set.evaluate_all(t, self.window.latest_state(), d)?;
        let history = self.history.make_contiguous();
        let regs = self.regs.make_contiguous();

        let mut event = None;
        match estimate(history, regs, &self.cfg.estimator) {
            Ok(state) => {
                let candidate = MixtureCoefficients::new(state.alpha.clone())?;
                if candidate.sum().abs() < DENOM_FLOOR {
                    event = Some(LearnEvent::DegenerateCoefficients);
                } else {
                    self.alpha = candidate;
                }
                self.state = Some(state);
            }
            Err(Error::Unidentifiable { .. }) => event = Some(LearnEvent::Unidentifiable),
            Err(e) => return Err(e),
        }

        let (gamma, c, sigma_min_a, eta, rank) = match &self.state {
            Some(s) => (s.gamma, s.c, s.sigma_min_a, s.eta, s.rank),
            None => (f64::INFINITY, f64::INFINITY, 0.0, 0.0, 0),
        };
        let h = drift_from(history, &self.current);
        let sigma = self.cfg.estimator.sigma;
        let eps = match radius_epsilon_with(t_len, self.cfg.beta, n, sigma, &self.cfg.radius) {
            Ok(e) => e,
            // the n = 2 rate needs T ≥ 2; a one-sample window gets no finite radius
            Err(Error::Domain(_)) if n == 2 && t_len == 1 => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let eps_hat = if h == 0.0 { eps } else { adaptive_radius(eps, gamma, h)? };
        let composite = if c.is_finite() {
            composite_confidence(t_len, gamma, c, n, self.cfg.beta)?
        } else {
            ConfidenceBound::VACUOUS
        };
        let naive = if c.is_finite() {
            alpha_confidence(gamma, c, n, t_len, ConfidenceMode::Naive)
        } else {
            ConfidenceBound::VACUOUS
        };
        let step = LearnStep {
            t,
            window_len: t_len,
            alpha: self.alpha.clone(),
            gamma,
            c,
            sigma_min_a,
            eta,
            rank,
            h,
            eps,
            eps_hat,
            composite,
            naive,
            event,
        };
        self.last = Some(step.clone());
        Ok(step)
    }

    /// `P̂_{t+1}` for the current estimate; requires a prior [`update`](Self::update).
    pub fn p_hat(&self) -> Result<EmpiricalDistribution> {
        if self.current.is_empty() {
            return Err(Error::InvalidConfig("p_hat requested before update".into()));
        }
        let history: Vec<_> = self.history.iter().cloned().collect();
        EmpiricalDistribution::new(p_hat_atoms(&history, &self.current, &self.alpha)?)
    }

    /// The published set `(P̂_{t+1}, ε̂)` with the composite confidence.
    pub fn ambiguity_set(&self) -> Result<AmbiguitySet> {
        let step = self
            .last
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("ambiguity set requested before update".into()))?;
        AmbiguitySet::new(
            step.t,
            self.p_hat()?,
            step.eps_hat,
            step.composite.value,
            Provenance::AdaptiveComputable,
        )
    }

    /// `ε + ‖α★ − α‖∞ H` for the last step.
    pub fn oracle_radius(&self, alpha_star: &MixtureCoefficients) -> Result<f64> {
        let step = self
            .last
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("oracle radius requested before update".into()))?;
        crate::ambiguity::adaptive_radius_oracle(step.eps, alpha_star, &step.alpha, step.h)
    }
}
