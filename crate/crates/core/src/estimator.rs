//! Windowed estimation of the mixture coefficients: regularizers, the data
//! matrix `A` and vector `b`, a thresholded pseudo-inverse solve and the
//! accompanying error bound `γ`.

use std::f64::consts::E;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ambiguity::{concentration_exponent, ConfidenceBound, HistoryEval, HistoryWindow};
use crate::error::{check_dim, Error, Result};
use crate::predictors::PredictorSet;

/// Regularizer recipe: components listed in `unscaled` keep weight 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerRule {
    #[serde(default)]
    pub unscaled: Vec<usize>,
}

/// Diagonal of `P_k`: `1/(√p · maxᵢ |f^(i)_k(j)|)`, or 1 where that max is 0
/// or the component is unscaled.
pub fn regularizer_diag(values: &[DVector<f64>], rule: &RegularizerRule) -> DVector<f64> {
    let n = values.first().map_or(0, DVector::len);
    let sqrt_p = (values.len() as f64).sqrt();
    DVector::from_fn(n, |j, _| {
        if rule.unscaled.contains(&j) {
            return 1.0;
        }
        let m = values.iter().map(|v| v[j].abs()).fold(0.0, f64::max);
        if m == 0.0 {
            1.0
        } else {
            1.0 / (sqrt_p * m)
        }
    })
}

/// `P_k` as a matrix, scaling every component.
pub fn regularizer_p(values: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&regularizer_diag(values, &RegularizerRule::default()))
}

/// `maxᵢ ‖P f^(i)‖` at one step.
pub fn step_eta(values: &[DVector<f64>], reg: &DVector<f64>) -> f64 {
    values.iter().map(|v| v.component_mul(reg).norm()).fold(0.0, f64::max)
}

/// Measured `η = max_{i,k} ‖P_k f^(i)_k‖`.
pub fn measured_eta<'a>(history: impl IntoIterator<Item = &'a HistoryEval>, regs: &[DVector<f64>]) -> f64 {
    history
        .into_iter()
        .zip(regs)
        .map(|(h, r)| step_eta(&h.values, r))
        .fold(0.0, f64::max)
}

fn check_regs(history: &[HistoryEval], regs: &[DVector<f64>]) -> Result<usize> {
    if history.is_empty() {
        return Err(Error::EmptyWindow);
    }
    check_dim(history.len(), regs.len())?;
    Ok(history.len())
}

/// `A(i,j) = (1/T) Σ_k ⟨f^(j)_k, P_k f^(i)_k⟩` from cached evaluations.
pub fn build_a_from(history: &[HistoryEval], regs: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let t_len = check_regs(history, regs)?;
    let p = history[0].values.len();
    let mut a = DMatrix::zeros(p, p);
    for (h, r) in history.iter().zip(regs) {
        let scaled: Vec<DVector<f64>> = h.values.iter().map(|v| v.component_mul(r)).collect();
        for i in 0..p {
            for j in 0..p {
                a[(i, j)] += h.values[j].dot(&scaled[i]);
            }
        }
    }
    Ok(a / t_len as f64)
}

/// `b(i) = (1/T) Σ_k ⟨x̂_{k+1}, P_k f^(i)_k⟩` from cached evaluations.
pub fn build_b_from(history: &[HistoryEval], regs: &[DVector<f64>]) -> Result<DVector<f64>> {
    let t_len = check_regs(history, regs)?;
    let p = history[0].values.len();
    let mut b = DVector::zeros(p);
    for (h, r) in history.iter().zip(regs) {
        for i in 0..p {
            b[i] += h.next_state.dot(&h.values[i].component_mul(r));
        }
    }
    Ok(b / t_len as f64)
}

fn window_history(window: &HistoryWindow, set: &PredictorSet) -> Result<Vec<HistoryEval>> {
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    (window.first_k()..window.current_t())
        .map(|k| HistoryEval::compute(window, set, k))
        .collect()
}

/// Regularizer diagonals for every step of the window.
pub fn window_regularizers(
    window: &HistoryWindow,
    set: &PredictorSet,
    rule: &RegularizerRule,
) -> Result<Vec<DVector<f64>>> {
    Ok(window_history(window, set)?
        .iter()
        .map(|h| regularizer_diag(&h.values, rule))
        .collect())
}

/// Data matrix `A` over a window; `regs` holds one diagonal per step.
pub fn build_a(window: &HistoryWindow, set: &PredictorSet, regs: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    build_a_from(&window_history(window, set)?, regs)
}

/// Data vector `b` over a window.
pub fn build_b(window: &HistoryWindow, set: &PredictorSet, regs: &[DVector<f64>]) -> Result<DVector<f64>> {
    build_b_from(&window_history(window, set)?, regs)
}

/// SVD pseudo-inverse restricted to singular values above a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    /// Smallest retained singular value.
    pub sigma_min: f64,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

/// Inverts only singular values strictly above `threshold` (and above the
/// round-off floor `ε_mach · p · σ_max`).
pub fn pinv_thresholded(a: &DMatrix<f64>, threshold: f64) -> Result<PseudoInverse> {
    check_dim(a.nrows(), a.ncols())?;
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("data matrix has non-finite entries"));
    }
    let p = a.nrows();
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let s = &svd.singular_values;
    let largest = s.iter().copied().fold(0.0, f64::max);
    let floor = f64::EPSILON * p as f64 * largest;
    let mut matrix = DMatrix::zeros(p, p);
    let mut sigma_min = f64::INFINITY;
    let mut rank = 0;
    for (k, &sk) in s.iter().enumerate() {
        if sk > threshold && sk > floor {
            matrix += v_t.row(k).transpose() * u.column(k).transpose() / sk;
            sigma_min = sigma_min.min(sk);
            rank += 1;
        }
    }
    if rank == 0 {
        return Err(Error::Unidentifiable { largest, threshold });
    }
    let mut singular_values: Vec<f64> = s.iter().copied().collect();
    singular_values.sort_by(|x, y| y.total_cmp(x));
    Ok(PseudoInverse {
        matrix,
        sigma_min,
        singular_values,
        rank,
    })
}

/// `α = A† b` with the thresholded pseudo-inverse.
pub fn estimate_alpha(a: &DMatrix<f64>, b: &DVector<f64>, threshold: f64) -> Result<(DVector<f64>, PseudoInverse)> {
    check_dim(a.nrows(), b.len())?;
    let pinv = pinv_thresholded(a, threshold)?;
    Ok((&pinv.matrix * b, pinv))
}

/// `c = σ e η √(np) / σ_min(A)`.
pub fn bound_constant_c(sigma: f64, eta: f64, n: usize, p: usize, sigma_min: f64) -> Result<f64> {
    if !(sigma_min > 0.0) {
        return Err(Error::domain(format!("sigma_min(A) must be positive, got {sigma_min}")));
    }
    Ok(sigma * E * eta * ((n * p) as f64).sqrt() / sigma_min)
}

/// `γ = n c + θ`.
pub fn gamma_bound(sigma: f64, eta: f64, n: usize, p: usize, sigma_min: f64, theta: f64) -> Result<f64> {
    Ok(n as f64 * bound_constant_c(sigma, eta, n, p, sigma_min)? + theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMode {
    Exponential,
    Naive,
}

/// Lower bound on `Prob(‖α − α★‖∞ ≤ γ)`.
pub fn alpha_confidence(gamma: f64, c: f64, n: usize, t_len: usize, mode: ConfidenceMode) -> ConfidenceBound {
    let nc = n as f64 * c;
    match mode {
        ConfidenceMode::Exponential => {
            if !(gamma > nc) || t_len == 0 {
                return ConfidenceBound::VACUOUS;
            }
            ConfidenceBound::new(-(-concentration_exponent(t_len, gamma, c, n)).exp_m1())
        }
        ConfidenceMode::Naive => {
            if !(gamma > nc / E) {
                return ConfidenceBound::VACUOUS;
            }
            ConfidenceBound::new(1.0 - nc / (E * gamma))
        }
    }
}

/// Estimator tuning. `sv_threshold` is the cutoff below which singular values
/// of `A` are dropped; `sigma` is the noise parameter used in `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub sigma: f64,
    pub theta: f64,
    pub sv_threshold: f64,
    #[serde(default)]
    pub regularizer: RegularizerRule,
}

impl EstimatorConfig {
    /// Threshold equal to `σ`.
    pub fn with_sigma(sigma: f64, theta: f64) -> Self {
        Self {
            sigma,
            theta,
            sv_threshold: sigma,
            regularizer: RegularizerRule::default(),
        }
    }
}

/// Result of one estimation pass over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub alpha: DVector<f64>,
    pub eta: f64,
    pub c: f64,
    pub gamma: f64,
    pub sigma_min_a: f64,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub theta: f64,
}

/// Builds `A`, `b`, solves for `α` and evaluates `γ` from cached evaluations.
pub fn estimate(history: &[HistoryEval], regs: &[DVector<f64>], cfg: &EstimatorConfig) -> Result<EstimatorState> {
    let a = build_a_from(history, regs)?;
    let b = build_b_from(history, regs)?;
    let (alpha, pinv) = estimate_alpha(&a, &b, cfg.sv_threshold)?;
    let n = history[0].next_state.len();
    let p = a.nrows();
    let eta = measured_eta(history, regs);
    let c = bound_constant_c(cfg.sigma, eta, n, p, pinv.sigma_min)?;
    Ok(EstimatorState {
        a,
        b,
        alpha,
        eta,
        c,
        gamma: n as f64 * c + cfg.theta,
        sigma_min_a: pinv.sigma_min,
        singular_values: pinv.singular_values,
        rank: pinv.rank,
        theta: cfg.theta,
    })
}
