//! Random mixture windows shared by the integration targets.
#![allow(dead_code)]

use ambilearn_core::ambiguity::HistoryWindow;
use ambilearn_core::noise::NoiseModel;
use ambilearn_core::predictors::{evaluate_mixture, MixtureCoefficients, Predictor, PredictorSet, Probe};
use ambilearn_core::SimRng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn random_vec(rng: &mut SimRng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

/// `p` smooth nonlinear fields on `R^n` with a 2-dimensional input.
pub fn random_predictor_set(rng: &mut SimRng, n: usize, p: usize) -> PredictorSet {
    let preds = (0..p)
        .map(|i| {
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let b = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
            let c = random_vec(rng, n, 1.0);
            Predictor::new(format!("field{i}"), n, 2, move |t, x, d| {
                let mut out = &a * x.map(f64::sin) + &b * d + &c;
                out[0] += 0.01 * t as f64;
                out
            })
        })
        .collect();
    let probes: Vec<Probe> = (0..3 * p)
        .map(|k| Probe {
            t: k,
            x: random_vec(rng, n, 2.0).as_slice().to_vec(),
            d: random_vec(rng, 2, 1.0).as_slice().to_vec(),
        })
        .collect();
    PredictorSet::new(preds, &probes).expect("random fields are independent")
}

/// Coefficients with `αᵀ1 = 1`.
pub fn random_affine_alpha(rng: &mut SimRng, p: usize) -> MixtureCoefficients {
    let mut v = random_vec(rng, p, 2.0);
    let shift = (1.0 - v.sum()) / p as f64;
    v.add_scalar_mut(shift);
    MixtureCoefficients::new(v).unwrap()
}

/// The mixture `Σ αᵢ f^(i)` as a standalone predictor.
pub fn mixture_predictor(set: &PredictorSet, alpha: &MixtureCoefficients) -> Predictor {
    let set = set.clone();
    let alpha = alpha.clone();
    let n = set.dim_state();
    Predictor::new("mixture", n, set.dim_input(), move |t, x, d| {
        evaluate_mixture(&set, &alpha, t, x, d).expect("dimensions fixed at construction")
    })
}

/// A window of `len` noisy transitions of the mixture `α★`, plus the
/// upcoming input.
pub fn mixture_window(
    rng: &mut SimRng,
    set: &PredictorSet,
    alpha_star: &MixtureCoefficients,
    noise: &NoiseModel,
    len: usize,
) -> (HistoryWindow, DVector<f64>) {
    let n = set.dim_state();
    let mut x = random_vec(rng, n, 1.0);
    let mut w = HistoryWindow::new(x.clone(), None).unwrap();
    for t in 0..len {
        let d = random_vec(rng, 2, 1.0);
        x = evaluate_mixture(set, alpha_star, t, &x, &d).unwrap() + noise.sample(rng);
        w.push(d, x.clone()).unwrap();
    }
    (w, random_vec(rng, 2, 1.0))
}
