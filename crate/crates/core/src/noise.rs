//! SubGaussian disturbance models.
//!
//! A [`NoiseModel`] carries a declared subGaussian parameter `sigma`; the
//! constructors validate that the distribution really is `sigma`-subGaussian
//! (covariance spectrum for Gaussians, support radius for compact laws) and
//! zero-mean. Sampling never fails once a model has been built.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Kind {
    Gaussian {
        covariance: DMatrix<f64>,
        factor: DMatrix<f64>,
    },
    UniformBall {
        radius: f64,
    },
    Discrete {
        atoms: Vec<DVector<f64>>,
        weights: Vec<f64>,
        cumulative: Vec<f64>,
    },
    Mixture {
        components: Vec<(f64, NoiseModel)>,
        cumulative: Vec<f64>,
    },
}

/// A zero-mean, `sigma`-subGaussian disturbance law on `R^n`.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    kind: Kind,
    sigma: f64,
    dim: usize,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!(
            "sigma must be finite and > 0, got {sigma}"
        )))
    }
}

fn cumulative_weights(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::InvalidModel("weight vector is empty".into()));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidModel(format!("invalid weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidModel(format!("weights must sum to 1, got {total}")));
    }
    let mut acc = 0.0;
    Ok(weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect())
}

fn pick_index<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    // A single outcome consumes no randomness, so wrapping a model in a
    // one-component mixture reproduces its draws exactly.
    if cumulative.len() == 1 {
        return 0;
    }
    let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

impl NoiseModel {
    /// Zero-mean Gaussian with the given covariance.
    pub fn gaussian(covariance: DMatrix<f64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let n = covariance.nrows();
        if n == 0 || covariance.ncols() != n {
            return Err(Error::InvalidModel(format!(
                "covariance must be square and non-empty, got {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("covariance has non-finite entries".into()));
        }
        let scale = covariance.amax().max(1.0);
        if (&covariance - covariance.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidModel("covariance is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(covariance.clone());
        let min = eig.eigenvalues.min();
        let max = eig.eigenvalues.max();
        if min < -1e-12 * scale {
            return Err(Error::InvalidModel(format!(
                "covariance is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        if max > sigma * sigma * (1.0 + 1e-12) {
            return Err(Error::InvalidModel(format!(
                "largest covariance eigenvalue {max} exceeds sigma^2 = {}",
                sigma * sigma
            )));
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self {
            kind: Kind::Gaussian { covariance, factor },
            sigma,
            dim: n,
        })
    }

    /// Uniform distribution on the closed Euclidean ball of `radius` in `R^dim`.
    pub fn uniform_ball(dim: usize, radius: f64, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidModel(format!("invalid ball radius {radius}")));
        }
        if radius > sigma * (1.0 + 1e-12) {
            return Err(Error::InvalidModel(format!(
                "ball radius {radius} exceeds sigma = {sigma}"
            )));
        }
        Ok(Self {
            kind: Kind::UniformBall { radius },
            sigma,
            dim,
        })
    }

    /// Finitely supported law. Atoms must lie in the ball of radius `sigma`
    /// and average to zero under `weights`.
    pub fn discrete(atoms: Vec<DVector<f64>>, weights: Vec<f64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidModel(format!(
                "need one weight per atom ({} atoms, {} weights)",
                atoms.len(),
                weights.len()
            )));
        }
        let dim = atoms[0].len();
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        if let Some(a) = atoms.iter().find(|a| a.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a.len(),
            });
        }
        let cumulative = cumulative_weights(&weights)?;
        let mut mean = DVector::zeros(dim);
        for (a, w) in atoms.iter().zip(&weights) {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel("atom has non-finite entries".into()));
            }
            if a.norm() > sigma * (1.0 + 1e-12) {
                return Err(Error::InvalidModel(format!(
                    "atom with norm {} lies outside the ball of radius sigma = {sigma}",
                    a.norm()
                )));
            }
            mean.axpy(*w, a, 1.0);
        }
        if mean.norm() > MEAN_TOL {
            return Err(Error::InvalidModel(format!(
                "discrete law is not zero-mean (|mean| = {:e})",
                mean.norm()
            )));
        }
        Ok(Self {
            kind: Kind::Discrete {
                atoms,
                weights,
                cumulative,
            },
            sigma,
            dim,
        })
    }

    /// The Dirac measure at the origin; the noiseless disturbance.
    pub fn dirac_zero(dim: usize, sigma: f64) -> Result<Self> {
        Self::discrete(vec![DVector::zeros(dim)], vec![1.0], sigma)
    }

    /// Finite mixture. Each component must be at most `sigma`-subGaussian.
    pub fn mixture(components: Vec<(f64, NoiseModel)>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if components.is_empty() {
            return Err(Error::InvalidModel("mixture has no components".into()));
        }
        let dim = components[0].1.dim;
        for (_, c) in &components {
            if c.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim,
                });
            }
            if c.sigma > sigma * (1.0 + 1e-12) {
                return Err(Error::InvalidModel(format!(
                    "component sigma {} exceeds mixture sigma {sigma}",
                    c.sigma
                )));
            }
        }
        let weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
        let cumulative = cumulative_weights(&weights)?;
        Ok(Self {
            kind: Kind::Mixture { components, cumulative },
            sigma,
            dim,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Draws one disturbance vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match &self.kind {
            Kind::Gaussian { factor, .. } => {
                let z = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                factor * z
            }
            Kind::UniformBall { radius } => {
                let direction = loop {
                    let g = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let norm = g.norm();
                    if norm > 0.0 {
                        break g / norm;
                    }
                };
                let u: f64 = rng.random();
                direction * (radius * u.powf(1.0 / self.dim as f64))
            }
            Kind::Discrete { atoms, cumulative, .. } => atoms[pick_index(cumulative, rng)].clone(),
            Kind::Mixture { components, cumulative } => components[pick_index(cumulative, rng)].1.sample(rng),
        }
    }

    /// Draws `count` independent disturbances.
    pub fn sample_many<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<DVector<f64>> {
        (0..count).map(|_| self.sample(rng)).collect()
    }

    /// Upper bound on `Prob(‖w‖∞ ≥ eta)`: `min(1, 2n·exp(−eta²/(2σ²)))`.
    pub fn tail_bound(&self, eta: f64) -> Result<f64> {
        if !(eta >= 0.0) {
            return Err(Error::domain(format!("tail threshold must be >= 0, got {eta}")));
        }
        let n = self.dim as f64;
        let raw = 2.0 * n * (-(eta * eta) / (2.0 * self.sigma * self.sigma)).exp();
        Ok(raw.min(1.0))
    }

    /// Upper bound on `E[‖w‖∞^l]`: `n·σ^l·l^(l/2+1)`.
    pub fn moment_bound(&self, l: u32) -> Result<f64> {
        if l == 0 {
            return Err(Error::domain("moment order must be >= 1"));
        }
        let lf = l as f64;
        Ok(self.dim as f64 * self.sigma.powi(l as i32) * lf.powf(lf / 2.0 + 1.0))
    }

    /// The serializable description this model was (or could have been) built from.
    pub fn to_spec(&self) -> NoiseSpec {
        let sigma = self.sigma;
        match &self.kind {
            Kind::Gaussian { covariance, .. } => NoiseSpec::Gaussian {
                covariance: covariance.row_iter().map(|r| r.iter().copied().collect()).collect(),
                sigma,
            },
            Kind::UniformBall { radius } => NoiseSpec::UniformBall {
                dim: self.dim,
                radius: *radius,
                sigma,
            },
            Kind::Discrete { atoms, weights, .. } => NoiseSpec::Discrete {
                atoms: atoms.iter().map(|a| a.iter().copied().collect()).collect(),
                weights: weights.clone(),
                sigma,
            },
            Kind::Mixture { components, .. } => NoiseSpec::Mixture {
                components: components
                    .iter()
                    .map(|(w, m)| MixtureComponentSpec {
                        weight: *w,
                        model: m.to_spec(),
                    })
                    .collect(),
                sigma,
            },
        }
    }
}

/// JSON description of a [`NoiseModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Gaussian {
        covariance: Vec<Vec<f64>>,
        sigma: f64,
    },
    UniformBall {
        dim: usize,
        radius: f64,
        sigma: f64,
    },
    Discrete {
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
        sigma: f64,
    },
    Mixture {
        components: Vec<MixtureComponentSpec>,
        sigma: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponentSpec {
    pub weight: f64,
    pub model: NoiseSpec,
}

impl NoiseSpec {
    /// Validates and builds the model.
    pub fn build(&self) -> Result<NoiseModel> {
        match self {
            NoiseSpec::Gaussian { covariance, sigma } => {
                let n = covariance.len();
                if covariance.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidModel("covariance rows must have equal length".into()));
                }
                let m = DMatrix::from_fn(n, n, |i, j| covariance[i][j]);
                NoiseModel::gaussian(m, *sigma)
            }
            NoiseSpec::UniformBall { dim, radius, sigma } => NoiseModel::uniform_ball(*dim, *radius, *sigma),
            NoiseSpec::Discrete { atoms, weights, sigma } => NoiseModel::discrete(
                atoms.iter().map(|a| DVector::from_column_slice(a)).collect(),
                weights.clone(),
                *sigma,
            ),
            NoiseSpec::Mixture { components, sigma } => {
                let built = components
                    .iter()
                    .map(|c| Ok((c.weight, c.model.build()?)))
                    .collect::<Result<Vec<_>>>()?;
                NoiseModel::mixture(built, *sigma)
            }
        }
    }

    /// Zero-mean isotropic Gaussian / uniform-ball 50/50 mixture.
    pub fn gaussian_ball_mixture(dim: usize, gaussian_std: f64, ball_radius: f64, sigma: f64) -> Self {
        let covariance = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { gaussian_std * gaussian_std } else { 0.0 })
                    .collect()
            })
            .collect();
        NoiseSpec::Mixture {
            components: vec![
                MixtureComponentSpec {
                    weight: 0.5,
                    model: NoiseSpec::Gaussian {
                        covariance,
                        sigma: gaussian_std,
                    },
                },
                MixtureComponentSpec {
                    weight: 0.5,
                    model: NoiseSpec::UniformBall {
                        dim,
                        radius: ball_radius,
                        sigma: ball_radius,
                    },
                },
            ],
            sigma,
        }
    }

    pub fn dirac_zero(dim: usize, sigma: f64) -> Self {
        NoiseSpec::Discrete {
            atoms: vec![vec![0.0; dim]],
            weights: vec![1.0],
            sigma,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            NoiseSpec::Gaussian { sigma, .. }
            | NoiseSpec::UniformBall { sigma, .. }
            | NoiseSpec::Discrete { sigma, .. }
            | NoiseSpec::Mixture { sigma, .. } => *sigma,
        }
    }
}

/// `‖v‖∞`.
pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}
