//! Synthetic tomographic data and maximum-entropy reconstruction.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs::{fit_gibbs, gibbs_state, FitReport};
use crate::likelihood::SampleMeans;
use crate::measurement::MeasurementModel;
use crate::observables::ObservableSet;
use crate::random::{seeded, stream};
use crate::scalar::Scalar;
use crate::state::DensityMatrix;

/// Largest `k` in the shrinkage schedule `γ = 0.99^k`.
pub const MAX_SHRINK_STEPS: i32 = 500;
const SHRINK_BASE: f64 = 0.99;

/// Measures every observable of `measurement_set` on its own `n` copies of
/// `true_state` and returns the sample means.
pub fn simulate_sample<S: Scalar>(
    true_state: &DensityMatrix<S>,
    measurement_set: &ObservableSet<S>,
    n: u64,
    seed: u64,
) -> Result<SampleMeans<S>> {
    simulate_with(true_state, measurement_set, n, &mut seeded(seed))
}

fn simulate_with<S: Scalar>(
    true_state: &DensityMatrix<S>,
    measurement_set: &ObservableSet<S>,
    n: u64,
    rng: &mut impl Rng,
) -> Result<SampleMeans<S>> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    if measurement_set.dim() != true_state.dim() {
        return Err(Error::DimensionMismatch {
            expected: true_state.dim(),
            found: measurement_set.dim(),
        });
    }
    let model = MeasurementModel::new(measurement_set);
    let values = model.sample_means(true_state, n, rng);
    SampleMeans::new(measurement_set.clone(), values, n)
}

/// A reconstructed image together with how much the means had to be pulled
/// toward the reference before a full-rank image existed.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction<S: Scalar> {
    pub image: DensityMatrix<S>,
    /// `γ` in `f ← γ f + (1 − γ) ⟨F⟩_σ`; 1 when no shrinkage was needed.
    pub shrink_factor: S,
    /// `max_b |⟨F_b⟩_image − f_b|` against the (possibly shrunk) means.
    pub residual: S,
    pub kappa: Vec<S>,
}

/// Maximum-entropy image relative to `sigma` reproducing the means. Means on
/// or beyond the boundary of the attainable set are shrunk toward σ's
/// expectation values with `γ = 0.99^k` for the smallest `k ≥ 1` that fits.
pub fn reconstruct_image<S: Scalar>(means: &SampleMeans<S>, sigma: &DensityMatrix<S>) -> Result<Reconstruction<S>> {
    let set = means.observables();
    let finish = |report: FitReport<S>, gamma: S| Reconstruction {
        image: report.model.state,
        shrink_factor: gamma,
        residual: report.residual,
        kappa: report.model.kappa,
    };
    let first_error = match fit_gibbs(set, means.values(), sigma) {
        Ok(report) => return Ok(finish(report, S::one())),
        Err(e) if e.is_solver_failure() => e,
        Err(e) => return Err(e),
    };
    let anchor = set
        .observables()
        .iter()
        .map(|o| sigma.expectation(o))
        .collect::<Result<Vec<S>>>()?;
    let mut last = first_error;
    for k in 1..=MAX_SHRINK_STEPS {
        let gamma = S::lit(SHRINK_BASE.powi(k));
        let shrunk: Vec<S> = means
            .values()
            .iter()
            .zip(&anchor)
            .map(|(&f, &a)| gamma * f + (S::one() - gamma) * a)
            .collect();
        match fit_gibbs(set, &shrunk, sigma) {
            Ok(report) => return Ok(finish(report, gamma)),
            Err(e) if e.is_solver_failure() => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(match last {
        Error::NonConvergence { .. } => last,
        Error::InfeasibleTargets { .. } => Error::NonConvergence {
            iterations: MAX_SHRINK_STEPS as usize,
            residual: f64::INFINITY,
        },
        other => other,
    })
}

/// One measured sample: its data, its image, and (for synthetic data) the
/// state it was drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord<S: Scalar> {
    pub id: String,
    pub size: u64,
    pub means: SampleMeans<S>,
    pub image: DensityMatrix<S>,
    pub true_state: Option<DensityMatrix<S>>,
    pub shrink_factor: S,
    pub residual: S,
}

impl<S: Scalar> SampleRecord<S> {
    /// Reconstructs the maximum-entropy image of measured data.
    pub fn from_means(id: impl Into<String>, means: SampleMeans<S>, true_state: Option<DensityMatrix<S>>) -> Result<Self> {
        let reference = DensityMatrix::maximally_mixed(means.observables().dim())?;
        let rec = reconstruct_image(&means, &reference)?;
        Ok(Self {
            id: id.into(),
            size: means.sample_size(),
            means,
            image: rec.image,
            true_state,
            shrink_factor: rec.shrink_factor,
            residual: rec.residual,
        })
    }

    /// Same record with every size replaced by `size`; images are kept.
    pub fn with_size(&self, size: u64) -> Result<Self> {
        Ok(Self {
            size,
            means: self.means.with_sample_size(size)?,
            ..self.clone()
        })
    }
}

/// A family of true states `gibbs_state(κ_i, family, σ)` and how each is
/// sampled.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec<S: Scalar> {
    pub sigma: DensityMatrix<S>,
    pub family: ObservableSet<S>,
    pub parameter_draws: Vec<Vec<S>>,
    pub sizes: Vec<u64>,
    pub measurement_set: ObservableSet<S>,
    pub seed: u64,
}

impl<S: Scalar> EnsembleSpec<S> {
    pub fn validate(&self) -> Result<()> {
        if self.parameter_draws.is_empty() {
            return Err(Error::InvalidInput("ensemble needs at least one sample".into()));
        }
        if self.sizes.len() != self.parameter_draws.len() {
            return Err(Error::LengthMismatch {
                expected: self.parameter_draws.len(),
                found: self.sizes.len(),
            });
        }
        for kappa in &self.parameter_draws {
            if kappa.len() != self.family.len() {
                return Err(Error::LengthMismatch {
                    expected: self.family.len(),
                    found: kappa.len(),
                });
            }
        }
        if self.sizes.contains(&0) {
            return Err(Error::InvalidInput("sample sizes must be at least 1".into()));
        }
        for dim in [self.family.dim(), self.measurement_set.dim()] {
            if dim != self.sigma.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.sigma.dim(),
                    found: dim,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.parameter_draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameter_draws.is_empty()
    }
}

/// Identifier of the `i`-th generated sample.
pub fn sample_id(i: usize) -> String {
    format!("sample-{i:04}")
}

/// Draws, measures and reconstructs every sample of the ensemble. Sample `i`
/// uses its own random stream, so the output does not depend on scheduling.
pub fn generate_ensemble<S: Scalar>(spec: &EnsembleSpec<S>) -> Result<Vec<SampleRecord<S>>> {
    spec.validate()?;
    (0..spec.len())
        .into_par_iter()
        .map(|i| {
            let truth = gibbs_state(&spec.parameter_draws[i], &spec.family, &spec.sigma)?;
            let mut rng = stream(spec.seed, i as u64);
            let means = simulate_with(&truth, &spec.measurement_set, spec.sizes[i], &mut rng)?;
            SampleRecord::from_means(sample_id(i), means, Some(truth))
        })
        .collect()
}
