//! Grid posterior over qubit states given a sample mean of `X`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::likelihood::{measured_log_likelihood, sanov_log_likelihood, LogLikelihood, SampleMeans};
use crate::measurement::MeasurementModel;
use crate::observables::ObservableSet;
use crate::scalar::compensated_sum;
use crate::state::DensityMatrix;

pub const DEFAULT_PRIOR_WIDTH: f64 = 0.5;
pub const DEFAULT_RESOLUTION: usize = 101;
pub const MIN_RESOLUTION: usize = 11;

/// Which states the prior puts weight on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SupportMode {
    FullBall,
    XAxis,
    YAxis,
}

impl SupportMode {
    pub fn name(self) -> &'static str {
        match self {
            SupportMode::FullBall => "full-ball",
            SupportMode::XAxis => "x-axis",
            SupportMode::YAxis => "y-axis",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full-ball" => Ok(SupportMode::FullBall),
            "x-axis" => Ok(SupportMode::XAxis),
            "y-axis" => Ok(SupportMode::YAxis),
            other => Err(Error::InvalidInput(format!(
                "unknown support mode `{other}` (expected full-ball, x-axis or y-axis)"
            ))),
        }
    }
}

/// How a grid state scores the observed mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PosteriorLikelihood {
    /// Large-deviation rate of the ±1 outcome counts of measuring `X`.
    #[default]
    Measured,
    /// `−N S(μ^ρ_f‖ρ)` with the quantum relative entropy.
    Sanov,
}

/// Normalized weights on the grid points of the declared support. Points
/// outside the Bloch ball are not part of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPosterior {
    mode: SupportMode,
    resolution: usize,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

/// `k`-th of `resolution` equally spaced points on [−1, 1], exactly
/// antisymmetric about the midpoint.
fn node(k: usize, resolution: usize) -> f64 {
    let m = (resolution - 1) as f64;
    (2.0 * k as f64 - m) / m
}

fn grid_points(mode: SupportMode, resolution: usize) -> Vec<[f64; 3]> {
    let axis: Vec<f64> = (0..resolution).map(|k| node(k, resolution)).collect();
    match mode {
        SupportMode::XAxis => axis.iter().map(|&t| [t, 0.0, 0.0]).collect(),
        SupportMode::YAxis => axis.iter().map(|&t| [0.0, t, 0.0]).collect(),
        SupportMode::FullBall => {
            let mut pts = Vec::new();
            for &x in &axis {
                for &y in &axis {
                    for &z in &axis {
                        if x * x + y * y + z * z <= 1.0 {
                            pts.push([x, y, z]);
                        }
                    }
                }
            }
            pts
        }
    }
}

fn normalize(log_weights: &[f64]) -> Result<Vec<f64>> {
    let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::InvalidInput("the data rule out every grid state".into()));
    }
    let raw: Vec<f64> = log_weights.iter().map(|&l| (l - top).exp()).collect();
    let total = compensated_sum(raw.iter().copied());
    Ok(raw.into_iter().map(|w| w / total).collect())
}

impl GridPosterior {
    /// Truncated Gaussian of the given width about the maximally mixed state.
    pub fn prior(mode: SupportMode, prior_width: f64, resolution: usize) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidInput(format!(
                "resolution {resolution} below the minimum {MIN_RESOLUTION}"
            )));
        }
        if !(prior_width > 0.0 && prior_width.is_finite()) {
            return Err(Error::InvalidInput(format!("prior width {prior_width} must be positive")));
        }
        let points = grid_points(mode, resolution);
        let scale = 2.0 * prior_width * prior_width;
        let log_prior: Vec<f64> = points
            .iter()
            .map(|p| -(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / scale)
            .collect();
        Ok(Self {
            mode,
            resolution,
            weights: normalize(&log_prior)?,
            points,
        })
    }

    /// Bayes update with the mean `xbar` of `n` measurements of `X`.
    pub fn update(&self, xbar: f64, n: u64, likelihood: PosteriorLikelihood) -> Result<Self> {
        if !(xbar.abs() <= 1.0) {
            return Err(Error::InvalidInput(format!("|xbar| = {} exceeds 1", xbar.abs())));
        }
        let set = ObservableSet::<f64>::paulis(&["X"])?;
        let means = SampleMeans::new(set.clone(), vec![xbar], n)?;
        let model = MeasurementModel::new(&set);
        let log_like: Vec<f64> = self
            .points
            .par_iter()
            .map(|p| {
                let rho = DensityMatrix::from_bloch(p[0], p[1], p[2])?;
                let l = match likelihood {
                    PosteriorLikelihood::Measured => model
                        .log_likelihood(means.values(), n, &rho)
                        .map_or(LogLikelihood::NegInfinite, LogLikelihood::Finite),
                    PosteriorLikelihood::Sanov => match sanov_log_likelihood(&means, &rho) {
                        Err(Error::InfeasibleTargets { .. }) => LogLikelihood::NegInfinite,
                        other => other?,
                    },
                };
                Ok(l.to_f64())
            })
            .collect::<Result<_>>()?;
        let log_post: Vec<f64> = self
            .weights
            .iter()
            .zip(&log_like)
            .map(|(&w, &l)| if w > 0.0 { w.ln() + l } else { f64::NEG_INFINITY })
            .collect();
        Ok(Self {
            weights: normalize(&log_post)?,
            ..self.clone()
        })
    }

    pub fn support_mode(&self) -> SupportMode {
        self.mode
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Bloch vectors of the grid states.
    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Grid point of largest weight; ties resolve to the first in grid order.
    pub fn mode(&self) -> [f64; 3] {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        self.points[best]
    }

    /// Marginal weight of each grid node along one Bloch axis (0, 1, 2).
    pub fn marginal(&self, axis: usize) -> Vec<(f64, f64)> {
        let m = (self.resolution - 1) as f64;
        let mut sums = vec![Vec::new(); self.resolution];
        for (p, &w) in self.points.iter().zip(&self.weights) {
            let k = ((p[axis] + 1.0) * m / 2.0).round() as usize;
            sums[k].push(w);
        }
        sums.into_iter()
            .enumerate()
            .map(|(k, ws)| (node(k, self.resolution), compensated_sum(ws)))
            .collect()
    }

    /// `½ Σ |w − w'|` over a common grid.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        if self.points != other.points {
            return Err(Error::InvalidInput("posteriors live on different grids".into()));
        }
        Ok(0.5 * compensated_sum(self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs())))
    }

    /// `x,y,z,weight` rows, one per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z,weight\n");
        for (p, w) in self.points.iter().zip(&self.weights) {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", p[0], p[1], p[2], w).expect("write to string");
        }
        out
    }
}

/// Prior over the declared support updated with the mean `xbar` of `n`
/// measurements of `X`, using the measured-outcome likelihood.
pub fn qubit_posterior(mode: SupportMode, prior_width: f64, xbar: f64, n: u64, resolution: usize) -> Result<GridPosterior> {
    qubit_posterior_with(mode, prior_width, xbar, n, resolution, PosteriorLikelihood::default())
}

pub fn qubit_posterior_with(
    mode: SupportMode,
    prior_width: f64,
    xbar: f64,
    n: u64,
    resolution: usize,
    likelihood: PosteriorLikelihood,
) -> Result<GridPosterior> {
    GridPosterior::prior(mode, prior_width, resolution)?.update(xbar, n, likelihood)
}

/// `measured_log_likelihood` for a single qubit state, exposed for plotting
/// the likelihood surface alongside the posterior.
pub fn x_log_likelihood(bloch: [f64; 3], xbar: f64, n: u64) -> Result<LogLikelihood<f64>> {
    let means = SampleMeans::new(ObservableSet::paulis(&["X"])?, vec![xbar], n)?;
    measured_log_likelihood(&means, &DensityMatrix::from_bloch(bloch[0], bloch[1], bloch[2])?)
}
