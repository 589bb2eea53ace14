//! Density matrices, entropies and the relative entropy.

use std::cmp::Ordering;
use std::ops::{Add, Mul};

use nalgebra::DVector;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::operators::{trace_product, CMatrix, HermitianOperator, Spectrum};
use crate::scalar::{compensated_sum, Scalar};

/// Positive semidefinite, unit-trace Hermitian operator with its spectrum
/// computed once at construction.
#[derive(Clone, Debug)]
pub struct DensityMatrix<S: Scalar> {
    op: HermitianOperator<S>,
    spectrum: Spectrum<S>,
}

/// Equal matrices; the cached spectrum is not compared.
impl<S: Scalar> PartialEq for DensityMatrix<S> {
    fn eq(&self, other: &Self) -> bool {
        self.op == other.op
    }
}

impl<S: Scalar> DensityMatrix<S> {
    pub fn new(op: HermitianOperator<S>) -> Result<Self> {
        let trace = op.trace();
        if !((trace - S::one()).abs() <= S::trace_tolerance()) {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let spectrum = op.eigen();
        let smallest = spectrum.min_eigenvalue();
        if !(smallest >= -S::psd_tolerance()) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {smallest}"
            )));
        }
        Ok(Self { op, spectrum })
    }

    /// Divides by the trace; for operators that are positive by construction.
    pub(crate) fn normalized(op: HermitianOperator<S>) -> Result<Self> {
        let trace = op.trace();
        if !(trace > S::zero()) {
            return Err(Error::InvalidState(format!("trace is {trace}")));
        }
        Self::new(op.scaled(S::one() / trace))
    }

    /// Trusted constructor from a known spectral decomposition.
    pub(crate) fn from_spectrum(spectrum: Spectrum<S>) -> Self {
        let op = HermitianOperator::from_matrix_unchecked(spectrum.compose(&spectrum.eigenvalues));
        Self { op, spectrum }
    }

    /// I/d.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let v = S::one() / S::from_usize_lossy(dim);
        Self::new(HermitianOperator::diagonal(&vec![v; dim])?)
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) vector.
    pub fn pure(amplitudes: &[Complex<S>]) -> Result<Self> {
        let v = DVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if !(norm > S::zero()) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = v.map(|z| z / Complex::new(norm, S::zero()));
        let m = &v * v.adjoint();
        Self::new(HermitianOperator::new(m)?)
    }

    /// Basis state |k⟩⟨k| in dimension `dim`.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidInput(format!("basis index {k} >= {dim}")));
        }
        let mut amps = vec![Complex::new(S::zero(), S::zero()); dim];
        amps[k] = Complex::new(S::one(), S::zero());
        Self::pure(&amps)
    }

    /// Qubit state (I + xX + yY + zZ)/2; requires |r| ≤ 1.
    pub fn from_bloch(x: S, y: S, z: S) -> Result<Self> {
        let half = S::lit(0.5);
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(half * (S::one() + z), S::zero()),
                Complex::new(half * x, -half * y),
                Complex::new(half * x, half * y),
                Complex::new(half * (S::one() - z), S::zero()),
            ],
        );
        Self::new(HermitianOperator::new(m)?)
    }

    pub fn operator(&self) -> &HermitianOperator<S> {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix<S> {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn spectrum(&self) -> &Spectrum<S> {
        &self.spectrum
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[S] {
        &self.spectrum.eigenvalues
    }

    /// Number of eigenvalues above the support tolerance.
    pub fn rank(&self) -> usize {
        self.spectrum.support().len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim()
    }

    /// tr(ρ G).
    pub fn expectation(&self, observable: &HermitianOperator<S>) -> Result<S> {
        expectation(self, observable)
    }

    /// ½‖self − other‖₁.
    pub fn trace_distance(&self, other: &Self) -> Result<S> {
        self.op.check_dim(other.dim())?;
        let diff = &self.op - &other.op;
        let spec = diff.eigen();
        Ok(S::lit(0.5) * compensated_sum(spec.eigenvalues.iter().map(|x| x.abs())))
    }

    /// Convex combination `Σ w_k ρ_k`; weights must be non-negative and sum to one.
    pub fn mixture(weights: &[S], states: &[&Self]) -> Result<Self> {
        if weights.len() != states.len() {
            return Err(Error::LengthMismatch {
                expected: states.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| *w < S::zero()) {
            return Err(Error::InvalidInput("negative mixture weight".into()));
        }
        let ops: Vec<HermitianOperator<S>> = states.iter().map(|s| s.op.clone()).collect();
        Self::new(HermitianOperator::linear_combination(weights, &ops)?)
    }
}

/// tr(ρ G), imaginary residue discarded.
pub fn expectation<S: Scalar>(rho: &DensityMatrix<S>, observable: &HermitianOperator<S>) -> Result<S> {
    rho.op.check_dim(observable.dim())?;
    Ok(trace_product(rho.matrix(), observable.matrix()))
}

/// −Σ λ ln λ over the support; clamped into [0, ln d].
pub fn von_neumann_entropy<S: Scalar>(rho: &DensityMatrix<S>) -> S {
    let spec = rho.spectrum();
    let h = -compensated_sum(spec.support().into_iter().map(|k| {
        let p = spec.eigenvalues[k];
        p * p.ln()
    }));
    h.max(S::zero()).min(S::from_usize_lossy(rho.dim()).ln())
}

/// A relative entropy value: finite and non-negative, or +∞.
///
/// Ordering puts every finite value below `Infinite`; addition with
/// `Infinite` yields `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Divergence<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> Divergence<S> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Divergence::Finite(_))
    }

    pub fn finite(self) -> Option<S> {
        match self {
            Divergence::Finite(v) => Some(v),
            Divergence::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the infinite branch.
    pub fn to_f64(self) -> f64 {
        match self {
            Divergence::Finite(v) => v.as_f64(),
            Divergence::Infinite => f64::INFINITY,
        }
    }
}

impl<S: Scalar> Add for Divergence<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Divergence::Finite(a), Divergence::Finite(b)) => Divergence::Finite(a + b),
            _ => Divergence::Infinite,
        }
    }
}

/// Scaling by a non-negative factor; `0 · ∞` stays infinite.
impl<S: Scalar> Mul<S> for Divergence<S> {
    type Output = Self;
    fn mul(self, rhs: S) -> Self {
        match self {
            Divergence::Finite(a) => Divergence::Finite(a * rhs),
            Divergence::Infinite => Divergence::Infinite,
        }
    }
}

impl<S: Scalar> Divergence<S> {
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

/// S(μ‖ρ) = tr(μ ln μ − μ ln ρ), infinite when μ has weight outside the
/// support of ρ. The logarithm of ρ is taken on its support only.
pub fn relative_entropy<S: Scalar>(mu: &DensityMatrix<S>, rho: &DensityMatrix<S>) -> Result<Divergence<S>> {
    mu.op.check_dim(rho.dim())?;
    let rs = rho.spectrum();
    let support = rs.support();
    let mut weights = Vec::with_capacity(support.len());
    for &j in &support {
        let v = rs.vector(j);
        let w = (v.adjoint() * mu.matrix() * &v)[(0, 0)].re;
        weights.push(w);
    }
    let inside = compensated_sum(weights.iter().copied());
    let leakage = mu.op.trace() - inside;
    if leakage > S::support_tolerance() {
        return Ok(Divergence::Infinite);
    }
    let ms = mu.spectrum();
    let mu_log_mu = compensated_sum(ms.support().into_iter().map(|k| {
        let p = ms.eigenvalues[k];
        p * p.ln()
    }));
    let mu_log_rho = compensated_sum(
        support
            .iter()
            .zip(&weights)
            .map(|(&j, &w)| w * rs.eigenvalues[j].ln()),
    );
    Ok(Divergence::Finite((mu_log_mu - mu_log_rho).max(S::zero())))
}
