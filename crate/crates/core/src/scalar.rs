//! Floating-point scalar abstraction.
//!
//! Every numerical routine in the crate is written against [`Scalar`], which
//! bundles the `nalgebra` field traits with `num-traits` conversions and a set
//! of per-precision tolerances. `f64` carries the tolerances the solver is
//! specified for; `f32` carries looser ones scaled to its epsilon.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// f32 or f64.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Max |A - A†| accepted when constructing a Hermitian operator in code.
    fn hermiticity_tolerance() -> Self;
    /// Max |A - A†| accepted when parsing operators from files.
    fn parse_hermiticity_tolerance() -> Self;
    /// Max |tr ρ - 1| for a density matrix.
    fn trace_tolerance() -> Self;
    /// Most negative eigenvalue accepted for a density matrix.
    fn psd_tolerance() -> Self;
    /// Eigenvalues at or below `support_tolerance * λ_max` count as zero.
    fn support_tolerance() -> Self;
    /// Smallest admissible eigenvalue of the normalized observable Gram matrix.
    fn independence_tolerance() -> Self;
    /// Dual-gradient and constraint-residual target of the Gibbs solver.
    fn gradient_tolerance() -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts to `f64` for serialization and reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f64 {
    fn hermiticity_tolerance() -> Self {
        1e-12
    }
    fn parse_hermiticity_tolerance() -> Self {
        1e-9
    }
    fn trace_tolerance() -> Self {
        1e-10
    }
    fn psd_tolerance() -> Self {
        1e-12
    }
    fn support_tolerance() -> Self {
        1e-12
    }
    fn independence_tolerance() -> Self {
        1e-10
    }
    fn gradient_tolerance() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn hermiticity_tolerance() -> Self {
        1e-5
    }
    fn parse_hermiticity_tolerance() -> Self {
        1e-5
    }
    fn trace_tolerance() -> Self {
        1e-5
    }
    fn psd_tolerance() -> Self {
        1e-6
    }
    fn support_tolerance() -> Self {
        1e-6
    }
    fn independence_tolerance() -> Self {
        1e-5
    }
    fn gradient_tolerance() -> Self {
        2e-5
    }
}

/// Neumaier-compensated summation, so reductions do not depend on how terms
/// were grouped upstream.
pub fn compensated_sum<S: Scalar>(terms: impl IntoIterator<Item = S>) -> S {
    let mut sum = S::zero();
    let mut carry = S::zero();
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}
