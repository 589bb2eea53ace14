//! Asymptotic likelihoods of tomographic data.

use crate::error::{Error, Result};
use crate::gibbs::fit_gibbs;
use crate::measurement::MeasurementModel;
use crate::observables::ObservableSet;
use crate::scalar::Scalar;
use crate::state::{relative_entropy, DensityMatrix, Divergence};

/// Sample means `f_b` of each observable, each estimated from `N` shots.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMeans<S: Scalar> {
    observables: ObservableSet<S>,
    values: Vec<S>,
    sample_size: u64,
}

impl<S: Scalar> SampleMeans<S> {
    pub fn new(observables: ObservableSet<S>, values: Vec<S>, sample_size: u64) -> Result<Self> {
        if values.len() != observables.len() {
            return Err(Error::LengthMismatch {
                expected: observables.len(),
                found: values.len(),
            });
        }
        if sample_size == 0 {
            return Err(Error::InvalidInput("sample size must be at least 1".into()));
        }
        for ((op, &f), label) in observables.observables().iter().zip(&values).zip(observables.labels()) {
            let spec = op.eigen();
            let (lo, hi) = (spec.min_eigenvalue(), spec.max_eigenvalue());
            let slack = S::trace_tolerance() * (S::one() + lo.abs().max(hi.abs()));
            if !(f >= lo - slack && f <= hi + slack) {
                return Err(Error::InvalidInput(format!(
                    "mean {f} of `{label}` outside its spectral range [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            observables,
            values,
            sample_size,
        })
    }

    pub fn observables(&self) -> &ObservableSet<S> {
        &self.observables
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn sample_size(&self) -> u64 {
        self.sample_size
    }

    pub fn with_values(&self, values: Vec<S>) -> Result<Self> {
        Self::new(self.observables.clone(), values, self.sample_size)
    }

    pub fn with_sample_size(&self, sample_size: u64) -> Result<Self> {
        Self::new(self.observables.clone(), self.values.clone(), sample_size)
    }
}

/// A log-likelihood: finite, or −∞ for data impossible under the state.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum LogLikelihood<S> {
    NegInfinite,
    Finite(S),
}

impl<S: Scalar> LogLikelihood<S> {
    pub fn finite(self) -> Option<S> {
        match self {
            LogLikelihood::Finite(v) => Some(v),
            LogLikelihood::NegInfinite => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            LogLikelihood::Finite(v) => v.as_f64(),
            LogLikelihood::NegInfinite => f64::NEG_INFINITY,
        }
    }

    fn from_exponent(n: u64, divergence: Divergence<S>) -> Self {
        match divergence {
            Divergence::Finite(s) => LogLikelihood::Finite(-S::lit(n as f64) * s),
            Divergence::Infinite => LogLikelihood::NegInfinite,
        }
    }
}

/// `−N S(μ‖ρ)`: the log-likelihood of the image μ from `N` copies of ρ.
pub fn stein_log_likelihood<S: Scalar>(mu: &DensityMatrix<S>, rho: &DensityMatrix<S>, n: u64) -> Result<LogLikelihood<S>> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    Ok(LogLikelihood::from_exponent(n, relative_entropy(mu, rho)?))
}

/// `S(μ^ρ_f‖ρ)`, the exponent behind the Sanov likelihood.
pub fn sanov_exponent<S: Scalar>(means: &SampleMeans<S>, rho: &DensityMatrix<S>) -> Result<S> {
    let fit = fit_gibbs(&means.observables, &means.values, rho)?;
    let s = relative_entropy(&fit.model.state, rho)?;
    Ok(s.finite().expect("the fitted state lives in the support of rho"))
}

/// `−N S(μ^ρ_f‖ρ)` where μ^ρ_f is the state closest to ρ reproducing the means.
///
/// Means that no state in the support of ρ can produce are reported as
/// `InfeasibleTargets` rather than folded into −∞.
pub fn sanov_log_likelihood<S: Scalar>(means: &SampleMeans<S>, rho: &DensityMatrix<S>) -> Result<LogLikelihood<S>> {
    let s = sanov_exponent(means, rho)?;
    Ok(LogLikelihood::Finite(-S::lit(means.sample_size as f64) * s))
}

/// Whether ρ lies in the compatibility set of the data at level ε:
/// `N S(μ^ρ_f‖ρ) ≤ −ln(1 − ε)`.
pub fn is_compatible<S: Scalar>(means: &SampleMeans<S>, rho: &DensityMatrix<S>, epsilon: S) -> Result<bool> {
    if !(epsilon > S::zero() && epsilon < S::one()) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let s = sanov_exponent(means, rho)?;
    Ok(S::lit(means.sample_size as f64) * s <= -(S::one() - epsilon).ln())
}

/// Image of the pooled sample: the size-weighted average of the two images.
pub fn combine_images<S: Scalar>(
    mu: &DensityMatrix<S>,
    n: u64,
    mu2: &DensityMatrix<S>,
    n2: u64,
) -> Result<(DensityMatrix<S>, u64)> {
    if n == 0 || n2 == 0 {
        return Err(Error::InvalidInput("sample sizes must be at least 1".into()));
    }
    let total = n + n2;
    let w = S::lit(n as f64) / S::lit(total as f64);
    let w2 = S::lit(n2 as f64) / S::lit(total as f64);
    Ok((DensityMatrix::mixture(&[w, w2], &[mu, mu2])?, total))
}

/// Log-likelihood of the means under projective measurement of each
/// observable on its own `N` shots: the classical large-deviation rate of
/// the outcome statistics, summed over observables. −∞ when some mean is
/// out of reach of the outcomes ρ can produce.
pub fn measured_log_likelihood<S: Scalar>(means: &SampleMeans<S>, rho: &DensityMatrix<S>) -> Result<LogLikelihood<S>> {
    if means.observables.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: means.observables.dim(),
            found: rho.dim(),
        });
    }
    let model = MeasurementModel::new(&means.observables);
    Ok(model
        .log_likelihood(&means.values, means.sample_size, rho)
        .map_or(LogLikelihood::NegInfinite, LogLikelihood::Finite))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density_matrix, seeded};
    use proptest::prelude::*;

    fn mixed2() -> DensityMatrix<f64> {
        DensityMatrix::maximally_mixed(2).unwrap()
    }

    fn x_means(f: f64, n: u64) -> SampleMeans<f64> {
        SampleMeans::new(ObservableSet::paulis(&["X"]).unwrap(), vec![f], n).unwrap()
    }

    fn means_of(mu: &DensityMatrix<f64>, set: &ObservableSet<f64>, n: u64) -> SampleMeans<f64> {
        let values = set.observables().iter().map(|o| mu.expectation(o).unwrap()).collect();
        SampleMeans::new(set.clone(), values, n).unwrap()
    }

    fn binary_entropy(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn sample_means_validate_range() {
        let set = ObservableSet::<f64>::paulis(&["X"]).unwrap();
        assert!(SampleMeans::new(set.clone(), vec![1.0], 5).is_ok());
        assert!(SampleMeans::new(set.clone(), vec![1.01], 5).is_err());
        assert!(SampleMeans::new(set.clone(), vec![0.0], 0).is_err());
        assert!(SampleMeans::new(set, vec![0.0, 0.1], 5).is_err());
    }

    #[test]
    fn stein_examples() {
        let rho = mixed2();
        assert_eq!(stein_log_likelihood(&rho, &rho, 50).unwrap(), LogLikelihood::Finite(0.0));
        let up = DensityMatrix::basis_state(2, 0).unwrap();
        let l = stein_log_likelihood(&up, &rho, 100).unwrap().finite().unwrap();
        assert!((l + 100.0 * 2f64.ln()).abs() < 1e-12);
        let l2 = stein_log_likelihood(&up, &rho, 200).unwrap().finite().unwrap();
        assert_eq!(l2, 2.0 * l);
        let down = DensityMatrix::basis_state(2, 1).unwrap();
        assert_eq!(stein_log_likelihood(&up, &down, 1).unwrap(), LogLikelihood::NegInfinite);
    }

    #[test]
    fn sanov_vanishes_when_rho_satisfies_means() {
        let mut rng = seeded(3);
        let rho = random_density_matrix::<f64>(4, &mut rng);
        let set = ObservableSet::paulis(&["ZI", "XY"]).unwrap();
        let l = sanov_log_likelihood(&means_of(&rho, &set, 1000), &rho).unwrap().finite().unwrap();
        assert!(l.abs() < 1e-9, "{l}");
    }

    #[test]
    fn sanov_single_x_closed_form() {
        let l = sanov_log_likelihood(&x_means(0.5, 1000), &mixed2()).unwrap().finite().unwrap();
        let oracle = -1000.0 * (2f64.ln() - binary_entropy(0.75));
        assert!((l - oracle).abs() < 1e-8, "{l} vs {oracle}");
        assert!((l + 130.81).abs() < 5e-3);
    }

    #[test]
    fn sanov_reduces_to_stein_when_complete() {
        let mut rng = seeded(8);
        let set = ObservableSet::pauli_basis(2).unwrap();
        for _ in 0..5 {
            let mu = random_density_matrix::<f64>(4, &mut rng);
            let rho = random_density_matrix::<f64>(4, &mut rng);
            let sanov = sanov_log_likelihood(&means_of(&mu, &set, 100), &rho).unwrap().finite().unwrap();
            let stein = stein_log_likelihood(&mu, &rho, 100).unwrap().finite().unwrap();
            assert!((sanov - stein).abs() < 1e-8, "{sanov} vs {stein}");
        }
    }

    #[test]
    fn sanov_infeasible_is_an_error() {
        // ⟨Z⟩ = 0.5 is unreachable from |0⟩⟨0|
        let up = DensityMatrix::basis_state(2, 0).unwrap();
        let means = SampleMeans::new(ObservableSet::paulis(&["Z"]).unwrap(), vec![0.5], 10).unwrap();
        assert!(matches!(sanov_log_likelihood(&means, &up), Err(Error::InfeasibleTargets { .. })));
    }

    #[test]
    fn compatibility_boundary() {
        // S(μ‖I/2) for ⟨X⟩ = 0.1 and the N where N·S crosses ln 2
        let s = 2f64.ln() - binary_entropy(0.55);
        let crossing = 2f64.ln() / s;
        assert!(crossing > 138.0 && crossing < 139.0);
        let eps = 0.5;
        assert!(is_compatible(&x_means(0.1, 138), &mixed2(), eps).unwrap());
        assert!(!is_compatible(&x_means(0.1, 139), &mixed2(), eps).unwrap());
        assert!(is_compatible(&x_means(0.0, 1_000_000), &mixed2(), 0.01).unwrap());
        assert!(!is_compatible(&x_means(0.1, 1_000_000), &mixed2(), 0.99).unwrap());
        assert!(is_compatible(&x_means(0.1, 10), &mixed2(), 1.0).is_err());
    }

    #[test]
    fn combine_examples() {
        let mut rng = seeded(5);
        let a = random_density_matrix::<f64>(3, &mut rng);
        let b = random_density_matrix::<f64>(3, &mut rng);
        let (same, n) = combine_images(&a, 10, &a, 30).unwrap();
        assert_eq!(n, 40);
        assert!(same.trace_distance(&a).unwrap() < 1e-14);
        let (avg, _) = combine_images(&a, 7, &b, 7).unwrap();
        let half = DensityMatrix::mixture(&[0.5, 0.5], &[&a, &b]).unwrap();
        assert!(avg.trace_distance(&half).unwrap() < 1e-15);
        let wrong = random_density_matrix::<f64>(2, &mut rng);
        assert!(combine_images(&a, 1, &wrong, 1).is_err());
    }

    #[test]
    fn mixing_defect_is_state_independent() {
        let mut rng = seeded(11);
        let mu = random_density_matrix::<f64>(2, &mut rng);
        let mu2 = random_density_matrix::<f64>(2, &mut rng);
        let (n, n2) = (40, 25);
        let (avg, total) = combine_images(&mu, n, &mu2, n2).unwrap();
        let defects: Vec<f64> = (0..50)
            .map(|_| {
                let rho = random_density_matrix::<f64>(2, &mut rng);
                let st = |m: &DensityMatrix<f64>, k| stein_log_likelihood(m, &rho, k).unwrap().finite().unwrap();
                st(&mu, n) + st(&mu2, n2) - st(&avg, total)
            })
            .collect();
        let mean = defects.iter().sum::<f64>() / 50.0;
        let var = defects.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / 50.0;
        assert!(var < 1e-10, "{var}");
    }

    #[test]
    fn measured_matches_sanov_for_commuting_reference() {
        // ρ diagonal in the X basis: both likelihoods are the binary KL
        let plus = DensityMatrix::<f64>::from_bloch(0.3, 0.0, 0.0).unwrap();
        let means = x_means(0.4, 500);
        let m = measured_log_likelihood(&means, &plus).unwrap().finite().unwrap();
        let s = sanov_log_likelihood(&means, &plus).unwrap().finite().unwrap();
        assert!((m - s).abs() < 1e-8, "{m} vs {s}");
        // y-axis states all give ⟨X⟩ outcomes ±1 with probability 1/2
        let y = DensityMatrix::<f64>::from_bloch(0.0, 0.8, 0.0).unwrap();
        let my = measured_log_likelihood(&means, &y).unwrap().finite().unwrap();
        let m0 = measured_log_likelihood(&means, &mixed2()).unwrap().finite().unwrap();
        assert!((my - m0).abs() < 1e-12);
    }

    #[test]
    fn measured_unreachable_is_neg_infinite() {
        let up = DensityMatrix::<f64>::basis_state(2, 0).unwrap();
        let means = SampleMeans::new(ObservableSet::paulis(&["Z"]).unwrap(), vec![0.5], 10).unwrap();
        assert_eq!(measured_log_likelihood(&means, &up).unwrap(), LogLikelihood::NegInfinite);
    }

    #[test]
    fn neg_infinite_orders_below_finite() {
        assert!(LogLikelihood::NegInfinite < LogLikelihood::Finite(-1e300));
        assert_eq!(LogLikelihood::<f64>::NegInfinite.to_f64(), f64::NEG_INFINITY);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sanov_dominates_stein_over_constraint_set(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let set = ObservableSet::paulis(&["ZI", "IX", "YY"]).unwrap();
            let mu = random_density_matrix::<f64>(4, &mut rng);
            let rho = random_density_matrix::<f64>(4, &mut rng);
            let means = means_of(&mu, &set, 1000);
            let sanov = sanov_log_likelihood(&means, &rho).unwrap().finite().unwrap();
            let stein = stein_log_likelihood(&mu, &rho, 1000).unwrap().finite().unwrap();
            prop_assert!(sanov >= stein - 1e-9);
        }

        #[test]
        fn more_constraints_never_raise_sanov(seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let mu = random_density_matrix::<f64>(4, &mut rng);
            let rho = random_density_matrix::<f64>(4, &mut rng);
            let small = ObservableSet::paulis(&["ZZ"]).unwrap();
            let large = ObservableSet::paulis(&["ZZ", "XI", "IY"]).unwrap();
            let a = sanov_log_likelihood(&means_of(&mu, &small, 100), &rho).unwrap().finite().unwrap();
            let b = sanov_log_likelihood(&means_of(&mu, &large, 100), &rho).unwrap().finite().unwrap();
            prop_assert!(b <= a + 1e-9);
        }

        #[test]
        fn compatibility_monotone_in_epsilon(f in -0.9f64..0.9, n in 1u64..5000, e1 in 0.01f64..0.98, bump in 0.0f64..0.99) {
            let e2 = e1 + (0.99 - e1) * bump;
            let means = x_means(f, n);
            let rho = mixed2();
            if is_compatible(&means, &rho, e1).unwrap() {
                prop_assert!(is_compatible(&means, &rho, e2).unwrap());
            }
        }

        #[test]
        fn combined_image_is_a_state(seed in any::<u64>(), n in 1u64..1000, n2 in 1u64..1000) {
            let mut rng = seeded(seed);
            let a = random_density_matrix::<f64>(3, &mut rng);
            let b = random_density_matrix::<f64>(3, &mut rng);
            let (c, total) = combine_images(&a, n, &b, n2).unwrap();
            prop_assert_eq!(total, n + n2);
            prop_assert!((c.operator().trace() - 1.0).abs() < 1e-12);
            prop_assert!(c.eigenvalues().iter().all(|&l| l >= -1e-14));
        }
    }
}
