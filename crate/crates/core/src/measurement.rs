//! Projective measurement of each observable in its eigenbasis.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::observables::ObservableSet;
use crate::operators::CMatrix;
use crate::scalar::{compensated_sum, Scalar};
use crate::state::DensityMatrix;

/// Distinct eigenvalues of one observable with the eigenvectors spanning
/// each eigenspace.
#[derive(Clone, Debug)]
pub struct Outcomes<S: Scalar> {
    /// Ascending distinct eigenvalues.
    pub values: Vec<S>,
    /// One d×m block of orthonormal eigenvectors per value.
    pub eigenspaces: Vec<CMatrix<S>>,
}

impl<S: Scalar> Outcomes<S> {
    /// Born-rule probability of each outcome, clamped to be non-negative and
    /// renormalized.
    pub fn probabilities(&self, rho: &DensityMatrix<S>) -> Vec<S> {
        let raw: Vec<S> = self
            .eigenspaces
            .iter()
            .map(|v| {
                let block = v.adjoint() * rho.matrix() * v;
                compensated_sum(block.diagonal().iter().map(|z| z.re)).max(S::zero())
            })
            .collect();
        let total = compensated_sum(raw.iter().copied());
        raw.into_iter().map(|p| p / total).collect()
    }

    pub fn min_value(&self) -> S {
        self.values[0]
    }

    pub fn max_value(&self) -> S {
        *self.values.last().expect("at least one outcome")
    }
}

/// Outcome structure of every observable in a set.
#[derive(Clone, Debug)]
pub struct MeasurementModel<S: Scalar> {
    outcomes: Vec<Outcomes<S>>,
}

impl<S: Scalar> MeasurementModel<S> {
    pub fn new(observables: &ObservableSet<S>) -> Self {
        let outcomes = observables
            .observables()
            .iter()
            .map(|op| {
                let spec = op.eigen();
                let d = spec.dim();
                let scale = spec.max_eigenvalue().abs().max(spec.min_eigenvalue().abs()).max(S::one());
                let merge = S::lit(1e-9) * scale;
                // eigenvalues arrive descending; walk them ascending
                let mut values: Vec<S> = Vec::new();
                let mut groups: Vec<Vec<usize>> = Vec::new();
                for k in (0..d).rev() {
                    let v = spec.eigenvalues[k];
                    match values.last() {
                        Some(&last) if (v - last).abs() <= merge => groups.last_mut().unwrap().push(k),
                        _ => {
                            values.push(v);
                            groups.push(vec![k]);
                        }
                    }
                }
                let eigenspaces = groups
                    .iter()
                    .map(|g| CMatrix::from_fn(d, g.len(), |r, c| spec.eigenvectors[(r, g[c])]))
                    .collect();
                Outcomes { values, eigenspaces }
            })
            .collect();
        Self { outcomes }
    }

    pub fn outcomes(&self) -> &[Outcomes<S>] {
        &self.outcomes
    }

    /// Sample mean of `shots` projective measurements of each observable,
    /// drawn as a multinomial via conditional binomials.
    pub fn sample_means(&self, rho: &DensityMatrix<S>, shots: u64, rng: &mut impl Rng) -> Vec<S> {
        self.outcomes
            .iter()
            .map(|o| {
                let probs: Vec<f64> = o.probabilities(rho).iter().map(|p| p.as_f64()).collect();
                let counts = multinomial(shots, &probs, rng);
                let n = S::lit(shots as f64);
                compensated_sum(
                    counts
                        .iter()
                        .zip(&o.values)
                        .map(|(&c, &v)| S::lit(c as f64) * v),
                ) / n
            })
            .collect()
    }

    /// Log-likelihood of the observed sample means under the classical
    /// large-deviation rate of each observable's outcome statistics:
    /// `−N Σ_b min{ KL(p‖q_b(ρ)) : E_p[outcome] = f_b }`.
    ///
    /// `None` when some mean is unreachable from the outcomes ρ can produce.
    pub fn log_likelihood(&self, values: &[S], shots: u64, rho: &DensityMatrix<S>) -> Option<S> {
        let mut rates = Vec::with_capacity(values.len());
        for (o, &f) in self.outcomes.iter().zip(values) {
            let q = o.probabilities(rho);
            rates.push(tilted_rate(&o.values, &q, f)?);
        }
        Some(-S::lit(shots as f64) * compensated_sum(rates))
    }
}

fn multinomial(shots: u64, probs: &[f64], rng: &mut impl Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = remaining;
            break;
        }
        let conditional = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, conditional)
            .expect("probability in [0, 1]")
            .sample(rng);
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    counts
}

/// `min { KL(p‖q) : Σ_k p_k w_k = f }` over distributions on the outcomes,
/// via the one-dimensional dual `−min_t ln Σ_k q_k e^{t (w_k − f)}`.
pub fn tilted_rate<S: Scalar>(outcomes: &[S], q: &[S], f: S) -> Option<S> {
    let support: Vec<(S, S)> = outcomes
        .iter()
        .zip(q)
        .filter(|(_, &p)| p > S::zero())
        .map(|(&w, &p)| (w - f, p))
        .collect();
    let lo = support.iter().map(|x| x.0).fold(S::lit(f64::INFINITY), |a, b| a.min(b));
    let hi = support.iter().map(|x| x.0).fold(S::lit(f64::NEG_INFINITY), |a, b| a.max(b));
    let edge = S::lit(1e-12) * (S::one() + f.abs());
    if lo > edge || hi < -edge {
        return None;
    }
    if lo >= -edge || hi <= edge {
        // f sits on an extreme outcome: all mass must go there
        let target = if lo >= -edge { lo } else { hi };
        let mass = compensated_sum(
            support
                .iter()
                .filter(|(d, _)| (*d - target).abs() <= edge)
                .map(|x| x.1),
        );
        return Some(-mass.ln());
    }

    // φ(t) = ln Σ q e^{t d} is convex with φ'(t) = E_t[d]; bracket its root.
    let moments = |t: S| {
        let top = support.iter().map(|(d, _)| t * *d).fold(S::lit(f64::NEG_INFINITY), |a, b| a.max(b));
        let weights: Vec<S> = support.iter().map(|(d, p)| *p * (t * *d - top).exp()).collect();
        let z = compensated_sum(weights.iter().copied());
        let mean = compensated_sum(weights.iter().zip(&support).map(|(w, (d, _))| *w * *d)) / z;
        let var = compensated_sum(weights.iter().zip(&support).map(|(w, (d, _))| *w * (*d - mean) * (*d - mean))) / z;
        (top + z.ln(), mean, var)
    };
    let (mut a, mut b) = (-S::one(), S::one());
    while moments(a).1 > S::zero() {
        a *= S::lit(2.0);
    }
    while moments(b).1 < S::zero() {
        b *= S::lit(2.0);
    }
    let mut t = S::zero();
    for _ in 0..200 {
        let (_, slope, curvature) = moments(t);
        if slope.abs() <= S::lit(1e-15) * (S::one() + hi - lo) {
            break;
        }
        if slope > S::zero() {
            b = t;
        } else {
            a = t;
        }
        let newton = t - slope / curvature;
        t = if curvature > S::zero() && newton > a && newton < b {
            newton
        } else {
            S::lit(0.5) * (a + b)
        };
    }
    Some((-moments(t).0).max(S::zero()))
}
