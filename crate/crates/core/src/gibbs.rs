//! Generalized Gibbs states and the constrained relative-entropy minimizer.
//!
//! For a reference state σ and observables `F_b`, the state closest to σ (in
//! relative entropy) among those with `⟨F_b⟩ = f_b` is
//!
//! ```text
//! μ = exp(ln σ − Σ_b κ_b F_b) / Z(κ)
//! ```
//!
//! with κ the minimizer of the convex dual `ψ(κ) = ln Z(κ) + κ·f`. All algebra
//! runs inside the support of σ. The dual is minimized by damped Newton with
//! the exact Kubo–Mori Hessian and Armijo backtracking, on an internally
//! centered and orthonormalized copy of the observables.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::observables::ObservableSet;
use crate::operators::{trace_product, CMatrix, Spectrum};
use crate::scalar::{compensated_sum, Scalar};
use crate::state::{relative_entropy, DensityMatrix, Divergence};

/// Solver settings. Defaults are the values the solver is specified with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions<S> {
    /// Bound on both `‖∇ψ‖_∞` and `max_b |⟨F_b⟩ − f_b|`.
    pub tolerance: S,
    pub max_iterations: usize,
    /// `‖κ‖_∞` above which targets are declared infeasible.
    pub kappa_limit: S,
    pub armijo_slope: S,
    pub backtrack_factor: S,
    pub max_backtracks: usize,
    /// A converged point whose remaining Newton step still moves κ by more
    /// than this sits on the boundary of the attainable set.
    pub boundary_step: S,
}

impl<S: Scalar> Default for FitOptions<S> {
    fn default() -> Self {
        Self {
            tolerance: S::gradient_tolerance(),
            max_iterations: 200,
            kappa_limit: S::lit(1e3),
            armijo_slope: S::lit(1e-4),
            backtrack_factor: S::lit(0.5),
            max_backtracks: 60,
            boundary_step: S::lit(1e-2),
        }
    }
}

/// Orthonormal basis of supp σ together with the log-eigenvalues of σ there.
#[derive(Clone, Debug)]
struct SupportFrame<S: Scalar> {
    /// d×k, columns spanning supp σ.
    basis: CMatrix<S>,
    /// d×(d−k), columns spanning ker σ.
    kernel: CMatrix<S>,
    log_weights: Vec<S>,
}

impl<S: Scalar> SupportFrame<S> {
    fn of(sigma: &DensityMatrix<S>) -> Result<Self> {
        let spec = sigma.spectrum();
        let support = spec.support();
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let d = spec.dim();
        let kernel_idx: Vec<usize> = (0..d).filter(|k| !support.contains(k)).collect();
        let basis = CMatrix::from_fn(d, support.len(), |r, c| spec.eigenvectors[(r, support[c])]);
        let kernel = CMatrix::from_fn(d, kernel_idx.len(), |r, c| spec.eigenvectors[(r, kernel_idx[c])]);
        let log_weights = support.iter().map(|&k| spec.eigenvalues[k].ln()).collect();
        Ok(Self {
            basis,
            kernel,
            log_weights,
        })
    }

    fn rank(&self) -> usize {
        self.log_weights.len()
    }

    fn project(&self, op: &CMatrix<S>) -> CMatrix<S> {
        self.basis.adjoint() * op * &self.basis
    }

    /// `diag(ln σ) − Σ_b coeffs_b ops_b` in the support frame.
    fn exponent(&self, coeffs: &[S], ops: &[CMatrix<S>]) -> CMatrix<S> {
        let k = self.rank();
        let mut a = CMatrix::zeros(k, k);
        for (i, &l) in self.log_weights.iter().enumerate() {
            a[(i, i)] = Complex::new(l, S::zero());
        }
        for (&c, op) in coeffs.iter().zip(ops) {
            a -= op.map(|z| z * c);
        }
        a
    }
}

/// The normalized exponential of an exponent matrix, with exact log-weights.
#[derive(Clone, Debug)]
struct Evaluation<S: Scalar> {
    spectrum: Spectrum<S>,
    probs: Vec<S>,
    log_probs: Vec<S>,
    log_partition: S,
}

impl<S: Scalar> Evaluation<S> {
    fn of(exponent: &CMatrix<S>) -> Self {
        let spectrum = Spectrum::of_matrix(exponent);
        let top = spectrum.max_eigenvalue();
        let sum = compensated_sum(spectrum.eigenvalues.iter().map(|&a| (a - top).exp()));
        let log_partition = top + sum.ln();
        let log_probs: Vec<S> = spectrum.eigenvalues.iter().map(|&a| a - log_partition).collect();
        let probs = log_probs.iter().map(|&l| l.exp()).collect();
        Self {
            spectrum,
            probs,
            log_probs,
            log_partition,
        }
    }

    /// `W† A W` for an operator in the support frame.
    fn rotate(&self, op: &CMatrix<S>) -> CMatrix<S> {
        let w = &self.spectrum.eigenvectors;
        w.adjoint() * op * w
    }

    fn expectation_rotated(&self, rotated: &CMatrix<S>) -> S {
        compensated_sum(self.probs.iter().enumerate().map(|(i, &p)| p * rotated[(i, i)].re))
    }

    /// Kubo–Mori kernel `(p_i − p_j)/(ln p_i − ln p_j)`, equal to `p_i` on the diagonal.
    fn kernel(&self, i: usize, j: usize) -> S {
        let (pi, pj) = (self.probs[i], self.probs[j]);
        let delta = self.log_probs[i] - self.log_probs[j];
        if delta.abs() < S::lit(1e-8) {
            // p_i (1 − e^{−δ})/δ ≈ p_i (1 − δ/2 + δ²/6)
            let half = S::lit(0.5);
            let sixth = S::one() / S::lit(6.0);
            pi * (S::one() - half * delta + sixth * delta * delta)
        } else {
            (pi - pj) / delta
        }
    }

    /// Kubo–Mori covariance matrix of operators already rotated into this
    /// evaluation's eigenbasis.
    fn kubo_mori(&self, rotated: &[CMatrix<S>]) -> DMatrix<S> {
        let k = self.probs.len();
        let means: Vec<S> = rotated.iter().map(|r| self.expectation_rotated(r)).collect();
        let centered: Vec<CMatrix<S>> = rotated
            .iter()
            .zip(&means)
            .map(|(r, &m)| {
                let mut c = r.clone();
                for i in 0..k {
                    c[(i, i)].re -= m;
                }
                c
            })
            .collect();
        let kern = DMatrix::from_fn(k, k, |i, j| self.kernel(i, j));
        let n = rotated.len();
        let mut h = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v = compensated_sum((0..k).flat_map(|i| {
                    let (ca, cb, kern) = (&centered[a], &centered[b], &kern);
                    (0..k).map(move |j| kern[(i, j)] * (ca[(i, j)] * cb[(j, i)]).re)
                }));
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        h
    }

    /// The full-space density matrix `V W diag(p) W† V†`.
    fn state(&self, frame: &SupportFrame<S>) -> DensityMatrix<S> {
        let d = frame.basis.nrows();
        let k = frame.rank();
        let vw = &frame.basis * &self.spectrum.eigenvectors;
        let eigenvectors = CMatrix::from_fn(d, d, |r, c| {
            if c < k {
                vw[(r, c)]
            } else {
                frame.kernel[(r, c - k)]
            }
        });
        let mut eigenvalues = self.probs.clone();
        eigenvalues.resize(d, S::zero());
        DensityMatrix::from_spectrum(Spectrum {
            eigenvalues,
            eigenvectors,
        })
    }
}

fn check_lengths<S: Scalar>(values: &[S], observables: &ObservableSet<S>, sigma: &DensityMatrix<S>) -> Result<()> {
    if values.len() != observables.len() {
        return Err(Error::LengthMismatch {
            expected: observables.len(),
            found: values.len(),
        });
    }
    if observables.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: observables.dim(),
        });
    }
    Ok(())
}

fn evaluate_user<S: Scalar>(
    kappa: &[S],
    observables: &ObservableSet<S>,
    sigma: &DensityMatrix<S>,
) -> Result<(SupportFrame<S>, Vec<CMatrix<S>>, Evaluation<S>)> {
    check_lengths(kappa, observables, sigma)?;
    let frame = SupportFrame::of(sigma)?;
    let ops: Vec<CMatrix<S>> = observables
        .observables()
        .iter()
        .map(|o| frame.project(o.matrix()))
        .collect();
    let eval = Evaluation::of(&frame.exponent(kappa, &ops));
    Ok((frame, ops, eval))
}

/// `exp(ln σ − κ·F) / Z` on the support of σ.
pub fn gibbs_state<S: Scalar>(
    kappa: &[S],
    observables: &ObservableSet<S>,
    sigma: &DensityMatrix<S>,
) -> Result<DensityMatrix<S>> {
    let (frame, _, eval) = evaluate_user(kappa, observables, sigma)?;
    Ok(eval.state(&frame))
}

/// `ln tr exp(ln σ − κ·F)` over the support of σ; zero at κ = 0.
pub fn log_partition<S: Scalar>(kappa: &[S], observables: &ObservableSet<S>, sigma: &DensityMatrix<S>) -> Result<S> {
    Ok(evaluate_user(kappa, observables, sigma)?.2.log_partition)
}

/// `∂ ln Z / ∂κ_b = −⟨F_b⟩` at `gibbs_state(κ)`.
pub fn log_partition_gradient<S: Scalar>(
    kappa: &[S],
    observables: &ObservableSet<S>,
    sigma: &DensityMatrix<S>,
) -> Result<Vec<S>> {
    let (_, ops, eval) = evaluate_user(kappa, observables, sigma)?;
    Ok(ops
        .iter()
        .map(|o| -eval.expectation_rotated(&eval.rotate(o)))
        .collect())
}

/// Hessian of `ln Z`: the Kubo–Mori covariance of the observables at `gibbs_state(κ)`.
pub fn kubo_mori_hessian<S: Scalar>(
    kappa: &[S],
    observables: &ObservableSet<S>,
    sigma: &DensityMatrix<S>,
) -> Result<DMatrix<S>> {
    let (_, ops, eval) = evaluate_user(kappa, observables, sigma)?;
    let rotated: Vec<CMatrix<S>> = ops.iter().map(|o| eval.rotate(o)).collect();
    Ok(eval.kubo_mori(&rotated))
}

/// The dual objective `ψ(κ) = ln Z(κ) + κ·f`.
pub fn dual_objective<S: Scalar>(
    kappa: &[S],
    observables: &ObservableSet<S>,
    targets: &[S],
    sigma: &DensityMatrix<S>,
) -> Result<S> {
    check_lengths(targets, observables, sigma)?;
    let lz = log_partition(kappa, observables, sigma)?;
    Ok(lz + compensated_sum(kappa.iter().zip(targets).map(|(&k, &f)| k * f)))
}

/// `∇ψ(κ) = f − ⟨F⟩`.
pub fn dual_gradient<S: Scalar>(
    kappa: &[S],
    observables: &ObservableSet<S>,
    targets: &[S],
    sigma: &DensityMatrix<S>,
) -> Result<Vec<S>> {
    check_lengths(targets, observables, sigma)?;
    let g = log_partition_gradient(kappa, observables, sigma)?;
    Ok(g.iter().zip(targets).map(|(&gb, &f)| gb + f).collect())
}

/// A reference state, observables and Lagrange parameters, together with the
/// Gibbs state they realize.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsModel<S: Scalar> {
    pub sigma: DensityMatrix<S>,
    pub observables: ObservableSet<S>,
    pub kappa: Vec<S>,
    pub state: DensityMatrix<S>,
    pub log_partition: S,
}

impl<S: Scalar> GibbsModel<S> {
    pub fn new(kappa: Vec<S>, observables: ObservableSet<S>, sigma: DensityMatrix<S>) -> Result<Self> {
        let (frame, _, eval) = evaluate_user(&kappa, &observables, &sigma)?;
        Ok(Self {
            state: eval.state(&frame),
            log_partition: eval.log_partition,
            sigma,
            observables,
            kappa,
        })
    }

    /// `⟨F_b⟩` in the realized state.
    pub fn expectations(&self) -> Vec<S> {
        self.observables
            .observables()
            .iter()
            .map(|o| self.state.expectation(o).expect("shared dimension"))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport<S: Scalar> {
    pub model: GibbsModel<S>,
    pub iterations: usize,
    /// `max_b |⟨F_b⟩ − f_b|` at the returned state.
    pub residual: S,
    pub converged: bool,
}

/// The centered, orthonormalized observables inside the support frame, and
/// the linear map back to the caller's parametrization.
struct Reparametrization<S: Scalar> {
    /// Projected, uncentered user observables (k×k).
    user_ops: Vec<CMatrix<S>>,
    /// Orthonormal internal observables `E_j` (k×k).
    internal_ops: Vec<CMatrix<S>>,
    /// p×r map: `κ = to_user · θ`.
    to_user: DMatrix<S>,
    /// Internal targets `e_j`.
    internal_targets: Vec<S>,
    /// Identity components `tr(F_b)/k` removed by centering.
    shifts: Vec<S>,
}

impl<S: Scalar> Reparametrization<S> {
    fn new(frame: &SupportFrame<S>, observables: &ObservableSet<S>, targets: &[S], tolerance: S) -> Result<Self> {
        let k = frame.rank();
        let kk = S::from_usize_lossy(k);
        let user_ops: Vec<CMatrix<S>> = observables
            .observables()
            .iter()
            .map(|o| frame.project(o.matrix()))
            .collect();
        let p = user_ops.len();
        let shifts: Vec<S> = user_ops
            .iter()
            .map(|o| compensated_sum(o.diagonal().iter().map(|z| z.re)) / kk)
            .collect();
        let centered: Vec<CMatrix<S>> = user_ops
            .iter()
            .zip(&shifts)
            .map(|(o, &c)| {
                let mut m = o.clone();
                for i in 0..k {
                    m[(i, i)].re -= c;
                }
                m
            })
            .collect();
        let gram = DMatrix::from_fn(p, p, |a, b| trace_product(&centered[a], &centered[b]));
        if p == 0 {
            return Ok(Self {
                user_ops,
                internal_ops: Vec::new(),
                to_user: DMatrix::zeros(0, 0),
                internal_targets: Vec::new(),
                shifts,
            });
        }
        let eig = gram.symmetric_eigen();
        let top = eig.eigenvalues.iter().copied().fold(S::zero(), |a, b| a.max(b));
        let floor = S::independence_tolerance() * top.max(S::one());
        let offsets: Vec<S> = targets.iter().zip(&shifts).map(|(&f, &c)| f - c).collect();

        let mut kept = Vec::new();
        for j in 0..p {
            let q = eig.eigenvectors.column(j);
            let projected = compensated_sum((0..p).map(|a| q[a] * offsets[a]));
            if eig.eigenvalues[j] > floor {
                kept.push(j);
            } else if projected.abs() > tolerance {
                // a combination of observables is constant on supp σ but
                // the targets ask for a different value
                return Err(Error::InfeasibleTargets {
                    kappa_norm: f64::INFINITY,
                });
            }
        }
        let r = kept.len();
        let mut to_user = DMatrix::zeros(p, r);
        let mut internal_ops = Vec::with_capacity(r);
        let mut internal_targets = Vec::with_capacity(r);
        for (col, &j) in kept.iter().enumerate() {
            let inv_sqrt = S::one() / eig.eigenvalues[j].sqrt();
            let q = eig.eigenvectors.column(j);
            let mut e = CMatrix::zeros(k, k);
            for a in 0..p {
                to_user[(a, col)] = q[a] * inv_sqrt;
                e += centered[a].map(|z| z * (q[a] * inv_sqrt));
            }
            internal_ops.push(e);
            internal_targets.push(compensated_sum((0..p).map(|a| q[a] * offsets[a])) * inv_sqrt);
        }
        Ok(Self {
            user_ops,
            internal_ops,
            to_user,
            internal_targets,
            shifts,
        })
    }

    fn kappa(&self, theta: &DVector<S>) -> Vec<S> {
        (&self.to_user * theta).iter().copied().collect()
    }
}

/// Dual value, gradient and evaluation at internal parameters θ.
struct DualPoint<S: Scalar> {
    eval: Evaluation<S>,
    value: S,
    gradient: DVector<S>,
    rotated: Vec<CMatrix<S>>,
}

fn dual_point<S: Scalar>(frame: &SupportFrame<S>, rep: &Reparametrization<S>, theta: &DVector<S>) -> DualPoint<S> {
    let coeffs: Vec<S> = theta.iter().copied().collect();
    let eval = Evaluation::of(&frame.exponent(&coeffs, &rep.internal_ops));
    let rotated: Vec<CMatrix<S>> = rep.internal_ops.iter().map(|o| eval.rotate(o)).collect();
    let gradient = DVector::from_iterator(
        rotated.len(),
        rotated
            .iter()
            .zip(&rep.internal_targets)
            .map(|(r, &e)| e - eval.expectation_rotated(r)),
    );
    let value = eval.log_partition + compensated_sum(theta.iter().zip(&rep.internal_targets).map(|(&t, &e)| t * e));
    DualPoint {
        eval,
        value,
        gradient,
        rotated,
    }
}

fn user_residual<S: Scalar>(eval: &Evaluation<S>, user_ops: &[CMatrix<S>], targets: &[S]) -> S {
    user_ops
        .iter()
        .zip(targets)
        .map(|(o, &f)| (eval.expectation_rotated(&eval.rotate(o)) - f).abs())
        .fold(S::zero(), |a, b| a.max(b))
}

fn max_abs<S: Scalar>(xs: impl IntoIterator<Item = S>) -> S {
    xs.into_iter().fold(S::zero(), |a, b| a.max(b.abs()))
}

/// Solves `min S(μ‖σ)` subject to `⟨F_b⟩_μ = f_b`, with default options.
///
/// With `σ = I/d` this is entropy maximization under the constraints.
pub fn fit_gibbs<S: Scalar>(
    observables: &ObservableSet<S>,
    targets: &[S],
    sigma: &DensityMatrix<S>,
) -> Result<FitReport<S>> {
    fit_gibbs_with(observables, targets, sigma, &FitOptions::default())
}

const POLISH_STEPS: usize = 3;

pub fn fit_gibbs_with<S: Scalar>(
    observables: &ObservableSet<S>,
    targets: &[S],
    sigma: &DensityMatrix<S>,
    options: &FitOptions<S>,
) -> Result<FitReport<S>> {
    check_lengths(targets, observables, sigma)?;
    let frame = SupportFrame::of(sigma)?;
    let rep = Reparametrization::new(&frame, observables, targets, options.tolerance)?;
    let r = rep.internal_ops.len();
    let mut theta = DVector::zeros(r);
    let mut point = dual_point(&frame, &rep, &theta);

    for iteration in 0..=options.max_iterations {
        let residual = user_residual(&point.eval, &rep.user_ops, targets);
        let grad_norm = max_abs(point.gradient.iter().copied());
        let hessian = point.eval.kubo_mori(&point.rotated);
        let cholesky = hessian.cholesky();
        if grad_norm <= options.tolerance && residual <= options.tolerance {
            let kappa = rep.kappa(&theta);
            // on the boundary κ runs off linearly while the residual decays
            // geometrically, so the residual test passes at finite κ
            let remaining = match &cholesky {
                Some(ch) => max_abs(rep.kappa(&ch.solve(&point.gradient))),
                None if r == 0 => S::zero(),
                None => S::lit(f64::INFINITY),
            };
            if remaining > options.boundary_step {
                return Err(Error::InfeasibleTargets {
                    kappa_norm: max_abs(kappa).as_f64(),
                });
            }
            // a few full Newton steps take the residual down to rounding
            let (mut residual, mut polished) = (residual, 0);
            let mut cholesky = cholesky;
            let floor = S::lit(16.0) * S::default_epsilon() * (S::one() + max_abs(targets.iter().copied()));
            while polished < POLISH_STEPS && residual > floor {
                let Some(ch) = &cholesky else { break };
                let trial = &theta - ch.solve(&point.gradient);
                let candidate = dual_point(&frame, &rep, &trial);
                let r_new = user_residual(&candidate.eval, &rep.user_ops, targets);
                if !(r_new < residual) {
                    break;
                }
                cholesky = candidate.eval.kubo_mori(&candidate.rotated).cholesky();
                (theta, point, residual) = (trial, candidate, r_new);
                polished += 1;
            }
            let kappa = rep.kappa(&theta);
            let model = GibbsModel {
                state: point.eval.state(&frame),
                // centering shifted the exponent by κ·c
                log_partition: point.eval.log_partition
                    - compensated_sum(kappa.iter().zip(&rep.shifts).map(|(&kb, &c)| kb * c)),
                sigma: sigma.clone(),
                observables: observables.clone(),
                kappa,
            };
            return Ok(FitReport {
                model,
                iterations: iteration + polished,
                residual,
                converged: true,
            });
        }
        if iteration == options.max_iterations {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual: residual.as_f64(),
            });
        }

        let step = match cholesky {
            Some(ch) => -ch.solve(&point.gradient),
            None => -point.gradient.clone(),
        };
        let slope = point.gradient.dot(&step);
        // below this the sufficient-decrease test only sees rounding in ψ
        let noise = S::lit(64.0) * S::default_epsilon() * (S::one() + point.value.abs());
        let mut t = S::one();
        let mut accepted = None;
        for _ in 0..=options.max_backtracks {
            let trial = &theta + &step * t;
            let candidate = dual_point(&frame, &rep, &trial);
            let armijo = candidate.value <= point.value + options.armijo_slope * t * slope;
            let flat = -slope * t <= noise
                && candidate.value <= point.value + noise
                && max_abs(candidate.gradient.iter().copied()) < grad_norm;
            if armijo || flat {
                accepted = Some((trial, candidate));
                break;
            }
            t *= options.backtrack_factor;
        }
        let Some((next_theta, next_point)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual: residual.as_f64(),
            });
        };
        theta = next_theta;
        point = next_point;
        let kappa_norm = max_abs(rep.kappa(&theta));
        if kappa_norm > options.kappa_limit {
            return Err(Error::InfeasibleTargets {
                kappa_norm: kappa_norm.as_f64(),
            });
        }
    }
    unreachable!("loop returns on its final iteration")
}

/// `|S(μ‖ρ) − S(μ‖μ^ρ_g) − S(μ^ρ_g‖ρ)|` with `g = ⟨F⟩_μ`.
pub fn pythagoras_residual<S: Scalar>(
    mu: &DensityMatrix<S>,
    rho: &DensityMatrix<S>,
    observables: &ObservableSet<S>,
) -> Result<S> {
    let g = observables
        .observables()
        .iter()
        .map(|o| mu.expectation(o))
        .collect::<Result<Vec<_>>>()?;
    let projected = fit_gibbs(observables, &g, rho)?.model.state;
    let terms = [
        relative_entropy(mu, rho)?,
        relative_entropy(mu, &projected)?,
        relative_entropy(&projected, rho)?,
    ];
    match terms {
        [Divergence::Finite(whole), Divergence::Finite(a), Divergence::Finite(b)] => Ok((whole - a - b).abs()),
        _ => Err(Error::InvalidInput(
            "relative entropy is infinite; the decomposition needs supp μ ⊆ supp ρ".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::HermitianOperator;
    use crate::random::{random_density_matrix, seeded};
    use crate::state::von_neumann_entropy;

    fn mixed(d: usize) -> DensityMatrix<f64> {
        DensityMatrix::maximally_mixed(d).unwrap()
    }

    fn z_set() -> ObservableSet<f64> {
        ObservableSet::paulis(&["Z"]).unwrap()
    }

    #[test]
    fn zero_kappa_reproduces_sigma() {
        let mut rng = seeded(2);
        let sigma = random_density_matrix::<f64>(3, &mut rng);
        let obs = ObservableSet::new(
            vec!["a".into()],
            vec![crate::random::random_hermitian(3, &mut rng)],
        )
        .unwrap();
        let state = gibbs_state(&[0.0], &obs, &sigma).unwrap();
        assert!((state.matrix() - sigma.matrix()).norm() < 1e-12);
        assert!(log_partition(&[0.0], &obs, &sigma).unwrap().abs() < 1e-14);
    }

    #[test]
    fn qubit_z_expectation_is_minus_tanh() {
        for lambda in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let state = gibbs_state(&[lambda], &z_set(), &mixed(2)).unwrap();
            let z = state.expectation(&HermitianOperator::pauli_z()).unwrap();
            assert!((z + f64::tanh(lambda)).abs() < 1e-14);
            let lz = log_partition(&[lambda], &z_set(), &mixed(2)).unwrap();
            let oracle = ((-lambda).exp() + lambda.exp()).ln() - 2f64.ln();
            assert!((lz - oracle).abs() < 1e-14);
            assert!((lz - lambda.cosh().ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn canonical_form_matches_direct_exponential() {
        let mut rng = seeded(4);
        let obs = ObservableSet::paulis(&["ZI", "XX", "YZ"]).unwrap();
        let lambda = [0.4, -0.9, 0.25];
        let state = gibbs_state(&lambda, &obs, &mixed(4)).unwrap();
        let h = HermitianOperator::linear_combination(&lambda, obs.observables()).unwrap();
        let unnorm = crate::operators::matrix_exp(&h.scaled(-1.0));
        let direct = DensityMatrix::normalized(unnorm).unwrap();
        assert!((state.matrix() - direct.matrix()).norm() < 1e-12);
        let _ = &mut rng;
    }

    #[test]
    fn fit_examples() {
        let report = fit_gibbs(&z_set(), &[0.5], &mixed(2)).unwrap();
        assert!(report.converged);
        assert!((report.model.kappa[0] + 0.5f64.atanh()).abs() < 1e-10);
        assert!((report.model.kappa[0] + 0.549306).abs() < 1e-6);
        assert!(report.residual <= 1e-10);

        let err = fit_gibbs(&z_set(), &[1.2], &mixed(2)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleTargets { .. }));
        let err = fit_gibbs(&z_set(), &[1.0], &mixed(2)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleTargets { .. }));
    }

    #[test]
    fn targets_already_met_give_zero_kappa() {
        let mut rng = seeded(6);
        let sigma = random_density_matrix::<f64>(4, &mut rng);
        let obs = ObservableSet::paulis(&["ZZ", "XI"]).unwrap();
        let t: Vec<f64> = obs.observables().iter().map(|o| sigma.expectation(o).unwrap()).collect();
        let report = fit_gibbs(&obs, &t, &sigma).unwrap();
        assert_eq!(report.iterations, 0);
        assert!(report.model.kappa.iter().all(|k| *k == 0.0));
        assert!((report.model.state.matrix() - sigma.matrix()).norm() < 1e-12);
    }

    #[test]
    fn empty_observable_set_returns_sigma() {
        let mut rng = seeded(7);
        let sigma = random_density_matrix::<f64>(3, &mut rng);
        let report = fit_gibbs(&ObservableSet::empty(3).unwrap(), &[], &sigma).unwrap();
        assert!((report.model.state.matrix() - sigma.matrix()).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_reference_keeps_support() {
        // σ supported on span{|0>, |1>} of a qutrit
        let sigma = DensityMatrix::<f64>::new(HermitianOperator::diagonal(&[0.5, 0.5, 0.0]).unwrap()).unwrap();
        let obs = ObservableSet::new(
            vec!["z".into()],
            vec![HermitianOperator::diagonal(&[1.0, -1.0, 0.0]).unwrap()],
        )
        .unwrap();
        let report = fit_gibbs(&obs, &[0.2], &sigma).unwrap();
        let st = &report.model.state;
        assert!(st.matrix()[(2, 2)].norm() < 1e-15);
        assert!((st.matrix()[(0, 0)].re - 0.6).abs() < 1e-10);
        // third level unreachable: ⟨diag(0,0,1)⟩ = 0.3 infeasible on supp σ
        let obs = ObservableSet::new(
            vec!["n2".into()],
            vec![HermitianOperator::diagonal(&[0.0, 0.0, 1.0]).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            fit_gibbs(&obs, &[0.3], &sigma),
            Err(Error::InfeasibleTargets { .. })
        ));
        assert!(fit_gibbs(&obs, &[0.0], &sigma).is_ok());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded(12);
        let sigma = random_density_matrix::<f64>(4, &mut rng);
        let obs = ObservableSet::paulis(&["ZI", "XY", "IY"]).unwrap();
        let kappa = [0.3, -0.5, 0.8];
        let grad = log_partition_gradient(&kappa, &obs, &sigma).unwrap();
        let h = 1e-5;
        for b in 0..3 {
            let mut up = kappa;
            let mut down = kappa;
            up[b] += h;
            down[b] -= h;
            let fd = (log_partition(&up, &obs, &sigma).unwrap() - log_partition(&down, &obs, &sigma).unwrap()) / (2.0 * h);
            assert!((fd - grad[b]).abs() <= 1e-6 * grad[b].abs().max(1e-3), "{fd} vs {}", grad[b]);
        }
    }

    #[test]
    fn entropy_is_maximal_on_constraint_set() {
        let mut rng = seeded(21);
        let obs = ObservableSet::paulis(&["Z", "X"]).unwrap();
        let report = fit_gibbs(&obs, &[0.3, -0.2], &mixed(2)).unwrap();
        let h = von_neumann_entropy(&report.model.state);
        // feasible perturbations along Y keep ⟨Z⟩, ⟨X⟩
        for _ in 0..20 {
            let t: f64 = rand::Rng::random_range(&mut rng, -0.5..0.5);
            let other = DensityMatrix::from_bloch(-0.2, t, 0.3).unwrap();
            assert!(von_neumann_entropy(&other) <= h + 1e-10);
        }
    }

    #[test]
    fn f32_fit() {
        let sigma = DensityMatrix::<f32>::maximally_mixed(2).unwrap();
        let obs = ObservableSet::<f32>::paulis(&["Z"]).unwrap();
        let r = fit_gibbs(&obs, &[0.5f32], &sigma).unwrap();
        assert!((r.model.kappa[0] + 0.5f32.atanh()).abs() < 1e-4);
    }
}
