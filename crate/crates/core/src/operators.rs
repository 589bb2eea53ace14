//! Dense Hermitian operators and their spectral calculus.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

/// Dense complex matrix.
pub type CMatrix<S> = DMatrix<Complex<S>>;

/// A d×d complex Hermitian matrix, d ≥ 2.
///
/// The stored matrix is exactly Hermitian: construction symmetrizes
/// the input as `(A + A†)/2` after checking the deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator<S: Scalar> {
    matrix: CMatrix<S>,
}

/// Eigendecomposition `A = U diag(λ) U†`, eigenvalues in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<S: Scalar> {
    pub eigenvalues: Vec<S>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: CMatrix<S>,
}

pub(crate) fn modulus<S: Scalar>(z: Complex<S>) -> S {
    z.re.hypot(z.im)
}

pub(crate) fn max_hermitian_deviation<S: Scalar>(m: &CMatrix<S>) -> S {
    let n = m.nrows();
    let mut dev = S::zero();
    for i in 0..n {
        for j in i..n {
            let d = modulus(m[(i, j)] - m[(j, i)].conj());
            if d > dev {
                dev = d;
            }
        }
    }
    dev
}

pub(crate) fn symmetrize<S: Scalar>(m: &CMatrix<S>) -> CMatrix<S> {
    let half = Complex::new(S::lit(0.5), S::zero());
    (m + m.adjoint()) * half
}

/// Real part of tr(A·B) without forming the product.
pub(crate) fn trace_product<S: Scalar>(a: &CMatrix<S>, b: &CMatrix<S>) -> S {
    let n = a.nrows();
    compensated_sum((0..n).flat_map(|i| (0..n).map(move |j| (a[(i, j)] * b[(j, i)]).re)))
}

fn cplx<S: Scalar>(re: f64, im: f64) -> Complex<S> {
    Complex::new(S::lit(re), S::lit(im))
}

impl<S: Scalar> HermitianOperator<S> {
    /// Checks hermiticity at the in-code tolerance and symmetrizes.
    pub fn new(matrix: CMatrix<S>) -> Result<Self> {
        Self::with_tolerance(matrix, S::hermiticity_tolerance())
    }

    pub fn with_tolerance(matrix: CMatrix<S>, tolerance: S) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows < 2 {
            return Err(Error::DimensionTooSmall(rows));
        }
        let deviation = max_hermitian_deviation(&matrix);
        if !(deviation <= tolerance) {
            return Err(Error::NotHermitian {
                deviation: deviation.as_f64(),
            });
        }
        Ok(Self {
            matrix: symmetrize(&matrix),
        })
    }

    /// Builds from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        let m = CMatrix::from_row_iterator(dim, dim, entries.iter().map(|&x| cplx(x, 0.0)));
        Self::new(m)
    }

    /// Symmetrizes without checking; for matrices Hermitian by construction.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix<S>) -> Self {
        Self {
            matrix: symmetrize(&matrix),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[S]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex::new(v, S::zero());
        }
        Ok(Self { matrix: m })
    }

    pub fn pauli_x() -> Self {
        Self::pauli_string("X").expect("valid Pauli")
    }

    pub fn pauli_y() -> Self {
        Self::pauli_string("Y").expect("valid Pauli")
    }

    pub fn pauli_z() -> Self {
        Self::pauli_string("Z").expect("valid Pauli")
    }

    /// Tensor product of single-qubit Paulis, e.g. `"ZI"` = Z⊗I.
    pub fn pauli_string(word: &str) -> Result<Self> {
        let mut acc: Option<CMatrix<S>> = None;
        for c in word.chars() {
            let m = match c.to_ascii_uppercase() {
                'I' => CMatrix::from_row_slice(2, 2, &[cplx(1., 0.), cplx(0., 0.), cplx(0., 0.), cplx(1., 0.)]),
                'X' => CMatrix::from_row_slice(2, 2, &[cplx(0., 0.), cplx(1., 0.), cplx(1., 0.), cplx(0., 0.)]),
                'Y' => CMatrix::from_row_slice(2, 2, &[cplx(0., 0.), cplx(0., -1.), cplx(0., 1.), cplx(0., 0.)]),
                'Z' => CMatrix::from_row_slice(2, 2, &[cplx(1., 0.), cplx(0., 0.), cplx(0., 0.), cplx(-1., 0.)]),
                other => {
                    return Err(Error::InvalidInput(format!(
                        "`{other}` is not a Pauli letter"
                    )))
                }
            };
            acc = Some(match acc {
                None => m,
                Some(a) => a.kronecker(&m),
            });
        }
        let matrix = acc.ok_or_else(|| Error::InvalidInput("empty Pauli string".into()))?;
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<S> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<S> {
        self.matrix
    }

    pub fn trace(&self) -> S {
        compensated_sum(self.matrix.diagonal().iter().map(|z| z.re))
    }

    /// Hilbert–Schmidt inner product tr(A B), real for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> Result<S> {
        self.check_dim(other.dim())?;
        Ok(trace_product(&self.matrix, &other.matrix))
    }

    pub fn frobenius_norm(&self) -> S {
        self.matrix.norm()
    }

    pub fn scaled(&self, factor: S) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * factor),
        }
    }

    /// `Σ_k coefficients[k] · terms[k]`.
    pub fn linear_combination(coefficients: &[S], terms: &[Self]) -> Result<Self> {
        if coefficients.len() != terms.len() {
            return Err(Error::LengthMismatch {
                expected: terms.len(),
                found: coefficients.len(),
            });
        }
        let dim = terms.first().map(Self::dim).ok_or(Error::EmptySupport)?;
        let mut acc = CMatrix::zeros(dim, dim);
        for (c, t) in coefficients.iter().zip(terms) {
            if t.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: t.dim(),
                });
            }
            acc += t.matrix.map(|z| z * *c);
        }
        Ok(Self { matrix: acc })
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// `U A U†` for a unitary `U`.
    pub fn conjugated_by(&self, unitary: &CMatrix<S>) -> Result<Self> {
        self.check_dim(unitary.nrows())?;
        Ok(Self::from_matrix_unchecked(
            unitary * &self.matrix * unitary.adjoint(),
        ))
    }

    pub fn eigen(&self) -> Spectrum<S> {
        Spectrum::of_matrix(&self.matrix)
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if self.dim() == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            })
        }
    }
}

impl<S: Scalar> Add for &HermitianOperator<S> {
    type Output = HermitianOperator<S>;
    fn add(self, rhs: Self) -> HermitianOperator<S> {
        HermitianOperator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl<S: Scalar> Sub for &HermitianOperator<S> {
    type Output = HermitianOperator<S>;
    fn sub(self, rhs: Self) -> HermitianOperator<S> {
        HermitianOperator {
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl<S: Scalar> Mul<S> for &HermitianOperator<S> {
    type Output = HermitianOperator<S>;
    fn mul(self, rhs: S) -> HermitianOperator<S> {
        self.scaled(rhs)
    }
}

/// Lexicographic comparison of two columns by (re, im).
fn compare_columns<S: Scalar>(m: &CMatrix<S>, a: usize, b: usize) -> Ordering {
    for r in 0..m.nrows() {
        let (x, y) = (m[(r, a)], m[(r, b)]);
        let ord = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

impl<S: Scalar> Spectrum<S> {
    /// Symmetrizes, diagonalizes, fixes eigenvector phases (largest-modulus
    /// component real and positive) and sorts eigenvalues descending with
    /// ties broken by eigenvector order.
    pub(crate) fn of_matrix(m: &CMatrix<S>) -> Self {
        let n = m.nrows();
        let eig = symmetrize(m).symmetric_eigen();
        let mut vectors = eig.eigenvectors;
        for c in 0..n {
            let mut best = 0;
            let mut best_norm = S::zero();
            for r in 0..n {
                let v = modulus(vectors[(r, c)]);
                if v > best_norm {
                    best_norm = v;
                    best = r;
                }
            }
            if best_norm > S::zero() {
                let phase = vectors[(best, c)].conj() / Complex::new(best_norm, S::zero());
                for r in 0..n {
                    vectors[(r, c)] *= phase;
                }
                vectors[(best, c)].im = S::zero();
            }
        }
        let values: Vec<S> = eig.eigenvalues.iter().copied().collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            values[b]
                .partial_cmp(&values[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| compare_columns(&vectors, a, b))
        });
        let eigenvalues = order.iter().map(|&i| values[i]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
        Spectrum {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> S {
        self.eigenvalues.first().copied().unwrap_or_else(S::zero)
    }

    pub fn min_eigenvalue(&self) -> S {
        self.eigenvalues.last().copied().unwrap_or_else(S::zero)
    }

    /// Eigenvalues at or below this threshold are treated as zero.
    pub fn support_threshold(&self) -> S {
        S::support_tolerance() * self.max_eigenvalue().max(S::zero())
    }

    /// Indices of eigenvalues strictly above the support threshold.
    pub fn support(&self) -> Vec<usize> {
        let t = self.support_threshold();
        (0..self.dim()).filter(|&k| self.eigenvalues[k] > t).collect()
    }

    /// `U diag(values) U†` for arbitrary per-eigenvalue weights.
    pub(crate) fn compose(&self, values: &[S]) -> CMatrix<S> {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (c, &v) in values.iter().enumerate() {
            for r in 0..n {
                scaled[(r, c)] *= v;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// Eigenvector `k` as a column.
    pub(crate) fn vector(&self, k: usize) -> nalgebra::DVector<Complex<S>> {
        self.eigenvectors.column(k).into_owned()
    }
}

/// `U f(Λ) U†` for `A = U Λ U†`.
pub fn hermitian_function<S: Scalar>(
    op: &HermitianOperator<S>,
    f: impl Fn(S) -> S,
) -> HermitianOperator<S> {
    let spec = op.eigen();
    let mapped: Vec<S> = spec.eigenvalues.iter().map(|&x| f(x)).collect();
    HermitianOperator::from_matrix_unchecked(spec.compose(&mapped))
}

pub fn matrix_exp<S: Scalar>(op: &HermitianOperator<S>) -> HermitianOperator<S> {
    hermitian_function(op, |x| x.exp())
}

/// Matrix logarithm; every eigenvalue must lie above the support tolerance.
pub fn matrix_log<S: Scalar>(op: &HermitianOperator<S>) -> Result<HermitianOperator<S>> {
    let spec = op.eigen();
    let threshold = spec.support_threshold();
    let smallest = spec.min_eigenvalue();
    if !(smallest > threshold) || !(smallest > S::zero()) {
        return Err(Error::LogOfSingular {
            eigenvalue: smallest.as_f64(),
        });
    }
    let mapped: Vec<S> = spec.eigenvalues.iter().map(|&x| x.ln()).collect();
    Ok(HermitianOperator::from_matrix_unchecked(spec.compose(&mapped)))
}
