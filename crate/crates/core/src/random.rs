//! Seeded random instances: Hermitian matrices, Ginibre states, Haar unitaries.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operators::{CMatrix, HermitianOperator};
use crate::scalar::Scalar;
use crate::state::DensityMatrix;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `index` of a base seed; streams are independent of
/// the order in which they are consumed.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn ginibre<S: Scalar>(dim: usize, rng: &mut (impl Rng + ?Sized)) -> CMatrix<S> {
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(S::lit(re), S::lit(im))
    })
}

/// GUE-distributed Hermitian matrix.
pub fn random_hermitian<S: Scalar>(dim: usize, rng: &mut (impl Rng + ?Sized)) -> HermitianOperator<S> {
    HermitianOperator::from_matrix_unchecked(ginibre(dim, rng))
}

/// Hilbert–Schmidt random state `G G† / tr(G G†)`; full rank almost surely.
pub fn random_density_matrix<S: Scalar>(dim: usize, rng: &mut (impl Rng + ?Sized)) -> DensityMatrix<S> {
    let g = ginibre::<S>(dim, rng);
    let op = HermitianOperator::from_matrix_unchecked(&g * g.adjoint());
    DensityMatrix::normalized(op).expect("Ginibre product is positive")
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<S: Scalar>(dim: usize, rng: &mut (impl Rng + ?Sized)) -> CMatrix<S> {
    let qr = ginibre::<S>(dim, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..dim {
        let d = r[(c, c)];
        let n = crate::operators::modulus(d);
        if n > S::zero() {
            let phase = d / Complex::new(n, S::zero());
            for row in 0..dim {
                q[(row, c)] *= phase;
            }
        }
    }
    q
}
