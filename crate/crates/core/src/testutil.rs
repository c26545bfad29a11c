//! Helpers shared by the unit tests.

use nalgebra::{Dim, Matrix, RawStorage};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, C64};

/// Builds a real-valued complex matrix from row-major entries.
pub fn cmat(rows: usize, cols: usize, row_major: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, row_major.iter().map(|&x| C64::from(x)))
}

pub fn rand_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn rand_hpd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let a = rand_matrix(rng, n, n);
    &a * a.adjoint() + ComplexMatrix::identity(n, n) * C64::from(0.1)
}

/// `||a - b|| / ||b||`, falling back to the absolute error when `b` is zero.
pub fn rel_err<R1, C1, S1, R2, C2, S2>(a: &Matrix<C64, R1, C1, S1>, b: &Matrix<C64, R2, C2, S2>) -> f64
where
    R1: Dim,
    C1: Dim,
    S1: RawStorage<C64, R1, C1>,
    R2: Dim,
    C2: Dim,
    S2: RawStorage<C64, R2, C2>,
{
    assert_eq!(a.shape(), b.shape());
    let diff: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let base: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if base == 0.0 {
        libm::sqrt(diff)
    } else {
        libm::sqrt(diff / base)
    }
}
