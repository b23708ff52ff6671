//! Complex-matrix primitives shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Sample a scalar from the circularly symmetric complex Gaussian CN(0,1):
/// real and imaginary parts are independent N(0, 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// An `rows x cols` matrix with i.i.d. CN(0,1) entries.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Hermitian part (A + A^H)/2.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Check that all entries are finite.
pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigenvectors of a Hermitian matrix belonging to its `count` smallest
/// eigenvalues, in ascending eigenvalue order (ties broken by original
/// eigenvalue index, so the result is deterministic).
pub fn smallest_eigenvectors(a: &CMat, count: usize) -> CMat {
    debug_assert!(a.is_square());
    debug_assert!(count <= a.nrows());
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut out = CMat::zeros(a.nrows(), count);
    for (k, &idx) in order.iter().take(count).enumerate() {
        out.set_column(k, &eig.eigenvectors.column(idx));
    }
    out
}

/// Smallest and largest singular values of a rectangular matrix.
pub fn singular_value_extremes(a: &CMat) -> (f64, f64) {
    let sv = a.clone().singular_values();
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for s in sv.iter() {
        min = min.min(*s);
        max = max.max(*s);
    }
    (min, max)
}

/// Block-diagonal matrix from the given blocks.
pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}
