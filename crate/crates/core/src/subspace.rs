//! Grassmann-manifold geometry: truncated unitary representatives, QR
//! factors, chordal distance, Haar sampling and orthogonal complements.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, complex_gaussian_matrix, singular_value_extremes, CMat};
use num_complex::Complex64;
use rand::Rng;

/// Orthonormality tolerance for algebraic identities.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Relative singular-value threshold below which a matrix is treated as
/// rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// A point on the complex Grassmann manifold G_{n,p}: a p-dimensional
/// subspace of C^n, represented by an n x p matrix with orthonormal columns.
///
/// Only the column space is meaningful; two bases B and B*O with O unitary
/// represent the same point.
#[derive(Debug, Clone)]
pub struct GrassmannPoint {
    basis: CMat,
}

impl GrassmannPoint {
    /// Wrap a basis, validating that its columns are orthonormal.
    pub fn new(basis: CMat) -> Result<Self> {
        let p = basis.ncols();
        if basis.nrows() < p || p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "basis must be n x p with n >= p >= 1, got {} x {}",
                basis.nrows(),
                p
            )));
        }
        if !all_finite(&basis) {
            return Err(Error::NumericalFailure(
                "basis contains non-finite entries".into(),
            ));
        }
        let gram = basis.adjoint() * &basis;
        let defect = (gram - CMat::identity(p, p)).norm();
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::NumericalFailure(format!(
                "basis columns are not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Wrap a basis that is known to be orthonormal by construction.
    pub(crate) fn from_orthonormal(basis: CMat) -> Self {
        debug_assert!(
            (basis.adjoint() * &basis - CMat::identity(basis.ncols(), basis.ncols())).norm()
                < 1e-8,
            "basis not orthonormal"
        );
        Self { basis }
    }

    /// Ambient dimension n.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Subspace dimension p.
    pub fn subspace_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn into_basis(self) -> CMat {
        self.basis
    }

    /// Orthogonal projector B * B^H onto the subspace.
    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }
}

/// Thin QR factorization A = F * C with the orthonormal factor returned as a
/// Grassmann point and C upper triangular with strictly positive real
/// diagonal (which pins a unique representative).
///
/// Rejects rank-deficient input: the smallest singular value must exceed
/// `RANK_TOL` times the largest.
pub fn qr_orthonormal_factor(a: &CMat) -> Result<(GrassmannPoint, CMat)> {
    let (n, p) = (a.nrows(), a.ncols());
    if n < p || p == 0 {
        return Err(Error::DimensionMismatch(format!(
            "QR factor requires n >= p >= 1, got {n} x {p}"
        )));
    }
    let (sigma_min, sigma_max) = singular_value_extremes(a);
    if sigma_min < RANK_TOL * sigma_max {
        return Err(Error::RankDeficient {
            sigma_min,
            sigma_max,
        });
    }
    let qr = a.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    // Rotate column phases so diag(C) is real positive.
    for k in 0..p {
        let d = r[(k, k)];
        let mag = d.norm();
        if mag < f64::MIN_POSITIVE {
            return Err(Error::RankDeficient {
                sigma_min,
                sigma_max,
            });
        }
        let phase = d / mag;
        let scale = phase.conj();
        for i in 0..n {
            q[(i, k)] *= phase;
        }
        for j in 0..p {
            r[(k, j)] *= scale;
        }
        r[(k, k)] = Complex64::new(mag, 0.0);
    }
    Ok((GrassmannPoint::from_orthonormal(q), r))
}

/// Squared chordal distance between two subspaces with matching (n, p).
///
/// Uses d_c^2(X, Y) = p - ||X^H Y||_F^2, algebraically equal to the
/// projector-difference form ||XX^H - YY^H||_F^2 / 2.
pub fn chordal_distance_sq(x: &GrassmannPoint, y: &GrassmannPoint) -> Result<f64> {
    if x.ambient_dim() != y.ambient_dim() || x.subspace_dim() != y.subspace_dim() {
        return Err(Error::DimensionMismatch(format!(
            "chordal distance requires matching shapes, got ({}, {}) vs ({}, {})",
            x.ambient_dim(),
            x.subspace_dim(),
            y.ambient_dim(),
            y.subspace_dim()
        )));
    }
    let gram = x.basis().adjoint() * y.basis();
    Ok((x.subspace_dim() as f64 - gram.norm_squared()).max(0.0))
}

/// Chordal distance d_c(X, Y) in [0, sqrt(p)]; invariant under
/// right-multiplication of either basis by a unitary matrix.
pub fn chordal_distance(x: &GrassmannPoint, y: &GrassmannPoint) -> Result<f64> {
    chordal_distance_sq(x, y).map(f64::sqrt)
}

/// Draw a Haar-distributed point on G_{n,p} by orthonormalizing an i.i.d.
/// complex Gaussian matrix. The positive-diagonal QR convention makes the
/// basis itself Haar on the set of truncated unitary matrices.
pub fn haar_truncated_unitary<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    rng: &mut R,
) -> Result<GrassmannPoint> {
    if p > n || p == 0 {
        return Err(Error::DimensionMismatch(format!(
            "Haar sample requires 1 <= p <= n, got n={n}, p={p}"
        )));
    }
    let g = complex_gaussian_matrix(rng, n, p);
    let (f, _) = qr_orthonormal_factor(&g)?;
    Ok(f)
}

/// A random orthonormal basis of the orthogonal complement of F: the
/// returned point has shape (n, n-p), satisfies F^H * F^c = 0, and is Haar
/// distributed within the complement.
pub fn orthonormal_complement<R: Rng + ?Sized>(
    f: &GrassmannPoint,
    rng: &mut R,
) -> Result<GrassmannPoint> {
    let (n, p) = (f.ambient_dim(), f.subspace_dim());
    if p >= n {
        return Err(Error::DimensionMismatch(format!(
            "complement of G_{{{n},{p}}} is empty"
        )));
    }
    let g = complex_gaussian_matrix(rng, n, n - p);
    let projected = &g - f.basis() * (f.basis().adjoint() * &g);
    let (fc, _) = qr_orthonormal_factor(&projected)?;
    Ok(fc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian_matrix;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_vector(n: usize, k: usize) -> GrassmannPoint {
        let mut m = CMat::zeros(n, 1);
        m[(k, 0)] = Complex64::new(1.0, 0.0);
        GrassmannPoint::new(m).unwrap()
    }

    /// Independent oracle: projector-difference form of the chordal distance.
    fn chordal_by_projectors(x: &GrassmannPoint, y: &GrassmannPoint) -> f64 {
        ((x.projector() - y.projector()).norm_squared() / 2.0).sqrt()
    }

    #[test]
    fn qr_identity_is_identity() {
        let a = CMat::identity(3, 3);
        let (f, c) = qr_orthonormal_factor(&a).unwrap();
        assert!((f.basis() - CMat::identity(3, 3)).norm() < 1e-12);
        assert!((c - CMat::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn qr_of_truncated_unitary_gives_identity_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = haar_truncated_unitary(6, 4, &mut rng).unwrap();
        let (q, c) = qr_orthonormal_factor(f.basis()).unwrap();
        assert!((c - CMat::identity(4, 4)).norm() < 1e-10);
        assert!((q.basis() - f.basis()).norm() < 1e-10);
    }

    #[test]
    fn qr_reconstructs_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = complex_gaussian_matrix(&mut rng, 6, 5);
        let (f, c) = qr_orthonormal_factor(&a).unwrap();
        let gram = f.basis().adjoint() * f.basis();
        assert!((gram - CMat::identity(5, 5)).norm() < 1e-10);
        let recon = f.basis() * &c;
        assert!((&recon - &a).norm() / a.norm() < 1e-10);
        for k in 0..5 {
            assert!(c[(k, k)].im.abs() < 1e-14);
            assert!(c[(k, k)].re > 0.0);
        }
        // Strictly upper triangular below the diagonal.
        for i in 1..5 {
            for j in 0..i {
                assert_eq!(c[(i, j)], Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn qr_rejects_rank_deficient() {
        let mut a = CMat::zeros(4, 2);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        a[(0, 1)] = Complex64::new(2.0, 0.0); // second column parallel to first
        assert!(matches!(
            qr_orthonormal_factor(&a),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn qr_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = complex_gaussian_matrix(&mut rng, 5, 3);
        let (f1, c1) = qr_orthonormal_factor(&a).unwrap();
        let (f2, c2) = qr_orthonormal_factor(&a).unwrap();
        assert_eq!(f1.basis(), f2.basis());
        assert_eq!(&c1, &c2);
    }

    #[test]
    fn chordal_distance_of_point_to_itself_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = haar_truncated_unitary(5, 2, &mut rng).unwrap();
        assert!(chordal_distance(&f, &f).unwrap() < 1e-12);
    }

    #[test]
    fn chordal_distance_orthogonal_lines() {
        let x = unit_vector(2, 0);
        let y = unit_vector(2, 1);
        assert_relative_eq!(chordal_distance(&x, &y).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chordal_distance_diagonal_line() {
        let x = unit_vector(2, 0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = CMat::zeros(2, 1);
        m[(0, 0)] = Complex64::new(s, 0.0);
        m[(1, 0)] = Complex64::new(s, 0.0);
        let y = GrassmannPoint::new(m).unwrap();
        let expected = chordal_by_projectors(&x, &y);
        assert_relative_eq!(expected, s, epsilon = 1e-12);
        assert_relative_eq!(chordal_distance(&x, &y).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn chordal_distance_matches_projector_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = haar_truncated_unitary(6, 3, &mut rng).unwrap();
            let y = haar_truncated_unitary(6, 3, &mut rng).unwrap();
            let fast = chordal_distance(&x, &y).unwrap();
            let oracle = chordal_by_projectors(&x, &y);
            assert_relative_eq!(fast, oracle, epsilon = 1e-10);
            assert!(fast >= 0.0 && fast <= (3.0f64).sqrt() + 1e-12);
        }
    }

    #[test]
    fn chordal_distance_dimension_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = haar_truncated_unitary(4, 2, &mut rng).unwrap();
        let y = haar_truncated_unitary(5, 2, &mut rng).unwrap();
        assert!(matches!(
            chordal_distance(&x, &y),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn haar_full_square_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = haar_truncated_unitary(4, 4, &mut rng).unwrap();
        let b = f.basis();
        assert!((b * b.adjoint() - CMat::identity(4, 4)).norm() < 1e-10);
    }

    #[test]
    fn haar_columns_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let f = haar_truncated_unitary(6, 5, &mut rng).unwrap();
            let gram = f.basis().adjoint() * f.basis();
            assert!((gram - CMat::identity(5, 5)).norm() <= 1e-10);
        }
    }

    #[test]
    fn haar_rejects_p_greater_than_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!(haar_truncated_unitary(2, 3, &mut rng).is_err());
    }

    #[test]
    fn haar_first_entry_marginal_moment() {
        // E |F(0,0)|^2 = 1/n for a Haar frame; Monte Carlo oracle with
        // 1e5 draws, asserted within 3 standard errors.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (n, p) = (3, 2);
        let trials = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..trials {
            let f = haar_truncated_unitary(n, p, &mut rng).unwrap();
            let v = f.basis()[(0, 0)].norm_sqr();
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / trials as f64;
        let var = (sum_sq / trials as f64 - mean * mean).max(0.0);
        let se = (var / trials as f64).sqrt();
        let expected = 1.0 / n as f64;
        assert!(
            (mean - expected).abs() <= 3.0 * se,
            "mean {mean:.5} vs expected {expected:.5} (3se = {:.5})",
            3.0 * se
        );
    }

    #[test]
    fn complement_of_coordinate_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = GrassmannPoint::new(CMat::identity(4, 2)).unwrap();
        let fc = orthonormal_complement(&f, &mut rng).unwrap();
        assert_eq!(fc.ambient_dim(), 4);
        assert_eq!(fc.subspace_dim(), 2);
        // Complement spans the last two coordinates: rows 0..2 are zero.
        for i in 0..2 {
            for j in 0..2 {
                assert!(fc.basis()[(i, j)].norm() < 1e-10);
            }
        }
    }

    #[test]
    fn complement_completes_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            let f = haar_truncated_unitary(6, 5, &mut rng).unwrap();
            let fc = orthonormal_complement(&f, &mut rng).unwrap();
            assert!((f.basis().adjoint() * fc.basis()).norm() < 1e-10);
            let mut w = CMat::zeros(6, 6);
            w.view_mut((0, 0), (6, 5)).copy_from(f.basis());
            w.view_mut((0, 5), (6, 1)).copy_from(fc.basis());
            assert!((w.adjoint() * &w - CMat::identity(6, 6)).norm() < 1e-10);
        }
    }

    #[test]
    fn complement_of_full_space_is_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let f = haar_truncated_unitary(3, 3, &mut rng).unwrap();
        assert!(orthonormal_complement(&f, &mut rng).is_err());
    }

    #[test]
    fn complement_preserves_chordal_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..20 {
            let x = haar_truncated_unitary(4, 2, &mut rng).unwrap();
            let y = haar_truncated_unitary(4, 2, &mut rng).unwrap();
            let xc = orthonormal_complement(&x, &mut rng).unwrap();
            let yc = orthonormal_complement(&y, &mut rng).unwrap();
            let d = chordal_distance(&x, &y).unwrap();
            let dc = chordal_distance(&xc, &yc).unwrap();
            assert!((d - dc).abs() < 1e-9, "d = {d}, complement d = {dc}");
        }
    }

    #[test]
    fn basis_rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let x = haar_truncated_unitary(5, 2, &mut rng).unwrap();
            let y = haar_truncated_unitary(5, 2, &mut rng).unwrap();
            let o = haar_truncated_unitary(2, 2, &mut rng).unwrap();
            let rotated = GrassmannPoint::new(y.basis() * o.basis()).unwrap();
            let d1 = chordal_distance(&x, &y).unwrap();
            let d2 = chordal_distance(&x, &rotated).unwrap();
            assert!((d1 - d2).abs() < 1e-10);
        }
    }

    #[test]
    fn grassmann_point_rejects_non_orthonormal() {
        let mut a = CMat::identity(3, 2);
        a[(0, 0)] = Complex64::new(2.0, 0.0);
        assert!(GrassmannPoint::new(a).is_err());
    }
}
