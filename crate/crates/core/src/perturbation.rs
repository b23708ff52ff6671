//! Random perturbations on the Grassmann manifold that emulate the
//! quantization error of large RVQ codebooks: the squared chordal distance
//! is drawn from a truncated Gaussian whose moments follow the asymptotic
//! quantization-error bounds, then a perturbed basis is assembled at
//! exactly that distance.

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::quantizer::{build_rvq_codebook, grassmann_real_dimension};
use crate::subspace::{haar_truncated_unitary, orthonormal_complement, GrassmannPoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const MAX_REJECTION_ATTEMPTS: usize = 1_000_000;
const MAX_ANGLE_RESAMPLES: usize = 100;

/// Asymptotic bounds on the k-th moment of the chordal quantization error
/// of a size-J random codebook on a manifold of real dimension G with
/// ball-volume coefficient c:
///   lower = G / ((G+k) (cJ)^{k/G}),  upper = Gamma(k/G) * (k/G) * (cJ)^{-k/G}.
pub fn moment_bounds(k: u32, manifold_dim: u32, ball_volume: f64, codebook_size: f64) -> (f64, f64) {
    let g = manifold_dim as f64;
    let k = k as f64;
    let scale = (ball_volume * codebook_size).powf(-k / g);
    let lower = g / (g + k) * scale;
    let upper = libm::tgamma(k / g) * (k / g) * scale;
    (lower, upper)
}

/// Moments of the squared-error distribution used by the sampler. The mean
/// takes the upper moment bound (asymptotically tight) as its
/// approximation; the variance is clamped at zero when the bound algebra
/// turns slightly negative at small G*J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    /// Real dimension G of the manifold.
    pub manifold_dim: u32,
    /// Ball-volume coefficient c.
    pub ball_volume: f64,
    /// Codebook size J = 2^bits (saturates to f64 infinity for huge bit
    /// counts; the moments are computed in log space and stay finite).
    pub codebook_size: f64,
    /// Mean squared chordal error.
    pub r_bar: f64,
    /// Variance of the squared chordal error.
    pub sigma2_r: f64,
}

/// Moments for a codebook of 2^bits entries, evaluated in log space so
/// the scaled-bits regime (hundreds of bits) stays finite.
pub fn perturbation_params(manifold_dim: u32, ball_volume: f64, bits: u32) -> PerturbationParams {
    let g = manifold_dim as f64;
    let ln_cj = ball_volume.ln() + bits as f64 * std::f64::consts::LN_2;
    let moment = |k: f64| libm::tgamma(k / g) * (k / g) * (-k / g * ln_cj).exp();
    let r_bar = moment(2.0);
    let sigma2_r = (moment(4.0) - r_bar * r_bar).max(0.0);
    PerturbationParams {
        manifold_dim,
        ball_volume,
        codebook_size: (bits as f64 * std::f64::consts::LN_2).exp(),
        r_bar,
        sigma2_r,
    }
}

/// Draw a squared chordal error from N(r_bar, sigma2_r) truncated to the
/// nonnegative axis by rejection (resampling on negative draws).
pub fn sample_squared_error<R: Rng + ?Sized>(
    params: &PerturbationParams,
    rng: &mut R,
) -> Result<f64> {
    if params.sigma2_r == 0.0 {
        return Ok(params.r_bar.max(0.0));
    }
    let sigma = params.sigma2_r.sqrt();
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let z: f64 = rng.sample(StandardNormal);
        let r = params.r_bar + sigma * z;
        if r >= 0.0 {
            return Ok(r);
        }
    }
    Err(Error::DegenerateParams(format!(
        "rejection sampler exhausted (r_bar = {}, sigma2_r = {})",
        params.r_bar, params.sigma2_r
    )))
}

/// Largest representable squared chordal distance on G_{n,p}.
pub fn max_squared_error(n: usize, p: usize) -> f64 {
    p.min(n - p) as f64
}

fn draw_angles<R: Rng + ?Sized>(p: usize, r: f64, rng: &mut R) -> Result<Vec<f64>> {
    if r == 0.0 {
        return Ok(vec![0.0; p]);
    }
    let sqrt_r = r.sqrt();
    for _ in 0..MAX_ANGLE_RESAMPLES {
        let s: Vec<f64> = (0..p).map(|_| rng.gen::<f64>()).collect();
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < f64::MIN_POSITIVE {
            continue;
        }
        let args: Vec<f64> = s.iter().map(|x| x * sqrt_r / norm).collect();
        if args.iter().any(|&a| a > 1.0 + 1e-9) {
            continue;
        }
        return Ok(args.iter().map(|a| a.min(1.0).asin()).collect());
    }
    if r <= p as f64 + 1e-12 {
        // Near r = p every feasible weight vector degenerates to equal
        // weights, so uniform draws reject forever; place the angles
        // directly (still sums to r exactly).
        let angle = (r / p as f64).min(1.0).sqrt().asin();
        return Ok(vec![angle; p]);
    }
    Err(Error::DegenerateParams(format!(
        "could not place angles for squared distance {r} on {p} coordinates"
    )))
}

/// Random point at exactly the squared chordal distance `r` from `f`,
/// assembled in the basis W = [F F_c] as F*cos(theta) + F_c*sin(theta)
/// with a Haar-random complement basis. Requires n >= 2p.
pub fn perturb<R: Rng + ?Sized>(
    f: &GrassmannPoint,
    r: f64,
    rng: &mut R,
) -> Result<GrassmannPoint> {
    let (n, p) = (f.ambient_dim(), f.subspace_dim());
    if n < 2 * p {
        return Err(Error::DimensionMismatch(format!(
            "direct perturbation needs n >= 2p, got G_{{{n},{p}}}; use the complement path"
        )));
    }
    if !(0.0..=p as f64 + 1e-12).contains(&r) {
        return Err(Error::DegenerateParams(format!(
            "squared distance {r} outside [0, {p}]"
        )));
    }
    let angles = draw_angles(p, r.min(p as f64), rng)?;
    let fc = orthonormal_complement(f, rng)?;
    let mut out = CMat::zeros(n, p);
    for k in 0..p {
        let (sin, cos) = angles[k].sin_cos();
        let col = f.basis().column(k) * Complex64::new(cos, 0.0)
            + fc.basis().column(k) * Complex64::new(sin, 0.0);
        out.set_column(k, &col);
    }
    Ok(GrassmannPoint::from_orthonormal(out))
}

/// Perturbation through the orthogonal complement for fat subspaces
/// (n < 2p): perturb the (n, n-p) complement by `r` and return its
/// complement, which sits at the same chordal distance from `f`.
pub fn perturb_via_complement<R: Rng + ?Sized>(
    f: &GrassmannPoint,
    r: f64,
    rng: &mut R,
) -> Result<GrassmannPoint> {
    let (n, p) = (f.ambient_dim(), f.subspace_dim());
    if p >= n {
        return Err(Error::DimensionMismatch(
            "cannot perturb a full subspace".into(),
        ));
    }
    if n > 2 * p {
        return Err(Error::DimensionMismatch(format!(
            "complement path expects n <= 2p, got G_{{{n},{p}}}"
        )));
    }
    let max_r = (n - p) as f64;
    if !(0.0..=max_r + 1e-12).contains(&r) {
        return Err(Error::DegenerateParams(format!(
            "squared distance {r} outside [0, {max_r}]"
        )));
    }
    let fc = orthonormal_complement(f, rng)?;
    let perturbed = perturb(&fc, r.min(max_r), rng)?;
    orthonormal_complement(&perturbed, rng)
}

/// Dispatch between the direct and complement constructions based on the
/// manifold shape.
pub fn perturb_auto<R: Rng + ?Sized>(
    f: &GrassmannPoint,
    r: f64,
    rng: &mut R,
) -> Result<GrassmannPoint> {
    if f.ambient_dim() >= 2 * f.subspace_dim() {
        perturb(f, r, rng)
    } else {
        perturb_via_complement(f, r, rng)
    }
}

/// Result of empirically calibrating the ball-volume coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n: usize,
    pub p: usize,
    pub bits: u32,
    pub seed: u64,
    pub queries: usize,
    /// Estimated ball-volume coefficient.
    pub c: f64,
    /// Mean squared quantization error observed during calibration.
    pub mean_sq_error: f64,
}

/// Estimate the ball-volume coefficient of G_{n,p} by Monte Carlo: quantize
/// Haar sources with fresh size-2^bits RVQ codebooks, average the squared
/// error, and invert the mean-error formula for c. Self-consistent with
/// the RVQ pipeline the perturbation engine stands in for.
pub fn calibrate_ball_volume(
    n: usize,
    p: usize,
    bits: u32,
    queries: usize,
    seed: u64,
) -> Result<Calibration> {
    if queries == 0 {
        return Err(Error::InvalidConfig("calibration needs queries >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..queries {
        let cb = build_rvq_codebook(n, p, bits, rng.gen())?;
        let f = haar_truncated_unitary(n, p, &mut rng)?;
        let q = cb.quantize(&f)?;
        total += q.distance * q.distance;
    }
    let mean_sq_error = total / queries as f64;
    let g = grassmann_real_dimension(n, p) as f64;
    // Invert r_bar = Gamma(2/G) (2/G) (cJ)^{-2/G} for c.
    let cj = (libm::tgamma(2.0 / g) * (2.0 / g) / mean_sq_error).powf(g / 2.0);
    let c = cj / (bits as f64 * std::f64::consts::LN_2).exp();
    Ok(Calibration {
        n,
        p,
        bits,
        seed,
        queries,
        c,
        mean_sq_error,
    })
}

impl Calibration {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
