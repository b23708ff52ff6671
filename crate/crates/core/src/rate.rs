//! Per-user achievable rate, DoF slope fitting, and backhaul bit
//! accounting.

use crate::channel::ChannelSet;
use crate::config::Scenario;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, CMat};
use nalgebra::Cholesky;

/// log2 det of a Hermitian positive-definite matrix. Symmetrizes the input
/// (Hermitian part) to absorb rounding; a non-positive eigenvalue after
/// that is a hard numerical failure.
pub fn log2_det_hermitian(a: &CMat) -> Result<f64> {
    let eig = hermitian_part(a).symmetric_eigen();
    let mut total = 0.0;
    for lambda in eig.eigenvalues.iter() {
        if *lambda <= 0.0 {
            return Err(Error::NumericalFailure(format!(
                "non-positive eigenvalue {lambda:.3e} in log-det"
            )));
        }
        total += lambda.log2();
    }
    Ok(total)
}

/// Interference covariance at `user` after projecting with `filter`:
/// Q_I = sum_{j != user} U^H H_{user,j} V_j V_j^H H_{user,j}^H U.
fn projected_interference(
    cs: &ChannelSet,
    user: usize,
    filter: &CMat,
    precoders: &[CMat],
) -> CMat {
    let d = filter.ncols();
    let mut q = CMat::zeros(d, d);
    for j in 0..cs.dims().cells {
        if j == user {
            continue;
        }
        let t = filter.adjoint() * cs.channel(user, j) * &precoders[j];
        q += &t * t.adjoint();
    }
    q
}

/// Achievable rate of `user` after applying its receive filter:
/// R = log2|I + (P/d)(Q_S + Q_I)| - log2|I + (P/d) Q_I|, in bits per
/// channel use (base-2 logs throughout).
pub fn per_user_rate(
    cs: &ChannelSet,
    user: usize,
    filter: &CMat,
    precoders: &[CMat],
    power: f64,
) -> Result<f64> {
    let dims = cs.dims();
    let d = dims.streams;
    if filter.ncols() != d || precoders.len() != dims.cells {
        return Err(Error::DimensionMismatch(
            "filter must have d columns and one precoder per cell".into(),
        ));
    }
    let scale = power / d as f64;
    let s = filter.adjoint() * cs.channel(user, user) * &precoders[user];
    let q_signal = &s * s.adjoint();
    let q_interf = projected_interference(cs, user, filter, precoders);
    let eye = CMat::identity(d, d);
    let with_signal = &eye + (&q_signal + &q_interf).scale(scale);
    let without_signal = &eye + q_interf.scale(scale);
    let rate = log2_det_hermitian(&with_signal)? - log2_det_hermitian(&without_signal)?;
    Ok(rate.max(0.0))
}

/// Achievable rate of `user` with an MMSE receiver over the full antenna
/// array, treating residual interference as colored Gaussian noise:
/// R = log2|I_d + (P/d) (H V)^H R_n^{-1} (H V)| with
/// R_n = I_N + (P/d) * sum_{j != user} H_j V_j V_j^H H_j^H.
pub fn per_user_rate_mmse(
    cs: &ChannelSet,
    user: usize,
    precoders: &[CMat],
    power: f64,
) -> Result<f64> {
    let dims = cs.dims();
    let d = dims.streams;
    let n = dims.user_antennas;
    if precoders.len() != dims.cells {
        return Err(Error::DimensionMismatch("one precoder per cell".into()));
    }
    let scale = power / d as f64;
    let mut noise = CMat::identity(n, n);
    for j in 0..dims.cells {
        if j == user {
            continue;
        }
        let t = cs.channel(user, j) * &precoders[j];
        noise += (&t * t.adjoint()).scale(scale);
    }
    let signal = cs.channel(user, user) * &precoders[user];
    let chol = Cholesky::new(hermitian_part(&noise)).ok_or_else(|| {
        Error::NumericalFailure("interference-plus-noise covariance not positive definite".into())
    })?;
    let whitened = chol.solve(&signal);
    let eff = signal.adjoint() * whitened;
    let rate = log2_det_hermitian(&(CMat::identity(d, d) + eff.scale(scale)))?;
    Ok(rate.max(0.0))
}

/// Total bits crossing the backhaul for one alignment round.
pub fn bits_exchanged(scenario: Scenario, cells: usize, n_b: u32, n_c: u32) -> u64 {
    let k = cells as u64;
    match scenario {
        Scenario::I => k * (n_b as u64 + n_c as u64),
        Scenario::II => (k - 1) * (n_b as u64 + n_c as u64),
        Scenario::III => k * (k - 1) * n_b as u64,
    }
}

/// Least-squares slope of sum-rate versus log2(P) over the grid points
/// whose SNR falls inside `window_db` (inclusive). The unit is bits per
/// power doubling, i.e. per 3.01 dB.
pub fn dof_slope(points: &[(f64, f64)], window_db: (f64, f64)) -> Result<f64> {
    let selected: Vec<(f64, f64)> = points
        .iter()
        .filter(|(db, _)| *db >= window_db.0 - 1e-9 && *db <= window_db.1 + 1e-9)
        .map(|&(db, rate)| (db * 10f64.log2() / 10.0, rate))
        .collect();
    if selected.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "slope window [{}, {}] dB covers {} grid points; need at least 2",
            window_db.0,
            window_db.1,
            selected.len()
        )));
    }
    let n = selected.len() as f64;
    let mean_x = selected.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = selected.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &selected {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidConfig(
            "slope window is degenerate (single SNR value)".into(),
        ));
    }
    Ok(sxy / sxx)
}
