//! Interference-alignment solver on stacked cross-channel subspaces, total
//! precoder assembly, and the leakage algebra used to analyze quantization
//! error.

use crate::channel::{stack_block, stacked_interference_matrix, ChannelSet, SystemDims};
use crate::config::SolverKnobs;
use crate::error::{Error, Result};
use crate::linalg::{block_diag, smallest_eigenvectors, CMat};
use crate::subspace::{chordal_distance, haar_truncated_unitary, qr_orthonormal_factor, GrassmannPoint};
use rand::Rng;

/// Residual threshold under which the alignment postcondition of the
/// leakage decomposition is considered satisfied.
const ALIGNMENT_PRECONDITION_TOL: f64 = 1e-5;

/// Properness test for the symmetric square system: d*(K+1) <= M + N.
pub fn ia_feasible(dims: SystemDims) -> bool {
    dims.streams * (dims.cells + 1) <= dims.bs_antennas + dims.user_antennas
}

/// An alignment solution: receive filters (N x d), transmit precoders
/// (M x d), the total leakage residual on the inputs it was solved
/// against, and the iteration count of the returned attempt.
#[derive(Debug, Clone)]
pub struct IaSolution {
    pub filters: Vec<GrassmannPoint>,
    pub precoders: Vec<GrassmannPoint>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Residual of the alignment conditions, recomputed from scratch:
/// sum over transmitters of ||Bdiag(U_i, i != j)^H * B_j * V_j||_F^2.
pub fn alignment_residual(
    stacks: &[CMat],
    dims: SystemDims,
    filters: &[CMat],
    precoders: &[CMat],
) -> f64 {
    let mut total = 0.0;
    for (j, stack) in stacks.iter().enumerate() {
        for i in 0..dims.cells {
            if i == j {
                continue;
            }
            let t = filters[i].adjoint() * stack_block(stack, dims, j, i) * &precoders[j];
            total += t.norm_squared();
        }
    }
    total
}

fn alternate_once<R: Rng + ?Sized>(
    stacks: &[CMat],
    dims: SystemDims,
    knobs: &SolverKnobs,
    rng: &mut R,
    history: Option<&mut Vec<f64>>,
) -> Result<IaSolution> {
    let k = dims.cells;
    let n = dims.user_antennas;
    let m = dims.bs_antennas;
    let d = dims.streams;

    // Row blocks of each stack, indexed [bs][user].
    let mut blocks: Vec<Vec<Option<CMat>>> = vec![vec![None; k]; k];
    for j in 0..k {
        for i in 0..k {
            if i != j {
                blocks[j][i] = Some(stack_block(&stacks[j], dims, j, i));
            }
        }
    }
    let block = |j: usize, i: usize| blocks[j][i].as_ref().unwrap();

    let mut precoders: Vec<CMat> = (0..k)
        .map(|_| haar_truncated_unitary(m, d, rng).map(GrassmannPoint::into_basis))
        .collect::<Result<_>>()?;
    let mut filters: Vec<CMat> = vec![CMat::zeros(n, d); k];

    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut local_hist = Vec::new();

    for it in 0..knobs.max_iter {
        // Receive side: d smallest eigenvectors of the interference
        // covariance seen at each user.
        for i in 0..k {
            let mut q = CMat::zeros(n, n);
            for j in 0..k {
                if j == i {
                    continue;
                }
                let t = block(j, i) * &precoders[j];
                q += &t * t.adjoint();
            }
            filters[i] = smallest_eigenvectors(&q, d);
        }
        // Transmit side: d smallest eigenvectors of the leakage covariance
        // caused at the other cells.
        for j in 0..k {
            let mut q = CMat::zeros(m, m);
            for i in 0..k {
                if i == j {
                    continue;
                }
                let t = filters[i].adjoint() * block(j, i);
                q += t.adjoint() * &t;
            }
            precoders[j] = smallest_eigenvectors(&q, d);
        }

        let res = alignment_residual(stacks, dims, &filters, &precoders);
        debug_assert!(
            res <= residual * (1.0 + 1e-9) + 1e-12,
            "leakage increased across sweep: {residual:.3e} -> {res:.3e}"
        );
        residual = res;
        local_hist.push(res);
        iterations = it + 1;
        if res <= knobs.tol {
            converged = true;
            break;
        }
    }

    if let Some(h) = history {
        *h = local_hist;
    }

    Ok(IaSolution {
        filters: filters
            .into_iter()
            .map(GrassmannPoint::from_orthonormal)
            .collect(),
        precoders: precoders
            .into_iter()
            .map(GrassmannPoint::from_orthonormal)
            .collect(),
        residual,
        iterations,
        converged,
    })
}

/// Solve the alignment problem on arbitrary stacked matrices (used by the
/// baseline quantizer whose channel reconstructions are not orthonormal).
///
/// Alternating minimization of the total interference leakage; each filter
/// and precoder update takes the minor eigenvectors of the corresponding
/// interference covariance. Restarts with fresh random precoders on
/// non-convergence and keeps the best attempt.
pub fn solve_ia_on_stacks<R: Rng + ?Sized>(
    stacks: &[CMat],
    dims: SystemDims,
    knobs: &SolverKnobs,
    rng: &mut R,
) -> Result<IaSolution> {
    if !ia_feasible(dims) {
        return Err(Error::InfeasibleDims(dims));
    }
    if stacks.len() != dims.cells {
        return Err(Error::DimensionMismatch(format!(
            "expected {} stacks, got {}",
            dims.cells,
            stacks.len()
        )));
    }
    for s in stacks {
        if s.nrows() != dims.stacked_rows() || s.ncols() != dims.bs_antennas {
            return Err(Error::DimensionMismatch(format!(
                "stack must be {} x {}, got {} x {}",
                dims.stacked_rows(),
                dims.bs_antennas,
                s.nrows(),
                s.ncols()
            )));
        }
    }

    let mut best: Option<IaSolution> = None;
    for _attempt in 0..=knobs.restarts {
        let sol = alternate_once(stacks, dims, knobs, rng, None)?;
        let better = best
            .as_ref()
            .map(|b| sol.residual < b.residual)
            .unwrap_or(true);
        if better {
            best = Some(sol);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    Ok(best.expect("at least one attempt runs"))
}

/// Solve the alignment problem on quantized (or exact) subspace bases.
pub fn solve_ia<R: Rng + ?Sized>(
    subspaces: &[GrassmannPoint],
    dims: SystemDims,
    knobs: &SolverKnobs,
    rng: &mut R,
) -> Result<IaSolution> {
    let stacks: Vec<CMat> = subspaces.iter().map(|f| f.basis().clone()).collect();
    solve_ia_on_stacks(&stacks, dims, knobs, rng)
}

/// Single-attempt solve that records the per-sweep leakage history
/// (used to test monotonicity of the alternating updates).
pub fn solve_ia_traced<R: Rng + ?Sized>(
    subspaces: &[GrassmannPoint],
    dims: SystemDims,
    knobs: &SolverKnobs,
    rng: &mut R,
) -> Result<(IaSolution, Vec<f64>)> {
    if !ia_feasible(dims) {
        return Err(Error::InfeasibleDims(dims));
    }
    let stacks: Vec<CMat> = subspaces.iter().map(|f| f.basis().clone()).collect();
    let mut hist = Vec::new();
    let sol = alternate_once(&stacks, dims, knobs, rng, Some(&mut hist))?;
    Ok((sol, hist))
}

/// Total precoder applied at a BS: C^{-1} F^H F_hat V_hat.
///
/// With `normalize` the columns are re-orthonormalized (QR) so the
/// transmitted precoder is truncated unitary; this preserves the column
/// space. Without it the analytic product is returned unchanged, which is
/// the form the leakage identities are stated in.
pub fn total_precoder(
    c_factor: &CMat,
    f: &GrassmannPoint,
    f_hat: &GrassmannPoint,
    v_hat: &CMat,
    normalize: bool,
) -> Result<CMat> {
    let m = c_factor.nrows();
    if c_factor.ncols() != m || f.subspace_dim() != m || f_hat.subspace_dim() != m {
        return Err(Error::DimensionMismatch(
            "total precoder expects an M x M triangular factor and M-column bases".into(),
        ));
    }
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for i in 0..m {
        let mag = c_factor[(i, i)].norm();
        dmin = dmin.min(mag);
        dmax = dmax.max(mag);
    }
    if !(dmin > 1e-12 * dmax && dmin > 0.0) {
        return Err(Error::SingularFactor);
    }
    let rhs = f.basis().adjoint() * f_hat.basis() * v_hat;
    let raw = c_factor
        .solve_upper_triangular(&rhs)
        .ok_or(Error::SingularFactor)?;
    if normalize {
        let (q, _) = qr_orthonormal_factor(&raw)?;
        Ok(q.into_basis())
    } else {
        Ok(raw)
    }
}

/// Interference leakage after receive projection.
#[derive(Debug, Clone)]
pub struct LeakageReport {
    /// Per-user leakage power (P/d) * tr(Q_I^i).
    pub per_user: Vec<f64>,
    /// Network total; equals the sum of `per_user`.
    pub total: f64,
    /// Reference constant for leakage-scaling experiments: the trace form
    /// dominates every user's largest interference eigenvalue.
    pub bound_constant: f64,
}

/// Total leakage via the stacked form: sum over transmitters of
/// (P/d) * ||Bdiag(U_i, i != j)^H H_j V_j||_F^2.
pub fn leakage_total_stacked(
    cs: &ChannelSet,
    filters: &[CMat],
    precoders: &[CMat],
    power: f64,
) -> Result<f64> {
    let dims = cs.dims();
    let d = dims.streams as f64;
    let mut total = 0.0;
    for j in 0..dims.cells {
        let stack = stacked_interference_matrix(cs, j)?;
        let others: Vec<&CMat> = (0..dims.cells).filter(|&i| i != j).map(|i| &filters[i]).collect();
        let u_neg = block_diag(&others);
        total += (power / d) * (u_neg.adjoint() * &stack * &precoders[j]).norm_squared();
    }
    Ok(total)
}

/// Per-user and total leakage powers under the given filters and
/// precoders (which need not be orthonormal).
///
/// Computes the per-user trace form and cross-checks the stacked form;
/// the two are algebraically identical and must agree to 1e-8 relative.
pub fn leakage_power(
    cs: &ChannelSet,
    filters: &[CMat],
    precoders: &[CMat],
    power: f64,
) -> Result<LeakageReport> {
    let dims = cs.dims();
    let k = dims.cells;
    if filters.len() != k || precoders.len() != k {
        return Err(Error::DimensionMismatch(
            "one filter and one precoder per cell expected".into(),
        ));
    }
    let d = dims.streams as f64;
    let mut per_user = Vec::with_capacity(k);
    for i in 0..k {
        let mut li = 0.0;
        for j in 0..k {
            if j == i {
                continue;
            }
            let t = filters[i].adjoint() * cs.channel(i, j) * &precoders[j];
            li += t.norm_squared();
        }
        per_user.push((power / d) * li);
    }
    let total: f64 = per_user.iter().sum();
    let stacked = leakage_total_stacked(cs, filters, precoders, power)?;
    if (total - stacked).abs() > 1e-8 * total.max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "leakage dual forms disagree: {total:.6e} vs {stacked:.6e}"
        )));
    }
    Ok(LeakageReport {
        per_user,
        total,
        bound_constant: total,
    })
}

/// The post-projection leakage of one transmitter split into its two
/// quantization sources.
#[derive(Debug, Clone)]
pub struct LeakageSplit {
    /// Term driven by the CSI (stacked-subspace) quantization error.
    pub csi_term: CMat,
    /// Term driven by the precoder quantization error.
    pub precoder_term: CMat,
    /// sqrt(2d) * d_c(F, F_hat): analytic cap on ||csi_term||_F.
    pub csi_bound: f64,
    /// sqrt(2d) * d_c(V_tilde, V_hat): analytic cap on ||precoder_term||_F.
    pub precoder_bound: f64,
    /// Frobenius norm of the direct product U_neg^H F F^H F_hat V_hat.
    pub direct_norm: f64,
    /// Frobenius norm of csi_term + precoder_term.
    pub combined_norm: f64,
}

impl LeakageSplit {
    pub fn csi_norm(&self) -> f64 {
        self.csi_term.norm()
    }

    pub fn precoder_norm(&self) -> f64 {
        self.precoder_term.norm()
    }

    pub fn bounds_hold(&self) -> bool {
        self.csi_norm() <= self.csi_bound + 1e-9 && self.precoder_norm() <= self.precoder_bound + 1e-9
    }

    /// Gap of the identity ||U^H F F^H F_hat V_hat|| = ||X_b + X_c||.
    pub fn identity_gap(&self) -> f64 {
        (self.direct_norm - self.combined_norm).abs()
    }
}

/// Split one transmitter's post-projection leakage into the CSI-error and
/// precoder-error terms
///   X_b = U_neg^H (F F^H - F_hat F_hat^H) F_hat V_hat,
///   X_c = U_neg^H F_hat (V_hat V_hat^H - V_tilde V_tilde^H) V_hat,
/// and evaluate the analytic norm caps driven by the chordal distances.
///
/// Requires the filters to have been solved against `f_hat` (alignment
/// residual below 1e-5), otherwise the split identity does not hold.
pub fn leakage_decomposition(
    f: &GrassmannPoint,
    f_hat: &GrassmannPoint,
    v_tilde: &GrassmannPoint,
    v_hat: &GrassmannPoint,
    u_neg: &CMat,
) -> Result<LeakageSplit> {
    let d = v_tilde.subspace_dim();
    let precondition = (u_neg.adjoint() * f_hat.basis() * v_tilde.basis()).norm_squared();
    if precondition > ALIGNMENT_PRECONDITION_TOL {
        return Err(Error::AlignmentViolated {
            residual: precondition,
            tol: ALIGNMENT_PRECONDITION_TOL,
        });
    }
    let fhat_vhat = f_hat.basis() * v_hat.basis();
    let csi_term = u_neg.adjoint() * (f.projector() - f_hat.projector()) * &fhat_vhat;
    let precoder_term =
        u_neg.adjoint() * f_hat.basis() * (v_hat.projector() - v_tilde.projector()) * v_hat.basis();
    let direct = u_neg.adjoint() * f.basis() * (f.basis().adjoint() * &fhat_vhat);
    let combined = &csi_term + &precoder_term;
    let scale = (2.0 * d as f64).sqrt();
    Ok(LeakageSplit {
        csi_bound: scale * chordal_distance(f, f_hat)?,
        precoder_bound: scale * chordal_distance(v_tilde, v_hat)?,
        direct_norm: direct.norm(),
        combined_norm: combined.norm(),
        csi_term,
        precoder_term,
    })
}

/// Block-diagonal stack of the receive filters of every user except
/// `skip`, in ascending user order (matches the stacked-matrix layout).
pub fn block_diag_filters(filters: &[CMat], skip: usize) -> CMat {
    let others: Vec<&CMat> = filters
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(_, u)| u)
        .collect();
    block_diag(&others)
}

/// End-to-end check that sharing only the column space of each stacked
/// cross-channel matrix suffices for alignment: solve on randomly rotated
/// bases {F_j * O_j}, map the precoders back through C_j^{-1} O_j, and
/// verify the leakage on the true channels vanishes.
pub fn rotated_csi_equivalence_check<R: Rng + ?Sized>(
    cs: &ChannelSet,
    knobs: &SolverKnobs,
    rng: &mut R,
) -> Result<bool> {
    let dims = cs.dims();
    let m = dims.bs_antennas;
    let mut rotated = Vec::with_capacity(dims.cells);
    let mut c_factors = Vec::with_capacity(dims.cells);
    let mut rotations = Vec::with_capacity(dims.cells);
    for j in 0..dims.cells {
        let stack = stacked_interference_matrix(cs, j)?;
        let (fj, cj) = qr_orthonormal_factor(&stack)?;
        let o = haar_truncated_unitary(m, m, rng)?;
        rotated.push(GrassmannPoint::new(fj.basis() * o.basis())?);
        c_factors.push(cj);
        rotations.push(o);
    }
    let sol = solve_ia(&rotated, dims, knobs, rng)?;
    if !sol.converged {
        return Err(Error::NumericalFailure(format!(
            "alignment solver did not converge (residual {:.3e})",
            sol.residual
        )));
    }
    let filters: Vec<CMat> = sol.filters.iter().map(|u| u.basis().clone()).collect();
    let precoders: Vec<CMat> = (0..dims.cells)
        .map(|j| {
            let rhs = rotations[j].basis() * sol.precoders[j].basis();
            c_factors[j]
                .solve_upper_triangular(&rhs)
                .ok_or(Error::SingularFactor)
        })
        .collect::<Result<_>>()?;
    let power = 1.0;
    let report = leakage_power(cs, &filters, &precoders, power)?;
    Ok(report.total < 1e-8 * power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_channel_set;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact_subspaces(cs: &ChannelSet) -> (Vec<GrassmannPoint>, Vec<CMat>) {
        let k = cs.dims().cells;
        let mut fs = Vec::with_capacity(k);
        let mut cfs = Vec::with_capacity(k);
        for j in 0..k {
            let stack = stacked_interference_matrix(cs, j).unwrap();
            let (f, c) = qr_orthonormal_factor(&stack).unwrap();
            fs.push(f);
            cfs.push(c);
        }
        (fs, cfs)
    }

    #[test]
    fn feasibility_properness_count() {
        assert!(ia_feasible(SystemDims::new(3, 5, 3, 2)));
        assert!(!ia_feasible(SystemDims::new(3, 2, 2, 2)));
        assert!(ia_feasible(SystemDims::new(2, 2, 2, 1)));
        assert!(ia_feasible(SystemDims::new(3, 2, 2, 1)));
    }

    #[test]
    fn solves_paper_scale_system() {
        let dims = SystemDims::new(3, 5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let cs = generate_channel_set(dims, &mut rng);
        let (fs, _) = exact_subspaces(&cs);
        let sol = solve_ia(&fs, dims, &SolverKnobs::default(), &mut rng).unwrap();
        assert!(sol.converged, "residual {}", sol.residual);
        assert!(sol.residual < 1e-8);
        // Reported residual must match an independent recomputation.
        let stacks: Vec<CMat> = fs.iter().map(|f| f.basis().clone()).collect();
        let filters: Vec<CMat> = sol.filters.iter().map(|u| u.basis().clone()).collect();
        let precs: Vec<CMat> = sol.precoders.iter().map(|v| v.basis().clone()).collect();
        let recomputed = alignment_residual(&stacks, dims, &filters, &precs);
        assert!((recomputed - sol.residual).abs() < 1e-10);
    }

    #[test]
    fn solves_classic_three_user_case() {
        let dims = SystemDims::new(3, 2, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let cs = generate_channel_set(dims, &mut rng);
        let (fs, _) = exact_subspaces(&cs);
        let sol = solve_ia(&fs, dims, &SolverKnobs::default(), &mut rng).unwrap();
        assert!(sol.converged);
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn direct_link_keeps_full_rank() {
        let dims = SystemDims::new(3, 5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let cs = generate_channel_set(dims, &mut rng);
        let (fs, _) = exact_subspaces(&cs);
        let sol = solve_ia(&fs, dims, &SolverKnobs::default(), &mut rng).unwrap();
        for i in 0..3 {
            let eff = sol.filters[i].basis().adjoint() * cs.channel(i, i) * sol.precoders[i].basis();
            let (smin, _) = crate::linalg::singular_value_extremes(&eff);
            assert!(smin > 1e-6, "effective direct channel lost rank: {smin}");
        }
    }

    #[test]
    fn infeasible_dims_rejected() {
        let dims = SystemDims::new(3, 2, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let fs: Vec<GrassmannPoint> = (0..3)
            .map(|_| haar_truncated_unitary(4, 2, &mut rng).unwrap())
            .collect();
        assert!(matches!(
            solve_ia(&fs, dims, &SolverKnobs::default(), &mut rng),
            Err(Error::InfeasibleDims(_))
        ));
    }

    #[test]
    fn leakage_monotone_across_sweeps() {
        let dims = SystemDims::new(3, 5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let cs = generate_channel_set(dims, &mut rng);
        let (fs, _) = exact_subspaces(&cs);
        let (_, hist) = solve_ia_traced(&fs, dims, &SolverKnobs::default(), &mut rng).unwrap();
        for w in hist.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-9) + 1e-12,
                "non-monotone: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn perfect_quantization_collapses_total_precoder() {
        let dims = SystemDims::new(3, 5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let cs = generate_channel_set(dims, &mut rng);
        let (fs, cfs) = exact_subspaces(&cs);
        let sol = solve_ia(&fs, dims, &SolverKnobs::default(), &mut rng).unwrap();
        // F_hat = F: the product reduces to C^{-1} V_tilde.
        let v = sol.precoders[0].basis();
        let got = total_precoder(&cfs[0], &fs[0], &fs[0], v, false).unwrap();
        let expected = cfs[0].solve_upper_triangular(v).unwrap();
        assert!((&got - &expected).norm() < 1e-10);

        // Normalized output is truncated unitary with the same column space.
        let normalized = total_precoder(&cfs[0], &fs[0], &fs[0], v, true).unwrap();
        let gram = normalized.adjoint() * &normalized;
        assert!((gram - CMat::identity(2, 2)).norm() <= 1e-10);
        let a = GrassmannPoint::new(normalized).unwrap();
        let (b, _) = qr_orthonormal_factor(&got).unwrap();
        assert!(chordal_distance(&a, &b).unwrap() < 1e-9);
    }

    #[test]
    fn singular_factor_rejected() {
        let dims = SystemDims::new(3, 5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let cs = generate_channel_set(dims, &mut rng);
        let (fs, _) = exact_subspaces(&cs);
        let c = CMat::zeros(5, 5);
        let v = haar_truncated_unitary(5, 2, &mut rng).unwrap();
        assert!(matches!(
            total_precoder(&c, &fs[0], &fs[1], v.basis(), false),
            Err(Error::SingularFactor)
        ));
    }

    #[test]
    fn aligned_solution_has_zero_leakage() {
        let dims = SystemDims::new(3, 5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let cs = generate_channel_set(dims, &mut rng);
        let (fs, cfs) = exact_subspaces(&cs);
        let sol = solve_ia(&fs, dims, &SolverKnobs::default(), &mut rng).unwrap();
        let filters: Vec<CMat> = sol.filters.iter().map(|u| u.basis().clone()).collect();
        let precoders: Vec<CMat> = (0..3)
            .map(|j| {
                cfs[j]
                    .solve_upper_triangular(sol.precoders[j].basis())
                    .unwrap()
            })
            .collect();
        let power = 10.0;
        let report = leakage_power(&cs, &filters, &precoders, power).unwrap();
        assert!(report.total < 1e-8 * power, "leakage {}", report.total);
    }

    #[test]
    fn leakage_scales_linearly_in_power() {
        let dims = SystemDims::new(3, 5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let cs = generate_channel_set(dims, &mut rng);
        // Arbitrary unaligned filters/precoders.
        let filters: Vec<CMat> = (0..3)
            .map(|_| haar_truncated_unitary(3, 2, &mut rng).unwrap().into_basis())
            .collect();
        let precoders: Vec<CMat> = (0..3)
            .map(|_| haar_truncated_unitary(5, 2, &mut rng).unwrap().into_basis())
            .collect();
        let r1 = leakage_power(&cs, &filters, &precoders, 3.0).unwrap();
        let r2 = leakage_power(&cs, &filters, &precoders, 6.0).unwrap();
        assert!((r2.total - 2.0 * r1.total).abs() < 1e-12 * r2.total.max(1.0));
        assert!(r1.per_user.iter().all(|&l| l >= 0.0));
        let sum: f64 = r1.per_user.iter().sum();
        assert!((sum - r1.total).abs() < 1e-12 * sum.max(1.0));
    }

    #[test]
    fn perfect_quantization_zeroes_both_split_terms() {
        let dims = SystemDims::new(3, 5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let cs = generate_channel_set(dims, &mut rng);
        let (fs, _) = exact_subspaces(&cs);
        let sol = solve_ia(&fs, dims, &SolverKnobs::default(), &mut rng).unwrap();
        let filters: Vec<CMat> = sol.filters.iter().map(|u| u.basis().clone()).collect();
        for j in 0..3 {
            let split = leakage_decomposition(
                &fs[j],
                &fs[j],
                &sol.precoders[j],
                &sol.precoders[j],
                &block_diag_filters(&filters, j),
            )
            .unwrap();
            assert!(split.csi_norm() < 1e-12);
            assert!(split.precoder_norm() < 1e-12);
            assert!(split.bounds_hold());
        }
    }

    #[test]
    fn decomposition_rejects_unaligned_filters() {
        let dims = SystemDims::new(3, 5, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let cs = generate_channel_set(dims, &mut rng);
        let (fs, _) = exact_subspaces(&cs);
        let filters: Vec<CMat> = (0..3)
            .map(|_| haar_truncated_unitary(3, 2, &mut rng).unwrap().into_basis())
            .collect();
        let v = haar_truncated_unitary(5, 2, &mut rng).unwrap();
        let err = leakage_decomposition(
            &fs[0],
            &fs[0],
            &v,
            &v,
            &block_diag_filters(&filters, 0),
        );
        assert!(matches!(err, Err(Error::AlignmentViolated { .. })));
    }

    #[test]
    fn rotated_bases_align_true_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let knobs = SolverKnobs {
            tol: 1e-10,
            ..SolverKnobs::default()
        };
        let dims = SystemDims::new(3, 5, 3, 2);
        let cs = generate_channel_set(dims, &mut rng);
        assert!(rotated_csi_equivalence_check(&cs, &knobs, &mut rng).unwrap());

        let dims = SystemDims::new(3, 2, 2, 1);
        let cs = generate_channel_set(dims, &mut rng);
        assert!(rotated_csi_equivalence_check(&cs, &knobs, &mut rng).unwrap());
    }
}
