//! Experiment configuration, mirrored field-for-field by the JSON config
//! file consumed by the CLI.

use crate::channel::SystemDims;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// How transmitter-side CSI reaches the central node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsitMode {
    /// Exact stacked-subspace bases; no quantization anywhere.
    Perfect,
    /// Random-vector-quantization codebooks on the Grassmann manifolds.
    Rvq,
    /// Quantization replaced by random perturbations with RVQ-matched
    /// error moments (tractable at large codebook sizes).
    Perturbation,
    /// Baseline: raw channels vectorized, normalized and jointly quantized
    /// on a composite manifold of unit-norm lines.
    NcCgq,
}

/// How the central node feeds precoders back to the base stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderMode {
    /// Quantize the precoder column space on G_{M,d}.
    #[default]
    Subspace,
    /// Vectorize column-major, normalize, and quantize as a line in C^{Md}.
    Vectorized,
}

/// Receive-side rate evaluation convention.
///
/// `Projection` applies the alignment filter from the central solve and
/// evaluates the projected-channel rate. `Mmse` evaluates the mutual
/// information of the unprojected receive vector with interference treated
/// as colored Gaussian noise (an MMSE receiver). Published sum-rate curves
/// for this system exist under both conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    #[default]
    Projection,
    Mmse,
}

/// Feedback bit budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitsMode {
    /// Fixed bit counts for CSI (`n_b`) and precoder (`n_c`) feedback.
    Fixed { n_b: u32, n_c: u32 },
    /// Bits grow with transmit power as (G/2) * log2(P) per manifold,
    /// which keeps the leakage bounded and preserves the DoF slope.
    Scaled,
}

/// Backhaul topology used for bit accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scenario {
    /// Dedicated central node: every BS sends CSI up and receives a
    /// precoder back; K*(n_b + n_c) bits total.
    #[default]
    I,
    /// One BS doubles as the central node, saving one link:
    /// (K-1)*(n_b + n_c) bits.
    II,
    /// Full mesh, each BS computes independently: K*(K-1)*n_b bits.
    III,
}

/// Iterative-solver knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverKnobs {
    /// Convergence threshold on the total alignment leakage.
    pub tol: f64,
    /// Iteration cap per attempt.
    pub max_iter: usize,
    /// Fresh-initialization restarts after a non-converged attempt.
    pub restarts: usize,
}

impl Default for SolverKnobs {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            restarts: 5,
        }
    }
}

/// Ball-volume coefficients for the perturbation engine. When absent they
/// are calibrated empirically from small-codebook RVQ runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BallVolume {
    /// Coefficient for the CSI manifold G_{(K-1)N, M}; `None` = calibrate.
    pub csi: Option<f64>,
    /// Coefficient for the precoder manifold; `None` = calibrate.
    pub precoder: Option<f64>,
    /// Codebook bits used by empirical calibration.
    pub calibration_bits: Option<u32>,
    /// Query count used by empirical calibration.
    pub calibration_queries: Option<usize>,
}

fn default_trials() -> usize {
    500
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dims: SystemDims,
    pub snr_grid_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    pub csit_mode: CsitMode,
    #[serde(default)]
    pub precoder_mode: PrecoderMode,
    #[serde(default)]
    pub receiver: Receiver,
    pub bits_mode: BitsMode,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub solver: SolverKnobs,
    #[serde(default)]
    pub ball_volume: BallVolume,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidConfig("snr_grid_db must be nonempty".into()));
        }
        if self.csit_mode == CsitMode::NcCgq && self.precoder_mode != PrecoderMode::Vectorized {
            return Err(Error::InvalidConfig(
                "nc_cgq implies precoder_mode = vectorized".into(),
            ));
        }
        if self.solver.tol <= 0.0 || self.solver.max_iter == 0 {
            return Err(Error::InvalidConfig(
                "solver tol must be positive and max_iter nonzero".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
