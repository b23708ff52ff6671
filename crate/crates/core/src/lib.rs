//! Simulation library for CSIT sharing over finite-capacity backhaul in
//! multi-cell MIMO interference alignment.
//!
//! Base stations with local channel knowledge exchange quantized subspace
//! information (points on complex Grassmann manifolds) instead of raw channel
//! matrices. The library provides:
//!
//! - complex Grassmann-manifold primitives (QR factors, chordal distance,
//!   Haar sampling, orthogonal complements),
//! - an interference-alignment solver operating on stacked cross-channel
//!   subspaces,
//! - random vector quantization (RVQ) codebooks, a composite-manifold
//!   baseline quantizer, and the bit-scaling law that keeps interference
//!   leakage bounded as transmit power grows,
//! - a perturbation engine that emulates large-codebook quantization error
//!   without materializing exponentially large codebooks,
//! - a Monte Carlo harness producing per-SNR sum-rate curves as CSV.
//!
//! All randomness flows through explicit RNG handles; runs are reproducible
//! from a single seed.

// Cell-indexed loops with skip conditions read better than iterator chains
// in the K x K interference algebra.
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod perturbation;
pub mod quantizer;
pub mod rate;
pub mod solver;
pub mod subspace;
pub mod verify;

pub use channel::{ChannelSet, SystemDims};
pub use config::{BitsMode, CsitMode, PrecoderMode, Receiver, Scenario, SimConfig, SolverKnobs};
pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use subspace::GrassmannPoint;
