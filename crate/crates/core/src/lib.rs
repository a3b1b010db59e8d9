//! Neighbour discovery from on-off signatures by sparse recovery.
//!
//! The crate is organised bottom-up:
//!
//! * [`gf2`]: GF(2^m) arithmetic, bit matrices over GF(2) and Kerdock sets.
//! * [`codebook`]: the sparse Kerdock matrix, its dense counterpart, Bernoulli
//!   erased baselines, collapsed codebooks, fast operators and coherence analysis.
//! * [`channel`]: the on-off duplex channel and network gain model.
//! * [`recovery`]: one step thresholding, normalised iterative hard thresholding
//!   and detection scoring.
//! * [`experiments`]: seeded Monte-Carlo harness, CSV/SVG outputs.

pub mod channel;
pub mod codebook;
mod error;
pub mod experiments;
pub mod gf2;
pub mod recovery;
pub mod seed;

pub use error::{Error, Result};

pub use num_complex::Complex64;

pub use channel::{GroundTruth, Measurement, NetworkConfig, PhaseMode};
pub use codebook::{
    Codebook, CollapsedCodebook, ColumnIndex, DenseCounterpart, ErasedDenseCodebook, GramReport, SlotIndex,
    SparseKerdock,
};
pub use gf2::{BinaryMatrix, Gf2m, KerdockSet};
pub use recovery::{RecoveryParams, RecoveryResult, SensingOperator};
