//! Truncated Fock-space simulation of measurement-based bosonic state
//! preparation.
//!
//! A single bosonic mode is represented on the basis `|0⟩ … |n_cut⟩`. States
//! are prepared from the vacuum by sequences of displacements and even-parity
//! projections (post-selection), optionally interleaved with a per-measurement
//! photon-loss channel:
//!
//! - [`protocols::run_squeezing`] projects onto displaced even-parity
//!   subspaces along the anti-squeezed axis, converging to a squeezed vacuum;
//! - [`protocols::run_cat`] alternates displacements and parity projections to
//!   grow lattices of coherent states;
//! - [`protocols::run_gkp`] point-reflects a squeezed state into a comb that
//!   approximates the GKP codeword `|1_L⟩`.
//!
//! The [`analysis`] module characterizes the results (Wigner function,
//! squeezing in dB, fidelities and best-fit reference states).
//!
//! ```
//! use parityforge_core::{
//!     analysis::squeezing_db,
//!     channels::LossModel,
//!     fock::TruncationConfig,
//!     protocols::{run_squeezing, DisplacementSequence, RunOptions},
//! };
//!
//! let trunc = TruncationConfig::new(201).unwrap();
//! let seq = DisplacementSequence::symmetric(3, 0.8, 0.0).unwrap();
//! let (state, log) = run_squeezing(&seq, &LossModel::lossless(), trunc, RunOptions::default()).unwrap();
//! let report = squeezing_db(&state);
//! assert!((report.s_db - 8.85).abs() < 0.05);
//! assert!((log.cumulative_probability - 0.3245).abs() < 1e-3);
//! ```

pub mod analysis;
pub mod channels;
pub mod error;
pub mod fock;
mod math;
pub mod operator;
pub mod optimize;
pub mod protocols;
pub mod state;

pub use error::{Error, Result};
pub use fock::TruncationConfig;
pub use num_complex::Complex64 as C64;
pub use operator::{OperatorKind, OperatorMatrix};
pub use state::{MixedState, PureState, State, StateRef};
