//! Numerical laboratory for polarization biphotons: qutrit states and their
//! two-qubit embedding, unital decoherence channels, KCBS and CHSH witness
//! maximization, a direct KCBS projection protocol with singlet subtraction,
//! wave-plate compilation of the projection pairs, and simulated tomography.
//!
//! `no_std`-compatible (requires `alloc`); disable the default `std` feature
//! for embedded use.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod channels;
pub mod linalg;
pub mod optics;
pub mod protocol;
pub mod sampling;
pub mod states;
pub mod tomography;
pub mod witnesses;

pub use channels::{ChannelKind, ChannelSpec, KrausSet};
pub use linalg::{CMatrix, OptimizerConfig};
pub use states::{PolarizationState, QutritState, TwoPhotonDensity};
pub use witnesses::{ChshResult, KcbsResult, Quintuplet};
