//! Hybrid precoding for millimeter-wave MIMO links with dynamic antenna subarrays
//! and finite-alphabet (constellation-constrained) inputs.
//!
//! The crate is organized bottom-up:
//!
//! * [`constellation`] enumerates the finite-alphabet signal set.
//! * [`channel`] builds steering matrices, statistical CSI and channel draws.
//! * [`subarray`] designs the antenna-to-RF-chain partition from statistical CSI.
//! * [`capacity`] estimates mutual information and evaluates its closed-form
//!   lower bound, the low-complexity approximation and their gradients.
//! * [`optimizer`] runs the sphere-manifold gradient ascent and its baselines.
//! * [`experiments`] wires everything into reproducible scenario sweeps.

pub mod capacity;
pub mod channel;
pub mod constellation;
mod error;
pub mod experiments;
pub mod linalg;
pub mod optimizer;
pub mod rng;
pub mod subarray;

pub use capacity::{BoundKind, BoundValue, HybridPrecoder, MiEstimate};
pub use channel::{ChannelRealization, PathAngles, StatisticalCsi};
pub use constellation::{Modulation, SignalSet};
pub use error::{Error, Result};
pub use linalg::{CMat, CVec, RMat};
pub use optimizer::{AscentOptions, AscentReport, Termination};
pub use rng::SimRng;
pub use subarray::{Partition, SelectionMatrix};
