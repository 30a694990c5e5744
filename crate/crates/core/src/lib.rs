//! Channel models for RIS-assisted wireless networks that share a surface
//! across adjacent frequency bands.
//!
//! The crate is generic over the real scalar type (`f32` or `f64`). Every
//! public type takes a `T: Real` parameter; the aliases at the bottom of this
//! file pin the common precisions.
//!
//! Module map:
//!
//! * [`geometry`] - array layouts, far-field steering vectors, Friis factors,
//!   array-factor patterns.
//! * [`channel`] - complex channel matrices, line-of-sight and Rayleigh
//!   segments, the cascaded `H diag(theta) G (+ D)` composition.
//! * [`ris`] - tuning matrices, phase optimisation, filter specs, block
//!   partitions.
//! * [`coexistence`] - effective end-to-end channels for the shared-tuning,
//!   filter, dual-surface and blocking configurations, plus the per-slot load
//!   model.
//! * [`capacity`] - link budgets, precoders and achievable rates.

pub mod capacity;
pub mod channel;
pub mod coexistence;
mod error;
pub mod geometry;
mod linalg;
pub mod ris;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub use capacity::{CsiKind, LinkBudget, MimoCsi, Precoder, PrecoderKind};
pub use channel::ChannelMatrix;
pub use coexistence::{
    gain_fluctuation_stat, BlockTunings, Coexistence, FluctuationStat, IdleModel, Network,
    NetworkScenario, NodeConfig, Realization, RisNode, RisSegments, SlotChannelSample,
    SlotChannels, SlotMechanism,
};
pub use geometry::{ArrayGeometry, ArrayKind, Direction, PathLoss, Vec3};
pub use ris::{BlockLabel, BlockPartition, FilterMode, FilterSpec, TuningMatrix};

pub type Complex<T> = num_complex::Complex<T>;

pub type ArrayGeometry64 = ArrayGeometry<f64>;
pub type ChannelMatrix64 = ChannelMatrix<f64>;
pub type TuningMatrix64 = TuningMatrix<f64>;
pub type FilterSpec64 = FilterSpec<f64>;
pub type BlockPartition64 = BlockPartition<f64>;
pub type NetworkScenario64 = NetworkScenario<f64>;
pub type LinkBudget64 = LinkBudget<f64>;

pub type ArrayGeometry32 = ArrayGeometry<f32>;
pub type ChannelMatrix32 = ChannelMatrix<f32>;
pub type TuningMatrix32 = TuningMatrix<f32>;
pub type NetworkScenario32 = NetworkScenario<f32>;
pub type LinkBudget32 = LinkBudget<f32>;
