//! Buffered broadcast back-off models for 802.11-style CSMA stations.
//!
//! A station keeps a FIFO queue fed by Poisson arrivals and a back-off
//! counter drawn uniformly on `0..=W`. Time advances in full slots of
//! length `T` and mini-slots of length `sigma`. Two channel models are
//! covered: in greedy mode a station whose counter reaches zero always
//! transmits, while in fair mode it transmits only when the channel hands
//! it a full slot.
//!
//! The crate provides closed-form steady states ([`greedy`], [`fair`]),
//! network fixed points and maximum throughput ([`network`]), the
//! virtual waiting-time transform ([`wait`]), a brute-force truncated
//! chain ([`oracle`]) and a Monte-Carlo simulator ([`sim`]). Sweeps that
//! produce CSV tables live in [`experiments`], and [`validation`] runs the
//! cross-checks between all of them.

pub mod error;
pub mod experiments;
pub mod fair;
pub mod greedy;
pub mod kernel;
pub mod network;
pub mod oracle;
pub mod params;
pub mod roots;
pub mod sim;
pub mod table;
pub mod validation;
pub mod wait;

pub use error::{Error, Result};
pub use fair::FairSolution;
pub use greedy::GreedySolution;
pub use kernel::{SeriesCoefficients, SlotGf};
pub use network::{NetworkOperatingPoint, StationCount};
pub use oracle::TruncatedChain;
pub use params::{BusyProb, ChannelMode, RunConfig, SystemParams};
pub use table::StationaryTable;
pub use wait::WaitTransform;
