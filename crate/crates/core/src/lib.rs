//! Revenue-maximizing public signaling for VCG ad auctions.
//!
//! A seller who observes a random state of nature commits to a public
//! signaling scheme; bidders update their beliefs and bid their expected
//! valuations in a VCG position auction. This crate computes schemes that
//! maximize the seller's expected revenue:
//!
//! * [`kv_exact`] solves the known-valuations problem exactly for a fixed
//!   number of slots or a fixed number of states;
//! * [`single_minded`] is an additive approximation scheme for bidders who
//!   each value a single state;
//! * [`rv`] handles random valuations given through a sampling oracle;
//! * [`oracle`] holds brute-force baselines used to validate the above.
//!
//! Every type is generic over the scalar ([`Scalar`]: `f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

pub mod auction;
pub mod error;
pub mod kv_exact;
pub mod lp;
pub mod oracle;
pub mod rv;
pub mod scalar;
pub mod scheme;
pub mod signaling_lp;
pub mod single_minded;

pub use error::{Error, Result};
pub use lp::LpStatus;
pub use scalar::Scalar;
pub use scheme::{
    consistency_residual, export_signals, reconstruct_scheme, scheme_revenue, Diagnostics,
    SignalTable,
};

pub type AuctionInstance = auction::AuctionInstance<f64>;
pub type Posterior = auction::Posterior<f64>;
pub type VcgOutcome = auction::VcgOutcome<f64>;
pub type Atom = scheme::Atom<f64>;
pub type SignalingScheme = scheme::SignalingScheme<f64>;
pub type SolveReport = scheme::SolveReport<f64>;
pub type LinearProgram = lp::LinearProgram<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type SingleMindedStructure = single_minded::SingleMindedStructure<f64>;
pub type EmpiricalDistribution = rv::EmpiricalDistribution<f64>;
