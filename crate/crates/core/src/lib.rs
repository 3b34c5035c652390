//! Pen testing with a budget of ink: pick a feasible subset of pens that
//! maximizes the ink left after testing. The same mechanics describe clock
//! auctions in which bidders face rising prices and the seller keeps the
//! consumer surplus question honest: payments burn value just like test
//! strokes burn ink.
//!
//! The crate is organized around that correspondence:
//!
//! - [`curves`] — value distributions in quantile space, surplus and
//!   consumer-surplus curves, ironing, and the price map that turns a
//!   surplus-targeting clock into a consumer-surplus-targeting one.
//! - [`feasibility`] — which subsets may be selected (top-k, matroids,
//!   knapsack, explicit families).
//! - [`mechanisms`] — deferred-acceptance auctions: ascending clocks,
//!   sequential posted prices, and the virtual-pricing wrapper.
//! - [`pensim`] — the ink-level simulator and the adapter that replays a
//!   mechanism as a pen-testing algorithm.
//! - [`bench`] — Monte Carlo ratio estimation and the closed-form
//!   approximation-bound calculators.

pub mod bench;
pub mod curves;
pub mod error;
pub mod feasibility;
pub mod mechanisms;
pub mod pensim;

pub use error::{Error, Result};
