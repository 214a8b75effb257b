//! Equilibrium engine for allocating demand-response (DR) quantities among
//! strategic PV prosumers served by a third-party DR provider inside a
//! regulated utility.
//!
//! The game has three layers:
//!
//! ```text
//!   utility        -- pays lambda_dr per kW of DR, sees cost Cost(Q)
//!      |
//!   DR provider    -- pays lambda_pv per kW of surplus, keeps the margin
//!      |
//!   prosumers 1..n -- pick dr to minimise inconvenience - PV sale profit
//! ```
//!
//! Prices follow the supply/demand ratio of each prosumer ([`pricing`]); the
//! prosumers play a simultaneous game through a coupled inconvenience cost
//! ([`prosumer`]); the provider and utility settle at the resulting state
//! ([`settlement`]); [`equilibrium`] iterates the whole loop until it reaches
//! a fixed point and checks that no prosumer can gain by deviating.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x >= 0.0)` is used on purpose: it rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod equilibrium;
pub mod pricing;
pub mod prosumer;
pub mod scenario;
pub mod series;
pub mod settlement;

pub use equilibrium::{run, verify_nash, EquilibriumResult, NashReport, SolveOptions};
pub use pricing::{PriceQuote, Sdr};
pub use scenario::{ProsumerSpec, Scenario, TouTariff, UtilityCostCoefficients, ValidationError};
pub use series::HourlySeries;
