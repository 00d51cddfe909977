//! Faked-states attacks on quantum key distribution receivers whose two
//! detectors have efficiencies that depend differently on a parameter the
//! eavesdropper controls (pulse timing, wavelength).
//!
//! Each protocol module carries three views of the same attack:
//!
//! * closed-form QBER expressions,
//! * an exact enumeration over every basis/detector branch in rational
//!   arithmetic, used as an oracle for the closed forms,
//! * a seeded Monte Carlo simulation that is reproducible regardless of how
//!   many worker threads it runs on.
//!
//! Protocols covered: [`bb84`], [`sarg04`], phase-time encoded BB84
//! ([`phasetime`]), [`dpsk`] and the entanglement-based [`ekert`] protocol.
//! The [`engine`] module orchestrates scenarios, sweeps and output, and
//! [`checks`] bundles the analytic-vs-oracle identities used by the
//! `verify` and `tables` subcommands.

pub mod bb84;
pub mod checks;
pub mod detmodel;
pub mod dpsk;
pub mod ekert;
pub mod engine;
mod error;
pub mod exact;
pub mod interferometry;
pub mod phasetime;
pub mod polar;
pub mod sarg04;

pub use error::{Error, Result};
