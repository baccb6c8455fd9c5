//! Exactly soluble decoherence models on finite grids.
//!
//! Three model families share one toolbox: commuting system/environment
//! couplings whose decoherence function is the Fourier transform of a
//! spectral measure (`araki_zurek`), a boson-field environment handled
//! through Weyl displacement calculus (`vanhove`), and a weak-scattering
//! extension built around an approximate wave operator (`scattering`).
//! Every closed form is cross-checked against brute-force evolution in
//! `oracle`; `harness` runs named scenarios end to end and persists
//! curves, plots, and a manifest.

// `!(x > 0.0)`-style guards are deliberate throughout: unlike `x <= 0.0`
// they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod araki_zurek;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod qcore;
pub mod scattering;
pub mod tol;
pub mod vanhove;

pub use error::{DecoError, Result};
