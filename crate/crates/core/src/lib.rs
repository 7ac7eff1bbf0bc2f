//! Multimode bosonic interference simulator for NOON-state projection
//! measurements on photon pairs from parametric down-conversion.
//!
//! The crate is layered bottom-up:
//!
//! - [`fock`]: dressed-mode Fock states, linear-optical evolution and
//!   post-selected coincidence probabilities.
//! - [`temporal`]: Gaussian wavepackets and the orthonormal temporal basis.
//! - [`circuits`]: optical elements and the preset interferometers.
//! - [`source`]: multi-pair down-conversion states for each timing scenario.
//! - [`experiment`]: delay scans and the accidental-coincidence formulas.
//! - [`fit`]: Gaussian dip fits and model-free visibilities.
//! - [`config`] and [`report`]: the configuration-driven runner behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod fock;
pub mod report;
pub mod simplex;
pub mod source;
pub mod temporal;

pub use error::{Error, Result};
