//! Subgroups of GL2(Z/NZ) and the arithmetic of elliptic-curve division fields.
//!
//! The crate is layered bottom-up:
//! - `modmat`: residues, 2x2 matrices, CRT and exact rationals
//! - `grouplat`: matrix groups, conjugacy and subgroup enumeration
//! - `cartan`: Borel, Cartan, CM and ramified subgroups
//! - `modcurve`: index, genus and cusp data of X_G
//! - `nearco`: near-coincidence searches and the lift identity
//! - `nilpclass`: admissibility, projective types and the nilpotency classifier
//! - `jmaps`: exact j-maps on genus 0 and genus 1 models

pub mod cartan;
pub mod error;
pub mod grouplat;
pub mod jmaps;
pub mod modcurve;
pub mod modmat;
pub mod nearco;
pub mod nilpclass;
pub mod tables;

pub use error::{Error, Result};

/// Bumped whenever a search or its output format changes; keys the CLI cache.
pub const ENGINE_VERSION: &str = concat!("divfield-", env!("CARGO_PKG_VERSION"), "+e1");
