//! Normal factor graphs as probabilistic models.
//!
//! Factors are dense complex tables over labelled product domains. An
//! [`nfg::NfgGraph`] attaches them to vertices and binds their axes to
//! internal edges and half edges; its exterior function is what the
//! evaluation engines in [`exterior`] compute.

pub mod algebra;
pub mod codes;
pub mod error;
pub mod exterior;
pub mod factor;
pub mod gallery;
pub mod indicators;
pub mod inference;
pub mod models;
pub mod nfg;
pub mod random;
pub mod transform;

pub use error::{NfgError, Result};
