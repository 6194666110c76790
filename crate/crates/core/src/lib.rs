//! Minimum aberration two-level designs under conditional models with two
//! conditional/conditioned factor pairs.
//!
//! Factors `F1, F2` and `F3, F4` form the two pairs: `F1` and `F3` are the
//! conditional factors, `F2` and `F4` the conditioned ones. Effects are
//! classified by the number `s` of conditional factors involved and the
//! order `l`, and designs are ranked by the K-sequence.

pub mod aberration;
pub mod catalog;
pub mod cli;
pub mod counts;
pub mod design;
pub mod error;
pub mod gf2;
pub mod model;
pub mod param;
pub mod search;

pub use error::{Error, Result};
