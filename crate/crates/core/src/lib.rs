//! Verification engine for Killing-type vector fields and almost coKähler
//! structures on coordinate charts.
//!
//! Every check evaluates metric-derived tensors at sample points using
//! third-order Taylor jets, so curvature and its first derivatives are exact
//! to rounding. See [`killing`] and [`contact`] for the checks themselves and
//! [`catalog`] for the built-in example manifolds.

pub mod catalog;
pub mod contact;
pub mod deform;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod killing;
pub mod realline;
pub mod reeb;
pub mod report;
pub mod sampling;
pub mod spec;
pub mod tensor;

pub use error::{MkvError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
