// `!(x > a)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod driver;
pub mod error;
pub mod exponents;
pub mod flow;
pub mod grid;
pub mod io;
pub mod model;
pub mod ops;
pub mod oracle;
pub mod par;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
