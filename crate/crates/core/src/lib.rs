#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod groundstate;
pub mod harness;
pub mod initdata;
pub mod model;
pub mod sav;
pub mod spectral;
pub mod splitting;

pub use error::{Result, SavError};
