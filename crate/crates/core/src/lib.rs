#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod data;
pub mod dp;
pub mod embed;
pub mod error;
pub mod experiment;
pub mod gnn;
pub mod hyp;
pub mod stats;

pub use error::{Error, Result};
