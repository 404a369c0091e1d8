#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod featurizer;
mod fsutil;
pub mod pipeline;
pub mod regressors;
pub mod rng;
pub mod selection;
pub mod sparse;

pub use error::{Error, ErrorClass, Result};
