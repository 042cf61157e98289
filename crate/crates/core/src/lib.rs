#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod distribution;
pub mod error;
pub mod estimator;
pub mod lambda;
pub mod model;
pub mod montecarlo;
pub mod numeric;
pub mod ode;
pub mod reconstruction;
pub mod run;
pub mod sample;
pub mod weight;

pub use error::{Error, ErrorClass, Result};
