//! Empirical process tools for locally stationary time series: process
//! simulation, functional dependence measures, the V semi-norm calculus,
//! localized estimators and a Monte Carlo verification harness.

pub mod dependence;
pub mod empirical_process;
pub mod error;
pub mod estimators;
pub mod function_class;
pub mod harness;
pub mod innovation;
pub mod kernel;
pub mod poly;
pub mod process_models;
pub mod quadrature;
pub mod rng;
pub mod seminorm;
pub mod special;
pub mod stats;

pub use error::{LsepError, Result};
