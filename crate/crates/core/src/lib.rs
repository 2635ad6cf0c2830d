pub mod banded;
pub mod bilayer;
pub mod coefficients;
pub mod config;
pub mod error;
pub mod experiments;
pub mod normal_form;
pub mod ode;
pub mod operator;
pub mod pearl;
pub mod potential;
pub mod runner;
pub mod simulator;
pub mod svg;

pub use error::{Error, Result};
