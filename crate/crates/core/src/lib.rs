//! Spectral, dynamical and environmental ingredients for estimating the
//! error of adiabatic sweeps through quantum phase transitions.

pub mod bath;
pub mod error;
pub mod exact_diag;
pub mod experiment;
pub mod fit;
pub mod grover_model;
pub mod ising_spectral;
pub mod numerics;
pub mod response;
pub mod schedules;
pub mod sweep;

pub use error::{Error, Result};
