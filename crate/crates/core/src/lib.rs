//! Continuous-variable (Fock basis) and discrete-variable (statevector)
//! quantum neural networks for one-step and recursive time-series
//! forecasting, with frozen-weight transfer between datasets.

pub mod data;
pub mod error;
pub mod fock;
pub mod forecast;
pub mod models;
pub mod qubit;
pub mod training;
pub mod weights;

pub use error::{Error, Result};
