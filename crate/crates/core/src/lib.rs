pub mod cem;
pub mod cmdp;
pub mod cocorl;
pub mod envs;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod irl;
pub mod solvers;

pub use error::{Error, Result};
