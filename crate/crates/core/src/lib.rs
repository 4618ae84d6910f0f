//! Pilot sequence design for multi-cell massive MIMO under per-user SINR
//! requirements, with the WBE and FOS reference designs, admissible-region
//! analysis, closed-form link analysis and a Monte Carlo link simulator.

pub mod baselines;
pub mod capacity;
pub mod error;
pub mod gwbe;
pub mod io;
pub mod link;
pub mod majorize;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
pub use model::{
    GainTensor, NetworkConfig, PilotBook, PowerAllocation, Scheme, SinrTargets, UserIndex,
};
