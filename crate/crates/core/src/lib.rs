//! Capacity region of the two-user Gaussian multiple access channel whose
//! receiver observes only the sign of `x1 + x2 + noise - threshold`.
//!
//! The crate is layered bottom-up:
//!
//! * [`scalar`]: Gaussian tail, binary entropy and convexity primitives.
//! * [`dist`]: finite mass-point distributions and the ternary family used
//!   to show that product inputs alone do not reach capacity.
//! * [`info`]: output laws, mutual informations, the weighted objective and
//!   its per-letter densities.
//! * [`solver`]: alternating maximization of the weighted objective under
//!   power constraints, with KKT certification.
//! * [`region`]: power-allocation envelope over the time-sharing variable
//!   and boundary tracing.
//!
//! All information quantities are in bits.

pub mod dist;
pub mod error;
pub mod info;
pub mod region;
pub mod scalar;
pub mod solver;

pub use dist::{MassPointDistribution, PowerBudget};
pub use error::{Error, Result};
pub use info::{ChannelParams, OutputPmf, ProductInput, RateTuple};
pub use scalar::{Bits, Prob};
pub use solver::{KktReport, SolveResult, SolverConfig};
