//! Detecting malicious robots in a mobile team.
//!
//! Robots random-walk over a graph of sites and take noisy trust
//! observations of whoever shares their site. The individual protocol
//! classifies teammates from a robot's own observations; crowd vetting adds
//! an exchange phase in which robots fuse the trust vectors of teammates
//! they already trust by majority vote.

pub mod adversary;
pub mod config;
pub mod engine;
pub mod experiments;
pub mod error;
pub mod markov;
pub mod protocols;
pub mod topology;
pub mod trust;
pub mod verification;

pub use config::{Config, Scenario};
pub use engine::{simulate, success_check, Mode, Placement, RunRecord, Team};
pub use error::{Error, Result};
pub use protocols::{dcv_params, fuse_majority, individual_params, ProtocolKind, ProtocolParams, Rho};
