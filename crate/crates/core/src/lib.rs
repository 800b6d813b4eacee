//! SWIPT-enabled H2H/M2M cellular network simulator with multi-agent deep
//! Q-learning resource allocation.

pub mod agents;
pub mod channel;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod neural;
pub mod oracle;
pub mod phy;
pub mod rng;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};
