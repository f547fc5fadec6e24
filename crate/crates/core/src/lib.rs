//! Behavioral simulator and security bench for a FeFET strong PUF whose
//! entropy comes from cycle-to-cycle write variation.
//!
//! * [`device`]: stochastic FeFET threshold model and read transfer.
//! * [`puf`]: cells, rows, registration, voltage-mode responses, XOR
//!   composition, the arbiter baseline and CRP files.
//! * [`metrics`]: uniformity, entropy, Hamming distances, correlation,
//!   reliability and static flip chance.
//! * [`attack`]: logistic-regression modeling attack trained with RProp.
//! * [`expctl`]: configuration, seeding and the experiment commands behind
//!   the `ferropuf` binary.

pub mod attack;
pub mod device;
pub mod error;
pub mod expctl;
pub mod io;
pub mod metrics;
pub mod puf;
pub mod rng;

pub use error::{Error, Result};
