//! Certificate checking and synthesis for reachability probabilities of
//! stochastic discrete-time polynomial systems.
//!
//! The crate is `no_std` (with `alloc`). File formats, the command-line tool
//! and confidence intervals live in the `stochreach` companion crate.
#![no_std]

extern crate alloc;

pub mod certify;
pub mod error;
pub mod expectation;
pub mod geometry;
pub mod interval;
pub mod model;
pub mod poly;
pub mod regioncheck;
pub mod sim;
pub mod synth;

pub use error::Error;
pub use geometry::{Hyperbox, RegionSpec};
pub use interval::Interval;
pub use model::{Disturbance, Mode, ProblemParts, ProblemSpec, Semantics, SystemModel};
pub use poly::{Monomial, Polynomial};

pub type Result<T> = core::result::Result<T, Error>;
