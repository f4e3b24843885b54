//! Max-min fair allocation of capacitated resources to multi-path demands.
//!
//! The crate offers three families of allocators over one model
//! ([`model::Problem`]):
//!
//! * exact and approximate LP sequences plus their one-shot linearizations
//!   ([`alloc`]): sequential max-min, the sorting-network one-shot LP, the
//!   geometric bin sequence and its single-LP binner, and equi-depth binners;
//! * combinatorial waterfillers ([`waterfill`]), including the adaptive
//!   multi-path waterfiller;
//! * evaluation plumbing: fairness metrics ([`metrics`]), problem generation,
//!   POP-style partitioning and a benchmark runner ([`harness`]).
//!
//! LPs are solved by a built-in bounded-variable simplex ([`lp::Simplex`]);
//! other solvers plug in through [`lp::LpBackend`].

pub mod alloc;
pub mod error;
pub mod harness;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod report;
pub mod waterfill;

pub use error::{Error, Result};
pub use model::{Allocation, Demand, Path, Problem, Resource, Volume};
pub use report::AllocatorReport;
