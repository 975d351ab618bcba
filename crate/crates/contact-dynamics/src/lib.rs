//! Numerical toolkit for smooth contact Hamiltonian dynamics on model
//! contact manifolds.

pub mod algebra;
pub mod config;
pub mod dual;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod flow;
pub mod hamfield;
pub mod manifold;
pub mod metrics;
pub mod numeric;
pub mod symplectization;

pub use error::{ContactError, Result};

/// Every code block in the guide under `book/` compiles and runs as a
/// documentation test, so the book cannot drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/manifolds.md")]
    pub struct Manifolds;
    #[doc = include_str!("../../../book/src/hamiltonians.md")]
    pub struct Hamiltonians;
    #[doc = include_str!("../../../book/src/flows.md")]
    pub struct Flows;
    #[doc = include_str!("../../../book/src/group.md")]
    pub struct Group;
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub struct Metrics;
    #[doc = include_str!("../../../book/src/symplectization.md")]
    pub struct Symplectization;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
}
