//! Heat-invariant style computations from metric jets: curvature invariants,
//! pseudodifferential symbol calculus, parametrices and the logarithmic
//! singularity of Green kernels of conformally covariant operators.

pub mod cli;
pub mod dsl;
pub mod error;
pub mod jet;
pub mod logsing;
pub mod metric;
pub mod operators;
pub mod oracles;
pub mod parametrix;
pub mod symbol;
pub mod tensor;

pub use error::{Error, Result};
