//! Functional-data classification on splinet bases: image linearization,
//! data-driven knot selection, class-wise FPCA, and the residual-norm
//! classification workflow.

pub mod classify;
pub mod ddk;
pub mod error;
pub mod hilbert;
pub mod idx;
pub mod imaging;
pub mod io;
pub mod kl;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod search;

pub use error::FdaError;
