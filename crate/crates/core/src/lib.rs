//! Regenerative processes over a countable alphabet: exact clustering
//! indices, hitting-time quantities for constant cylinders, decay of
//! correlations, simulation, Monte Carlo estimators, and an exact
//! finite-window oracle.

pub mod cylinders;
pub mod decay;
pub mod error;
pub mod indices;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod simulate;

pub use error::{Error, Result};
pub use indices::{ClusterStatistics, Observable};
pub use model::{BlockLawFamily, LengthPmf, ModelSpec, Symbol, SymbolLaw};
pub use montecarlo::{Estimate, HittingSample};
pub use oracle::{ProbabilityBounds, WindowEvent};
pub use simulate::{RandomStream, Trajectory};
