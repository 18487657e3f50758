//! Numerical laboratory for rational Dunkl analysis.
//!
//! Exact constructions (Dunkl kernel, transforms, semigroup kernels) are
//! available on rank-1 and ℤ₂^N product systems; root systems, reflection
//! groups, the weighted measure and orbit distances work for any finite
//! reflection group.

pub mod calculus;
pub mod config;
pub mod error;
pub mod function;
pub mod harness;
pub mod kernel;
pub mod measure;
pub mod quadrature;
pub mod report;
pub mod root_system;
pub mod runner;
pub mod semigroup;
pub mod transform;

pub use error::{DunklError, Result};
pub use function::{Callable, GridSampled, Poly, PolyGauss, SmoothFunction};
pub use measure::{Estimate, GridSpec, WeightedContext};
pub use root_system::{RootSystemSpec, ReflectionGroup};
pub use semigroup::KernelSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
