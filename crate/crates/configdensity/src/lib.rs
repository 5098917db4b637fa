//! configdensity: measurable subsets of R^d (d <= 3) as discretized density
//! fields, with configuration functionals evaluated by independent spatial
//! and spectral routes, an upper-Banach-density estimator, stationary-field
//! averaging experiments, and a verification suite for the explicit
//! identities and bounds the functionals rest on.

pub mod bessel;
pub mod density;
pub mod error;
pub mod field;
pub mod functionals;
pub mod generate;
pub mod io;
pub mod measures;
pub mod numeric;
pub mod report;
pub mod spectral;
pub mod stationary;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Boundary, DensityField, Grid, SummedArea};
pub use generate::{generate, GeneratorShape, GeneratorSpec};
pub use measures::{CircleQuadrature, RayQuadrature};
pub use report::BoundReport;
pub use spectral::{forward_transform, forward_transform_padded, poisson_smooth, Spectrum};
