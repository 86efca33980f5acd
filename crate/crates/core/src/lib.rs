//! Numerical laboratory for the deficiency of convex-hull approximations in
//! sup-tuple spaces `ℓ_∞^n(X)`, together with constructive certificates bounding
//! it from above for Lipschitz-function spaces and function modules.

pub mod certificates;
pub mod dkprofile;
pub mod error;
pub mod hullgeom;
pub mod lipmetric;
pub mod spaces;

pub use error::{Error, Result};
