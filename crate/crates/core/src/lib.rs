//! Workbench for Laplacian-closed function algebras, manifold submetries,
//! and focal-distance trace identities on a catalog of compact homogeneous
//! spaces (spheres, flat tori, and their products).

pub mod config;
pub mod error;
pub mod focal;
pub mod lapalg;
pub mod linalg;
pub mod poly;
pub mod polyfun;
pub mod report;
pub mod spaces;
pub mod submetry;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use poly::{Poly, Rat};
pub use polyfun::{GradientField, PolyFunction};
pub use spaces::{Factor, GeodesicRay, SpaceModel};
