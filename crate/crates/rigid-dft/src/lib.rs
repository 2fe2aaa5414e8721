//! Density-functional toolkit for rigid molecules: SO(3) quadrature, hard-core
//! excluded-volume kernels, symmetry-adapted kernel projection and a
//! self-consistent moment solver for orientationally ordered phases.

pub mod error;
pub mod exvol;
pub mod projection;
pub mod scf;
pub mod shapes;
pub mod so3;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
