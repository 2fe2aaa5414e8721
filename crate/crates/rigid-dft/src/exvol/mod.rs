//! Hard-core excluded volume `G(P̄)` for rods, spherotriangles and
//! bent-cores, with a Monte Carlo oracle and a soft-potential integrator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::shapes::{MoleculeShape, ShapeKind};
use crate::so3::Rotation;
use crate::{Error, Result};

pub mod bentcore;
pub mod distance;
pub mod montecarlo;
pub mod soft;
pub mod steiner;

pub use bentcore::{bentcore_excluded_volume, bentcore_excluded_volume_detail};
pub use distance::{primitive_distance, CenterSet};
pub use montecarlo::{mc_excluded_volume, mc_excluded_volume_sets};
pub use soft::{soft_kernel, GridSpec};
pub use steiner::{
    point_reflection_sum, spherotriangle_excluded_volume, steiner, steiner_v1, steiner_v2, steiner_v2_detail, steiner_v3, CaseTag, EdgeSet,
    SteinerDecomposition,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Analytic,
    Slab2D,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedVolumeResult {
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case_tag: Option<CaseTag>,
}

/// `2L²D s + 2πLD² + 4πD³/3` with `s = |m × m'|`.
pub fn rod_excluded_volume(l: f64, d: f64, sin_abs: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&sin_abs) {
        return Err(Error::Domain(format!("|m x m'| must lie in [0, 1], got {sin_abs}")));
    }
    if !(l > 0.0 && d >= 0.0) {
        return Err(Error::Domain("rod excluded volume needs L > 0 and D >= 0".into()));
    }
    Ok(2.0 * l * l * d * sin_abs + 2.0 * PI * l * d * d + 4.0 / 3.0 * PI * d.powi(3))
}

/// `|m1 × m1'|` from the relative rotation.
pub fn axis_sine(p_bar: &Rotation) -> f64 {
    (p_bar.p(1, 0).powi(2) + p_bar.p(2, 0).powi(2)).sqrt().min(1.0)
}

/// Hard-core kernel for any supported shape through its exact or
/// semi-analytic path.
pub fn excluded_volume(shape: &MoleculeShape, p_bar: &Rotation) -> Result<ExcludedVolumeResult> {
    match shape.kind {
        ShapeKind::Rod => Ok(ExcludedVolumeResult {
            value: rod_excluded_volume(shape.length, shape.diameter, axis_sine(p_bar))?,
            stderr: 0.0,
            method: Method::Analytic,
            case_tag: None,
        }),
        ShapeKind::SpheroTriangle => spherotriangle_excluded_volume(shape, p_bar),
        ShapeKind::BentCore => bentcore_excluded_volume(shape, p_bar),
    }
}
