//! Numerical check of `G(P̄T) = G(TP̄) = G(JP̄J) = G(P̄)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::shapes::SymmetryGroup;
use crate::so3::{Rotation, SO3Quadrature};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub max_right: f64,
    pub max_left: f64,
    pub max_reflection: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Continuous axial symmetry is sampled at this many angles.
const AXIAL_SAMPLES: usize = 5;

/// Checks every quadrature node against every (sampled) generator.
pub fn verify_kernel_symmetry<G>(g: G, group: &SymmetryGroup, quad: &SO3Quadrature, tol: f64) -> SymmetryReport
where
    G: Fn(&Rotation) -> f64 + Sync,
{
    let gens = group.sampled_generators(AXIAL_SAMPLES);
    let j = group.reflection_conjugator();
    let (r, l, m) = quad
        .nodes
        .par_iter()
        .map(|p| {
            let v = g(p);
            let mut out = (0.0f64, 0.0f64, 0.0f64);
            for t in &gens {
                out.0 = out.0.max((g(&(p * t)) - v).abs());
                out.1 = out.1.max((g(&(t * p)) - v).abs());
            }
            out.2 = (g(&((&j * p) * j)) - v).abs();
            out
        })
        .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2)));
    let passed = r < tol && l < tol && m < tol && !(r.is_nan() || l.is_nan() || m.is_nan());
    SymmetryReport { max_right: r, max_left: l, max_reflection: m, tol, passed }
}
