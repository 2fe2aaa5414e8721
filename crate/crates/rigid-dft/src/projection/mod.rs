//! Least-squares projection of kernels onto symmetry-adapted polynomial
//! bases, plus the closed-form spherotriangle coefficients.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::so3::{Rotation, SO3Quadrature};
use crate::{Error, Result};

pub mod basis;
pub mod spherotriangle;
pub mod symmetry;

pub use basis::{build_basis, Monomial, MonomialBasis, SymmetryClass, Term};
pub use spherotriangle::{
    analytic_spherotriangle_coeffs, cc_route, k_moments, k_theta, orthogonal_family, printed_c2_c4, table1_entry,
    table1_integrand, KThetaEstimate, K_DEFAULT_SEED, K_MIN_SAMPLES, SpheroTriangleCoeffs, Table1Moment, Table1Reading, TABLE1_FLAGGED, TABLE1_ROWS,
};
pub use symmetry::{verify_kernel_symmetry, SymmetryReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Projected,
    Analytic,
    Manual,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

/// `G ≈ Σ c_i q_i`. Coefficients carry the concentration factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelPolynomial {
    pub symmetry_class: SymmetryClass,
    pub coeffs: Vec<f64>,
    #[serde(default = "manual")]
    pub provenance: Provenance,
    #[serde(default)]
    pub params: KernelParams,
}

fn manual() -> Provenance {
    Provenance::Manual
}

impl KernelPolynomial {
    pub fn new(symmetry_class: SymmetryClass, coeffs: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let kp = Self { symmetry_class, coeffs, provenance, params: KernelParams::default() };
        kp.validate()?;
        Ok(kp)
    }

    pub fn validate(&self) -> Result<()> {
        let n = build_basis(self.symmetry_class).len();
        if self.coeffs.len() != n {
            return Err(Error::Incompatible(format!(
                "{} expects {n} coefficients, got {}",
                self.symmetry_class.name(),
                self.coeffs.len()
            )));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("kernel coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> MonomialBasis {
        build_basis(self.symmetry_class)
    }

    /// `-α p11²` (plus zero constant).
    pub fn maier_saupe(alpha: f64) -> Self {
        Self {
            symmetry_class: SymmetryClass::DInfH,
            coeffs: vec![0.0, -alpha],
            provenance: Provenance::Manual,
            params: KernelParams::default(),
        }
    }
}

pub fn evaluate_kernel(kp: &KernelPolynomial, p_bar: &Rotation) -> f64 {
    kp.basis().terms.iter().zip(&kp.coeffs).map(|(t, c)| c * t.eval(p_bar)).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    pub labels: Vec<String>,
    pub gram: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// `‖G − Σ c_i q_i‖` in L²(dν).
    pub residual_l2: f64,
}

impl ProjectionReport {
    pub fn into_kernel(self, basis: &MonomialBasis, params: KernelParams) -> KernelPolynomial {
        KernelPolynomial {
            symmetry_class: basis.symmetry_class,
            coeffs: self.coeffs,
            provenance: Provenance::Projected,
            params,
        }
    }
}

/// Solves `Σ_i (∫ q_i q_j) c_i = ∫ G q_j` on the quadrature.
pub fn project_kernel<G>(g: G, basis: &MonomialBasis, quad: &SO3Quadrature) -> Result<ProjectionReport>
where
    G: Fn(&Rotation) -> f64 + Sync,
{
    project_kernel_fallible(|p| Ok(g(p)), basis, quad)
}

pub fn project_kernel_fallible<G>(g: G, basis: &MonomialBasis, quad: &SO3Quadrature) -> Result<ProjectionReport>
where
    G: Fn(&Rotation) -> Result<f64> + Sync,
{
    let values: Vec<f64> = quad.nodes.par_iter().map(&g).collect::<Result<_>>()?;
    let n = basis.len();
    let q: Vec<Vec<f64>> = quad.nodes.par_iter().map(|p| basis.eval_all(p)).collect();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    let mut g2 = 0.0;
    for ((qk, w), v) in q.iter().zip(&quad.weights).zip(&values) {
        for i in 0..n {
            rhs[i] += w * v * qk[i];
            for j in 0..=i {
                gram[(i, j)] += w * qk[i] * qk[j];
            }
        }
        g2 += w * v * v;
    }
    for i in 0..n {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    let chol = gram.clone().cholesky().ok_or(Error::SingularGram)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::MAX, 0.0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
    if lo <= 1e-7 * hi {
        return Err(Error::SingularGram);
    }
    let c = chol.solve(&rhs);
    // ‖G‖² − 2 c·b + cᵀ A c, with A c = b at the solution
    let residual = (g2 - c.dot(&rhs)).max(0.0).sqrt();
    Ok(ProjectionReport {
        labels: basis.labels(),
        gram: (0..n).map(|i| (0..n).map(|j| gram[(i, j)]).collect()).collect(),
        rhs: rhs.iter().copied().collect(),
        coeffs: c.iter().copied().collect(),
        residual_l2: residual,
    })
}

/// Onsager rod kernel `2L²D|m1 × m1'|` (concentration not included).
pub fn onsager_kernel(l: f64, d: f64) -> impl Fn(&Rotation) -> f64 + Sync {
    move |p: &Rotation| 2.0 * l * l * d * (1.0 - p.p(0, 0).powi(2)).max(0.0).sqrt()
}
