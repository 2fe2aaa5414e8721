use serde::{Deserialize, Serialize};

use rigid_dft::projection::SymmetryClass;
use rigid_dft::scf::InitState;
use rigid_dft::shapes::{MoleculeShape, PairPotential, PotentialKind};
use rigid_dft::so3::{euler_to_matrix, EulerAngles, Rotation};
use rigid_dft::Mat3;

use crate::CliError;

/// One JSON file per run. Every section is optional at parse time; each
/// command checks for the sections it needs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<MoleculeShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scf: Option<ScfSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Orientation of molecule 2 relative to molecule 1 (exvol only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    /// Monte Carlo cross-check sample count (exvol only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<u64>,
    /// Cells per axis for soft kernels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    pub n_alpha: usize,
    pub n_beta: usize,
    pub n_gamma: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub symmetry_class: SymmetryClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScfSpec {
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<String>,
}

fn default_damping() -> f64 {
    0.5
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    5000
}
fn default_seeds() -> Vec<String> {
    InitState::PRESETS.iter().map(|s| s.name().to_string()).collect()
}

impl Default for ScfSpec {
    fn default() -> Self {
        Self { damping: default_damping(), tol: default_tol(), max_iter: default_max_iter(), seeds: default_seeds() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// `concentration`, `alpha`, `theta`, `angle` or a coefficient `c<i>`.
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    /// Rotation axis for `angle` sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Orientation {
    Euler { alpha: f64, beta: f64, gamma: f64 },
    Matrix { matrix: [[f64; 3]; 3] },
}

/// Parameter being swept, resolved from its name.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepParam {
    Concentration,
    Alpha,
    Theta,
    Angle,
    Coeff(usize),
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| schema(format!("config: {e}")))
    }

    pub fn shape(&self) -> Result<&MoleculeShape, CliError> {
        let s = self.shape.as_ref().ok_or_else(|| schema("missing section: shape"))?;
        s.validate().map_err(|e| schema(e.to_string()))?;
        Ok(s)
    }

    pub fn quad(&self, default: QuadSpec) -> Result<QuadSpec, CliError> {
        let q = self.quadrature.unwrap_or(default);
        if q.n_alpha == 0 || q.n_beta == 0 || q.n_gamma == 0 {
            return Err(schema("quadrature node counts must be positive"));
        }
        Ok(q)
    }

    /// `None` means the hard-core kernel.
    pub fn potential(&self) -> Result<Option<(PairPotential, f64)>, CliError> {
        let Some(p) = &self.potential else { return Ok(None) };
        let d = self.shape()?.diameter;
        let t = p.temperature.unwrap_or(1.0);
        if !(t > 0.0 && t.is_finite()) {
            return Err(schema(format!("potential.T must be positive, got {t}")));
        }
        match p.kind {
            PotentialKind::HardCore => {
                if p.epsilon.is_some() {
                    return Err(schema("potential.epsilon is not a HardCore parameter"));
                }
                // a hard core with no beads is the exact convex kernel
                Ok(self.shape()?.n_beads.map(|_| (PairPotential::hard_core(d), t)))
            }
            PotentialKind::LennardJones => {
                let eps = p.epsilon.ok_or_else(|| schema("potential.epsilon is required for LennardJones"))?;
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(schema(format!("potential.epsilon must be positive, got {eps}")));
                }
                if self.shape()?.n_beads.is_none() {
                    return Err(schema("shape.N is required for a bead potential"));
                }
                Ok(Some((PairPotential::lennard_jones(d, eps), t)))
            }
        }
    }

    pub fn concentration(&self) -> Result<f64, CliError> {
        let c = self.kernel.as_ref().and_then(|k| k.concentration).unwrap_or(1.0);
        if !(c > 0.0 && c.is_finite()) {
            return Err(schema(format!("kernel.concentration must be positive, got {c}")));
        }
        Ok(c)
    }

    pub fn orientation(&self) -> Result<Rotation, CliError> {
        match &self.orientation {
            None => Ok(Rotation::identity()),
            Some(Orientation::Euler { alpha, beta, gamma }) => EulerAngles::new(*alpha, *beta, *gamma)
                .map(|e| euler_to_matrix(&e))
                .map_err(|e| schema(format!("orientation: {e}"))),
            Some(Orientation::Matrix { matrix }) => {
                Rotation::from_matrix(Mat3::from_fn(|i, j| matrix[i][j])).map_err(|e| schema(format!("orientation: {e}")))
            }
        }
    }

    pub fn seeds(&self) -> Result<Vec<InitState>, CliError> {
        let spec = self.scf.clone().unwrap_or_default();
        if spec.seeds.is_empty() {
            return Err(schema("scf.seeds must not be empty"));
        }
        spec.seeds
            .iter()
            .map(|n| {
                InitState::PRESETS
                    .iter()
                    .find(|s| s.name() == n)
                    .cloned()
                    .ok_or_else(|| schema(format!("unknown seed {n:?}")))
            })
            .collect()
    }

    pub fn grid(&self) -> Result<(SweepParam, Vec<f64>), CliError> {
        let s = self.sweep.as_ref().ok_or_else(|| schema("missing section: sweep"))?;
        let param = match s.param.as_str() {
            "concentration" => SweepParam::Concentration,
            "alpha" => SweepParam::Alpha,
            "theta" => SweepParam::Theta,
            "angle" => SweepParam::Angle,
            p => match p.strip_prefix('c').and_then(|i| i.parse().ok()) {
                Some(i) => SweepParam::Coeff(i),
                None => return Err(schema(format!("unknown sweep parameter {p:?}"))),
            },
        };
        if s.steps < 2 {
            return Err(schema("sweep.steps must be at least 2"));
        }
        if !(s.from.is_finite() && s.to.is_finite()) || s.from == s.to {
            return Err(schema("sweep.from and sweep.to must be finite and distinct"));
        }
        if s.axis.is_some() && param != SweepParam::Angle {
            return Err(schema("sweep.axis only applies to angle sweeps"));
        }
        let h = (s.to - s.from) / (s.steps - 1) as f64;
        Ok((param, (0..s.steps).map(|k| s.from + h * k as f64).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_schema() {
        let c = RunConfig::parse(
            r#"{"shape":{"kind":"SpheroTriangle","L":1,"D":0.1,"theta":1.5},
                "quadrature":{"n_alpha":8,"n_beta":8,"n_gamma":8},
                "kernel":{"symmetry_class":"C2v_quadratic","concentration":2},
                "scf":{"damping":0.4,"tol":1e-9,"max_iter":100,"seeds":["Isotropic"]},
                "sweep":{"param":"c2","from":0,"to":-5,"steps":3},
                "seed":7,"out":"x"}"#,
        )
        .unwrap();
        assert_eq!(c.grid().unwrap(), (SweepParam::Coeff(2), vec![0.0, -2.5, -5.0]));
        assert_eq!(c.seeds().unwrap(), vec![InitState::Isotropic]);
        assert_eq!(c.concentration().unwrap(), 2.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse(r#"{"bogus":1}"#).is_err());
        assert!(RunConfig::parse(r#"{"kernel":{"symmetry_class":"D3h"}}"#).is_err());
        let c = RunConfig::parse(r#"{"shape":{"kind":"SpheroTriangle","L":1,"D":0.1,"theta":0}}"#).unwrap();
        assert!(c.shape().is_err());
        let c = RunConfig::parse(r#"{"scf":{"seeds":["Smectic"]}}"#).unwrap();
        assert!(c.seeds().is_err());
    }

    #[test]
    fn orientation_forms_agree() {
        let e = RunConfig::parse(r#"{"orientation":{"alpha":1.5707963267948966,"beta":0,"gamma":0}}"#).unwrap();
        let r = e.orientation().unwrap();
        let m = r.matrix();
        let text = format!(
            r#"{{"orientation":{{"matrix":[[{},{},{}],[{},{},{}],[{},{},{}]]}}}}"#,
            m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)], m[(2, 0)], m[(2, 1)], m[(2, 2)]
        );
        let q = RunConfig::parse(&text).unwrap().orientation().unwrap();
        assert!((r.matrix() - q.matrix()).abs().max() < 1e-15);
    }
}
