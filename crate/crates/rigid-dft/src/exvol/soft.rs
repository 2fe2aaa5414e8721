//! Homogenised kernel `∫ (1 − exp(−U(x, P̄)/kT)) dx` for bead models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::CenterSet;
use crate::shapes::{bead_pair_energy, beads, Energy, MoleculeShape, PairPotential, PotentialKind};
use crate::so3::Rotation;
use crate::{Error, Result, Vec3};

/// Midpoint grid of `n³` cells on the cube `[-half_width, half_width]³`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
}

impl GridSpec {
    /// Smallest half-width that contains the interaction support.
    pub fn support(shape: &MoleculeShape, potential: &PairPotential) -> Result<f64> {
        let b = beads(shape)?;
        let r = b.positions.iter().map(|p| p.norm()).fold(0.0, f64::max);
        Ok(2.0 * r + potential.range())
    }
}

pub fn soft_kernel(
    shape: &MoleculeShape,
    potential: &PairPotential,
    kt: f64,
    p_bar: &Rotation,
    grid: &GridSpec,
) -> Result<f64> {
    if !(kt > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {kt}")));
    }
    if grid.n < 2 {
        return Err(Error::GridTooSmall(format!("need at least 2 cells per axis, got {}", grid.n)));
    }
    let need = GridSpec::support(shape, potential)?;
    if grid.half_width < need {
        return Err(Error::GridTooSmall(format!(
            "half-width {} does not contain the interaction support (needs {need})",
            grid.half_width
        )));
    }
    let b = beads(shape)?;
    let n_seg = shape.n_beads.unwrap_or(1) as f64;
    let spacing = shape.length / n_seg;
    let c1 = CenterSet::from_shape(shape)?;
    let c2 = c1.transformed(p_bar, &Vec3::zeros());
    let h = 2.0 * grid.half_width / grid.n as f64;
    let n = grid.n;
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = -grid.half_width + (i as f64 + 0.5) * h;
            let mut acc = 0.0;
            for j in 0..n {
                let y = -grid.half_width + (j as f64 + 0.5) * h;
                for k in 0..n {
                    let z = -grid.half_width + (k as f64 + 0.5) * h;
                    let xr = Vec3::new(x, y, z);
                    // bead centres lie on the centre set, so its distance bounds theirs
                    let dist = c1.translated(&xr).distance(&c2);
                    if dist >= potential.range() && potential.kind == PotentialKind::LennardJones {
                        continue;
                    }
                    if potential.kind == PotentialKind::HardCore {
                        if dist > potential.d {
                            continue;
                        }
                        if dist + spacing <= potential.d {
                            acc += 1.0;
                            continue;
                        }
                    }
                    acc += match bead_pair_energy(&b, potential, &xr, p_bar) {
                        Energy::Overlap => 1.0,
                        e => e.mayer(kt),
                    };
                }
            }
            acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total * h.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exvol::{axis_sine, rod_excluded_volume};

    fn rod() -> MoleculeShape {
        MoleculeShape::rod(1.0, 0.2).unwrap().with_beads(16).unwrap()
    }

    #[test]
    fn hard_core_rod_close_to_formula() {
        let s = rod();
        let pot = PairPotential::hard_core(0.2);
        // generic orientation: axis-aligned slabs alias with the grid
        let pb = Rotation::about_axis(&Vec3::new(0.3, -0.5, 0.8).normalize(), 1.7);
        let hw = GridSpec::support(&s, &pot).unwrap();
        let v = soft_kernel(&s, &pot, 1.0, &pb, &GridSpec { half_width: hw, n: 96 }).unwrap();
        let exact = rod_excluded_volume(1.0, 0.2, axis_sine(&pb)).unwrap();
        assert!((v - exact).abs() < 0.02 * exact, "{v} vs {exact}");
    }

    #[test]
    fn lj_temperature_dependence() {
        let s = MoleculeShape::rod(1.0, 0.2).unwrap().with_beads(4).unwrap();
        let pot = PairPotential::lennard_jones(0.2, 1.0);
        let pb = Rotation::about_axis(&Vec3::new(0.0, 1.0, 1.0).normalize(), 1.0);
        let g = GridSpec { half_width: GridSpec::support(&s, &pot).unwrap(), n: 24 };
        // the well dominates at kT = ε; the core takes over past a maximum
        let vals: Vec<f64> = [1.0, 128.0, 256.0, 1024.0, 1e24]
            .iter()
            .map(|&t| soft_kernel(&s, &pot, t, &pb, &g).unwrap())
            .collect();
        assert!(vals.iter().all(|v| v.is_finite()));
        assert!(vals[0] < 0.0, "{vals:?}");
        assert!(vals[1] > vals[2] && vals[2] > vals[3], "{vals:?}");
        assert!(vals[4].abs() < 1e-2 * vals[3].abs(), "{vals:?}");
    }

    #[test]
    fn rejects_small_grid() {
        let s = rod();
        let pot = PairPotential::hard_core(0.2);
        let g = GridSpec { half_width: 0.5, n: 16 };
        assert!(matches!(
            soft_kernel(&s, &pot, 1.0, &Rotation::identity(), &g),
            Err(Error::GridTooSmall(_))
        ));
    }
}
