//! Solver on S² for kernels that depend on `p11` only.

use serde::Serialize;

use super::{sorted_eigen, ScfConfig};
use crate::projection::KernelPolynomial;
use crate::so3::S2Quadrature;
use crate::{Error, Mat3, Result, Vec3};

pub struct ReducedSolver<'a> {
    kp: KernelPolynomial,
    quad: &'a S2Quadrature,
    /// `(coefficient, power of p11)` per kernel term.
    powers: Vec<(f64, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedBranch {
    pub n1: [f64; 3],
    pub nn: [[f64; 3]; 3],
    pub eig_nn: [f64; 3],
    pub free_energy: f64,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Moments `<n>`, `<nn>`.
type Moments = (Vec3, Mat3);

pub fn reduce_to_s2<'a>(kp: &KernelPolynomial, quad: &'a S2Quadrature) -> Result<ReducedSolver<'a>> {
    kp.validate()?;
    if !kp.symmetry_class.is_axial() {
        return Err(Error::NotAxial);
    }
    let basis = kp.basis();
    let mut powers = Vec::new();
    for (t, c) in basis.terms.iter().zip(&kp.coeffs) {
        let mut k = 0;
        for mono in &t.0 {
            let f = mono.factors();
            if f.iter().any(|&x| x != (1, 1)) {
                return Err(Error::NotAxial);
            }
            k = f.len();
        }
        powers.push((*c, k));
    }
    Ok(ReducedSolver { kp: kp.clone(), quad, powers })
}

impl ReducedSolver<'_> {
    pub fn kernel(&self) -> &KernelPolynomial {
        &self.kp
    }

    fn field(&self, m: &Moments, n: &Vec3) -> f64 {
        self.powers
            .iter()
            .map(|&(c, k)| match k {
                0 => c,
                1 => c * m.0.dot(n),
                _ => c * n.dot(&(m.1 * n)),
            })
            .sum()
    }

    fn contraction(&self, a: &Moments, b: &Moments) -> f64 {
        self.powers
            .iter()
            .map(|&(c, k)| match k {
                0 => c,
                1 => c * a.0.dot(&b.0),
                _ => c * a.1.component_mul(&b.1).sum(),
            })
            .sum()
    }

    /// Moments, `ln Z` and `<W>` of `exp(−W[m])`.
    fn map(&self, m: &Moments) -> Result<(Moments, f64, f64)> {
        let vals: Vec<f64> = self.quad.nodes.iter().map(|n| self.field(m, n)).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("mean field is not finite on the quadrature".into()));
        }
        let shift = vals.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut mw, mut n1, mut nn) = (0.0, 0.0, Vec3::zeros(), Mat3::zeros());
        for ((n, w), v) in self.quad.nodes.iter().zip(&self.quad.weights).zip(&vals) {
            let e = w * (-v - shift).exp();
            z += e;
            mw += e * v;
            n1 += e * n;
            nn += e * n * n.transpose();
        }
        Ok(((n1 / z, nn / z), z.ln() + shift, mw / z))
    }

    pub fn solve(&self, cfg: &ScfConfig) -> Result<ReducedBranch> {
        cfg.validate()?;
        let init = cfg.init.moments(false);
        let mut m: Moments = (init.m1_vec(), init.m11_mat());
        let mut best: Option<(Moments, f64)> = None;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=cfg.max_iter {
            iterations = it;
            let (fm, _, _) = self.map(&m)?;
            let res = (fm.0 - m.0).abs().max().max((fm.1 - m.1).abs().max());
            if !res.is_finite() {
                break;
            }
            if best.as_ref().is_none_or(|b| res < b.1) {
                best = Some((m, res));
            }
            if res <= cfg.tol {
                converged = true;
                break;
            }
            m = (m.0 + cfg.damping * (fm.0 - m.0), m.1 + cfg.damping * (fm.1 - m.1));
        }
        let (m, residual) = best.ok_or_else(|| Error::Domain("iteration produced no finite residual".into()))?;
        let (fm, log_z, mean_w) = self.map(&m)?;
        let free_energy = -log_z - mean_w + 0.5 * self.contraction(&fm, &fm);
        let mut nn = [[0.0; 3]; 3];
        for (i, row) in nn.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = m.1[(i, j)];
            }
        }
        Ok(ReducedBranch {
            n1: m.0.into(),
            nn,
            eig_nn: sorted_eigen(&m.1).0,
            free_energy,
            residual,
            converged,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{Provenance, SymmetryClass};
    use crate::scf::{scf_solve, InitState};
    use crate::so3::{haar_quadrature, s2_quadrature};

    #[test]
    fn uniform_density() {
        let q = s2_quadrature(12, 12).unwrap();
        let kp = KernelPolynomial::maier_saupe(0.0);
        let s = reduce_to_s2(&kp, &q).unwrap();
        let ((n1, nn), lz, _) = s.map(&(Vec3::zeros(), Mat3::identity() / 3.0)).unwrap();
        assert!(n1.norm() < 1e-15);
        assert!((nn - Mat3::identity() / 3.0).abs().max() < 1e-15);
        assert!(lz.abs() < 1e-15);
    }

    #[test]
    fn agrees_with_full_solver() {
        let (na, nb) = (24, 24);
        let s2 = s2_quadrature(na, nb).unwrap();
        let so3 = haar_quadrature(na, nb, 6).unwrap();
        let kp = KernelPolynomial::maier_saupe(9.0);
        let cfg = ScfConfig { init: InitState::UniaxialSeed, tol: 1e-12, ..Default::default() };
        let r = reduce_to_s2(&kp, &s2).unwrap().solve(&cfg).unwrap();
        let f = scf_solve(&kp, &cfg, &so3).unwrap();
        assert!(r.converged && f.converged);
        for (a, b) in r.eig_nn.iter().zip(&f.order_params.eig_m11) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!((r.free_energy - f.free_energy).abs() < 1e-8);
    }

    #[test]
    fn polar_rods_order_along_director() {
        let q = s2_quadrature(24, 24).unwrap();
        let kp = KernelPolynomial::new(SymmetryClass::CInf, vec![0.0, -2.5, -10.0], Provenance::Manual).unwrap();
        let cfg = ScfConfig { init: InitState::PolarSeed, tol: 1e-11, ..Default::default() };
        let r = reduce_to_s2(&kp, &q).unwrap().solve(&cfg).unwrap();
        assert!(r.converged);
        let n1 = Vec3::from(r.n1);
        assert!(n1.norm() > 0.1, "{n1}");
        let nn = Mat3::from_fn(|i, j| r.nn[i][j]);
        // <n> is an eigenvector of <nn>
        let v = nn * n1;
        assert!(v.cross(&n1).norm() < 1e-8 * n1.norm());
    }

    #[test]
    fn biaxial_kernels_rejected() {
        let q = s2_quadrature(4, 4).unwrap();
        let kp = KernelPolynomial::new(SymmetryClass::C2vQuadratic, vec![0.0; 5], Provenance::Manual).unwrap();
        assert!(matches!(reduce_to_s2(&kp, &q), Err(Error::NotAxial)));
    }
}
