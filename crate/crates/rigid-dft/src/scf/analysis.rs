//! Checks of the structural results on solutions, and parameter sweeps.

use rayon::prelude::*;
use serde::Serialize;

use super::{mean_field, scf_solve, signature, InitState, MomentSet, ScfConfig, SolutionBranch};
use crate::projection::{KernelPolynomial, SymmetryClass};
use crate::so3::{Rotation, SO3Quadrature};
use crate::{Error, Result, Vec3};

pub const UNIAXIAL_TOL: f64 = 1e-6;
pub const POLAR_TOL: f64 = 1e-6;
pub const COMMUTE_PREMISE: f64 = 1e-8;
pub const EIGVEC_TOL: f64 = 1e-6;
pub const COMMUTATOR_TOL: f64 = 1e-6;
pub const DENSITY_TOL: f64 = 1e-8;
pub const BRANCH_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub branch: usize,
    /// `a` to `e`.
    pub id: char,
    pub premise: bool,
    pub value: f64,
    pub tol: f64,
    /// `None` when the premise does not hold (value is then only measured).
    pub passed: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TheoremReport {
    pub checks: Vec<TheoremCheck>,
}

impl TheoremReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    pub fn get(&self, branch: usize, id: char) -> Option<&TheoremCheck> {
        self.checks.iter().find(|c| c.branch == branch && c.id == id)
    }
}

/// `(c0, c1, c2, c3, c4)` of the quadratic part and whether any cubic
/// coefficient is nonzero.
pub fn quadratic_coeffs(kp: &KernelPolynomial) -> ([f64; 5], bool) {
    let c = &kp.coeffs;
    match kp.symmetry_class {
        SymmetryClass::DInfH => ([c[0], 0.0, c[1], 0.0, 0.0], false),
        SymmetryClass::CInf => ([c[0], c[1], c[2], 0.0, 0.0], false),
        SymmetryClass::C2vQuadratic => ([c[0], c[1], c[2], c[3], c[4]], false),
        SymmetryClass::C2vCubic => ([c[0], c[1], c[2], c[3], c[4]], c[5..].iter().any(|x| *x != 0.0)),
    }
}

fn density_generators(class: SymmetryClass) -> Vec<Rotation> {
    let about_x = (1..=4).map(|k| Rotation::about_axis(&Vec3::x(), 0.37 + 1.2 * k as f64));
    match class {
        SymmetryClass::DInfH => {
            let mut g = vec![Rotation::about_axis(&Vec3::z(), std::f64::consts::PI)];
            g.extend(about_x);
            g
        }
        SymmetryClass::CInf => about_x.collect(),
        SymmetryClass::C2vQuadratic | SymmetryClass::C2vCubic => {
            vec![Rotation::about_axis(&Vec3::x(), std::f64::consts::PI)]
        }
    }
}

fn check(branch: usize, id: char, premise: bool, value: f64, tol: f64) -> TheoremCheck {
    TheoremCheck { branch, id, premise, value, tol, passed: premise.then_some(value < tol) }
}

/// Evaluates (a) uniaxiality of Maier–Saupe solutions, (b) `−c1 ≤ 1 ⟹
/// <m1> = 0`, (c) commuting second moments ⟹ `<m1>` along an eigenvector of
/// `M11`, (d) `c4² = c2c3, c1 ≥ −1 ⟹ [M11, M22] = 0`, (e) `f(P) = f(PT)`.
pub fn validate_theorems(
    kp: &KernelPolynomial,
    branches: &[SolutionBranch],
    quad: &SO3Quadrature,
) -> Result<TheoremReport> {
    let ([_, c1, c2, c3, c4], has_cubic) = quadratic_coeffs(kp);
    let ms_form = c1 == 0.0 && c3 == 0.0 && c4 == 0.0 && !has_cubic;
    let scale = 1.0f64.max(c2 * c2).max(c3 * c3).max(c4 * c4);
    let factorable = (c4 * c4 - c2 * c3).abs() <= 1e-12 * scale && c1 >= -1.0 && !has_cubic;
    let gens = density_generators(kp.symmetry_class);
    let mut rep = TheoremReport::default();
    for (k, b) in branches.iter().enumerate() {
        let m = &b.moments;
        let (a, bb, v) = (m.m11_mat(), m.m22_mat(), m.m1_vec());
        let comm = (a * bb - bb * a).norm();
        rep.checks.push(check(k, 'a', ms_form, b.order_params.uniaxial_gap, UNIAXIAL_TOL));
        rep.checks.push(check(k, 'b', -c1 <= 1.0, v.norm(), POLAR_TOL));
        let eig_dev = if v.norm() < 1e-12 {
            0.0
        } else {
            let u = v.normalize();
            let au = a * u;
            (au - u.dot(&au) * u).norm()
        };
        rep.checks.push(check(k, 'c', comm < COMMUTE_PREMISE, eig_dev, EIGVEC_TOL));
        rep.checks.push(check(k, 'd', factorable, comm, COMMUTATOR_TOL));
        rep.checks.push(check(k, 'e', true, density_asymmetry(kp, m, quad, &gens)?, DENSITY_TOL));
    }
    Ok(rep)
}

/// `max |f(P) − f(PT)| / max f` over the nodes and generators.
fn density_asymmetry(kp: &KernelPolynomial, m: &MomentSet, quad: &SO3Quadrature, gens: &[Rotation]) -> Result<f64> {
    let w = mean_field(kp, m)?;
    let wmin = quad.nodes.iter().map(|p| w.eval(p)).fold(f64::INFINITY, f64::min);
    let mut worst = 0.0f64;
    for p in &quad.nodes {
        let f0 = (wmin - w.eval(p)).exp();
        for t in gens {
            worst = worst.max((f0 - (wmin - w.eval(&(p * t))).exp()).abs());
        }
    }
    Ok(worst)
}

/// Branches are identified through rotation-invariant signatures.
pub fn same_branch(a: &MomentSet, b: &MomentSet, tol: f64) -> bool {
    signature(a).iter().zip(&signature(b)).all(|(x, y)| (x - y).abs() < tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub param: f64,
    pub coeffs: Vec<f64>,
    /// Distinct converged branches, lowest free energy first.
    pub branches: Vec<SolutionBranch>,
    pub unconverged: usize,
}

fn merge(into: &mut SweepPoint, sol: SolutionBranch) {
    if !sol.converged {
        into.unconverged += 1;
        return;
    }
    match into.branches.iter_mut().find(|b| same_branch(&b.moments, &sol.moments, BRANCH_TOL)) {
        Some(b) if sol.residual < b.residual => *b = sol,
        Some(_) => {}
        None => into.branches.push(sol),
    }
}

/// Solves from every seed at every parameter value, then continues each
/// branch found at one value into the next.
pub fn branch_sweep<F>(
    family: F,
    grid: &[f64],
    cfg: &ScfConfig,
    seeds: &[InitState],
    quad: &SO3Quadrature,
) -> Result<Vec<SweepPoint>>
where
    F: Fn(f64) -> Result<KernelPolynomial> + Sync,
{
    cfg.validate()?;
    let inc = grid.windows(2).all(|w| w[1] > w[0]);
    let dec = grid.windows(2).all(|w| w[1] < w[0]);
    if !(inc || dec) {
        return Err(Error::Domain("sweep grid must be strictly monotone".into()));
    }
    let kernels: Vec<KernelPolynomial> = grid.iter().map(|&x| family(x)).collect::<Result<_>>()?;
    let mut points: Vec<SweepPoint> = grid
        .par_iter()
        .zip(&kernels)
        .map(|(&x, kp)| {
            let mut pt = SweepPoint { param: x, coeffs: kp.coeffs.clone(), branches: vec![], unconverged: 0 };
            for s in seeds {
                let c = ScfConfig { init: s.clone(), ..cfg.clone() };
                merge(&mut pt, scf_solve(kp, &c, quad)?);
            }
            Ok(pt)
        })
        .collect::<Result<_>>()?;
    for i in 1..points.len() {
        let prev: Vec<MomentSet> = points[i - 1].branches.iter().map(|b| b.moments.clone()).collect();
        let sols: Vec<SolutionBranch> = prev
            .into_par_iter()
            .map(|m| {
                let c = ScfConfig { init: InitState::Custom(m), ..cfg.clone() };
                scf_solve(&kernels[i], &c, quad)
            })
            .collect::<Result<_>>()?;
        for mut s in sols {
            s.seed = "continuation".into();
            merge(&mut points[i], s);
        }
    }
    for p in &mut points {
        p.branches.sort_by(|a, b| a.free_energy.total_cmp(&b.free_energy));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::Provenance;
    use crate::so3::haar_quadrature;

    #[test]
    fn maier_saupe_checks_pass() {
        let q = haar_quadrature(32, 32, 4).unwrap();
        let kp = KernelPolynomial::maier_saupe(10.0);
        let b = scf_solve(&kp, &ScfConfig { init: InitState::UniaxialSeed, ..Default::default() }, &q).unwrap();
        let rep = validate_theorems(&kp, &[b], &q).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
        assert_eq!(rep.get(0, 'a').unwrap().passed, Some(true));
        assert_eq!(rep.get(0, 'd').unwrap().passed, Some(true));
    }

    #[test]
    fn factorable_kernel_commutes() {
        let q = haar_quadrature(16, 16, 16).unwrap();
        // c2 = s d1², c3 = s d2², c4 = s d1 d2
        let (s, d1, d2) = (-6.0, 1.0, 0.7);
        let kp = KernelPolynomial::new(
            SymmetryClass::C2vQuadratic,
            vec![0.0, -0.5, s * d1 * d1, s * d2 * d2, s * d1 * d2],
            Provenance::Manual,
        )
        .unwrap();
        let b = scf_solve(&kp, &ScfConfig { init: InitState::BiaxialSeed, ..Default::default() }, &q).unwrap();
        assert!(b.converged);
        let rep = validate_theorems(&kp, &[b], &q).unwrap();
        assert_eq!(rep.get(0, 'd').unwrap().passed, Some(true), "{rep:?}");
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn generic_kernel_only_measured() {
        let q = haar_quadrature(12, 12, 12).unwrap();
        let kp = KernelPolynomial::new(
            SymmetryClass::C2vQuadratic,
            vec![0.0, 0.0, -7.0, -1.0, -4.0],
            Provenance::Manual,
        )
        .unwrap();
        let b = scf_solve(&kp, &ScfConfig { init: InitState::BiaxialSeed, ..Default::default() }, &q).unwrap();
        let rep = validate_theorems(&kp, &[b], &q).unwrap();
        let d = rep.get(0, 'd').unwrap();
        assert!(!d.premise && d.passed.is_none());
    }

    #[test]
    fn zero_kernel_sweep_single_branch() {
        let q = haar_quadrature(8, 8, 8).unwrap();
        let pts = branch_sweep(
            |_| KernelPolynomial::new(SymmetryClass::DInfH, vec![0.0, 0.0], Provenance::Manual),
            &[0.0, 1.0, 2.0],
            &ScfConfig::default(),
            &InitState::PRESETS,
            &q,
        )
        .unwrap();
        for p in &pts {
            assert_eq!(p.branches.len(), 1);
            assert!(p.branches[0].order_params.eig_m11[0] - 1.0 / 3.0 < 1e-9);
        }
        assert!(branch_sweep(|_| Ok(KernelPolynomial::maier_saupe(0.0)), &[0.0, 1.0, 0.5], &ScfConfig::default(), &[], &q)
            .is_err());
    }

    #[test]
    fn ms_sweep_finds_nematic_at_strong_coupling() {
        let q = haar_quadrature(16, 16, 4).unwrap();
        let pts = branch_sweep(
            |a| Ok(KernelPolynomial::maier_saupe(a)),
            &[2.0, 8.0, 10.0],
            &ScfConfig::default(),
            &InitState::PRESETS,
            &q,
        )
        .unwrap();
        assert_eq!(pts[0].branches.len(), 1);
        // isotropic, nematic, and the unstable intermediate one depending on seeds
        assert!(pts[2].branches.len() >= 2);
        assert!(pts[2].branches[0].order_params.eig_m11[0] > 0.6);
    }
}
