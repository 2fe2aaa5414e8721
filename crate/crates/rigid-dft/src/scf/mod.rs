//! Self-consistent moment equations for `f ∝ exp(−W)`, where the mean
//! field `W(P) = ∫ G(P⁻¹P′) f(P′) dν(P′)` of a polynomial kernel is a
//! contraction of a finite set of moments with the body axes of `P`.

use serde::{Deserialize, Serialize};

use crate::projection::{KernelPolynomial, SymmetryClass};
use crate::so3::{Rotation, SO3Quadrature};
use crate::{Error, Mat3, Result, Vec3};

pub mod analysis;
pub mod moments;
pub mod reduced;

pub use analysis::{branch_sweep, same_branch, validate_theorems, SweepPoint, TheoremCheck, TheoremReport};
pub use moments::{order_parameters, signature, sorted_eigen, MomentSet, OrderParameters, Tensor3};
pub use reduced::{reduce_to_s2, ReducedBranch, ReducedSolver};

/// One contraction `coef · T : m_{a1} ⊗ ... ⊗ m_{an}`.
#[derive(Clone, Debug)]
struct FieldTerm {
    axes: Vec<usize>,
    tensor: Vec<f64>,
}

/// `W(P)` for fixed moments.
#[derive(Clone, Debug)]
pub struct MeanField {
    constant: f64,
    terms: Vec<FieldTerm>,
}

impl MeanField {
    pub fn zero() -> Self {
        Self { constant: 0.0, terms: vec![] }
    }

    pub fn eval(&self, p: &Rotation) -> f64 {
        self.eval_axes(&[p.axis(0), p.axis(1), p.axis(2)])
    }

    pub fn eval_axes(&self, m: &[Vec3; 3]) -> f64 {
        let mut w = self.constant;
        for t in &self.terms {
            let t_ = &t.tensor;
            w += match t.axes.as_slice() {
                [a] => m[*a].dot(&Vec3::new(t_[0], t_[1], t_[2])),
                [a, b] => {
                    let (u, v) = (&m[*a], &m[*b]);
                    let mut s = 0.0;
                    for i in 0..3 {
                        s += u[i] * (t_[3 * i] * v[0] + t_[3 * i + 1] * v[1] + t_[3 * i + 2] * v[2]);
                    }
                    s
                }
                [a, b, c] => {
                    let (u, v, x) = (&m[*a], &m[*b], &m[*c]);
                    let mut s = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            let k = 9 * i + 3 * j;
                            s += u[i] * v[j] * (t_[k] * x[0] + t_[k + 1] * x[1] + t_[k + 2] * x[2]);
                        }
                    }
                    s
                }
                _ => unreachable!("kernel degree is at most 3"),
            };
        }
        w
    }
}

fn needs_cubic(kp: &KernelPolynomial) -> bool {
    kp.symmetry_class == SymmetryClass::C2vCubic
}

/// Sum of `c_t <⊗ m_j> : ⊗ m_i(P)` over every monomial of every term.
pub fn mean_field(kp: &KernelPolynomial, m: &MomentSet) -> Result<MeanField> {
    kp.validate()?;
    if needs_cubic(kp) && !m.is_cubic() {
        return Err(Error::Incompatible("cubic kernel needs third moments".into()));
    }
    let basis = kp.basis();
    let mut field = MeanField::zero();
    for (term, c) in basis.terms.iter().zip(&kp.coeffs) {
        for mono in &term.0 {
            let f = mono.factors();
            if f.is_empty() {
                field.constant += c;
                continue;
            }
            let rows: Vec<usize> = f.iter().map(|x| x.0 - 1).collect();
            let cols: Vec<usize> = f.iter().map(|x| x.1 - 1).collect();
            let t: Vec<f64> = m.tensor(&cols)?.iter().map(|x| c * x).collect();
            match field.terms.iter_mut().find(|ft| ft.axes == rows) {
                Some(ft) => ft.tensor.iter_mut().zip(&t).for_each(|(a, b)| *a += b),
                None => field.terms.push(FieldTerm { axes: rows, tensor: t }),
            }
        }
    }
    Ok(field)
}

/// `Σ_t c_t <⊗ m_j>_a : <⊗ m_i>_b`, so that the interaction part of the
/// free energy is `contraction(kp, m, m) / 2`.
pub fn contraction(kp: &KernelPolynomial, a: &MomentSet, b: &MomentSet) -> Result<f64> {
    let basis = kp.basis();
    let mut total = 0.0;
    for (term, c) in basis.terms.iter().zip(&kp.coeffs) {
        for mono in &term.0 {
            let f = mono.factors();
            let rows: Vec<usize> = f.iter().map(|x| x.0 - 1).collect();
            let cols: Vec<usize> = f.iter().map(|x| x.1 - 1).collect();
            let ta = a.tensor(&cols)?;
            let tb = b.tensor(&rows)?;
            total += c * ta.iter().zip(&tb).map(|(x, y)| x * y).sum::<f64>();
        }
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct Boltzmann {
    pub moments: MomentSet,
    pub log_z: f64,
    /// `<W>` under the normalized density.
    pub mean_w: f64,
}

/// Moments of `f = exp(−W)/Z` on the quadrature nodes.
pub fn boltzmann_moments<W>(w: W, quad: &SO3Quadrature, cubic: bool) -> Result<Boltzmann>
where
    W: Fn(&Rotation) -> f64,
{
    let vals: Vec<f64> = quad.nodes.iter().map(&w).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("mean field is not finite on the quadrature".into()));
    }
    let shift = vals.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut mw) = (0.0, 0.0);
    let mut m1 = Vec3::zeros();
    let (mut a, mut b) = (Mat3::zeros(), Mat3::zeros());
    let (mut t1, mut t2) = ([[[0.0; 3]; 3]; 3], [[[0.0; 3]; 3]; 3]);
    for ((p, wq), v) in quad.nodes.iter().zip(&quad.weights).zip(&vals) {
        let e = wq * (-v - shift).exp();
        let (u, x) = (p.axis(0), p.axis(1));
        z += e;
        mw += e * v;
        m1 += e * u;
        a += e * u * u.transpose();
        b += e * x * x.transpose();
        if cubic {
            for i in 0..3 {
                for j in 0..3 {
                    for k in j..3 {
                        t1[i][j][k] += e * u[i] * u[j] * u[k];
                        t2[i][j][k] += e * u[i] * x[j] * x[k];
                    }
                }
            }
        }
    }
    let third = cubic.then(|| {
        for t in [&mut t1, &mut t2] {
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..j {
                        t[i][j][k] = t[i][k][j];
                    }
                }
            }
        }
        let mut sym = t1;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let mut s = [i, j, k];
                    s.sort();
                    sym[i][j][k] = t1[s[0]][s[1]][s[2]] / z;
                    t2[i][j][k] /= z;
                }
            }
        }
        (sym, t2)
    });
    Ok(Boltzmann {
        moments: MomentSet::from_parts(m1 / z, a / z, b / z, third),
        log_z: z.ln() + shift,
        mean_w: mw / z,
    })
}

/// Named starting points for the iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitState {
    Isotropic,
    UniaxialSeed,
    BiaxialSeed,
    PolarSeed,
    Custom(MomentSet),
}

impl InitState {
    pub const PRESETS: [InitState; 4] =
        [InitState::Isotropic, InitState::UniaxialSeed, InitState::BiaxialSeed, InitState::PolarSeed];

    pub fn moments(&self, cubic: bool) -> MomentSet {
        let t = 1.0 / 3.0;
        let diag = |x: f64, y: f64, z: f64| Mat3::from_diagonal(&Vec3::new(x, y, z));
        let zero3 = cubic.then_some(([[[0.0; 3]; 3]; 3], [[[0.0; 3]; 3]; 3]));
        let uni = diag(t - 0.1, t - 0.1, t + 0.2);
        match self {
            InitState::Isotropic => MomentSet::isotropic(cubic),
            InitState::UniaxialSeed => MomentSet::from_parts(Vec3::zeros(), uni, diag(t, t, t), zero3),
            InitState::BiaxialSeed => MomentSet::from_parts(
                Vec3::zeros(),
                diag(t - 0.15, t - 0.05, t + 0.2),
                diag(t + 0.15, t - 0.05, t - 0.1),
                zero3,
            ),
            InitState::PolarSeed => MomentSet::from_parts(Vec3::new(0.0, 0.0, 0.3), uni, diag(t, t, t), zero3),
            InitState::Custom(m) => {
                let mut m = m.clone();
                if cubic && !m.is_cubic() {
                    m.t111 = Some([[[0.0; 3]; 3]; 3]);
                    m.t122 = Some([[[0.0; 3]; 3]; 3]);
                } else if !cubic {
                    m.t111 = None;
                    m.t122 = None;
                }
                m
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitState::Isotropic => "Isotropic",
            InitState::UniaxialSeed => "UniaxialSeed",
            InitState::BiaxialSeed => "BiaxialSeed",
            InitState::PolarSeed => "PolarSeed",
            InitState::Custom(_) => "Custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScfConfig {
    /// Mixing weight λ in `(0, 1]`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub init: InitState,
}

impl Default for ScfConfig {
    fn default() -> Self {
        Self { damping: 0.5, tol: 1e-10, max_iter: 5000, init: InitState::Isotropic }
    }
}

impl ScfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Domain(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionBranch {
    pub seed: String,
    pub moments: MomentSet,
    /// `∫ f ln f + ½∫∫ f G f`, in units of kT, constants dropped.
    pub free_energy: f64,
    pub residual: f64,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub order_params: OrderParameters,
}

/// `m ↦ moments of exp(−W[m])`.
pub fn scf_map(kp: &KernelPolynomial, m: &MomentSet, quad: &SO3Quadrature) -> Result<Boltzmann> {
    let w = mean_field(kp, m)?;
    boltzmann_moments(|p| w.eval(p), quad, needs_cubic(kp))
}

const BACKOFF_AFTER: usize = 20;
const MIN_DAMPING: f64 = 1.0 / 64.0;

/// Damped fixed-point iteration; returns the iterate with the smallest
/// residual `max |F(m) − m|`.
pub fn scf_solve(kp: &KernelPolynomial, cfg: &ScfConfig, quad: &SO3Quadrature) -> Result<SolutionBranch> {
    cfg.validate()?;
    kp.validate()?;
    let cubic = needs_cubic(kp);
    let mut m = cfg.init.moments(cubic);
    let mut lambda = cfg.damping;
    let mut best: Option<(MomentSet, f64)> = None;
    let (mut prev, mut rising) = (f64::INFINITY, 0usize);
    let (mut converged, mut diverged) = (false, false);
    let mut iterations = 0;
    for it in 1..=cfg.max_iter {
        iterations = it;
        let fm = match scf_map(kp, &m, quad) {
            Ok(b) => b.moments,
            Err(_) => {
                diverged = true;
                break;
            }
        };
        let res = fm.max_diff(&m);
        if !res.is_finite() {
            diverged = true;
            break;
        }
        if best.as_ref().is_none_or(|b| res < b.1) {
            best = Some((m.clone(), res));
        }
        if res <= cfg.tol {
            converged = true;
            break;
        }
        rising = if res > prev { rising + 1 } else { 0 };
        if rising >= BACKOFF_AFTER && lambda > MIN_DAMPING {
            lambda = (lambda / 2.0).max(MIN_DAMPING);
            rising = 0;
        }
        prev = res;
        m = m.mix(&fm, lambda);
    }
    let (moments, residual) = best.unwrap_or((m, f64::INFINITY));
    let free_energy = if diverged && residual.is_infinite() { f64::NAN } else { free_energy(kp, &moments, quad)? };
    Ok(SolutionBranch {
        seed: cfg.init.name().into(),
        order_params: order_parameters(&moments),
        moments,
        free_energy,
        residual,
        converged,
        diverged,
        iterations,
    })
}

/// Free energy of `f = exp(−W[m])/Z`: `−ln Z − <W> + ½ contraction(f, f)`.
/// The additive constants `F0/c + ln c` are dropped.
pub fn free_energy(kp: &KernelPolynomial, m: &MomentSet, quad: &SO3Quadrature) -> Result<f64> {
    let b = scf_map(kp, m, quad)?;
    Ok(-b.log_z - b.mean_w + 0.5 * contraction(kp, &b.moments, &b.moments)?)
}

/// `½∫∫ f G f` from the moments alone.
pub fn interaction_energy(kp: &KernelPolynomial, m: &MomentSet) -> Result<f64> {
    Ok(0.5 * contraction(kp, m, m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{build_basis, Provenance};
    use crate::so3::haar_quadrature;

    fn quad() -> SO3Quadrature {
        haar_quadrature(16, 16, 16).unwrap()
    }

    fn random_kernel(class: SymmetryClass, seed: u64, scale: f64) -> KernelPolynomial {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = build_basis(class).len();
        let c = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        KernelPolynomial::new(class, c, Provenance::Manual).unwrap()
    }

    #[test]
    fn zero_kernel_gives_zero_field_and_isotropic_fixed_point() {
        let q = quad();
        let kp = KernelPolynomial::new(SymmetryClass::C2vQuadratic, vec![0.0; 5], Provenance::Manual).unwrap();
        let w = mean_field(&kp, &InitState::BiaxialSeed.moments(false)).unwrap();
        assert_eq!(w.eval(&Rotation::about_axis(&Vec3::x(), 0.4)), 0.0);
        let cfg = ScfConfig { tol: 1e-12, ..Default::default() };
        let b = scf_solve(&kp, &cfg, &q).unwrap();
        assert!(b.converged);
        assert_eq!(b.iterations, 1);
        assert!(b.free_energy.abs() < 1e-12, "{}", b.free_energy);
    }

    #[test]
    fn mean_field_matches_direct_integral() {
        // W(P) = ∫ G(PᵀP′) f(P′) dν′ with f the Boltzmann density of a biased field
        let q = haar_quadrature(10, 10, 10).unwrap();
        for class in [SymmetryClass::CInf, SymmetryClass::C2vQuadratic, SymmetryClass::C2vCubic] {
            let kp = random_kernel(class, 4, 1.0);
            let bias = random_kernel(class, 5, 2.0);
            let cubic = class == SymmetryClass::C2vCubic;
            let seed = InitState::PolarSeed.moments(cubic);
            let wb = mean_field(&bias, &seed).unwrap();
            let f = boltzmann_moments(|p| wb.eval(p), &q, cubic).unwrap();
            let w = mean_field(&kp, &f.moments).unwrap();
            let basis = kp.basis();
            let norm: f64 = q.nodes.iter().zip(&q.weights).map(|(p, wq)| wq * (-wb.eval(p)).exp()).sum();
            for p in q.nodes.iter().step_by(97).take(6) {
                let direct: f64 = q
                    .nodes
                    .iter()
                    .zip(&q.weights)
                    .map(|(pp, wq)| {
                        let rel = &p.inverse() * pp;
                        let g: f64 = basis.terms.iter().zip(&kp.coeffs).map(|(t, c)| c * t.eval(&rel)).sum();
                        wq * (-wb.eval(pp)).exp() * g
                    })
                    .sum::<f64>()
                    / norm;
                assert!((direct - w.eval(p)).abs() < 1e-12, "{class:?}: {direct} vs {}", w.eval(p));
            }
        }
    }

    #[test]
    fn isotropic_quadratic_field_is_constant() {
        let kp = random_kernel(SymmetryClass::C2vQuadratic, 9, 3.0);
        let w = mean_field(&kp, &MomentSet::isotropic(false)).unwrap();
        let q = haar_quadrature(6, 6, 6).unwrap();
        let v0 = w.eval(&q.nodes[0]);
        assert!(q.nodes.iter().all(|p| (w.eval(p) - v0).abs() < 1e-14));
    }

    #[test]
    fn maier_saupe_field_form() {
        let kp = KernelPolynomial::maier_saupe(4.0);
        let m = InitState::UniaxialSeed.moments(false);
        let w = mean_field(&kp, &m).unwrap();
        let p = Rotation::about_axis(&Vec3::new(0.2, 1.0, 0.3), 0.8);
        let u = p.axis(0);
        assert!((w.eval(&p) + 4.0 * u.dot(&(m.m11_mat() * u))).abs() < 1e-14);
    }

    #[test]
    fn cubic_kernel_needs_third_moments() {
        let kp = random_kernel(SymmetryClass::C2vCubic, 1, 1.0);
        assert!(matches!(mean_field(&kp, &MomentSet::isotropic(false)), Err(Error::Incompatible(_))));
    }

    #[test]
    fn isotropic_haar_moments() {
        let q = quad();
        let b = boltzmann_moments(|_| 0.0, &q, true).unwrap();
        let iso = MomentSet::isotropic(true);
        assert!(b.moments.max_diff(&iso) < 1e-13);
        assert!(b.log_z.abs() < 1e-12);
        b.moments.validate().unwrap();
    }

    #[test]
    fn uniaxial_field_moments() {
        // W = η (m1·z)²: ⟨(m1·z)²⟩ = ∫x² e^{-ηx²} / ∫e^{-ηx²} over [0,1]
        let q = haar_quadrature(24, 32, 4).unwrap();
        let eta = -3.0;
        let b = boltzmann_moments(|p| eta * p.p(2, 0).powi(2), &q, false).unwrap();
        let (x, w) = crate::so3::gauss_legendre(40);
        let (mut num, mut den) = (0.0, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            let t = 0.5 * (xi + 1.0);
            let e = (-eta * t * t).exp();
            num += wi * t * t * e;
            den += wi * e;
        }
        let o = order_parameters(&b.moments);
        assert!((o.eig_m11[0] - num / den).abs() < 1e-12);
        assert!(o.uniaxial_gap < 1e-12);
        b.moments.validate().unwrap();
    }

    #[test]
    fn huge_fields_do_not_overflow() {
        let q = haar_quadrature(8, 8, 8).unwrap();
        let b = boltzmann_moments(|p| -800.0 * p.p(0, 0).powi(2), &q, false).unwrap();
        assert!(b.log_z.is_finite());
        b.moments.validate().unwrap();
    }

    #[test]
    fn strong_maier_saupe_orders() {
        // a z director needs enough β nodes to resolve the ordered density
        let q = haar_quadrature(32, 32, 4).unwrap();
        let kp = KernelPolynomial::maier_saupe(10.0);
        let cfg = ScfConfig { init: InitState::UniaxialSeed, ..Default::default() };
        let nem = scf_solve(&kp, &cfg, &q).unwrap();
        assert!(nem.converged, "{nem:?}");
        assert!(nem.order_params.eig_m11[0] > 0.6);
        assert!(nem.order_params.uniaxial_gap < 1e-6);
        let iso = scf_solve(&kp, &ScfConfig::default(), &q).unwrap();
        assert!(iso.converged);
        assert!(nem.free_energy < iso.free_energy, "{} vs {}", nem.free_energy, iso.free_energy);
        // certificate
        let again = scf_map(&kp, &nem.moments, &q).unwrap();
        assert!(again.moments.max_diff(&nem.moments) <= 2.0 * cfg.tol);
    }

    #[test]
    fn interaction_energy_two_ways() {
        let q = quad();
        for class in [SymmetryClass::C2vQuadratic, SymmetryClass::C2vCubic] {
            let kp = random_kernel(class, 12, 2.0);
            let bias = random_kernel(class, 13, 2.0);
            let cubic = class == SymmetryClass::C2vCubic;
            let wb = mean_field(&bias, &InitState::PolarSeed.moments(cubic)).unwrap();
            let f = boltzmann_moments(|p| wb.eval(p), &q, cubic).unwrap();
            let w = mean_field(&kp, &f.moments).unwrap();
            // ½ <W[f]>_f computed on the nodes
            let shift = q.nodes.iter().map(|p| -wb.eval(p)).fold(f64::MIN, f64::max);
            let (mut num, mut den) = (0.0, 0.0);
            for (p, wq) in q.nodes.iter().zip(&q.weights) {
                let e = wq * (-wb.eval(p) - shift).exp();
                num += e * w.eval(p);
                den += e;
            }
            let a = interaction_energy(&kp, &f.moments).unwrap();
            assert!((a - 0.5 * num / den).abs() < 1e-8, "{class:?}: {a} vs {}", 0.5 * num / den);
        }
    }

    #[test]
    fn rotation_covariance() {
        let q = haar_quadrature(24, 24, 24).unwrap();
        let kp = KernelPolynomial::new(SymmetryClass::C2vQuadratic, vec![0.0, -0.5, -8.0, -3.0, -2.0], Provenance::Manual)
            .unwrap();
        let cfg = ScfConfig { init: InitState::BiaxialSeed, tol: 1e-11, ..Default::default() };
        let b = scf_solve(&kp, &cfg, &q).unwrap();
        assert!(b.converged);
        let r = Rotation::about_axis(&Vec3::new(0.3, -1.0, 0.4), 1.1);
        let rm = b.moments.rotated(r.matrix());
        let again = scf_map(&kp, &rm, &q).unwrap();
        assert!(again.moments.max_diff(&rm) < 1e-8, "{}", again.moments.max_diff(&rm));
        let f2 = free_energy(&kp, &rm, &q).unwrap();
        assert!((f2 - b.free_energy).abs() < 1e-8, "{f2} vs {}", b.free_energy);
    }

    #[test]
    fn bad_config_rejected() {
        let q = haar_quadrature(4, 4, 4).unwrap();
        let kp = KernelPolynomial::maier_saupe(1.0);
        for cfg in [
            ScfConfig { damping: 0.0, ..Default::default() },
            ScfConfig { damping: 1.5, ..Default::default() },
            ScfConfig { tol: 0.0, ..Default::default() },
            ScfConfig { max_iter: 0, ..Default::default() },
        ] {
            assert!(scf_solve(&kp, &cfg, &q).is_err());
        }
    }
}
