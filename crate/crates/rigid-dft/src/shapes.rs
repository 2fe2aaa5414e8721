//! Rigid molecule models: rods, bent-cores and isosceles spherotriangles,
//! their bead discretizations, point groups and bead pair potentials.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::so3::Rotation;
use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeKind {
    Rod,
    BentCore,
    SpheroTriangle,
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Rod => "Rod",
            ShapeKind::BentCore => "BentCore",
            ShapeKind::SpheroTriangle => "SpheroTriangle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeShape {
    pub kind: ShapeKind,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "D")]
    pub diameter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_beads: Option<usize>,
}

impl MoleculeShape {
    pub fn rod(length: f64, diameter: f64) -> Result<Self> {
        Self { kind: ShapeKind::Rod, length, diameter, theta: None, n_beads: None }.validated()
    }

    pub fn bent_core(theta: f64, length: f64, diameter: f64) -> Result<Self> {
        Self { kind: ShapeKind::BentCore, length, diameter, theta: Some(theta), n_beads: None }
            .validated()
    }

    pub fn sphero_triangle(theta: f64, length: f64, diameter: f64) -> Result<Self> {
        Self {
            kind: ShapeKind::SpheroTriangle,
            length,
            diameter,
            theta: Some(theta),
            n_beads: None,
        }
        .validated()
    }

    pub fn with_beads(mut self, n: usize) -> Result<Self> {
        self.n_beads = Some(n);
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidShape(m));
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad(format!("L must be positive, got {}", self.length));
        }
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return bad(format!("D must be positive, got {}", self.diameter));
        }
        match (self.kind, self.theta) {
            (ShapeKind::Rod, Some(_)) => return bad("theta is not a rod parameter".into()),
            (ShapeKind::Rod, None) => {}
            (_, None) => return bad(format!("{} requires theta", self.kind.name())),
            (_, Some(t)) if !(t > 0.0 && t <= PI) => {
                return bad(format!("theta must lie in (0, pi], got {t}"))
            }
            _ => {}
        }
        if let Some(n) = self.n_beads {
            if n < 2 {
                return bad(format!("N must be at least 2, got {n}"));
            }
            if self.kind == ShapeKind::BentCore && n % 2 == 1 {
                return bad(format!("N must be even for a bent-core, got {n}"));
            }
        }
        Ok(())
    }

    /// Opening angle; a rod is treated as θ = π.
    pub fn theta_or_pi(&self) -> f64 {
        self.theta.unwrap_or(PI)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeadSet {
    pub positions: Vec<Vec3>,
}

/// Bead centres `s_j = j/N - 1/2`, `j = 0..=N` (N + 1 beads, so the end
/// beads sit at the tips and a bent-core has one apex bead at `j = N/2`).
pub fn beads(shape: &MoleculeShape) -> Result<BeadSet> {
    shape.validate()?;
    let n = shape.n_beads.ok_or_else(|| Error::InvalidShape("bead count N is required".into()))?;
    let l = shape.length;
    let s = (0..=n).map(|j| j as f64 / n as f64 - 0.5);
    let positions = match shape.kind {
        ShapeKind::Rod => s.map(|s| Vec3::new(l * s, 0.0, 0.0)).collect(),
        ShapeKind::BentCore => {
            let (sh, ch) = (shape.theta_or_pi() / 2.0).sin_cos();
            s.map(|s| Vec3::new(l * (0.5 - s.abs()) * ch, l * s * sh, 0.0)).collect()
        }
        ShapeKind::SpheroTriangle => return Err(Error::UnsupportedKind("SpheroTriangle")),
    };
    Ok(BeadSet { positions })
}

/// Vertices `(O, A, B)` of the isosceles triangle: apex `O` at the origin,
/// lateral sides `L/2`, bisector along `-m1`, lying in the `m1 m2` plane.
pub fn triangle_vertices(shape: &MoleculeShape) -> Result<(Vec3, Vec3, Vec3)> {
    if shape.kind != ShapeKind::SpheroTriangle {
        return Err(Error::UnsupportedKind(shape.kind.name()));
    }
    shape.validate()?;
    let (sh, ch) = (shape.theta_or_pi() / 2.0).sin_cos();
    let h = shape.length / 2.0;
    Ok((Vec3::zeros(), Vec3::new(-h * ch, -h * sh, 0.0), Vec3::new(-h * ch, h * sh, 0.0)))
}

/// Bent-core centre line: apex and the two arm tips.
pub fn bent_core_points(shape: &MoleculeShape) -> Result<(Vec3, Vec3, Vec3)> {
    if shape.kind != ShapeKind::BentCore {
        return Err(Error::UnsupportedKind(shape.kind.name()));
    }
    let (sh, ch) = (shape.theta_or_pi() / 2.0).sin_cos();
    let h = shape.length / 2.0;
    Ok((Vec3::new(h * ch, 0.0, 0.0), Vec3::new(0.0, -h * sh, 0.0), Vec3::new(0.0, h * sh, 0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialKind {
    HardCore,
    LennardJones,
}

/// Bead-bead potential `V0(r)`. For Lennard-Jones, `σ = D 2^{-1/6}` puts the
/// minimum at `r = D`, and the tail is cut at `cutoff`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairPotential {
    pub kind: PotentialKind,
    pub d: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub cutoff: f64,
}

/// Pair energy with a saturating hard-overlap value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Energy {
    Finite(f64),
    Overlap,
}

impl Energy {
    pub fn value(&self) -> f64 {
        match self {
            Energy::Finite(u) => *u,
            Energy::Overlap => f64::INFINITY,
        }
    }

    pub fn is_overlap(&self) -> bool {
        matches!(self, Energy::Overlap)
    }

    /// Mayer function `1 - exp(-U / kT)`.
    pub fn mayer(&self, kt: f64) -> f64 {
        match self {
            Energy::Overlap => 1.0,
            Energy::Finite(u) => -(-u / kt).exp_m1(),
        }
    }

    fn add(self, other: Energy) -> Energy {
        match (self, other) {
            (Energy::Finite(a), Energy::Finite(b)) => Energy::Finite(a + b),
            _ => Energy::Overlap,
        }
    }
}

pub const LJ_CUTOFF_SIGMAS: f64 = 3.0;

impl PairPotential {
    pub fn hard_core(d: f64) -> Self {
        Self { kind: PotentialKind::HardCore, d, epsilon: 0.0, sigma: d, cutoff: d }
    }

    pub fn lennard_jones(d: f64, epsilon: f64) -> Self {
        let sigma = d * 2f64.powf(-1.0 / 6.0);
        Self { kind: PotentialKind::LennardJones, d, epsilon, sigma, cutoff: LJ_CUTOFF_SIGMAS * sigma }
    }

    /// Distance beyond which `V0` vanishes.
    pub fn range(&self) -> f64 {
        self.cutoff
    }

    pub fn v0(&self, r: f64) -> Energy {
        match self.kind {
            PotentialKind::HardCore => {
                if r <= self.d {
                    Energy::Overlap
                } else {
                    Energy::Finite(0.0)
                }
            }
            PotentialKind::LennardJones => {
                if r >= self.cutoff {
                    Energy::Finite(0.0)
                } else if r < 1e-6 * self.sigma {
                    Energy::Overlap
                } else {
                    let s6 = (self.sigma / r).powi(6);
                    Energy::Finite(4.0 * self.epsilon * (s6 * s6 - s6))
                }
            }
        }
    }
}

/// `Σ_ij V0(|r_i + x - P̄ r_j|)` with molecule 1 at the origin in its own
/// frame and molecule 2 at `-x_rel` rotated by `p_bar`.
pub fn pair_energy(
    shape: &MoleculeShape,
    potential: &PairPotential,
    x_rel: &Vec3,
    p_bar: &Rotation,
) -> Result<Energy> {
    let b = beads(shape)?;
    Ok(bead_pair_energy(&b, potential, x_rel, p_bar))
}

pub(crate) fn bead_pair_energy(
    b: &BeadSet,
    potential: &PairPotential,
    x_rel: &Vec3,
    p_bar: &Rotation,
) -> Energy {
    let other: Vec<Vec3> = b.positions.iter().map(|r| p_bar.apply(r)).collect();
    let mut total = Energy::Finite(0.0);
    for ri in &b.positions {
        let xi = ri + x_rel;
        for rj in &other {
            total = total.add(potential.v0((xi - rj).norm()));
            if total.is_overlap() {
                return total;
            }
        }
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointGroup {
    DInfH,
    C2v,
}

/// Generators of the molecular point group in the body frame. A D∞h rod
/// also carries the continuous rotation about `m1`, flagged by `axial`.
#[derive(Clone, Debug)]
pub struct SymmetryGroup {
    pub group: PointGroup,
    pub generators: Vec<Rotation>,
    pub axial: bool,
    /// Unit normal `k` of the mirror plane through the reference point.
    pub mirror_normal: Vec3,
}

impl SymmetryGroup {
    /// Discrete generators plus `n_axial` rotations about `m1` for the
    /// continuous part.
    pub fn sampled_generators(&self, n_axial: usize) -> Vec<Rotation> {
        let mut g = self.generators.clone();
        if self.axial {
            let e1 = Vec3::x();
            g.extend((1..=n_axial).map(|k| Rotation::about_axis(&e1, 0.37 + 2.0 * PI * k as f64 / (n_axial as f64 + 1.0))));
        }
        g
    }

    /// `J`, the π-rotation about the mirror normal, used as `G(J P̄ J) = G(P̄)`.
    pub fn reflection_conjugator(&self) -> Rotation {
        Rotation::about_axis(&self.mirror_normal, PI)
    }
}

pub fn symmetry_group(shape: &MoleculeShape) -> SymmetryGroup {
    match shape.kind {
        ShapeKind::Rod => SymmetryGroup {
            group: PointGroup::DInfH,
            generators: vec![Rotation::about_axis(&Vec3::z(), PI)],
            axial: true,
            mirror_normal: Vec3::z(),
        },
        ShapeKind::BentCore | ShapeKind::SpheroTriangle => SymmetryGroup {
            group: PointGroup::C2v,
            generators: vec![Rotation::about_axis(&Vec3::x(), PI)],
            axial: false,
            mirror_normal: Vec3::z(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::sample_haar;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_validation() {
        assert!(MoleculeShape::rod(1.0, 0.1).is_ok());
        assert!(MoleculeShape::rod(0.0, 0.1).is_err());
        assert!(MoleculeShape::rod(1.0, -0.1).is_err());
        assert!(MoleculeShape::bent_core(0.0, 1.0, 0.1).is_err());
        assert!(MoleculeShape::bent_core(PI + 0.1, 1.0, 0.1).is_err());
        assert!(MoleculeShape::bent_core(PI, 1.0, 0.1).is_ok());
        assert!(MoleculeShape::bent_core(2.0, 1.0, 0.1).unwrap().with_beads(5).is_err());
        assert!(MoleculeShape::rod(1.0, 0.1).unwrap().with_beads(1).is_err());
        assert!(MoleculeShape::rod(1.0, 0.1).unwrap().with_beads(3).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let s = MoleculeShape::bent_core(2.0, 1.5, 0.2).unwrap().with_beads(6).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"L\":1.5") && j.contains("\"N\":6"));
        let back: MoleculeShape = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let r: MoleculeShape = serde_json::from_str(r#"{"kind":"Rod","L":1.0,"D":0.1}"#).unwrap();
        assert_eq!(r, MoleculeShape::rod(1.0, 0.1).unwrap());
    }

    #[test]
    fn rod_two_beads_span_tips() {
        let s = MoleculeShape::rod(2.0, 0.1).unwrap().with_beads(2).unwrap();
        let b = beads(&s).unwrap();
        assert_eq!(b.positions.len(), 3);
        assert_abs_diff_eq!(b.positions[0][0], -1.0);
        assert_abs_diff_eq!(b.positions[1][0], 0.0);
        assert_abs_diff_eq!(b.positions[2][0], 1.0);
    }

    #[test]
    fn bent_core_four_beads_quarter_turn() {
        let s = MoleculeShape::bent_core(PI / 2.0, 1.0, 0.1).unwrap().with_beads(4).unwrap();
        let b = beads(&s).unwrap();
        let r = 0.5f64.sqrt();
        // s = -1/2, -1/4, 0, 1/4, 1/2
        let expect = [
            (0.0, -0.5 * r),
            (0.25 * r, -0.25 * r),
            (0.5 * r, 0.0),
            (0.25 * r, 0.25 * r),
            (0.0, 0.5 * r),
        ];
        for (p, (x, y)) in b.positions.iter().zip(expect) {
            assert_abs_diff_eq!(p[0], x, epsilon = 1e-15);
            assert_abs_diff_eq!(p[1], y, epsilon = 1e-15);
            assert_eq!(p[2], 0.0);
        }
    }

    #[test]
    fn straight_bent_core_is_a_rod_along_m2() {
        let n = 6;
        let mut bent = MoleculeShape::bent_core(3.0, 1.3, 0.1).unwrap().with_beads(n).unwrap();
        bent.theta = Some(PI);
        let rod = MoleculeShape::rod(1.3, 0.1).unwrap().with_beads(n).unwrap();
        let (bb, rb) = (beads(&bent).unwrap(), beads(&rod).unwrap());
        for (p, q) in bb.positions.iter().zip(&rb.positions) {
            let mapped = Vec3::new(0.0, q[0], 0.0);
            assert!((p - mapped).abs().max() < 1e-12);
        }
    }

    #[test]
    fn beads_respect_point_group() {
        for shape in [
            MoleculeShape::rod(1.0, 0.1).unwrap().with_beads(5).unwrap(),
            MoleculeShape::bent_core(2.1, 1.0, 0.1).unwrap().with_beads(6).unwrap(),
        ] {
            let b = beads(&shape).unwrap();
            for t in symmetry_group(&shape).sampled_generators(3) {
                for p in &b.positions {
                    let q = t.apply(p);
                    let best = b.positions.iter().map(|r| (r - q).norm()).fold(f64::MAX, f64::min);
                    assert!(best < 1e-12);
                }
            }
        }
    }

    #[test]
    fn triangle_geometry() {
        let s = MoleculeShape::sphero_triangle(PI / 2.0, 2.0, 0.1).unwrap();
        let (o, a, b) = triangle_vertices(&s).unwrap();
        assert_abs_diff_eq!((a - o).norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!((b - o).norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!((a - b).norm(), 2f64.sqrt(), epsilon = 1e-15);
        let (ea, eb, ec) = ((o - a).normalize(), (b - o).normalize(), (a - b).normalize());
        let h = PI / 4.0;
        assert!((ea - Vec3::new(h.cos(), h.sin(), 0.0)).norm() < 1e-15);
        assert!((eb - Vec3::new(-h.cos(), h.sin(), 0.0)).norm() < 1e-15);
        assert!((ec + Vec3::y()).norm() < 1e-15);
        assert!(((o - a) + (b - o) + (a - b)).norm() < 1e-15);
        assert!(triangle_vertices(&MoleculeShape::rod(1.0, 0.1).unwrap()).is_err());
        assert!(beads(&s).is_err());
    }

    #[test]
    fn groups() {
        let rod = symmetry_group(&MoleculeShape::rod(1.0, 0.1).unwrap());
        assert_eq!(rod.group, PointGroup::DInfH);
        assert!(rod.axial);
        let bc = symmetry_group(&MoleculeShape::bent_core(2.0, 1.0, 0.1).unwrap());
        let st = symmetry_group(&MoleculeShape::sphero_triangle(2.0, 1.0, 0.1).unwrap());
        assert_eq!(bc.group, PointGroup::C2v);
        assert_eq!(st.group, PointGroup::C2v);
        assert!((bc.generators[0].apply(&Vec3::x()) - Vec3::x()).norm() < 1e-15);
    }

    #[test]
    fn hard_core_separation_and_overlap() {
        let s = MoleculeShape::rod(1.0, 0.1).unwrap().with_beads(4).unwrap();
        let hc = PairPotential::hard_core(0.1);
        let e = pair_energy(&s, &hc, &Vec3::zeros(), &Rotation::identity()).unwrap();
        assert!(e.is_overlap());
        assert_eq!(e.value(), f64::INFINITY);
        assert_eq!(e.mayer(1.0), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.3).normalize();
            let x = dir * (2.0 * 1.0 + 0.1 + 1e-3);
            let e = pair_energy(&s, &hc, &x, &sample_haar(&mut rng)).unwrap();
            assert_eq!(e, Energy::Finite(0.0));
        }
    }

    #[test]
    fn lennard_jones_four_term_sum() {
        let lj = PairPotential::lennard_jones(0.4, 1.3);
        assert_abs_diff_eq!(lj.v0(0.4).value(), -1.3, epsilon = 1e-12);
        assert!(lj.v0(0.0).is_overlap());
        let b = BeadSet { positions: vec![Vec3::new(-0.25, 0.0, 0.0), Vec3::new(0.25, 0.0, 0.0)] };
        let x = Vec3::new(0.1, 0.5, 0.2);
        let pb = Rotation::about_axis(&Vec3::z(), PI / 2.0);
        // partner beads sit at (0, -0.25, 0) and (0, 0.25, 0)
        let lj_r = |r: f64| {
            let q = (lj.sigma / r).powi(6);
            4.0 * 1.3 * (q * q - q)
        };
        let mut expect = 0.0;
        for xi in [-0.25 + 0.1, 0.25 + 0.1] {
            for yj in [-0.25, 0.25] {
                expect += lj_r((xi * xi + (0.5 - yj) * (0.5 - yj) + 0.04f64).sqrt());
            }
        }
        let got = bead_pair_energy(&b, &lj, &x, &pb).value();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
    }

    #[test]
    fn energy_swap_and_symmetry_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for shape in [
            MoleculeShape::rod(1.0, 0.3).unwrap().with_beads(6).unwrap(),
            MoleculeShape::bent_core(2.0, 1.0, 0.3).unwrap().with_beads(6).unwrap(),
        ] {
            let group = symmetry_group(&shape).sampled_generators(2);
            for pot in [PairPotential::hard_core(0.3), PairPotential::lennard_jones(0.3, 1.0)] {
                for _ in 0..100 {
                    let x = Vec3::new(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2), rng.gen_range(-0.8..0.8));
                    let pb = sample_haar(&mut rng);
                    let e = pair_energy(&shape, &pot, &x, &pb).unwrap();
                    let inv = pb.inverse();
                    let swapped = pair_energy(&shape, &pot, &(-inv.apply(&x)), &inv).unwrap();
                    same(e, swapped);
                    for t in &group {
                        let ti = t.inverse();
                        let moved = pair_energy(&shape, &pot, &ti.apply(&x), &(ti * pb)).unwrap();
                        same(e, moved);
                        let moved2 = pair_energy(&shape, &pot, &x, &(pb * *t)).unwrap();
                        same(e, moved2);
                    }
                }
            }
        }
    }

    fn same(a: Energy, b: Energy) {
        match (a, b) {
            (Energy::Overlap, Energy::Overlap) => {}
            (Energy::Finite(x), Energy::Finite(y)) => assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs())),
            _ => panic!("overlap verdict differs: {a:?} vs {b:?}"),
        }
    }
}
