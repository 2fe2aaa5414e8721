//! Euclidean distances between points, segments and triangles, and the
//! centre sets swept by the ball of each molecule.

use crate::shapes::{bent_core_points, triangle_vertices, MoleculeShape, ShapeKind};
use crate::so3::Rotation;
use crate::{Result, Vec3};

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / l2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Closest distance between segments `p1 q1` and `p2 q2`.
pub fn segment_segment_distance(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let eps = 1e-300;
    let (s, t);
    let mut near_parallel = false;
    if a <= eps && e <= eps {
        return r.norm();
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            near_parallel = denom <= 1e-12 * a * e;
            let mut s0 = if denom > 1e-14 * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    let mut dist = (c1 - c2).norm();
    if near_parallel {
        dist = dist
            .min(point_segment_distance(p1, p2, q2))
            .min(point_segment_distance(q1, p2, q2))
            .min(point_segment_distance(p2, p1, q1))
            .min(point_segment_distance(q2, p1, q1));
    }
    dist
}

/// Closest distance from `p` to the filled triangle `abc`.
pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(&ac);
    let n2 = n.norm_squared();
    let edge_min = || {
        point_segment_distance(p, a, b).min(point_segment_distance(p, b, c)).min(point_segment_distance(p, c, a))
    };
    if n2 <= 1e-24 * ab.norm_squared().max(ac.norm_squared()).powi(2) {
        return edge_min();
    }
    // barycentric coordinates of the projection of p
    let ap = p - a;
    let v = ap.cross(&ac).dot(&n) / n2;
    let w = ab.cross(&ap).dot(&n) / n2;
    if v >= 0.0 && w >= 0.0 && v + w <= 1.0 {
        return (n.dot(&ap) / n2.sqrt()).abs();
    }
    edge_min()
}

/// Whether segment `pq` crosses the filled triangle `abc` (non-coplanar case).
pub fn segment_crosses_triangle(p: &Vec3, q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    let n = (b - a).cross(&(c - a));
    let dp = n.dot(&(p - a));
    let dq = n.dot(&(q - a));
    if dp * dq > 0.0 || (dp == 0.0 && dq == 0.0) {
        return false;
    }
    let t = dp / (dp - dq);
    let x = p + (q - p) * t;
    let n2 = n.norm_squared();
    if n2 == 0.0 {
        return false;
    }
    let ax = x - a;
    let v = ax.cross(&(c - a)).dot(&n) / n2;
    let w = (b - a).cross(&ax).dot(&n) / n2;
    v >= 0.0 && w >= 0.0 && v + w <= 1.0
}

pub fn segment_triangle_distance(p: &Vec3, q: &Vec3, t: &[Vec3; 3]) -> f64 {
    if segment_crosses_triangle(p, q, &t[0], &t[1], &t[2]) {
        return 0.0;
    }
    let mut d = point_triangle_distance(p, &t[0], &t[1], &t[2]).min(point_triangle_distance(q, &t[0], &t[1], &t[2]));
    for k in 0..3 {
        d = d.min(segment_segment_distance(p, q, &t[k], &t[(k + 1) % 3]));
    }
    d
}

pub fn triangle_triangle_distance(t1: &[Vec3; 3], t2: &[Vec3; 3]) -> f64 {
    for k in 0..3 {
        let (p, q) = (&t1[k], &t1[(k + 1) % 3]);
        if segment_crosses_triangle(p, q, &t2[0], &t2[1], &t2[2]) {
            return 0.0;
        }
        let (p, q) = (&t2[k], &t2[(k + 1) % 3]);
        if segment_crosses_triangle(p, q, &t1[0], &t1[1], &t1[2]) {
            return 0.0;
        }
    }
    let mut d = f64::MAX;
    for i in 0..3 {
        for j in 0..3 {
            d = d.min(segment_segment_distance(&t1[i], &t1[(i + 1) % 3], &t2[j], &t2[(j + 1) % 3]));
        }
        d = d.min(point_triangle_distance(&t1[i], &t2[0], &t2[1], &t2[2]));
        d = d.min(point_triangle_distance(&t2[i], &t1[0], &t1[1], &t1[2]));
    }
    d
}

#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    Point(Vec3),
    Segment(Vec3, Vec3),
    Triangle([Vec3; 3]),
}

impl Primitive {
    fn map(&self, r: &Rotation, t: &Vec3) -> Primitive {
        let f = |v: &Vec3| r.apply(v) + t;
        match self {
            Primitive::Point(p) => Primitive::Point(f(p)),
            Primitive::Segment(a, b) => Primitive::Segment(f(a), f(b)),
            Primitive::Triangle(v) => Primitive::Triangle([f(&v[0]), f(&v[1]), f(&v[2])]),
        }
    }

    fn points(&self) -> Vec<Vec3> {
        match self {
            Primitive::Point(p) => vec![*p],
            Primitive::Segment(a, b) => vec![*a, *b],
            Primitive::Triangle(v) => v.to_vec(),
        }
    }

    pub fn distance(&self, other: &Primitive) -> f64 {
        use Primitive::*;
        match (self, other) {
            (Point(p), Point(q)) => (p - q).norm(),
            (Point(p), Segment(a, b)) | (Segment(a, b), Point(p)) => point_segment_distance(p, a, b),
            (Point(p), Triangle(t)) | (Triangle(t), Point(p)) => point_triangle_distance(p, &t[0], &t[1], &t[2]),
            (Segment(a, b), Segment(c, d)) => segment_segment_distance(a, b, c, d),
            (Segment(a, b), Triangle(t)) | (Triangle(t), Segment(a, b)) => segment_triangle_distance(a, b, t),
            (Triangle(s), Triangle(t)) => triangle_triangle_distance(s, t),
        }
    }
}

/// Centre set of a molecule (the body minus its ball of diameter D): the
/// swept body is this set dilated by D/2.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterSet {
    pub parts: Vec<Primitive>,
}

impl CenterSet {
    pub fn point(p: Vec3) -> Self {
        Self { parts: vec![Primitive::Point(p)] }
    }

    pub fn from_shape(shape: &MoleculeShape) -> Result<Self> {
        shape.validate()?;
        let h = shape.length / 2.0;
        let parts = match shape.kind {
            ShapeKind::Rod => vec![Primitive::Segment(Vec3::new(-h, 0.0, 0.0), Vec3::new(h, 0.0, 0.0))],
            ShapeKind::BentCore => {
                let (apex, t1, t2) = bent_core_points(shape)?;
                vec![Primitive::Segment(apex, t1), Primitive::Segment(apex, t2)]
            }
            ShapeKind::SpheroTriangle => {
                let (o, a, b) = triangle_vertices(shape)?;
                vec![Primitive::Triangle([o, a, b])]
            }
        };
        Ok(Self { parts })
    }

    pub fn transformed(&self, r: &Rotation, t: &Vec3) -> Self {
        Self { parts: self.parts.iter().map(|p| p.map(r, t)).collect() }
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        self.transformed(&Rotation::identity(), t)
    }

    /// Centre and radius of a ball containing the set.
    pub fn bounding_ball(&self) -> (Vec3, f64) {
        let pts: Vec<Vec3> = self.parts.iter().flat_map(|p| p.points()).collect();
        let c = pts.iter().fold(Vec3::zeros(), |s, p| s + p) / pts.len() as f64;
        let r = pts.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
        (c, r)
    }

    /// Largest distance of the set from the origin.
    pub fn radius_about_origin(&self) -> f64 {
        self.parts.iter().flat_map(|p| p.points()).map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &CenterSet) -> f64 {
        let mut d = f64::MAX;
        for p in &self.parts {
            for q in &other.parts {
                d = d.min(p.distance(q));
            }
        }
        d
    }
}

/// Minimum distance between the centre sets of two molecules, molecule 2
/// rotated by `p_bar` and shifted by `x_rel`. The swept bodies overlap iff
/// this is at most D.
pub fn primitive_distance(shape: &MoleculeShape, p_bar: &Rotation, x_rel: &Vec3) -> Result<f64> {
    let s1 = CenterSet::from_shape(shape)?;
    let s2 = s1.transformed(p_bar, x_rel);
    Ok(s1.distance(&s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parallel_segments() {
        let d = segment_segment_distance(
            &Vec3::new(0.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.2, 0.3, 0.0),
            &Vec3::new(1.2, 0.3, 0.0),
        );
        assert_abs_diff_eq!(d, 0.3, epsilon = 1e-15);
        let d = segment_segment_distance(
            &Vec3::new(0.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(2.0, 0.0, 0.0),
            &Vec3::new(3.0, 0.0, 0.0),
        );
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn skew_segments() {
        let d = segment_segment_distance(
            &Vec3::new(-1.0, 0.0, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.0, -1.0, 0.5),
            &Vec3::new(0.0, 1.0, 0.5),
        );
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn point_triangle_regions() {
        let t = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert_abs_diff_eq!(point_triangle_distance(&Vec3::new(0.2, 0.2, 0.7), &t[0], &t[1], &t[2]), 0.7);
        assert_abs_diff_eq!(point_triangle_distance(&Vec3::new(-1.0, 0.0, 0.0), &t[0], &t[1], &t[2]), 1.0);
        assert_abs_diff_eq!(
            point_triangle_distance(&Vec3::new(1.0, 1.0, 0.0), &t[0], &t[1], &t[2]),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn crossing_triangles_touch() {
        let t1 = [Vec3::new(-1.0, -1.0, 0.0), Vec3::new(1.0, -1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let t2 = [Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 0.2, 1.0), Vec3::new(0.1, -0.3, 1.0)];
        assert_eq!(triangle_triangle_distance(&t1, &t2), 0.0);
        let t3: [Vec3; 3] = t2.map(|v| v + Vec3::new(0.0, 0.0, 2.5));
        assert_abs_diff_eq!(triangle_triangle_distance(&t1, &t3), 1.5, epsilon = 1e-14);
    }

    #[test]
    fn coincident_shapes_have_zero_distance() {
        for s in [
            MoleculeShape::rod(1.0, 0.1).unwrap(),
            MoleculeShape::bent_core(2.0, 1.0, 0.1).unwrap(),
            MoleculeShape::sphero_triangle(1.0, 1.0, 0.1).unwrap(),
        ] {
            assert_eq!(primitive_distance(&s, &Rotation::identity(), &Vec3::zeros()).unwrap(), 0.0);
        }
    }
}
