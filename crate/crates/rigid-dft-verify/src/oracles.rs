//! Reference computations written independently of the library paths they
//! check. Each one uses only elementary geometry or a scalar integral.

use std::f64::consts::PI;

use rigid_dft::so3::Rotation;
use rigid_dft::Vec3;

/// `2L²D|m × m'| + 2πLD² + 4πD³/3`.
pub fn rod_volume(l: f64, d: f64, cross: f64) -> f64 {
    2.0 * l * l * d * cross + 2.0 * PI * l * d * d + 4.0 / 3.0 * PI * d.powi(3)
}

/// Edge sum on the right of the point-reflection identity, from the two
/// triangles' vertex lists.
pub fn point_reflection_rhs(t1: &[Vec3; 3], t2: &[Vec3; 3]) -> f64 {
    let edges = |t: &[Vec3; 3]| [t[0] - t[1], t[2] - t[0], t[1] - t[2]];
    let (e1, e2) = (edges(t1), edges(t2));
    let mut s = 0.0;
    for u in &e1 {
        for v in &e2 {
            s += u.cross(v).norm();
        }
    }
    s + 2.0 * (e1[0].cross(&e1[1]).norm() + e2[0].cross(&e2[1]).norm())
}

/// Unit edge directions of the isosceles triangle with apex angle θ.
pub fn triangle_edge_units(theta: f64) -> [Vec3; 3] {
    let h = theta / 2.0;
    [Vec3::new(h.cos(), h.sin(), 0.0), Vec3::new(-h.cos(), h.sin(), 0.0), Vec3::new(0.0, -1.0, 0.0)]
}

/// How a row pairs its two vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pairing {
    Dot,
    Cross,
}

/// `(first, second, pairing)` per table row: first vector from molecule 1
/// (`e_a, e_b, e_c` or `m3` as index 3), second from molecule 2.
pub const TABLE_ROWS: [(usize, usize, Pairing); 14] = [
    (0, 3, Pairing::Dot),
    (1, 3, Pairing::Dot),
    (2, 3, Pairing::Dot),
    (3, 0, Pairing::Dot),
    (3, 1, Pairing::Dot),
    (3, 2, Pairing::Dot),
    (0, 0, Pairing::Cross),
    (0, 1, Pairing::Cross),
    (0, 2, Pairing::Dot),
    (1, 0, Pairing::Cross),
    (1, 1, Pairing::Cross),
    (1, 2, Pairing::Dot),
    (2, 0, Pairing::Dot),
    (2, 2, Pairing::Dot),
];

/// Row integrand at relative rotation `p`; molecule 2 vectors are `p v`.
pub fn table_integrand(row: usize, pairing: Pairing, p: &Rotation, theta: f64) -> f64 {
    let e = triangle_edge_units(theta);
    let pick = |k: usize| if k == 3 { Vec3::z() } else { e[k] };
    let (i, j, _) = TABLE_ROWS[row - 1];
    let (u, v) = (pick(i), p.apply(&pick(j)));
    match pairing {
        Pairing::Dot => u.dot(&v).abs(),
        Pairing::Cross => u.cross(&v).norm(),
    }
}

/// `1, p11, (3p11² − 1)/2, √3(p12² + (p11² − 1)/2), √3(p21² + (p11² − 1)/2),
/// 2p22² + p12² + p21² + p11²/2 − 3/2`.
pub fn orthogonal_family(p: &Rotation) -> [f64; 6] {
    let m = p.matrix();
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let r = 3f64.sqrt();
    [
        1.0,
        a,
        1.5 * a * a - 0.5,
        r * (b * b + 0.5 * a * a - 0.5),
        r * (c * c + 0.5 * a * a - 0.5),
        2.0 * d * d + b * b + c * c + 0.5 * a * a - 1.5,
    ]
}

/// `∫_0^1 g(x) dx` by composite Simpson with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(g: F, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = g(0.0) + g(1.0);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
    }
    s * h / 3.0
}

/// Uniaxial order parameter `S = (3<x²> − 1)/2` of `f(x) ∝ exp(η x²)`.
pub fn uniaxial_s(eta: f64) -> f64 {
    // scale by exp(−η) to keep the exponent non-positive for η > 0
    let shift = eta.max(0.0);
    let den = simpson(|x| (eta * x * x - shift).exp(), 4000);
    let num = simpson(|x| x * x * (eta * x * x - shift).exp(), 4000);
    1.5 * num / den - 0.5
}

/// Smallest coupling `α` of the kernel `−α p11²` at which a nematic
/// solution `S > 0` exists: the minimum of `α(η) = η / S(η)`.
pub fn maier_saupe_onset() -> (f64, f64) {
    let alpha = |eta: f64| eta / uniaxial_s(eta);
    // coarse scan then golden section
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    let mut eta = 0.25;
    while eta <= 20.0 {
        let a = alpha(eta);
        if a < best {
            best = a;
            arg = eta;
        }
        eta += 0.25;
    }
    let (mut lo, mut hi) = (arg - 0.25, arg + 0.25);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if alpha(x1) < alpha(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let eta = 0.5 * (lo + hi);
    (alpha(eta), uniaxial_s(eta))
}
