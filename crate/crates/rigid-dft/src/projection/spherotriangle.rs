//! Closed-form projection data for the isosceles spherotriangle (apex
//! angle θ, lateral sides L/2): coefficients c1–c4, the moments k0–k3,
//! the tabulated `∫ p_ij² f dν` integrals and the K(θ) estimator.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::so3::{sample_haar, Rotation};
use crate::{Error, Result, Vec3};

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < PI {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta must lie in (0, pi), got {theta}")))
    }
}

/// `(c2, c3, c4)` from the closed forms; `c` is the concentration.
pub fn printed_c2_c4(theta: f64, l: f64, d: f64, c: f64) -> [f64; 3] {
    let (s, co) = (theta / 2.0).sin_cos();
    let st = theta.sin();
    let l3 = c * l.powi(3) * st;
    let l2d = 15.0 * PI / 128.0 * c * l * l * d;
    [
        -15.0 / 64.0 * l3 * co * co - l2d * co.powi(4),
        -15.0 / 64.0 * l3 * s * (1.0 + s) - l2d * s * s * (1.0 + s).powi(2),
        -15.0 / 128.0 * l3 * (1.0 + s) - l2d * co * co * s * (1.0 + s),
    ]
}

/// `(k0, k1, k2, k3)` including the constant `C` as printed.
pub fn k_moments(theta: f64, l: f64, d: f64, c: f64) -> [f64; 4] {
    let (s, co) = (theta / 2.0).sin_cos();
    let st = theta.sin();
    let (s2, c2) = (s * s, co * co);
    let l3 = c * l.powi(3) * st;
    let l2d = PI / 64.0 * c * l * l * d;
    let cc = (0.25 * l * l * d * st + d * d * l * (1.0 + s) + 4.0 / 3.0 * PI * d.powi(3)) / 3.0;
    let two_k = [
        0.25 * l3 * (1.0 + s) + PI / 4.0 * c * l * l * d * (1.0 + 2.0 * s + s2) + 3.0 * cc,
        l3 / 32.0 * (2.0 * c2 + 3.0 * s2 + 3.0 * s)
            + l2d * (4.0 * c2 * c2 + 5.0 * s2 * s2 + 12.0 * s2 * c2 + 2.0 * s * (6.0 * c2 + 5.0 * s2) + 5.0 * s2)
            + cc,
        l3 / 64.0 * (5.0 + 5.0 * s)
            + l2d * (6.0 * c2 * c2 + 6.0 * s2 * s2 + 9.0 * s2 * c2 + s * (9.0 * c2 + 12.0 * s2) + 6.0 * s2)
            + cc,
        l3 / 32.0 * (3.0 * c2 + 2.0 * s2 + 2.0 * s)
            + l2d * (5.0 * c2 * c2 + 4.0 * s2 * s2 + 12.0 * s2 * c2 + 2.0 * s * (6.0 * c2 + 4.0 * s2) + 4.0 * s2)
            + cc,
    ];
    two_k.map(|v| v / 2.0)
}

/// `(c2, c3, c4)` from `(k0, k1, k2, k3)`.
pub fn cc_route(k: &[f64; 4]) -> [f64; 3] {
    let [k0, k1, k2, k3] = *k;
    [
        5.0 * (4.0 * k1 + 4.0 * k2 + k3 - 3.0 * k0),
        5.0 * (k1 + 4.0 * k2 + 4.0 * k3 - 3.0 * k0),
        5.0 * (2.0 * k1 + 5.0 * k2 + 2.0 * k3 - 3.0 * k0),
    ]
}

/// The six mutually orthogonal functions spanning the quadratic space.
pub fn orthogonal_family(p: &Rotation) -> [f64; 6] {
    let (p11, p12, p21, p22) = (p.p(0, 0), p.p(0, 1), p.p(1, 0), p.p(1, 1));
    let r3 = 3f64.sqrt();
    [
        1.0,
        p11,
        0.5 * (3.0 * p11 * p11 - 1.0),
        r3 * (p12 * p12 + 0.5 * (p11 * p11 - 1.0)),
        r3 * (p21 * p21 + 0.5 * (p11 * p11 - 1.0)),
        2.0 * p22 * p22 + (p12 * p12 + p21 * p21) + 0.5 * p11 * p11 - 1.5,
    ]
}

/// Unit edge directions `e_a, e_b, e_c` in the body frame.
fn edge_units(theta: f64) -> [Vec3; 3] {
    let (s, c) = (theta / 2.0).sin_cos();
    [Vec3::new(c, s, 0.0), Vec3::new(-c, s, 0.0), Vec3::new(0.0, -1.0, 0.0)]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table1Moment {
    P11Sq,
    P22Sq,
    P12Sq,
    P21Sq,
}

impl Table1Moment {
    pub const ALL: [Table1Moment; 4] = [Table1Moment::P11Sq, Table1Moment::P22Sq, Table1Moment::P12Sq, Table1Moment::P21Sq];

    pub fn eval(&self, p: &Rotation) -> f64 {
        let (i, j) = match self {
            Table1Moment::P11Sq => (0, 0),
            Table1Moment::P22Sq => (1, 1),
            Table1Moment::P12Sq => (0, 1),
            Table1Moment::P21Sq => (1, 0),
        };
        p.p(i, j).powi(2)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Table1Moment::P11Sq => "p11^2",
            Table1Moment::P22Sq => "p22^2",
            Table1Moment::P12Sq => "p12^2",
            Table1Moment::P21Sq => "p21^2",
        }
    }
}

/// Row labels of the table, 1-based ids in this order.
pub const TABLE1_ROWS: [&str; 14] = [
    "|m3'.e_a|",
    "|m3'.e_b|",
    "|m3'.e_c|",
    "|m3.e'_a|",
    "|m3.e'_b|",
    "|m3.e'_c|",
    "|e_a x e'_a|",
    "|e_a x e'_b|",
    "|e_a.e'_c|",
    "|e_b x e'_a|",
    "|e_b x e'_b|",
    "|e_b.e'_c|",
    "|e_c.e'_a|",
    "|e_c.e'_c|",
];

/// Rows printed with a dot that sit in cross-product positions.
pub const TABLE1_FLAGGED: [usize; 4] = [9, 12, 13, 14];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table1Reading {
    /// Integrand exactly as labelled.
    AsLabelled,
    /// Flagged rows read as `|e × e'|`.
    Cross,
}

fn check_row(row: usize) -> Result<()> {
    if (1..=14).contains(&row) {
        Ok(())
    } else {
        Err(Error::Domain(format!("table row id must be in 1..=14, got {row}")))
    }
}

/// Printed table value.
pub fn table1_entry(row: usize, moment: Table1Moment, theta: f64) -> Result<f64> {
    check_row(row)?;
    let (s, c) = (theta / 2.0).sin_cos();
    let (s2, c2) = (s * s, c * c);
    let a = c2 / 8.0 + 3.0 * s2 / 16.0;
    let b = 3.0 * c2 / 16.0 + s2 / 8.0;
    let x = PI * (c2 * c2 / 16.0 + 5.0 * s2 * s2 / 64.0 + 3.0 * s2 * c2 / 16.0);
    let dot = [
        PI * (3.0 * c2 / 32.0 + 5.0 * s2 / 64.0),
        PI * (3.0 * c2 / 32.0 + s2 / 16.0),
        PI * (c2 / 16.0 + 3.0 * s2 / 32.0),
        PI * (5.0 * c2 / 64.0 + 3.0 * s2 / 32.0),
    ];
    let cols: [f64; 4] = match row {
        1 | 2 => [a, b, a, b],
        3 => [3.0 / 16.0, 1.0 / 8.0, 3.0 / 16.0, 1.0 / 8.0],
        4 | 5 => [a, b, b, a],
        6 => [3.0 / 16.0, 1.0 / 8.0, 1.0 / 8.0, 3.0 / 16.0],
        7 | 8 | 10 | 11 => [x; 4],
        9 | 12 => dot,
        13 => [dot[0], dot[1], dot[3], dot[2]],
        _ => [5.0 * PI / 64.0, PI / 16.0, 3.0 * PI / 32.0, 3.0 * PI / 32.0],
    };
    let k = Table1Moment::ALL.iter().position(|m| *m == moment).unwrap_or(0);
    Ok(cols[k])
}

/// Integrand of a row at `p_bar`, with `e' = P̄ e` and `m3' = P̄ m3`.
pub fn table1_integrand(row: usize, reading: Table1Reading, p_bar: &Rotation, theta: f64) -> Result<f64> {
    check_row(row)?;
    let e = edge_units(theta);
    let ep = e.map(|v| p_bar.apply(&v));
    let m3 = Vec3::z();
    let m3p = p_bar.axis(2);
    let cross = reading == Table1Reading::Cross;
    let pair = |u: &Vec3, v: &Vec3, flagged: bool| {
        if flagged && !cross {
            u.dot(v).abs()
        } else {
            u.cross(v).norm()
        }
    };
    Ok(match row {
        1..=3 => m3p.dot(&e[row - 1]).abs(),
        4..=6 => m3.dot(&ep[row - 4]).abs(),
        7 => pair(&e[0], &ep[0], false),
        8 => pair(&e[0], &ep[1], false),
        9 => pair(&e[0], &ep[2], true),
        10 => pair(&e[1], &ep[0], false),
        11 => pair(&e[1], &ep[1], false),
        12 => pair(&e[1], &ep[2], true),
        13 => pair(&e[2], &ep[0], true),
        _ => pair(&e[2], &ep[2], true),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KThetaEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    /// Samples discarded because a gating product was exactly zero.
    pub redrawn: u64,
}

const K_CHUNK: u64 = 1 << 16;
pub const K_MIN_SAMPLES: u64 = 1_000_000;

/// Index into the I-term array: `aa ab ac ba bb bc ca cb cc`.
const AA: usize = 0;
const AB: usize = 1;
const AC: usize = 2;
const BA: usize = 3;
const BB: usize = 4;
const BC: usize = 5;
const CA: usize = 6;
const CB: usize = 7;
const CC: usize = 8;

/// Gating products for one sample: `A = m3'.a`, `A2 = m3.a'`, etc.
struct Gates {
    a: f64,
    b: f64,
    c: f64,
    a2: f64,
    b2: f64,
    c2: f64,
}

/// The eighteen branches: `(terms, first gate, second gate, third gate, sign)`;
/// a branch is active when the first two products are positive and the
/// third has the given sign.
type Branch = (&'static [usize], fn(&Gates) -> f64, fn(&Gates) -> f64, fn(&Gates) -> f64, f64);

const BRANCHES: [Branch; 18] = [
    (&[AA, AB, BA, BB, CC], |g| g.a2 * g.b2, |g| g.a * g.b, |g| g.c2 * g.c, -1.0),
    (&[AC, BC, CA, CB], |g| g.a2 * g.b2, |g| g.a * g.b, |g| g.c2 * g.c, 1.0),
    (&[AB, AC, BB, BC, CA], |g| g.b2 * g.c2, |g| g.a * g.b, |g| g.a2 * g.c, -1.0),
    (&[AA, BA, CB, CC], |g| g.b2 * g.c2, |g| g.a * g.b, |g| g.a2 * g.c, 1.0),
    (&[AC, AA, BC, BA, CB], |g| g.c2 * g.a2, |g| g.a * g.b, |g| g.b2 * g.c, -1.0),
    (&[AB, BB, CC, CA], |g| g.c2 * g.a2, |g| g.a * g.b, |g| g.b2 * g.c, 1.0),
    (&[BA, BB, CA, CB, AC], |g| g.a2 * g.b2, |g| g.b * g.c, |g| g.c2 * g.a, -1.0),
    (&[BC, CC, AA, AB], |g| g.a2 * g.b2, |g| g.b * g.c, |g| g.c2 * g.a, 1.0),
    (&[BB, BC, CB, CC, AA], |g| g.b2 * g.c2, |g| g.b * g.c, |g| g.a2 * g.a, -1.0),
    (&[BA, CA, AB, AC], |g| g.b2 * g.c2, |g| g.b * g.c, |g| g.a2 * g.a, 1.0),
    (&[BC, BA, CC, CA, AB], |g| g.c2 * g.a2, |g| g.b * g.c, |g| g.b2 * g.a, -1.0),
    (&[BB, CB, AC, AA], |g| g.c2 * g.a2, |g| g.b * g.c, |g| g.b2 * g.a, 1.0),
    (&[CA, CB, AA, AB, BC], |g| g.a2 * g.b2, |g| g.c * g.a, |g| g.c2 * g.b, -1.0),
    (&[CC, AC, BA, BB], |g| g.a2 * g.b2, |g| g.c * g.a, |g| g.c2 * g.b, 1.0),
    (&[CB, CC, AB, AC, BA], |g| g.b2 * g.c2, |g| g.c * g.a, |g| g.a2 * g.b, -1.0),
    (&[CA, AA, BB, BC], |g| g.b2 * g.c2, |g| g.c * g.a, |g| g.a2 * g.b, 1.0),
    (&[CC, CA, AC, AA, BB], |g| g.c2 * g.a2, |g| g.c * g.a, |g| g.b2 * g.b, -1.0),
    (&[CB, AB, BC, BA], |g| g.c2 * g.a2, |g| g.c * g.a, |g| g.b2 * g.b, 1.0),
];

/// Bracketed branch sum at `p_bar`, or `None` on a gating tie.
pub fn k_theta_bracket(theta: f64, p_bar: &Rotation) -> Option<f64> {
    let s = (theta / 2.0).sin();
    let e = edge_units(theta);
    // edges of the first triangle and of the reflected second one
    let (a, b, c) = (e[0] * 0.5, e[1] * 0.5, e[2] * s);
    let (a2, b2, c2) = (-p_bar.apply(&a), -p_bar.apply(&b), -p_bar.apply(&c));
    let ep = e.map(|v| -p_bar.apply(&v));
    let m3p = p_bar.axis(2);
    let g = Gates { a: m3p.dot(&a), b: m3p.dot(&b), c: m3p.dot(&c), a2: a2.z, b2: b2.z, c2: c2.z };
    if [g.a * g.b, g.b * g.c, g.c * g.a, g.a2 * g.b2, g.b2 * g.c2, g.c2 * g.a2, g.c2 * g.c, g.a2 * g.c, g.b2 * g.c]
        .iter()
        .chain([g.c2 * g.a, g.a2 * g.a, g.b2 * g.a, g.c2 * g.b, g.a2 * g.b, g.b2 * g.b].iter())
        .any(|v| *v == 0.0)
    {
        return None;
    }
    let w = [1.0, 1.0, 2.0 * s, 1.0, 1.0, 2.0 * s, 2.0 * s, 2.0 * s, 4.0 * s * s];
    let mut i = [0.0; 9];
    for (k, slot) in i.iter_mut().enumerate() {
        *slot = w[k] * e[k / 3].cross(&ep[k % 3]).norm();
    }
    let mut total = 0.0;
    for (terms, g1, g2, g3, sign) in BRANCHES.iter() {
        if g1(&g) > 0.0 && g2(&g) > 0.0 && g3(&g) * sign > 0.0 {
            total += terms.iter().map(|t| i[*t]).sum::<f64>();
        }
    }
    Some(total)
}

/// Monte Carlo estimate of `K(θ) = ∫ p11 [branch sum] dν`.
pub fn k_theta(theta: f64, n_samples: u64, seed: u64) -> Result<KThetaEstimate> {
    check_theta(theta)?;
    if n_samples < K_MIN_SAMPLES {
        return Err(Error::Domain(format!("K(theta) needs at least {K_MIN_SAMPLES} samples")));
    }
    let n_chunks = n_samples.div_ceil(K_CHUNK);
    let parts: Vec<(f64, f64, u64)> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let count = K_CHUNK.min(n_samples - k * K_CHUNK);
            let (mut s1, mut s2, mut redrawn) = (0.0, 0.0, 0u64);
            let mut done = 0;
            while done < count {
                let p = sample_haar(&mut rng);
                match k_theta_bracket(theta, &p) {
                    Some(v) => {
                        let x = p.p(0, 0) * v;
                        s1 += x;
                        s2 += x * x;
                        done += 1;
                    }
                    None => redrawn += 1,
                }
            }
            (s1, s2, redrawn)
        })
        .collect();
    let (mut s1, mut s2, mut redrawn) = (0.0, 0.0, 0);
    for (a, b, r) in parts {
        s1 += a;
        s2 += b;
        redrawn += r;
    }
    let n = n_samples as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    Ok(KThetaEstimate { value: mean, stderr: (var / n).sqrt(), n_samples, redrawn })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpheroTriangleCoeffs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub k_theta: KThetaEstimate,
}

pub const K_DEFAULT_SEED: u64 = 0x5eed;

/// `c2..c4` in closed form and `c1 = (3/8) c L² D K(θ)` with K from
/// [`k_theta`] at `K_MIN_SAMPLES`.
pub fn analytic_spherotriangle_coeffs(theta: f64, l: f64, d: f64, c: f64) -> Result<SpheroTriangleCoeffs> {
    check_theta(theta)?;
    if !(l > 0.0 && d > 0.0 && c > 0.0) {
        return Err(Error::Domain("L, D and c must be positive".into()));
    }
    let [c2, c3, c4] = printed_c2_c4(theta, l, d, c);
    let k = k_theta(theta, K_MIN_SAMPLES, K_DEFAULT_SEED)?;
    Ok(SpheroTriangleCoeffs { c1: 3.0 / 8.0 * c * l * l * d * k.value, c2, c3, c4, k_theta: k })
}
