//! Bent-core excluded volume as the union of four spheroparallelograms.
//!
//! `V_ij = (arm_i − P̄ arm'_j) ⊕ B_D`. Singletons are closed form; every
//! subset intersection is integrated column by column, since in each
//! `(x, y)` column a convex body is one `z` interval.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::montecarlo::mc_excluded_volume;
use super::{ExcludedVolumeResult, Method};
use crate::shapes::{bent_core_points, MoleculeShape, ShapeKind};
use crate::so3::Rotation;
use crate::{Error, Result, Vec3};

const START_GRID: usize = 64;
const MAX_GRID: usize = 2048;
const REL_TOL: f64 = 1e-4;
/// Assumed midpoint error order near curved boundaries.
const ORDER: f64 = 1.5;
pub const FALLBACK_SAMPLES: u64 = 1_000_000;

#[derive(Clone, Copy, Debug)]
struct Interval(f64, f64);

impl Interval {
    const EMPTY: Interval = Interval(f64::INFINITY, f64::NEG_INFINITY);

    fn is_empty(&self) -> bool {
        self.0 > self.1
    }

    fn hull(self, o: Interval) -> Interval {
        Interval(self.0.min(o.0), self.1.max(o.1))
    }

    fn meet(self, o: Interval) -> Interval {
        Interval(self.0.max(o.0), self.1.min(o.1))
    }

    fn len(&self) -> f64 {
        (self.1 - self.0).max(0.0)
    }
}

/// `lo <= a + b z <= hi` as an interval in `z`.
fn linear_band(a: f64, b: f64, lo: f64, hi: f64) -> Interval {
    if b.abs() < 1e-14 {
        if a >= lo && a <= hi {
            Interval(f64::NEG_INFINITY, f64::INFINITY)
        } else {
            Interval::EMPTY
        }
    } else {
        let (z1, z2) = ((lo - a) / b, (hi - a) / b);
        Interval(z1.min(z2), z1.max(z2))
    }
}

fn ball_column(c: &Vec3, d: f64, x: f64, y: f64) -> Interval {
    let rho2 = (x - c.x).powi(2) + (y - c.y).powi(2);
    if rho2 > d * d {
        return Interval::EMPTY;
    }
    let h = (d * d - rho2).sqrt();
    Interval(c.z - h, c.z + h)
}

/// Column of the finite cylinder around segment `p + λw`, `λ ∈ [0, 1]`.
fn cylinder_column(p: &Vec3, w: &Vec3, d: f64, x: f64, y: f64) -> Interval {
    let wl = w.norm();
    if wl == 0.0 {
        return Interval::EMPTY;
    }
    let u = w / wl;
    // r(z) = (x - p.x, y - p.y, z - p.z); |r|^2 - (r.u)^2 <= d^2
    let (rx, ry) = (x - p.x, y - p.y);
    let r0 = Vec3::new(rx, ry, -p.z);
    let s0 = r0.dot(&u);
    // |r0 + z e_z|^2 - (s0 + z u.z)^2 - d^2 <= 0
    let a = 1.0 - u.z * u.z;
    let b = 2.0 * (r0.z - s0 * u.z);
    let c = r0.norm_squared() - s0 * s0 - d * d;
    let radial = if a < 1e-14 {
        if c <= 0.0 {
            Interval(f64::NEG_INFINITY, f64::INFINITY)
        } else {
            Interval::EMPTY
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Interval::EMPTY;
        }
        let sq = disc.sqrt();
        Interval((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a))
    };
    if radial.is_empty() {
        return radial;
    }
    radial.meet(linear_band(s0, u.z, 0.0, wl))
}

/// One spheroparallelogram `{base + s u + t v : s, t ∈ [0,1]} ⊕ B_D`.
#[derive(Clone, Copy, Debug)]
struct Parallelogram {
    base: Vec3,
    u: Vec3,
    v: Vec3,
    /// Inverse of `[u v n̂]`, absent if `u ∥ v`.
    inv: Option<nalgebra::Matrix3<f64>>,
    d: f64,
}

impl Parallelogram {
    fn new(base: Vec3, u: Vec3, v: Vec3, d: f64) -> Self {
        let n = u.cross(&v);
        let inv = if n.norm() > 1e-12 * u.norm() * v.norm() {
            nalgebra::Matrix3::from_columns(&[u, v, n.normalize()]).try_inverse()
        } else {
            None
        };
        Parallelogram { base, u, v, inv, d }
    }

    fn vertices(&self) -> [Vec3; 4] {
        [self.base, self.base + self.u, self.base + self.u + self.v, self.base + self.v]
    }

    fn volume(&self) -> f64 {
        let d = self.d;
        2.0 * self.u.cross(&self.v).norm() * d
            + PI * d * d * (self.u.norm() + self.v.norm())
            + 4.0 / 3.0 * PI * d.powi(3)
    }

    fn column(&self, x: f64, y: f64) -> Interval {
        let d = self.d;
        let mut out = Interval::EMPTY;
        if let Some(inv) = &self.inv {
            let r0 = Vec3::new(x, y, 0.0) - self.base;
            let a = inv * r0;
            let b = inv.column(2).into_owned();
            out = linear_band(a.x, b.x, 0.0, 1.0)
                .meet(linear_band(a.y, b.y, 0.0, 1.0))
                .meet(linear_band(a.z, b.z, -d, d));
            if out.is_empty() {
                out = Interval::EMPTY;
            }
        }
        let vs = self.vertices();
        for k in 0..4 {
            let p = vs[k];
            let w = vs[(k + 1) % 4] - p;
            let cyl = cylinder_column(&p, &w, d, x, y);
            if !cyl.is_empty() {
                out = out.hull(cyl);
            }
            let ball = ball_column(&p, d, x, y);
            if !ball.is_empty() {
                out = out.hull(ball);
            }
        }
        out
    }

    fn xy_box(&self) -> (f64, f64, f64, f64) {
        let vs = self.vertices();
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for v in &vs {
            b = (b.0.min(v.x), b.1.max(v.x), b.2.min(v.y), b.3.max(v.y));
        }
        (b.0 - self.d, b.1 + self.d, b.2 - self.d, b.3 + self.d)
    }
}

/// Per-subset integrals; index is the bitmask over the four bodies.
#[derive(Clone, Debug, Serialize)]
pub struct BentCoreDetail {
    pub singletons: [f64; 4],
    /// `subsets[mask]` for `mask` in `1..16`; entry 0 unused.
    pub subsets: [f64; 16],
    /// Column-integrated union, an independent check on inclusion–exclusion.
    pub direct_union: f64,
    pub grid: usize,
    pub converged: bool,
    pub result: ExcludedVolumeResult,
}

fn bodies(shape: &MoleculeShape, p_bar: &Rotation) -> Result<[Parallelogram; 4]> {
    if shape.kind != ShapeKind::BentCore {
        return Err(Error::UnsupportedKind(shape.kind.name()));
    }
    shape.validate()?;
    let (apex, t1, t2) = bent_core_points(shape)?;
    let arms = [t1 - apex, t2 - apex];
    let base = apex - p_bar.apply(&apex);
    let d = shape.diameter;
    let mk = |i: usize, j: usize| Parallelogram::new(base, arms[i], -p_bar.apply(&arms[j]), d);
    Ok([mk(0, 0), mk(0, 1), mk(1, 0), mk(1, 1)])
}

fn integrate(bs: &[Parallelogram; 4], n: usize) -> ([f64; 16], f64) {
    let mut bx = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for b in bs {
        let q = b.xy_box();
        bx = (bx.0.min(q.0), bx.1.max(q.1), bx.2.min(q.2), bx.3.max(q.3));
    }
    let (hx, hy) = ((bx.1 - bx.0) / n as f64, (bx.3 - bx.2) / n as f64);
    let rows: Vec<([f64; 16], f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = bx.0 + (i as f64 + 0.5) * hx;
            let mut acc = [0.0; 16];
            let mut union = 0.0;
            for j in 0..n {
                let y = bx.2 + (j as f64 + 0.5) * hy;
                let cols = [bs[0].column(x, y), bs[1].column(x, y), bs[2].column(x, y), bs[3].column(x, y)];
                if cols.iter().all(Interval::is_empty) {
                    continue;
                }
                for (mask, slot) in acc.iter_mut().enumerate().skip(1) {
                    let mut iv = Interval(f64::NEG_INFINITY, f64::INFINITY);
                    for (k, c) in cols.iter().enumerate() {
                        if mask & (1 << k) != 0 {
                            iv = iv.meet(*c);
                        }
                    }
                    *slot += iv.len();
                }
                union += union_length(&cols);
            }
            (acc, union)
        })
        .collect();
    let mut acc = [0.0; 16];
    let mut union = 0.0;
    for (r, u) in rows {
        for k in 0..16 {
            acc[k] += r[k];
        }
        union += u;
    }
    let da = hx * hy;
    (acc.map(|v| v * da), union * da)
}

fn union_length(cols: &[Interval; 4]) -> f64 {
    let mut v: Vec<Interval> = cols.iter().copied().filter(|c| !c.is_empty()).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<Interval> = None;
    for c in v {
        match cur {
            Some(k) if c.0 <= k.1 => cur = Some(Interval(k.0, k.1.max(c.1))),
            Some(k) => {
                total += k.len();
                cur = Some(c);
            }
            None => cur = Some(c),
        }
    }
    total + cur.map_or(0.0, |k| k.len())
}

/// Inclusion–exclusion with analytic singletons and integrated overlaps.
fn assemble(single: &[f64; 4], subsets: &[f64; 16]) -> f64 {
    let mut v: f64 = single.iter().sum();
    for (mask, s) in subsets.iter().enumerate() {
        let k = (mask as u32).count_ones();
        if k >= 2 {
            v += if k.is_multiple_of(2) { -s } else { *s };
        }
    }
    v
}

pub fn bentcore_excluded_volume_detail(shape: &MoleculeShape, p_bar: &Rotation) -> Result<BentCoreDetail> {
    let bs = bodies(shape, p_bar)?;
    let singletons = [bs[0].volume(), bs[1].volume(), bs[2].volume(), bs[3].volume()];
    let mut n = START_GRID;
    let (mut prev_sub, mut prev_union) = integrate(&bs, n);
    let mut prev = assemble(&singletons, &prev_sub);
    let factor = 2f64.powf(ORDER) - 1.0;
    while n < MAX_GRID {
        n *= 2;
        let (sub, union) = integrate(&bs, n);
        let cur = assemble(&singletons, &sub);
        let change = (cur - prev).abs();
        if change <= REL_TOL * cur.abs() {
            let mut ext = [0.0; 16];
            for k in 0..16 {
                ext[k] = sub[k] + (sub[k] - prev_sub[k]) / factor;
            }
            let value = assemble(&singletons, &ext);
            return Ok(BentCoreDetail {
                singletons,
                subsets: ext,
                direct_union: union + (union - prev_union) / factor,
                grid: n,
                converged: true,
                result: ExcludedVolumeResult {
                    value,
                    stderr: 0.0,
                    method: Method::Slab2D,
                    case_tag: None,
                },
            });
        }
        prev = cur;
        prev_sub = sub;
        prev_union = union;
    }
    // Refinement did not settle: report the MC estimate instead.
    let seed = p_bar.matrix().iter().fold(0u64, |h, v| h.rotate_left(7) ^ v.to_bits());
    let mc = mc_excluded_volume(shape, p_bar, shape.diameter, FALLBACK_SAMPLES, seed)?;
    Ok(BentCoreDetail {
        singletons,
        subsets: prev_sub,
        direct_union: prev_union,
        grid: n,
        converged: false,
        result: mc,
    })
}

pub fn bentcore_excluded_volume(shape: &MoleculeShape, p_bar: &Rotation) -> Result<ExcludedVolumeResult> {
    Ok(bentcore_excluded_volume_detail(shape, p_bar)?.result)
}
