//! Rotations, Euler angles and quadrature on SO(3) and S².
//!
//! A rotation `P` carries the body axes of a molecule as its columns,
//! `(m1, m2, m3) = (e1, e2, e3) P`. Integrals are taken against the
//! normalized Haar measure `sin α dα dβ dγ / 8π²`.

use std::f64::consts::PI;
use std::ops::Mul;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Mat3, Result, Vec3};

const ORTHO_TOL: f64 = 1e-12;
const GIMBAL_TOL: f64 = 1e-12;
const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    m: Mat3,
}

impl Rotation {
    pub fn identity() -> Self {
        Self { m: Mat3::identity() }
    }

    /// Validates orthonormality and orientation to 1e-12 per entry.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        let err = (m.transpose() * m - Mat3::identity()).abs().max();
        if err > ORTHO_TOL || (m.determinant() - 1.0).abs() > ORTHO_TOL {
            return Err(Error::Domain(format!(
                "matrix is not a proper rotation (orthogonality error {err:.3e})"
            )));
        }
        Ok(Self { m })
    }

    /// Rotation by `angle` about the unit vector `axis`.
    pub fn about_axis(axis: &Vec3, angle: f64) -> Self {
        let u = nalgebra::Unit::new_normalize(*axis);
        Self { m: *nalgebra::Rotation3::from_axis_angle(&u, angle).matrix() }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    /// Body axis `m_{i+1}` (column `i`, zero based).
    pub fn axis(&self, i: usize) -> Vec3 {
        self.m.column(i).into_owned()
    }

    /// Entry `p_{i+1, j+1}` (zero based indices).
    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn inverse(&self) -> Self {
        Self { m: self.m.transpose() }
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.m * v
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation { m: self.m * rhs.m }
    }
}

impl Mul<&Rotation> for &Rotation {
    type Output = Rotation;
    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation { m: self.m * rhs.m }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    /// Requires α ∈ [0, π] and β, γ ∈ [0, 2π).
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let ok = (0.0..=PI).contains(&alpha)
            && (0.0..2.0 * PI).contains(&beta)
            && (0.0..2.0 * PI).contains(&gamma);
        if !ok {
            return Err(Error::Domain(format!(
                "Euler angles out of range: ({alpha}, {beta}, {gamma})"
            )));
        }
        Ok(Self { alpha, beta, gamma })
    }
}

pub fn euler_to_matrix(e: &EulerAngles) -> Rotation {
    let (sa, ca) = e.alpha.sin_cos();
    let (sb, cb) = e.beta.sin_cos();
    let (sg, cg) = e.gamma.sin_cos();
    #[rustfmt::skip]
    let m = Mat3::new(
        ca,      -sa * cg,                 sa * sg,
        sa * cb,  ca * cb * cg - sb * sg, -ca * cb * sg - sb * cg,
        sa * sb,  ca * sb * cg + cb * sg, -ca * sb * sg + cb * cg,
    );
    Rotation { m }
}

fn wrap_2pi(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y >= 2.0 * PI {
        0.0
    } else {
        y
    }
}

/// Inverse of [`euler_to_matrix`]. On the gimbal set `sin α = 0` the
/// representative with `γ = 0` is returned.
pub fn matrix_to_euler(r: &Rotation) -> EulerAngles {
    let m = &r.m;
    let sa = m[(1, 0)].hypot(m[(2, 0)]);
    let alpha = sa.atan2(m[(0, 0)]);
    if sa > GIMBAL_TOL {
        let beta = wrap_2pi(m[(2, 0)].atan2(m[(1, 0)]));
        let gamma = wrap_2pi(m[(0, 2)].atan2(-m[(0, 1)]));
        EulerAngles { alpha, beta, gamma }
    } else if m[(0, 0)] > 0.0 {
        // P = rotation about e1 by β + γ
        EulerAngles { alpha: 0.0, beta: wrap_2pi(m[(2, 1)].atan2(m[(1, 1)])), gamma: 0.0 }
    } else {
        // cos α = -1: rows 2,3 of columns 2,3 encode β - γ
        EulerAngles { alpha: PI, beta: wrap_2pi((-m[(2, 1)]).atan2(-m[(1, 1)])), gamma: 0.0 }
    }
}

/// `P̄ = Pᵀ P′`, entries `p_ij = m_i · m′_j`.
pub fn relative_rotation(p: &Rotation, p_prime: &Rotation) -> Rotation {
    Rotation { m: p.m.transpose() * p_prime.m }
}

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[derive(Clone, Debug)]
pub struct SO3Quadrature {
    pub nodes: Vec<Rotation>,
    pub weights: Vec<f64>,
    pub resolution: (usize, usize, usize),
}

/// Tensor rule: Gauss-Legendre in cos α, periodic trapezoid in β and γ.
pub fn haar_quadrature(n_alpha: usize, n_beta: usize, n_gamma: usize) -> Result<SO3Quadrature> {
    if n_alpha < 2 || n_beta < 2 || n_gamma < 2 {
        return Err(Error::Domain("quadrature resolution must be at least 2 per angle".into()));
    }
    let (x, w) = gauss_legendre(n_alpha);
    let cap = n_alpha * n_beta * n_gamma;
    let mut nodes = Vec::with_capacity(cap);
    let mut weights = Vec::with_capacity(cap);
    let scale = 0.5 / (n_beta * n_gamma) as f64;
    for (xi, wi) in x.iter().zip(&w) {
        let alpha = xi.clamp(-1.0, 1.0).acos();
        for jb in 0..n_beta {
            let beta = 2.0 * PI * jb as f64 / n_beta as f64;
            for jg in 0..n_gamma {
                let gamma = 2.0 * PI * jg as f64 / n_gamma as f64;
                nodes.push(euler_to_matrix(&EulerAngles { alpha, beta, gamma }));
                weights.push(wi * scale);
            }
        }
    }
    Ok(SO3Quadrature { nodes, weights, resolution: (n_alpha, n_beta, n_gamma) })
}

impl SO3Quadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&Rotation) -> f64 + Sync,
    {
        integrate(f, self)
    }
}

/// `Σ w_k f(P_k)`, summed in fixed chunks so the result does not depend
/// on the thread count.
pub fn integrate<F>(f: F, q: &SO3Quadrature) -> f64
where
    F: Fn(&Rotation) -> f64 + Sync,
{
    let partial: Vec<f64> = q
        .nodes
        .par_chunks(CHUNK)
        .zip(q.weights.par_chunks(CHUNK))
        .map(|(ns, ws)| ns.iter().zip(ws).map(|(n, w)| w * f(n)).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub fn try_integrate<F>(f: F, q: &SO3Quadrature) -> Result<f64>
where
    F: Fn(&Rotation) -> Result<f64> + Sync,
{
    let partial: Result<Vec<f64>> = q
        .nodes
        .par_chunks(CHUNK)
        .zip(q.weights.par_chunks(CHUNK))
        .map(|(ns, ws)| {
            let mut s = 0.0;
            for (n, w) in ns.iter().zip(ws) {
                s += w * f(n)?;
            }
            Ok(s)
        })
        .collect();
    Ok(partial?.iter().sum())
}

#[derive(Clone, Debug)]
pub struct S2Quadrature {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
}

/// Nodes `n = (cos α, sin α cos β, sin α sin β)`, the first column of the
/// Euler matrix, so it is the γ-marginal of [`haar_quadrature`].
pub fn s2_quadrature(n_alpha: usize, n_beta: usize) -> Result<S2Quadrature> {
    if n_alpha < 2 || n_beta < 2 {
        return Err(Error::Domain("quadrature resolution must be at least 2 per angle".into()));
    }
    let (x, w) = gauss_legendre(n_alpha);
    let mut nodes = Vec::with_capacity(n_alpha * n_beta);
    let mut weights = Vec::with_capacity(n_alpha * n_beta);
    for (xi, wi) in x.iter().zip(&w) {
        let sa = (1.0 - xi * xi).max(0.0).sqrt();
        for jb in 0..n_beta {
            let beta = 2.0 * PI * jb as f64 / n_beta as f64;
            nodes.push(Vec3::new(*xi, sa * beta.cos(), sa * beta.sin()));
            weights.push(wi * 0.5 / n_beta as f64);
        }
    }
    Ok(S2Quadrature { nodes, weights })
}

impl S2Quadrature {
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&Vec3) -> f64,
    {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(n)).sum()
    }
}

/// Haar-distributed rotation: cos α uniform on [-1, 1], β and γ uniform.
pub fn sample_haar<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let ca: f64 = rng.gen_range(-1.0..=1.0);
    let beta = rng.gen_range(0.0..2.0 * PI);
    let gamma = rng.gen_range(0.0..2.0 * PI);
    euler_to_matrix(&EulerAngles { alpha: ca.acos(), beta, gamma })
}
