//! Orientational moments `<m1>, <m1m1>, <m2m2>` and the cubic extras.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::{Error, Mat3, Result, Vec3};

pub type Tensor3 = [[[f64; 3]; 3]; 3];

const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = -1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSet {
    pub m1: [f64; 3],
    #[serde(rename = "M11")]
    pub m11: [[f64; 3]; 3],
    #[serde(rename = "M22")]
    pub m22: [[f64; 3]; 3],
    /// `<m1 m1 m1>`, cubic closure only.
    #[serde(rename = "T111", default, skip_serializing_if = "Option::is_none")]
    pub t111: Option<Tensor3>,
    /// `<m1 m2 m2>`, cubic closure only.
    #[serde(rename = "T122", default, skip_serializing_if = "Option::is_none")]
    pub t122: Option<Tensor3>,
}

fn to_mat(a: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| a[i][j])
}

fn from_mat(m: &Mat3) -> [[f64; 3]; 3] {
    let mut a = [[0.0; 3]; 3];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    a
}

/// Eigenvalues in descending order with matching eigenvectors.
pub fn sorted_eigen(m: &Mat3) -> ([f64; 3], [Vec3; 3]) {
    let e = SymmetricEigen::new(*m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    (idx.map(|i| e.eigenvalues[i]), idx.map(|i| e.eigenvectors.column(i).into_owned()))
}

impl MomentSet {
    /// Haar moments: `m1 = 0`, `M11 = M22 = I/3`, odd tensors zero.
    pub fn isotropic(cubic: bool) -> Self {
        let third = from_mat(&(Mat3::identity() / 3.0));
        let zero = cubic.then_some([[[0.0; 3]; 3]; 3]);
        Self { m1: [0.0; 3], m11: third, m22: third, t111: zero, t122: zero }
    }

    pub fn is_cubic(&self) -> bool {
        self.t111.is_some() && self.t122.is_some()
    }

    pub fn m1_vec(&self) -> Vec3 {
        Vec3::from(self.m1)
    }

    pub fn m11_mat(&self) -> Mat3 {
        to_mat(&self.m11)
    }

    pub fn m22_mat(&self) -> Mat3 {
        to_mat(&self.m22)
    }

    pub fn from_parts(m1: Vec3, m11: Mat3, m22: Mat3, third: Option<(Tensor3, Tensor3)>) -> Self {
        Self {
            m1: m1.into(),
            m11: from_mat(&m11),
            m22: from_mat(&m22),
            t111: third.map(|t| t.0),
            t122: third.map(|t| t.1),
        }
    }

    /// All components in a fixed order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.m1.to_vec();
        v.extend(self.m11.iter().flatten());
        v.extend(self.m22.iter().flatten());
        for t in [&self.t111, &self.t122].into_iter().flatten() {
            v.extend(t.iter().flatten().flatten());
        }
        v
    }

    /// Max-abs componentwise difference; infinite when closures differ.
    pub fn max_diff(&self, other: &MomentSet) -> f64 {
        let (a, b) = (self.flatten(), other.flatten());
        if a.len() != b.len() {
            return f64::INFINITY;
        }
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, |m, d| if d.is_nan() { f64::NAN } else { m.max(d) })
    }

    /// `(1 - λ) self + λ other`.
    pub fn mix(&self, other: &MomentSet, lambda: f64) -> MomentSet {
        let l = |x: f64, y: f64| (1.0 - lambda) * x + lambda * y;
        let mix3 = |a: &Tensor3, b: &Tensor3| {
            let mut t = *a;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        t[i][j][k] = l(a[i][j][k], b[i][j][k]);
                    }
                }
            }
            t
        };
        let m2 = |a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]| from_mat(&to_mat(a).zip_map(&to_mat(b), l));
        MomentSet {
            m1: [0, 1, 2].map(|i| l(self.m1[i], other.m1[i])),
            m11: m2(&self.m11, &other.m11),
            m22: m2(&self.m22, &other.m22),
            t111: self.t111.zip(other.t111).map(|(a, b)| mix3(&a, &b)),
            t122: self.t122.zip(other.t122).map(|(a, b)| mix3(&a, &b)),
        }
    }

    /// `m1 → R m1`, `M → R M Rᵀ`, third moments likewise.
    pub fn rotated(&self, r: &Mat3) -> MomentSet {
        let rot3 = |t: &Tensor3| {
            let mut o = [[[0.0; 3]; 3]; 3];
            for (a, oa) in o.iter_mut().enumerate() {
                for (b, ob) in oa.iter_mut().enumerate() {
                    for (c, x) in ob.iter_mut().enumerate() {
                        let mut s = 0.0;
                        for i in 0..3 {
                            for j in 0..3 {
                                for k in 0..3 {
                                    s += r[(a, i)] * r[(b, j)] * r[(c, k)] * t[i][j][k];
                                }
                            }
                        }
                        *x = s;
                    }
                }
            }
            o
        };
        MomentSet {
            m1: (r * self.m1_vec()).into(),
            m11: from_mat(&(r * self.m11_mat() * r.transpose())),
            m22: from_mat(&(r * self.m22_mat() * r.transpose())),
            t111: self.t111.as_ref().map(rot3),
            t122: self.t122.as_ref().map(rot3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.flatten().iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("moments must be finite".into()));
        }
        let (m11, m22) = (self.m11_mat(), self.m22_mat());
        for (name, m) in [("M11", &m11), ("M22", &m22)] {
            if (m.trace() - 1.0).abs() > TRACE_TOL {
                return Err(Error::Domain(format!("trace({name}) = {} != 1", m.trace())));
            }
            if (m - m.transpose()).abs().max() > TRACE_TOL {
                return Err(Error::Domain(format!("{name} is not symmetric")));
            }
            if sorted_eigen(m).0[2] < PSD_TOL {
                return Err(Error::Domain(format!("{name} is not positive semidefinite")));
            }
        }
        let m1 = self.m1_vec();
        if m1.norm() > 1.0 + TRACE_TOL {
            return Err(Error::Domain(format!("|m1| = {} exceeds 1", m1.norm())));
        }
        if sorted_eigen(&(m11 - m1 * m1.transpose())).0[2] < PSD_TOL {
            return Err(Error::Domain("M11 - m1 m1^T is not positive semidefinite".into()));
        }
        Ok(())
    }

    /// Full tensor `<m_{s1} ⊗ ... ⊗ m_{sn}>` for axis indices `s` (0 based),
    /// flattened row-major.
    pub fn tensor(&self, s: &[usize]) -> Result<Vec<f64>> {
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by_key(|&k| s[k]);
        let sorted: Vec<usize> = order.iter().map(|&k| s[k]).collect();
        let missing = || Error::Incompatible(format!("no moment <{}> in the closure", seq_label(s)));
        let canon: Vec<f64> = match sorted.as_slice() {
            [] => vec![1.0],
            [0] => self.m1.to_vec(),
            [0, 0] => self.m11.iter().flatten().copied().collect(),
            [1, 1] => self.m22.iter().flatten().copied().collect(),
            [0, 0, 0] => self.t111.ok_or_else(missing)?.iter().flatten().flatten().copied().collect(),
            [0, 1, 1] => self.t122.ok_or_else(missing)?.iter().flatten().flatten().copied().collect(),
            _ => return Err(missing()),
        };
        let n = s.len();
        let size = 3usize.pow(n as u32);
        let mut out = vec![0.0; size];
        for (flat, slot) in out.iter_mut().enumerate() {
            // digits of `flat` are the indices a_1..a_n; canon is indexed by a_{order(k)}
            let digits: Vec<usize> = (0..n).map(|k| flat / 3usize.pow((n - 1 - k) as u32) % 3).collect();
            let cf = order.iter().fold(0, |acc, &k| acc * 3 + digits[k]);
            *slot = canon[cf];
        }
        Ok(out)
    }
}

fn seq_label(s: &[usize]) -> String {
    s.iter().map(|i| format!("m{}", i + 1)).collect::<Vec<_>>().join("")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderParameters {
    pub eig_m11: [f64; 3],
    pub eig_m22: [f64; 3],
    pub m1_norm: f64,
    /// `|cos|` between `<m1>` and the top eigenvector of `M11`; 0 when `<m1> = 0`.
    pub m1_alignment: f64,
    /// Smallest gap between eigenvalues of `M11`; near zero for uniaxial states.
    pub uniaxial_gap: f64,
}

impl OrderParameters {
    /// `(λ1, λ2)` of `M11`, `(λ1, λ2)` of `M22` and `|m1|`; the third
    /// eigenvalues follow from the unit traces.
    pub fn independent(&self) -> [f64; 5] {
        [self.eig_m11[0], self.eig_m11[1], self.eig_m22[0], self.eig_m22[1], self.m1_norm]
    }

    pub fn is_biaxial(&self, tol: f64) -> bool {
        self.uniaxial_gap > tol
    }
}

pub fn order_parameters(m: &MomentSet) -> OrderParameters {
    let (e11, v11) = sorted_eigen(&m.m11_mat());
    let (e22, _) = sorted_eigen(&m.m22_mat());
    let m1 = m.m1_vec();
    let n = m1.norm();
    let align = if n > 1e-300 { (m1.dot(&v11[0]) / n).abs() } else { 0.0 };
    OrderParameters {
        eig_m11: e11,
        eig_m22: e22,
        m1_norm: n,
        m1_alignment: align,
        uniaxial_gap: (e11[0] - e11[1]).abs().min((e11[1] - e11[2]).abs()),
    }
}

/// Rotation-invariant fingerprint used to tell branches apart.
pub fn signature(m: &MomentSet) -> Vec<f64> {
    let (a, b, v) = (m.m11_mat(), m.m22_mat(), m.m1_vec());
    let (e11, _) = sorted_eigen(&a);
    let (e22, _) = sorted_eigen(&b);
    let frob = |t: &Option<Tensor3>| t.map_or(0.0, |t| t.iter().flatten().flatten().map(|x| x * x).sum::<f64>().sqrt());
    let mut s = e11.to_vec();
    s.extend(e22);
    s.extend([v.norm(), (a * b).trace(), v.dot(&(a * v)), v.dot(&(b * v)), frob(&m.t111), frob(&m.t122)]);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MomentSet {
        let m11 = Mat3::from_diagonal(&Vec3::new(0.6, 0.3, 0.1));
        let m22 = Mat3::from_diagonal(&Vec3::new(0.2, 0.5, 0.3));
        let mut t111 = [[[0.0; 3]; 3]; 3];
        let mut t122 = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t111[i][j][k] = (i * 9 + j + k) as f64 * 0.01;
                    t122[i][j][k] = (i * 3 + j * k) as f64 * 0.02 + (j + k) as f64 * 0.001;
                }
            }
        }
        MomentSet::from_parts(Vec3::new(0.1, -0.2, 0.3), m11, m22, Some((t111, t122)))
    }

    #[test]
    fn isotropic_is_valid() {
        let m = MomentSet::isotropic(true);
        m.validate().unwrap();
        let o = order_parameters(&m);
        for e in o.eig_m11.iter().chain(&o.eig_m22) {
            assert!((e - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(o.m1_norm, 0.0);
    }

    #[test]
    fn invalid_moments_rejected() {
        let mut m = MomentSet::isotropic(false);
        m.m11[0][0] += 0.1;
        assert!(m.validate().is_err());
        let mut m = MomentSet::isotropic(false);
        m.m1 = [0.9, 0.0, 0.0];
        // covariance M11 - m1 m1^T fails
        assert!(m.validate().is_err());
    }

    #[test]
    fn tensor_permutations() {
        let m = sample();
        let t = m.tensor(&[1, 0, 1]).unwrap();
        let c = m.t122.unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for d in 0..3 {
                    // <m2_a m1_b m2_d> = T122[b][a][d]
                    assert_eq!(t[a * 9 + b * 3 + d], c[b][a][d]);
                }
            }
        }
        assert_eq!(m.tensor(&[]).unwrap(), vec![1.0]);
        assert!(m.tensor(&[0, 1]).is_err());
        assert!(MomentSet::isotropic(false).tensor(&[0, 0, 0]).is_err());
    }

    #[test]
    fn synthetic_biaxial() {
        let o = order_parameters(&sample());
        assert!(o.is_biaxial(1e-3));
        assert_eq!(o.eig_m11, [0.6, 0.3, 0.1]);
        assert_eq!(o.independent()[4], Vec3::new(0.1, -0.2, 0.3).norm());
    }

    #[test]
    fn signature_is_rotation_invariant() {
        let m = sample();
        let r = crate::so3::Rotation::about_axis(&Vec3::new(1.0, 2.0, -0.5), 0.9);
        let a = signature(&m);
        let b = signature(&m.rotated(r.matrix()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn json_roundtrip() {
        let m = sample();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"M11\""));
        assert_eq!(serde_json::from_str::<MomentSet>(&s).unwrap(), m);
        let q = serde_json::to_string(&MomentSet::isotropic(false)).unwrap();
        assert!(!q.contains("T111"));
    }
}
