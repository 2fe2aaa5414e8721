//! Polynomial bases in the entries of the relative rotation.

use serde::{Deserialize, Serialize};

use crate::so3::Rotation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    #[serde(rename = "Dinf_h")]
    DInfH,
    #[serde(rename = "Cinf")]
    CInf,
    #[serde(rename = "C2v_quadratic")]
    C2vQuadratic,
    #[serde(rename = "C2v_cubic")]
    C2vCubic,
}

impl SymmetryClass {
    pub fn name(&self) -> &'static str {
        match self {
            SymmetryClass::DInfH => "Dinf_h",
            SymmetryClass::CInf => "Cinf",
            SymmetryClass::C2vQuadratic => "C2v_quadratic",
            SymmetryClass::C2vCubic => "C2v_cubic",
        }
    }

    /// Kernel depends on `p11` alone, so the solver can work on S².
    pub fn is_axial(&self) -> bool {
        matches!(self, SymmetryClass::DInfH | SymmetryClass::CInf)
    }
}

/// Product of `p_ij^e` factors, indices 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial(pub Vec<(u8, u8, u8)>);

impl Monomial {
    pub fn eval(&self, p: &Rotation) -> f64 {
        self.0
            .iter()
            .map(|&(i, j, e)| p.p(i as usize - 1, j as usize - 1).powi(e as i32))
            .product()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|f| f.2 as u32).sum()
    }

    /// Flattened `(i, j)` factor list, one entry per power.
    pub fn factors(&self) -> Vec<(usize, usize)> {
        self.0
            .iter()
            .flat_map(|&(i, j, e)| std::iter::repeat_n((i as usize, j as usize), e as usize))
            .collect()
    }

    fn label(&self) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|&(i, j, e)| if e == 1 { format!("p{i}{j}") } else { format!("p{i}{j}^{e}") })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// A basis function: sum of unit-coefficient monomials.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term(pub Vec<Monomial>);

impl Term {
    pub fn eval(&self, p: &Rotation) -> f64 {
        self.0.iter().map(|m| m.eval(p)).sum()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn label(&self) -> String {
        self.0.iter().map(Monomial::label).collect::<Vec<_>>().join("+")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialBasis {
    pub symmetry_class: SymmetryClass,
    pub terms: Vec<Term>,
}

fn mono(f: &[(u8, u8, u8)]) -> Monomial {
    Monomial(f.to_vec())
}

fn single(f: &[(u8, u8, u8)]) -> Term {
    Term(vec![mono(f)])
}

pub fn build_basis(class: SymmetryClass) -> MonomialBasis {
    let one = Term(vec![Monomial(vec![])]);
    let p11 = single(&[(1, 1, 1)]);
    let p11sq = single(&[(1, 1, 2)]);
    let quad = || {
        vec![
            one.clone(),
            p11.clone(),
            p11sq.clone(),
            single(&[(2, 2, 2)]),
            Term(vec![mono(&[(1, 2, 2)]), mono(&[(2, 1, 2)])]),
        ]
    };
    let terms = match class {
        SymmetryClass::DInfH => vec![one.clone(), p11sq.clone()],
        SymmetryClass::CInf => vec![one.clone(), p11.clone(), p11sq.clone()],
        SymmetryClass::C2vQuadratic => quad(),
        SymmetryClass::C2vCubic => {
            let mut t = quad();
            t.push(single(&[(1, 1, 3)]));
            t.push(single(&[(1, 1, 1), (2, 2, 2)]));
            t.push(Term(vec![mono(&[(1, 1, 1), (1, 2, 2)]), mono(&[(1, 1, 1), (2, 1, 2)])]));
            t.push(single(&[(1, 2, 1), (2, 1, 1), (2, 2, 1)]));
            t
        }
    };
    MonomialBasis { symmetry_class: class, terms }
}

impl MonomialBasis {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn eval_all(&self, p: &Rotation) -> Vec<f64> {
        self.terms.iter().map(|t| t.eval(p)).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(Term::label).collect()
    }
}
