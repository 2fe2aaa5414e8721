//! Acceptance checks for `rigid-dft`, each against an independent oracle.

use std::time::Instant;

use serde::Serialize;

mod criteria;
pub mod oracles;

pub use criteria::*;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub summary: String,
    pub details: Vec<String>,
    /// Wall time; kept out of serialized output so it stays reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.summary
        )
    }
}

pub const ALL: [u32; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

type Check = fn() -> Outcome;

/// What a check returns before timing is attached.
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub details: Vec<String>,
}

const REGISTRY: [(u32, &str, &str, f64, Check); 10] = [
    (1, "onsager", "Onsager projection", 10.0, criteria::onsager_projection),
    (2, "table1", "tabulated integrals", 300.0, criteria::table_entries),
    (3, "coefficients", "analytic vs projected coefficients", f64::INFINITY, criteria::spherotriangle_coefficients),
    (4, "rod", "rod limit of the Steiner volume", f64::INFINITY, criteria::rod_limit),
    (5, "mc", "Monte Carlo equivalence", 600.0, criteria::monte_carlo),
    (6, "pntref", "point-reflection identity", f64::INFINITY, criteria::point_reflection),
    (7, "maier-saupe", "Maier-Saupe onset and uniaxiality", f64::INFINITY, criteria::maier_saupe),
    (8, "theorems", "polar and commuting moments", f64::INFINITY, criteria::moment_theorems),
    (9, "haar", "Haar measure identities", f64::INFINITY, criteria::haar_identities),
    (10, "soft", "soft kernel convergence", 300.0, criteria::soft_kernel_refinement),
];

fn registry(id: u32) -> Option<(&'static str, f64, Check)> {
    REGISTRY.iter().find(|r| r.0 == id).map(|r| (r.2, r.3, r.4))
}

/// Criterion id from its number or short name (`table1`, `mc`, ...).
pub fn lookup(name: &str) -> Option<u32> {
    let name = name.trim();
    REGISTRY
        .iter()
        .find(|r| r.1.eq_ignore_ascii_case(name) || name.parse() == Ok(r.0))
        .map(|r| r.0)
}

pub fn short_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|r| r.1).collect()
}

/// Runs one criterion; the runtime budget is part of the verdict.
pub fn run(id: u32) -> Option<CriterionReport> {
    let (title, budget, check) = registry(id)?;
    let t = Instant::now();
    let mut out = check();
    let seconds = t.elapsed().as_secs_f64();
    if seconds > budget {
        out.passed = false;
        out.details.push(format!("runtime {seconds:.1} s exceeds budget {budget} s"));
    }
    Some(CriterionReport { id, title, passed: out.passed, summary: out.summary, details: out.details, seconds })
}

pub fn run_all(ids: &[u32]) -> Vec<CriterionReport> {
    ids.iter().filter_map(|&i| run(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_number_and_name() {
        assert_eq!(lookup("2"), Some(2));
        assert_eq!(lookup("table1"), Some(2));
        assert_eq!(lookup("MC"), Some(5));
        assert_eq!(lookup("11"), None);
        assert_eq!(lookup("bogus"), None);
        assert_eq!(short_names().len(), ALL.len());
    }
}
