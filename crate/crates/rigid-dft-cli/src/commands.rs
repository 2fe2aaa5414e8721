use rayon::prelude::*;
use serde::Serialize;

use rigid_dft::exvol::{excluded_volume, mc_excluded_volume, soft_kernel, CaseTag, ExcludedVolumeResult, GridSpec};
use rigid_dft::projection::{
    analytic_spherotriangle_coeffs, build_basis, project_kernel_fallible, KernelParams, KernelPolynomial,
    ProjectionReport, Provenance, SpheroTriangleCoeffs, SymmetryClass,
};
use rigid_dft::scf::{branch_sweep, same_branch, scf_solve, ScfConfig, SolutionBranch};
use rigid_dft::shapes::{MoleculeShape, PairPotential, ShapeKind};
use rigid_dft::so3::{haar_quadrature, Rotation, SO3Quadrature};
use rigid_dft::Vec3;

use crate::config::{QuadSpec, RunConfig, SweepParam};
use crate::output::{emit, num, Table};
use crate::CliError;

const EXVOL_GRID_N: usize = 96;
const PROJECT_QUAD: QuadSpec = QuadSpec { n_alpha: 32, n_beta: 32, n_gamma: 32 };
const SOLVE_QUAD: QuadSpec = QuadSpec { n_alpha: 24, n_beta: 32, n_gamma: 24 };
/// Moment distance below which two solutions are the same branch.
const BRANCH_TOL: f64 = 1e-4;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn quadrature(q: QuadSpec) -> Result<SO3Quadrature, CliError> {
    haar_quadrature(q.n_alpha, q.n_beta, q.n_gamma).map_err(|e| schema(format!("quadrature: {e}")))
}

fn with_theta(shape: &MoleculeShape, theta: Option<f64>) -> Result<MoleculeShape, CliError> {
    let Some(t) = theta else { return Ok(shape.clone()) };
    if shape.kind == ShapeKind::Rod {
        return Err(schema("a rod has no opening angle to sweep"));
    }
    MoleculeShape { theta: Some(t), ..shape.clone() }.validated().map_err(|e| schema(e.to_string()))
}

/// Hard-core excluded volume or, with a bead potential, the Mayer integral.
fn kernel_value(
    shape: &MoleculeShape,
    pot: &Option<(PairPotential, f64)>,
    grid_n: usize,
    p: &Rotation,
) -> rigid_dft::Result<f64> {
    match pot {
        None => excluded_volume(shape, p).map(|r| r.value),
        Some((pp, t)) => {
            let half_width = GridSpec::support(shape, pp)?;
            soft_kernel(shape, pp, *t, p, &GridSpec { half_width, n: grid_n })
        }
    }
}

#[derive(Serialize)]
struct ExvolRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    value: f64,
    stderr: f64,
    method: String,
    case_tag: Option<CaseTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<ExcludedVolumeResult>,
}

pub fn exvol(cfg: &RunConfig) -> Result<(), CliError> {
    let shape = cfg.shape()?.clone();
    let pot = cfg.potential()?;
    let grid_n = cfg.grid_n.unwrap_or(EXVOL_GRID_N);
    let base = cfg.orientation()?;
    if pot.is_some() && cfg.mc_samples.is_some() {
        return Err(schema("mc_samples applies to hard-core shapes only"));
    }
    let points: Vec<(Option<f64>, Rotation)> = match &cfg.sweep {
        None => vec![(None, base)],
        Some(s) => {
            let (param, grid) = cfg.grid()?;
            if param != SweepParam::Angle {
                return Err(schema("exvol sweeps the angle only"));
            }
            let axis = Vec3::from(s.axis.unwrap_or([0.0, 0.0, 1.0]));
            if !(axis.norm() > 0.0) {
                return Err(schema("sweep.axis must be nonzero"));
            }
            grid.into_iter().map(|a| (Some(a), Rotation::about_axis(&axis, a) * base)).collect()
        }
    };
    let rows: Vec<ExvolRow> = points
        .iter()
        .enumerate()
        .map(|(k, (angle, p))| {
            let (value, stderr, method, case_tag) = match &pot {
                None => {
                    let r = excluded_volume(&shape, p)?;
                    (r.value, r.stderr, format!("{:?}", r.method), r.case_tag)
                }
                Some(_) => (kernel_value(&shape, &pot, grid_n, p)?, 0.0, "SoftGrid".to_string(), None),
            };
            // per-row seeds keep rows independent of each other
            let mc = cfg
                .mc_samples
                .map(|n| mc_excluded_volume(&shape, p, shape.diameter, n, cfg.seed.wrapping_add(k as u64)))
                .transpose()?;
            Ok(ExvolRow { angle: *angle, value, stderr, method, case_tag, mc })
        })
        .collect::<rigid_dft::Result<_>>()
        .map_err(runtime)?;
    let mut t = Table::new(&["angle", "value", "stderr", "method", "case_tag", "mc_value", "mc_stderr"]);
    for r in &rows {
        t.push(vec![
            r.angle.map(num).unwrap_or_default(),
            num(r.value),
            num(r.stderr),
            r.method.clone(),
            r.case_tag.map(|c| format!("{c:?}")).unwrap_or_default(),
            r.mc.map(|m| num(m.value)).unwrap_or_default(),
            r.mc.map(|m| num(m.stderr)).unwrap_or_default(),
        ]);
    }
    emit("exvol", cfg, &rows, Some(&t))
}

#[derive(Serialize)]
struct ProjectRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    kernel: KernelPolynomial,
    report: ProjectionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic: Option<SpheroTriangleCoeffs>,
}

fn kernel_class(cfg: &RunConfig) -> Result<SymmetryClass, CliError> {
    Ok(cfg.kernel.as_ref().ok_or_else(|| schema("missing section: kernel"))?.symmetry_class)
}

fn params(shape: &MoleculeShape, c: f64, pot: &Option<(PairPotential, f64)>) -> KernelParams {
    KernelParams {
        concentration: Some(c),
        length: Some(shape.length),
        diameter: Some(shape.diameter),
        theta: shape.theta,
        temperature: pot.map(|p| p.1),
    }
}

fn project_one(
    cfg: &RunConfig,
    shape: &MoleculeShape,
    c: f64,
    quad: &SO3Quadrature,
) -> Result<(KernelPolynomial, ProjectionReport), CliError> {
    let pot = cfg.potential()?;
    let grid_n = cfg.grid_n.unwrap_or(EXVOL_GRID_N);
    let basis = build_basis(kernel_class(cfg)?);
    let report =
        project_kernel_fallible(|p| Ok(c * kernel_value(shape, &pot, grid_n, p)?), &basis, quad).map_err(runtime)?;
    Ok((report.clone().into_kernel(&basis, params(shape, c, &pot)), report))
}

fn analytic_applies(cfg: &RunConfig, shape: &MoleculeShape) -> Result<bool, CliError> {
    Ok(shape.kind == ShapeKind::SpheroTriangle
        && kernel_class(cfg)? == SymmetryClass::C2vQuadratic
        && cfg.potential()?.is_none())
}

pub fn project(cfg: &RunConfig) -> Result<(), CliError> {
    let shape = cfg.shape()?.clone();
    let c = cfg.concentration()?;
    let quad = quadrature(cfg.quad(PROJECT_QUAD)?)?;
    if cfg.kernel.as_ref().is_some_and(|k| k.coeffs.is_some()) {
        return Err(schema("project computes kernel.coeffs; do not supply them"));
    }
    let thetas: Vec<Option<f64>> = match &cfg.sweep {
        None => vec![None],
        Some(_) => {
            let (param, grid) = cfg.grid()?;
            if param != SweepParam::Theta {
                return Err(schema("project sweeps theta only"));
            }
            grid.into_iter().map(Some).collect()
        }
    };
    let mut rows = Vec::new();
    for th in thetas {
        let s = with_theta(&shape, th)?;
        let (kernel, report) = project_one(cfg, &s, c, &quad)?;
        let analytic = if analytic_applies(cfg, &s)? {
            Some(analytic_spherotriangle_coeffs(s.theta_or_pi(), s.length, s.diameter, c).map_err(runtime)?)
        } else {
            None
        };
        rows.push(ProjectRow { theta: s.theta, kernel, report, analytic });
    }
    let labels = rows[0].report.labels.clone();
    let mut header: Vec<&str> = vec!["theta"];
    header.extend(labels.iter().map(|s| s.as_str()));
    header.extend(["residual_l2", "analytic_c1", "analytic_c2", "analytic_c3", "analytic_c4"]);
    let mut t = Table::new(&header);
    for r in &rows {
        let mut row = vec![r.theta.map(num).unwrap_or_default()];
        row.extend(r.report.coeffs.iter().map(|&x| num(x)));
        row.push(num(r.report.residual_l2));
        match &r.analytic {
            Some(a) => row.extend([a.c1, a.c2, a.c3, a.c4].map(num)),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        t.push(row);
    }
    emit("project", cfg, &rows, Some(&t))
}

/// Kernel for `solve` and `sweep`: explicit coefficients, the closed-form
/// spherotriangle coefficients, or a projection of the shape's kernel.
/// Every coefficient carries the factor `c`.
fn resolve_kernel(
    cfg: &RunConfig,
    quad: &SO3Quadrature,
    theta: Option<f64>,
    coeff: Option<(usize, f64)>,
    c: f64,
) -> Result<KernelPolynomial, CliError> {
    let spec = cfg.kernel.as_ref().ok_or_else(|| schema("missing section: kernel"))?;
    if let Some(raw) = &spec.coeffs {
        let mut raw = raw.clone();
        if let Some((i, x)) = coeff {
            *raw.get_mut(i).ok_or_else(|| schema(format!("sweep coefficient c{i} out of range")))? = x;
        }
        let mut kp = KernelPolynomial::new(spec.symmetry_class, raw.iter().map(|x| c * x).collect(), Provenance::Manual)
            .map_err(|e| schema(e.to_string()))?;
        kp.params.concentration = Some(c);
        return Ok(kp);
    }
    if coeff.is_some() {
        return Err(schema("coefficient sweeps need kernel.coeffs"));
    }
    let shape = with_theta(cfg.shape()?, theta)?;
    if analytic_applies(cfg, &shape)? {
        let a = analytic_spherotriangle_coeffs(shape.theta_or_pi(), shape.length, shape.diameter, c)
            .map_err(|e| schema(e.to_string()))?;
        let mut kp = KernelPolynomial::new(
            SymmetryClass::C2vQuadratic,
            vec![0.0, a.c1, a.c2, a.c3, a.c4],
            Provenance::Analytic,
        )
        .map_err(runtime)?;
        kp.params = params(&shape, c, &None);
        return Ok(kp);
    }
    Ok(project_one(cfg, &shape, c, quad)?.0)
}

fn scf_config(cfg: &RunConfig) -> Result<ScfConfig, CliError> {
    let s = cfg.scf.clone().unwrap_or_default();
    let c = ScfConfig { damping: s.damping, tol: s.tol, max_iter: s.max_iter, ..ScfConfig::default() };
    c.validate().map_err(|e| schema(e.to_string()))?;
    Ok(c)
}

const BRANCH_HEADER: [&str; 17] = [
    "eig_m11_1",
    "eig_m11_2",
    "eig_m11_3",
    "eig_m22_1",
    "eig_m22_2",
    "eig_m22_3",
    "m1_norm",
    "m1_alignment",
    "uniaxial_gap",
    "free_energy",
    "residual",
    "converged",
    "diverged",
    "iterations",
    "seed",
    "branch",
    "unconverged",
];

fn branch_table(first: &[&str], coeffs: usize) -> Table {
    let mut h: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    h.extend((0..coeffs).map(|i| format!("c{i}")));
    h.extend(BRANCH_HEADER.iter().map(|s| s.to_string()));
    Table { header: h, rows: Vec::new() }
}

fn branch_cells(b: &SolutionBranch, index: usize, unconverged: usize) -> Vec<String> {
    let o = &b.order_params;
    let mut r: Vec<String> = o.eig_m11.iter().chain(&o.eig_m22).map(|&x| num(x)).collect();
    r.extend([o.m1_norm, o.m1_alignment, o.uniaxial_gap, b.free_energy, b.residual].map(num));
    r.extend([
        b.converged.to_string(),
        b.diverged.to_string(),
        b.iterations.to_string(),
        b.seed.clone(),
        index.to_string(),
        unconverged.to_string(),
    ]);
    r
}

#[derive(Serialize)]
struct SolveResult {
    kernel: KernelPolynomial,
    branches: Vec<SolutionBranch>,
}

/// Converged solutions merged by branch identity and sorted by free energy,
/// then every unconverged run.
fn distinct(sols: Vec<SolutionBranch>) -> Vec<SolutionBranch> {
    let (conv, rest): (Vec<_>, Vec<_>) = sols.into_iter().partition(|s| s.converged);
    let mut out: Vec<SolutionBranch> = Vec::new();
    for s in conv {
        if !out.iter().any(|b| same_branch(&b.moments, &s.moments, BRANCH_TOL)) {
            out.push(s);
        }
    }
    out.sort_by(|a, b| a.free_energy.total_cmp(&b.free_energy));
    out.extend(rest);
    out
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.sweep.is_some() {
        return Err(schema("solve takes no sweep section; use the sweep command"));
    }
    let quad = quadrature(cfg.quad(SOLVE_QUAD)?)?;
    let scf = scf_config(cfg)?;
    let seeds = cfg.seeds()?;
    let kernel = resolve_kernel(cfg, &quad, None, None, cfg.concentration()?)?;
    let sols: Vec<SolutionBranch> = seeds
        .par_iter()
        .map(|s| scf_solve(&kernel, &ScfConfig { init: s.clone(), ..scf.clone() }, &quad))
        .collect::<rigid_dft::Result<_>>()
        .map_err(runtime)?;
    let branches = distinct(sols);
    let unconverged = branches.iter().filter(|b| !b.converged).count();
    let mut t = branch_table(&[], kernel.coeffs.len());
    for (i, b) in branches.iter().enumerate() {
        let mut row: Vec<String> = kernel.coeffs.iter().map(|&x| num(x)).collect();
        row.extend(branch_cells(b, i, unconverged));
        t.push(row);
    }
    let all_diverged = branches.iter().all(|b| b.diverged);
    emit("solve", cfg, &SolveResult { kernel, branches }, Some(&t))?;
    if all_diverged {
        return Err(runtime("every seed diverged"));
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let quad = quadrature(cfg.quad(SOLVE_QUAD)?)?;
    let scf = scf_config(cfg)?;
    let seeds = cfg.seeds()?;
    let (param, grid) = cfg.grid()?;
    let c = cfg.concentration()?;
    let family: Box<dyn Fn(f64) -> Result<KernelPolynomial, CliError> + Sync> = match param {
        SweepParam::Angle => return Err(schema("angle sweeps belong to exvol")),
        SweepParam::Alpha => {
            if cfg.kernel.as_ref().is_some_and(|k| k.symmetry_class != SymmetryClass::DInfH || k.coeffs.is_some()) {
                return Err(schema("alpha sweeps use the built-in Dinf_h kernel -alpha p11^2"));
            }
            Box::new(|a| Ok(KernelPolynomial::maier_saupe(a)))
        }
        SweepParam::Concentration => {
            if cfg.kernel.as_ref().is_some_and(|k| k.concentration.is_some()) {
                return Err(schema("kernel.concentration conflicts with a concentration sweep"));
            }
            if grid.iter().any(|&x| !(x > 0.0)) {
                return Err(schema("concentrations must be positive"));
            }
            let base = resolve_kernel(cfg, &quad, None, None, 1.0)?;
            Box::new(move |x| {
                let mut kp = base.clone();
                kp.coeffs.iter_mut().for_each(|k| *k *= x);
                kp.params.concentration = Some(x);
                Ok(kp)
            })
        }
        SweepParam::Theta => Box::new(|th| resolve_kernel(cfg, &quad, Some(th), None, c)),
        SweepParam::Coeff(i) => {
            let quad = &quad;
            Box::new(move |x| resolve_kernel(cfg, quad, None, Some((i, x)), c))
        }
    };
    // resolve the whole family first so schema errors surface before solving
    let kernels: Vec<KernelPolynomial> = grid.iter().map(|&x| family(x)).collect::<Result<_, _>>()?;
    let points = branch_sweep(
        |x| {
            let i = grid.iter().position(|&g| g == x).expect("grid value");
            Ok(kernels[i].clone())
        },
        &grid,
        &scf,
        &seeds,
        &quad,
    )
    .map_err(runtime)?;
    let n = kernels[0].coeffs.len();
    let mut t = branch_table(&[&cfg.sweep.as_ref().expect("sweep").param], n);
    for p in &points {
        if p.branches.is_empty() {
            let mut row = vec![num(p.param)];
            row.extend(p.coeffs.iter().map(|&x| num(x)));
            row.extend(std::iter::repeat_n(String::new(), BRANCH_HEADER.len() - 1));
            row.push(p.unconverged.to_string());
            t.push(row);
        }
        for (i, b) in p.branches.iter().enumerate() {
            let mut row = vec![num(p.param)];
            row.extend(p.coeffs.iter().map(|&x| num(x)));
            row.extend(branch_cells(b, i, p.unconverged));
            t.push(row);
        }
    }
    let none = points.iter().all(|p| p.branches.is_empty());
    emit("sweep", cfg, &points, Some(&t))?;
    if none {
        return Err(runtime("no seed converged at any sweep point"));
    }
    Ok(())
}
