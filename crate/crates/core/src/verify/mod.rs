//! Measured-ratio experiments comparing computed solutions with the
//! `b⁻¹(‖f‖_{L^{n,1}})` gradient bound and the matching energy bound.

mod report;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{p1_gradient, DomainSpec, Mesh, MeshError};
use crate::nonlinearity::{FamilyRegistry, NonlinearityError, NonlinearitySpec, SpecRecord};
use crate::rearrangement::{l_n1_norm, MeasuredField, RearrangementError};
use crate::rhs::{RhsCatalog, RhsError, RhsRecord};
use crate::solver::{solve, BoundaryCondition, Load, Problem, Solution, SolverConfig, SolverError};

pub use report::{write_csv, SweepJson, CSV_HEADER, REPORT_SCHEMA};

pub const N2_REGIME_LABEL: &str = "Remark n=2 regime";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),
    #[error("invalid sweep: {0}")]
    Plan(String),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Rearrangement(#[from] RearrangementError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Rhs(#[from] RhsError),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

/// `‖ |f| ‖_{L^{n,1}(Ω)}` of the cellwise data, `n` the mesh dimension.
pub fn f_norm_n1(problem: &Problem) -> Result<f64> {
    let field = MeasuredField::new(problem.load_cell_norms(), problem.mesh().cell_measures().to_vec())?;
    Ok(l_n1_norm(&field, problem.mesh().dim())?)
}

fn nonzero_norm(problem: &Problem) -> Result<f64> {
    let norm = f_norm_n1(problem)?;
    if norm > 0.0 {
        Ok(norm)
    } else {
        Err(VerifyError::UndefinedRatio("right-hand side vanishes".into()))
    }
}

/// `grad_sup / b⁻¹(‖f‖_{L^{n,1}})`.
pub fn gradient_bound_ratio(solution: &Solution, problem: &Problem) -> Result<f64> {
    let norm = nonzero_norm(problem)?;
    Ok(solution.grad_sup / problem.spec().derived().b_inverse(norm)?)
}

/// `∫ B(|∇u_h|)` with the unregularised `B`.
pub fn energy_integral(solution: &Solution, spec: &NonlinearitySpec) -> Result<f64> {
    let d = spec.derived();
    let grads = p1_gradient(&solution.u);
    let mut total = 0.0;
    for (k, m) in solution.u.mesh().cell_measures().iter().enumerate() {
        total += m * d.big_b(grads.frobenius(k))?;
    }
    Ok(total)
}

/// `∫ B(|∇u_h|) / (‖f‖_{L^{n,1}} b⁻¹(‖f‖_{L^{n,1}}))`.
pub fn energy_bound_ratio(solution: &Solution, problem: &Problem) -> Result<f64> {
    let norm = nonzero_norm(problem)?;
    let denom = norm * problem.spec().derived().b_inverse(norm)?;
    Ok(energy_integral(solution, problem.spec())? / denom)
}

/// Radius of the disk with the same area as the meshed polygon.
pub fn effective_radius(mesh: &Mesh) -> f64 {
    (mesh.measure() / std::f64::consts::PI).sqrt()
}

/// `max |∇u|` of the radial Dirichlet solution with `|f| ≡ λ` on a ball of
/// radius `r` in `R^n`: `b(|∇u|(ρ)) = λρ/n`.
pub fn radial_oracle(spec: &NonlinearitySpec, lambda: f64, radius: f64, n: usize) -> Result<f64> {
    Ok(spec.derived().b_inverse(lambda * radius / n as f64)?)
}

/// `max |∇u|` of the Neumann solution on `[0,1]^2` with `f = A cos(πx)`:
/// `b(|u'|) = A sin(πx)/π`.
pub fn separable_oracle(spec: &NonlinearitySpec, amplitude: f64) -> Result<f64> {
    Ok(spec.derived().b_inverse(amplitude / std::f64::consts::PI)?)
}

/// Closed-form `max |∇u|` for the configurations that have one.
pub fn oracle_for(
    domain: &DomainSpec,
    rhs: &RhsRecord,
    bc: BoundaryCondition,
    spec: &NonlinearitySpec,
    kappa: f64,
    components: usize,
    mesh: &Mesh,
) -> Result<Option<f64>> {
    let amplitude = (kappa * rhs.value.unwrap_or(1.0)).abs() * (components as f64).sqrt();
    if amplitude == 0.0 {
        return Ok(None);
    }
    match (domain, rhs.name.as_str(), bc) {
        (DomainSpec::Disk { .. }, "constant", BoundaryCondition::Dirichlet) => {
            Ok(Some(radial_oracle(spec, amplitude, effective_radius(mesh), mesh.dim())?))
        }
        (DomainSpec::Square { side }, "cos-pi-x", BoundaryCondition::Neumann) if *side == 1.0 => {
            Ok(Some(separable_oracle(spec, amplitude)?))
        }
        _ => Ok(None),
    }
}

/// What a run was asked to do.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDescriptor {
    pub domain: String,
    pub nonlinearity: String,
    pub p: Option<f64>,
    pub bc: BoundaryCondition,
    pub components: usize,
    pub rhs: String,
    pub kappa: f64,
    pub h_target: f64,
}

/// What a successful run measured.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurements {
    pub dim: usize,
    pub h: f64,
    pub cells: usize,
    pub grad_sup: f64,
    pub f_norm_n1: f64,
    pub bound_rhs: f64,
    pub gradient_ratio: f64,
    pub energy_integral: f64,
    pub energy_ratio: f64,
    pub oracle: Option<f64>,
    pub oracle_error: Option<f64>,
    pub eps_final: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub index: usize,
    pub descriptor: RunDescriptor,
    /// `N2_REGIME_LABEL` for planar runs, empty otherwise.
    pub regime: String,
    pub runtime: Duration,
    pub result: std::result::Result<Measurements, String>,
}

impl VerificationReport {
    pub fn measurements(&self) -> Option<&Measurements> {
        self.result.as_ref().ok()
    }
}

/// Measures an already computed solution.
pub fn measure(problem: &Problem, solution: &Solution, oracle: Option<f64>) -> Result<Measurements> {
    let f_norm = nonzero_norm(problem)?;
    let bound_rhs = problem.spec().derived().b_inverse(f_norm)?;
    let energy = energy_integral(solution, problem.spec())?;
    let mesh = problem.mesh();
    Ok(Measurements {
        dim: mesh.dim(),
        h: mesh.h(),
        cells: mesh.num_cells(),
        grad_sup: solution.grad_sup,
        f_norm_n1: f_norm,
        bound_rhs,
        gradient_ratio: solution.grad_sup / bound_rhs,
        energy_integral: energy,
        energy_ratio: energy / (f_norm * bound_rhs),
        oracle,
        oracle_error: oracle.map(|o| (solution.grad_sup - o).abs() / o),
        eps_final: solution.eps_final,
        iterations: solution.iterations,
        residual: solution.residual,
    })
}

/// The cartesian product `domains × nonlinearities × h × κ`, in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub domains: Vec<DomainSpec>,
    pub nonlinearities: Vec<SpecRecord>,
    pub rhs: RhsRecord,
    pub bc: BoundaryCondition,
    #[serde(default = "one")]
    pub components: usize,
    pub h: Vec<f64>,
    pub kappa: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn one() -> usize {
    1
}

impl SweepPlan {
    pub fn len(&self) -> usize {
        self.domains.len() * self.nonlinearities.len() * self.h.len() * self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One fully specified run, built from a plan.
pub struct Case {
    pub index: usize,
    pub domain: DomainSpec,
    pub mesh: std::result::Result<Arc<Mesh>, String>,
    pub spec: NonlinearitySpec,
    pub rhs: RhsRecord,
    pub bc: BoundaryCondition,
    pub components: usize,
    pub kappa: f64,
    pub h_target: f64,
}

impl Case {
    fn descriptor(&self) -> RunDescriptor {
        RunDescriptor {
            domain: self.domain.label(),
            nonlinearity: self.spec.label().to_string(),
            p: self.spec.power_exponent(),
            bc: self.bc,
            components: self.components,
            rhs: self.rhs.name.clone(),
            kappa: self.kappa,
            h_target: self.h_target,
        }
    }

    /// Builds the problem for this case.
    pub fn problem(&self, catalog: &RhsCatalog) -> Result<Problem> {
        let mesh = self.mesh.clone().map_err(|e| VerifyError::Plan(e))?;
        let rhs = catalog.build(&self.rhs)?;
        let values: Vec<f64> = rhs
            .cell_values(&mesh, self.components)?
            .into_iter()
            .map(|v| self.kappa * v)
            .collect();
        Ok(Problem::new(mesh, self.spec.clone(), self.components, Load::Cellwise(values), self.bc)?)
    }

    /// Solves and measures; failures are recorded in the report.
    pub fn run(&self, catalog: &RhsCatalog, config: &SolverConfig) -> (VerificationReport, Option<Solution>) {
        let start = Instant::now();
        let outcome = (|| -> Result<(Measurements, Solution)> {
            let problem = self.problem(catalog)?;
            let solution = solve(&problem, config)?;
            let oracle = oracle_for(
                &self.domain,
                &self.rhs,
                self.bc,
                &self.spec,
                self.kappa,
                self.components,
                problem.mesh(),
            )?;
            Ok((measure(&problem, &solution, oracle)?, solution))
        })();
        let dim = self.domain.dim();
        let (result, solution) = match outcome {
            Ok((m, s)) => (Ok(m), Some(s)),
            Err(e) => (Err(e.to_string()), None),
        };
        let report = VerificationReport {
            index: self.index,
            descriptor: self.descriptor(),
            regime: if dim == 2 { N2_REGIME_LABEL.into() } else { String::new() },
            runtime: start.elapsed(),
            result,
        };
        (report, solution)
    }
}

/// Expands a plan into cases, meshing each `(domain, h)` once.
pub fn plan_cases(plan: &SweepPlan, registry: &FamilyRegistry) -> Result<Vec<Case>> {
    if plan.components == 0 {
        return Err(VerifyError::Plan("components must be positive".into()));
    }
    let specs: Vec<NonlinearitySpec> = plan
        .nonlinearities
        .iter()
        .map(|r| registry.build(r))
        .collect::<std::result::Result<_, _>>()?;
    let mut cases = Vec::with_capacity(plan.len());
    for domain in &plan.domains {
        let meshes: Vec<std::result::Result<Arc<Mesh>, String>> = plan
            .h
            .iter()
            .map(|&h| domain.mesh(h).map(Arc::new).map_err(|e| e.to_string()))
            .collect();
        for spec in &specs {
            for (hi, &h_target) in plan.h.iter().enumerate() {
                for &kappa in &plan.kappa {
                    cases.push(Case {
                        index: cases.len(),
                        domain: domain.clone(),
                        mesh: meshes[hi].clone(),
                        spec: spec.clone(),
                        rhs: plan.rhs.clone(),
                        bc: plan.bc,
                        components: plan.components,
                        kappa,
                        h_target,
                    });
                }
            }
        }
    }
    Ok(cases)
}

/// Max/min of a ratio over one `(domain, nonlinearity, h)` group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSpread {
    pub domain: String,
    pub nonlinearity: String,
    pub h_target: f64,
    pub runs: usize,
    pub gradient_spread: f64,
    pub energy_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub failures: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `ratio_max / ratio_min` over all successful rows.
    pub ratio_band: f64,
    pub max_gradient_spread: f64,
    pub max_energy_spread: f64,
    pub groups: Vec<GroupSpread>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub reports: Vec<VerificationReport>,
    pub summary: SweepSummary,
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        f64::NAN
    } else {
        max / min
    }
}

pub fn summarize(reports: &[VerificationReport]) -> SweepSummary {
    let ok: Vec<(&RunDescriptor, &Measurements)> = reports
        .iter()
        .filter_map(|r| r.measurements().map(|m| (&r.descriptor, m)))
        .collect();
    let ratios: Vec<f64> = ok.iter().map(|(_, m)| m.gradient_ratio).collect();
    let mut groups: Vec<GroupSpread> = Vec::new();
    let mut members: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for (d, m) in &ok {
        let pos = groups.iter().position(|g| {
            g.domain == d.domain && g.nonlinearity == d.nonlinearity && g.h_target == d.h_target
        });
        let i = pos.unwrap_or_else(|| {
            groups.push(GroupSpread {
                domain: d.domain.clone(),
                nonlinearity: d.nonlinearity.clone(),
                h_target: d.h_target,
                runs: 0,
                gradient_spread: f64::NAN,
                energy_spread: f64::NAN,
            });
            members.push((Vec::new(), Vec::new()));
            groups.len() - 1
        });
        groups[i].runs += 1;
        members[i].0.push(m.gradient_ratio);
        members[i].1.push(m.energy_ratio);
    }
    for (g, (gr, er)) in groups.iter_mut().zip(&members) {
        g.gradient_spread = spread(gr);
        g.energy_spread = spread(er);
    }
    let ratio_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    SweepSummary {
        rows: reports.len(),
        failures: reports.len() - ok.len(),
        ratio_min: if ratios.is_empty() { f64::NAN } else { ratio_min },
        ratio_max: if ratios.is_empty() { f64::NAN } else { ratio_max },
        ratio_band: spread(&ratios),
        max_gradient_spread: groups.iter().map(|g| g.gradient_spread).fold(f64::NAN, f64::max),
        max_energy_spread: groups.iter().map(|g| g.energy_spread).fold(f64::NAN, f64::max),
        groups,
    }
}

/// Runs every case of `plan`, on `jobs` threads when given. Row order is
/// the plan order regardless of scheduling.
pub fn run_sweep(
    plan: &SweepPlan,
    registry: &FamilyRegistry,
    catalog: &RhsCatalog,
    jobs: Option<usize>,
) -> Result<SweepOutcome> {
    let cases = plan_cases(plan, registry)?;
    let run = |c: &Case| c.run(catalog, &plan.solver).0;
    let reports: Vec<VerificationReport> = match jobs {
        Some(1) => cases.iter().map(run).collect(),
        _ => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(k) = jobs {
                builder = builder.num_threads(k);
            }
            let pool = builder
                .build()
                .map_err(|e| VerifyError::Plan(format!("thread pool: {e}")))?;
            pool.install(|| cases.par_iter().map(run).collect())
        }
    };
    let summary = summarize(&reports);
    Ok(SweepOutcome { reports, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::disk_mesh;

    fn disk_plan(p: f64, kappas: Vec<f64>) -> SweepPlan {
        SweepPlan {
            domains: vec![DomainSpec::unit_disk()],
            nonlinearities: vec![SpecRecord::power(p)],
            rhs: RhsRecord::constant(1.0),
            bc: BoundaryCondition::Dirichlet,
            components: 1,
            h: vec![0.15],
            kappa: kappas,
            solver: SolverConfig::default(),
        }
    }

    #[test]
    fn linear_disk_ratio_matches_closed_form() {
        // p = 2, f ≡ λ: grad_sup ≈ λR/2 and ‖f‖_{2,1} = 2λ√A, so the ratio tends to R/(4√A)
        let out = run_sweep(&disk_plan(2.0, vec![2.0]), &FamilyRegistry::default(), &RhsCatalog::default(), Some(1)).unwrap();
        let m = out.reports[0].measurements().unwrap();
        let mesh = disk_mesh(1.0, 0.15).unwrap();
        let a = mesh.measure();
        assert!((m.f_norm_n1 - 4.0 * a.sqrt()).abs() < 1e-12);
        let expected = effective_radius(&mesh) / (4.0 * a.sqrt());
        assert!((m.gradient_ratio / expected - 1.0).abs() < 0.05, "{} vs {expected}", m.gradient_ratio);
        assert!(m.energy_ratio > 0.0 && m.energy_ratio.is_finite());
        assert!(m.oracle_error.unwrap() < 0.05);
        assert_eq!(out.reports[0].regime, N2_REGIME_LABEL);
    }

    #[test]
    fn homogeneity_across_kappa() {
        let out = run_sweep(&disk_plan(3.0, vec![0.5, 1.0, 2.0]), &FamilyRegistry::default(), &RhsCatalog::default(), None).unwrap();
        assert_eq!(out.summary.failures, 0);
        assert!(out.summary.max_gradient_spread - 1.0 < 1e-3);
        assert!(out.summary.max_energy_spread - 1.0 < 1e-3);
        assert_eq!(out.summary.groups.len(), 1);
    }

    #[test]
    fn singleton_and_empty_sweeps() {
        let plan = disk_plan(2.0, vec![1.0]);
        let out = run_sweep(&plan, &FamilyRegistry::default(), &RhsCatalog::default(), Some(1)).unwrap();
        let case = &plan_cases(&plan, &FamilyRegistry::default()).unwrap()[0];
        let problem = case.problem(&RhsCatalog::default()).unwrap();
        let sol = solve(&problem, &plan.solver).unwrap();
        assert_eq!(out.reports[0].measurements().unwrap().grad_sup, sol.grad_sup);
        assert!((gradient_bound_ratio(&sol, &problem).unwrap() - out.reports[0].measurements().unwrap().gradient_ratio).abs() < 1e-15);
        assert!((energy_bound_ratio(&sol, &problem).unwrap() - out.reports[0].measurements().unwrap().energy_ratio).abs() < 1e-15);

        let empty = SweepPlan { domains: vec![], ..plan };
        let out = run_sweep(&empty, &FamilyRegistry::default(), &RhsCatalog::default(), None).unwrap();
        assert!(out.reports.is_empty());
        assert_eq!(out.summary.rows, 0);
    }

    #[test]
    fn zero_data_has_no_ratio() {
        let plan = SweepPlan { rhs: RhsRecord::constant(0.0), ..disk_plan(2.0, vec![1.0]) };
        let case = &plan_cases(&plan, &FamilyRegistry::default()).unwrap()[0];
        let problem = case.problem(&RhsCatalog::default()).unwrap();
        let sol = solve(&problem, &plan.solver).unwrap();
        assert!(matches!(gradient_bound_ratio(&sol, &problem), Err(VerifyError::UndefinedRatio(_))));
        assert!(matches!(energy_bound_ratio(&sol, &problem), Err(VerifyError::UndefinedRatio(_))));
        let out = run_sweep(&plan, &FamilyRegistry::default(), &RhsCatalog::default(), Some(1)).unwrap();
        assert_eq!(out.summary.failures, 1);
    }

    #[test]
    fn failed_rows_do_not_stop_the_sweep() {
        let mut plan = disk_plan(2.0, vec![1.0]);
        plan.domains.push(DomainSpec::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]] });
        let out = run_sweep(&plan, &FamilyRegistry::default(), &RhsCatalog::default(), Some(2)).unwrap();
        assert_eq!(out.reports.len(), 2);
        assert!(out.reports[0].result.is_ok() && out.reports[1].result.is_err());
        assert_eq!(out.summary.failures, 1);
    }

    #[test]
    fn oracles() {
        let spec = NonlinearitySpec::power(3.0).unwrap();
        assert!((radial_oracle(&spec, 2.0, 1.0, 2).unwrap() - 1.0).abs() < 1e-12);
        let lin = NonlinearitySpec::power(2.0).unwrap();
        assert!((separable_oracle(&lin, 1.0).unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-14);
    }
}
