//! P1 finite-element minimisation of `J(u) = ∫ B(|∇u|) − f·u`.
//!
//! Each stage of the continuation replaces `a` by its ε-regularisation and
//! runs a damped Newton method from the previous stage's iterate. The
//! Hessian of the discrete energy on a cell `K` with gradient `G` is
//!
//! ```text
//! |K| ( a(t) δ_αβ ∇λ_i·∇λ_k + a'(t)/t (G_α·∇λ_i)(G_β·∇λ_k) ),   t = |G|,
//! ```
//!
//! which is positive definite whenever `1 + i_a > 0`. After the regularised
//! schedule an optional stage with the exact coefficient is attempted; if it
//! does not converge, the last converged regularised iterate is reported.

mod io;
pub mod linalg;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{p1_gradient, Mesh, MeshError, NodalField};
use crate::nonlinearity::{regularize, DerivedFunctions, NonlinearityError, NonlinearitySpec};
use linalg::{reverse_cuthill_mckee, SkylineMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence at eps = {eps:e} after {iterations} iterations (residual {residual:e})")]
    NotConverged { eps: f64, iterations: usize, residual: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("solution text line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    /// Homogeneous Dirichlet data.
    Dirichlet,
    /// Zero conormal flux; solutions are normalised to zero mean.
    Neumann,
}

impl BoundaryCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        }
    }
}

/// Right-hand side values, `N` per cell or per vertex.
#[derive(Debug, Clone, PartialEq)]
pub enum Load {
    Cellwise(Vec<f64>),
    Nodal(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Problem {
    mesh: Arc<Mesh>,
    spec: NonlinearitySpec,
    components: usize,
    load: Load,
    bc: BoundaryCondition,
    /// `∫ f φ_v` per degree of freedom, projected to zero sum for Neumann.
    lumped: Vec<f64>,
}

impl Problem {
    pub fn new(
        mesh: Arc<Mesh>,
        spec: NonlinearitySpec,
        components: usize,
        load: Load,
        bc: BoundaryCondition,
    ) -> Result<Self> {
        if components == 0 {
            return Err(SolverError::Shape("at least one component required".into()));
        }
        let n = components;
        let (values, expected) = match &load {
            Load::Cellwise(v) => (v, mesh.num_cells() * n),
            Load::Nodal(v) => (v, mesh.num_vertices() * n),
        };
        if values.len() != expected {
            return Err(SolverError::Shape(format!("load has {} values, expected {expected}", values.len())));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(SolverError::Precondition(format!("non-finite load value {x}")));
        }
        let mut lumped = vec![0.0; mesh.num_vertices() * n];
        match &load {
            Load::Cellwise(f) => {
                let share = 1.0 / (mesh.dim() + 1) as f64;
                for (k, m) in mesh.cell_measures().iter().enumerate() {
                    for &v in mesh.cell(k) {
                        for a in 0..n {
                            lumped[v * n + a] += f[k * n + a] * m * share;
                        }
                    }
                }
            }
            Load::Nodal(f) => {
                for (v, m) in mesh.vertex_masses().iter().enumerate() {
                    for a in 0..n {
                        lumped[v * n + a] = f[v * n + a] * m;
                    }
                }
            }
        }
        let mut problem = Self { mesh, spec, components, load, bc, lumped };
        if bc == BoundaryCondition::Neumann {
            let l1 = problem.load_l1_norm();
            for (a, integral) in problem.load_integrals().iter().enumerate() {
                if integral.abs() > 1e-10 * l1 {
                    return Err(SolverError::Precondition(format!(
                        "Neumann data must have zero mean: component {a} integrates to {integral:e} (L1 norm {l1:e})"
                    )));
                }
            }
            let total = problem.mesh.measure();
            let masses = problem.mesh.vertex_masses().to_vec();
            let sums: Vec<f64> = (0..n)
                .map(|a| problem.lumped.iter().skip(a).step_by(n).sum::<f64>())
                .collect();
            for (v, m) in masses.iter().enumerate() {
                for a in 0..n {
                    problem.lumped[v * n + a] -= sums[a] * m / total;
                }
            }
        }
        Ok(problem)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn spec(&self) -> &NonlinearitySpec {
        &self.spec
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn load(&self) -> &Load {
        &self.load
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn lumped_load(&self) -> &[f64] {
        &self.lumped
    }

    /// The same problem with `f` replaced by `κ f`.
    pub fn scaled(&self, kappa: f64) -> Result<Self> {
        let load = match &self.load {
            Load::Cellwise(v) => Load::Cellwise(v.iter().map(|x| kappa * x).collect()),
            Load::Nodal(v) => Load::Nodal(v.iter().map(|x| kappa * x).collect()),
        };
        Self::new(self.mesh.clone(), self.spec.clone(), self.components, load, self.bc)
    }

    /// Cellwise `|f|`; nodal data is averaged over each cell first.
    pub fn load_cell_norms(&self) -> Vec<f64> {
        let n = self.components;
        let mesh = &self.mesh;
        (0..mesh.num_cells())
            .map(|k| {
                let mut v = vec![0.0; n];
                match &self.load {
                    Load::Cellwise(f) => v.copy_from_slice(&f[k * n..(k + 1) * n]),
                    Load::Nodal(f) => {
                        let w = 1.0 / (mesh.dim() + 1) as f64;
                        for &vert in mesh.cell(k) {
                            for a in 0..n {
                                v[a] += w * f[vert * n + a];
                            }
                        }
                    }
                }
                v.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .collect()
    }

    fn load_l1_norm(&self) -> f64 {
        match &self.load {
            Load::Cellwise(_) => self
                .load_cell_norms()
                .iter()
                .zip(self.mesh.cell_measures())
                .map(|(f, m)| f * m)
                .sum(),
            Load::Nodal(f) => {
                let n = self.components;
                self.mesh
                    .vertex_masses()
                    .iter()
                    .enumerate()
                    .map(|(v, m)| m * f[v * n..(v + 1) * n].iter().map(|x| x * x).sum::<f64>().sqrt())
                    .sum()
            }
        }
    }

    /// `∫ f_α` per component.
    fn load_integrals(&self) -> Vec<f64> {
        let n = self.components;
        let mut out = vec![0.0; n];
        match &self.load {
            Load::Cellwise(f) => {
                for (k, m) in self.mesh.cell_measures().iter().enumerate() {
                    for a in 0..n {
                        out[a] += f[k * n + a] * m;
                    }
                }
            }
            Load::Nodal(f) => {
                for (v, m) in self.mesh.vertex_masses().iter().enumerate() {
                    for a in 0..n {
                        out[a] += f[v * n + a] * m;
                    }
                }
            }
        }
        out
    }

    fn is_constrained(&self, v: usize) -> bool {
        self.bc == BoundaryCondition::Dirichlet && self.mesh.is_boundary(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative residual tolerance.
    pub tol: f64,
    /// Decreasing regularisation parameters, each in `(0, 1)`.
    pub eps_schedule: Vec<f64>,
    /// Finish with a stage using the unregularised coefficient.
    pub exact_final_stage: bool,
    /// Newton iterations allowed per stage.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            eps_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            exact_final_stage: true,
            max_iter: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(SolverError::Precondition(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.eps_schedule.is_empty() && !self.exact_final_stage {
            return Err(SolverError::Precondition("no stages to run".into()));
        }
        if self.eps_schedule.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(SolverError::Precondition("every eps must lie in (0, 1)".into()));
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SolverError::Precondition("eps schedule must be strictly decreasing".into()));
        }
        if self.max_iter == 0 {
            return Err(SolverError::Precondition("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// One accepted Newton step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonRecord {
    pub eps: f64,
    pub iteration: usize,
    pub energy: f64,
    pub residual: f64,
    pub step: f64,
    pub gradient_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageRecord {
    pub eps: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: NodalField,
    /// Max over cells of the Frobenius norm of the gradient matrix.
    pub grad_sup: f64,
    /// Discrete energy with the coefficient of the reported stage.
    pub energy: f64,
    pub residual: f64,
    /// Regularisation of the reported stage; `0` for the exact coefficient.
    pub eps_final: f64,
    pub iterations: usize,
    pub stages: Vec<StageRecord>,
    pub history: Vec<NewtonRecord>,
}

/// `Σ_K |K| B(|∇u|_K) − Σ_v F_v·u_v` with the unregularised `B`.
pub fn assemble_energy(problem: &Problem, u: &NodalField) -> Result<f64> {
    let d = problem.spec.derived();
    let (elastic, work) = energy_parts(problem, &d, u.values())?;
    Ok(elastic - work)
}

/// Normalised Euclidean residual over unconstrained degrees of freedom,
/// with `a` regularised at `eps` (`eps = 0` for the exact coefficient).
pub fn residual_norm(problem: &Problem, u: &NodalField, eps: f64) -> Result<f64> {
    let spec = stage_spec(problem, eps)?;
    let g = gradient(problem, &spec, u.values());
    let (r, f) = free_norms(problem, &g);
    Ok(if f > 0.0 { r / f } else { r })
}

/// Solves from the zero field.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<Solution> {
    solve_from(problem, config, &NodalField::zeros(problem.mesh.clone(), problem.components))
}

/// Solves from `initial`; Dirichlet values of `initial` are reset to zero.
pub fn solve_from(problem: &Problem, config: &SolverConfig, initial: &NodalField) -> Result<Solution> {
    config.validate()?;
    if initial.components() != problem.components || initial.values().len() != problem.lumped.len() {
        return Err(SolverError::Shape("initial field does not match the problem".into()));
    }
    let n = problem.components;
    let mut u = initial.values().to_vec();
    for v in 0..problem.mesh.num_vertices() {
        if problem.is_constrained(v) {
            u[v * n..(v + 1) * n].iter_mut().for_each(|x| *x = 0.0);
        }
    }
    if problem.bc == BoundaryCondition::Neumann {
        project_mean(problem, &mut u);
    }
    let disc = Discretization::new(problem);
    let mut history = Vec::new();
    let mut stages = Vec::new();
    let mut reported: Option<(f64, f64, f64)> = None;

    for &eps in &config.eps_schedule {
        let spec = stage_spec(problem, eps)?;
        let out = newton_stage(problem, &disc, &spec, eps, config, &mut u, &mut history)?;
        stages.push(StageRecord { eps, iterations: out.iterations, residual: out.residual, converged: out.converged });
        if !out.converged {
            return Err(SolverError::NotConverged { eps, iterations: out.iterations, residual: out.residual });
        }
        reported = Some((eps, out.energy, out.residual));
    }
    if config.exact_final_stage {
        let spec = problem.spec.clone();
        let before = u.clone();
        let history_len = history.len();
        let out = newton_stage(problem, &disc, &spec, 0.0, config, &mut u, &mut history)?;
        stages.push(StageRecord { eps: 0.0, iterations: out.iterations, residual: out.residual, converged: out.converged });
        if out.converged {
            reported = Some((0.0, out.energy, out.residual));
        } else if reported.is_some() {
            u = before;
            history.truncate(history_len);
        } else {
            return Err(SolverError::NotConverged { eps: 0.0, iterations: out.iterations, residual: out.residual });
        }
    }
    let (eps_final, energy, residual) = reported.expect("at least one stage ran");
    let field = NodalField::new(problem.mesh.clone(), n, u)?;
    let grad_sup = p1_gradient(&field).max_frobenius();
    Ok(Solution {
        u: field,
        grad_sup,
        energy,
        residual,
        eps_final,
        iterations: stages.iter().map(|s| s.iterations).sum(),
        stages,
        history,
    })
}

fn stage_spec(problem: &Problem, eps: f64) -> Result<NonlinearitySpec> {
    if eps == 0.0 {
        Ok(problem.spec.clone())
    } else {
        Ok(regularize(&problem.spec, eps)?.spec().clone())
    }
}

/// Degree-of-freedom numbering and skyline structure of the Hessian.
struct Discretization {
    /// `dof[v]` is the RCM rank of vertex `v` among unconstrained vertices.
    rank: Vec<Option<usize>>,
    first: Vec<usize>,
}

impl Discretization {
    fn new(problem: &Problem) -> Self {
        let mesh = &problem.mesh;
        let nv = mesh.num_vertices();
        // Neumann: vertex 0 is pinned to remove the constant null space.
        let fixed = |v: usize| problem.is_constrained(v) || (problem.bc == BoundaryCondition::Neumann && v == 0);
        let mut local = vec![usize::MAX; nv];
        let mut free = Vec::new();
        for v in 0..nv {
            if !fixed(v) {
                local[v] = free.len();
                free.push(v);
            }
        }
        let mut adjacency = vec![Vec::new(); free.len()];
        for cell in mesh.cells() {
            for &a in cell {
                for &b in cell {
                    if a != b && local[a] != usize::MAX && local[b] != usize::MAX {
                        adjacency[local[a]].push(local[b]);
                    }
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let order = reverse_cuthill_mckee(&adjacency);
        let mut rank = vec![None; nv];
        for (r, &l) in order.iter().enumerate() {
            rank[free[l]] = Some(r);
        }
        let n = problem.components;
        let mut first_vertex: Vec<usize> = (0..free.len()).collect();
        for cell in mesh.cells() {
            let ranks: Vec<usize> = cell.iter().filter_map(|&v| rank[v]).collect();
            if let Some(&lo) = ranks.iter().min() {
                for &r in &ranks {
                    first_vertex[r] = first_vertex[r].min(lo);
                }
            }
        }
        let first = (0..free.len() * n).map(|dof| first_vertex[dof / n] * n).collect();
        Self { rank, first }
    }

    fn dofs(&self) -> usize {
        self.first.len()
    }

    fn dof(&self, v: usize, a: usize, n: usize) -> Option<usize> {
        self.rank[v].map(|r| r * n + a)
    }
}

struct StageOutcome {
    iterations: usize,
    residual: f64,
    energy: f64,
    converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;
const ENERGY_NOISE: f64 = 1e-10;
const RESIDUAL_FLOOR: f64 = 1e-14;

fn newton_stage(
    problem: &Problem,
    disc: &Discretization,
    spec: &NonlinearitySpec,
    eps: f64,
    config: &SolverConfig,
    u: &mut Vec<f64>,
    history: &mut Vec<NewtonRecord>,
) -> Result<StageOutcome> {
    let n = problem.components;
    let derived = spec.derived();
    let failed = |iterations, residual| StageOutcome { iterations, residual, energy: f64::NAN, converged: false };
    let (mut elastic, mut work) = energy_parts(problem, &derived, u)?;
    let mut iterations = 0;
    loop {
        let g = gradient(problem, spec, u);
        let (r_abs, f_norm) = free_norms(problem, &g);
        let residual = if f_norm > 0.0 { r_abs / f_norm } else { r_abs };
        if !residual.is_finite() {
            return Ok(failed(iterations, residual));
        }
        if r_abs <= (config.tol * f_norm).max(RESIDUAL_FLOOR) || disc.dofs() == 0 {
            return Ok(StageOutcome { iterations, residual, energy: elastic - work, converged: true });
        }
        if iterations == config.max_iter {
            return Ok(failed(iterations, residual));
        }
        iterations += 1;

        let mut grad_free = vec![0.0; disc.dofs()];
        for v in 0..problem.mesh.num_vertices() {
            for a in 0..n {
                if let Some(d) = disc.dof(v, a, n) {
                    grad_free[d] = g[v * n + a];
                }
            }
        }
        let hessian = match assemble_hessian(problem, disc, spec, u) {
            Some(h) => h,
            None => return Ok(failed(iterations, residual)),
        };
        let mut fallback = false;
        let mut direction: Vec<f64> = match hessian.factorize() {
            Ok(factor) => factor.solve(&grad_free).into_iter().map(|x| -x).collect(),
            Err(_) => Vec::new(),
        };
        let mut slope: f64 = direction.iter().zip(&grad_free).map(|(d, g)| d * g).sum();
        if direction.is_empty() || !(slope < 0.0) {
            fallback = true;
            direction = grad_free.iter().map(|g| -g).collect();
            slope = -grad_free.iter().map(|g| g * g).sum::<f64>();
        }
        let mut step_full = vec![0.0; u.len()];
        for v in 0..problem.mesh.num_vertices() {
            for a in 0..n {
                if let Some(d) = disc.dof(v, a, n) {
                    step_full[v * n + a] = direction[d];
                }
            }
        }

        let energy = elastic - work;
        let noise = ENERGY_NOISE * (elastic.abs() + work.abs());
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = u.iter().zip(&step_full).map(|(x, s)| x + alpha * s).collect();
            let (e_new, w_new) = energy_parts(problem, &derived, &trial)?;
            let j_new = e_new - w_new;
            if j_new.is_finite() && j_new <= energy + ARMIJO * alpha * slope + noise {
                accepted = Some((trial, e_new, w_new));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, e_new, w_new)) = accepted else {
            return Ok(failed(iterations, residual));
        };
        *u = trial;
        if problem.bc == BoundaryCondition::Neumann {
            project_mean(problem, u);
            (elastic, work) = energy_parts(problem, &derived, u)?;
        } else {
            (elastic, work) = (e_new, w_new);
        }
        history.push(NewtonRecord {
            eps,
            iteration: iterations,
            energy: elastic - work,
            residual,
            step: alpha,
            gradient_fallback: fallback,
        });
    }
}

/// Cell gradient `G` (N × dim, row-major) of the nodal vector `u`.
fn cell_gradient(mesh: &Mesh, n: usize, u: &[f64], k: usize, g: &mut [f64]) {
    let d = mesh.dim();
    g.iter_mut().for_each(|x| *x = 0.0);
    for (i, &v) in mesh.cell(k).iter().enumerate() {
        let grad_l = mesh.barycentric_gradient(k, i);
        for a in 0..n {
            let val = u[v * n + a];
            for c in 0..d {
                g[a * d + c] += val * grad_l[c];
            }
        }
    }
}

/// `(Σ |K| B(t_K), Σ F·u)`.
fn energy_parts(problem: &Problem, derived: &DerivedFunctions, u: &[f64]) -> Result<(f64, f64)> {
    let mesh = &problem.mesh;
    let n = problem.components;
    let mut g = vec![0.0; n * mesh.dim()];
    let mut elastic = 0.0;
    for (k, m) in mesh.cell_measures().iter().enumerate() {
        cell_gradient(mesh, n, u, k, &mut g);
        let t = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        elastic += m * derived.big_b(t)?;
    }
    let work = problem.lumped.iter().zip(u).map(|(f, x)| f * x).sum();
    Ok((elastic, work))
}

/// Full gradient of the discrete energy, one entry per vertex component.
fn gradient(problem: &Problem, spec: &NonlinearitySpec, u: &[f64]) -> Vec<f64> {
    let mesh = &problem.mesh;
    let (n, d) = (problem.components, mesh.dim());
    let mut out: Vec<f64> = problem.lumped.iter().map(|f| -f).collect();
    let mut g = vec![0.0; n * d];
    for (k, m) in mesh.cell_measures().iter().enumerate() {
        cell_gradient(mesh, n, u, k, &mut g);
        let t = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let flux = if t == 0.0 { 0.0 } else { m * spec.a(t) };
        if flux == 0.0 {
            continue;
        }
        for (i, &v) in mesh.cell(k).iter().enumerate() {
            let grad_l = mesh.barycentric_gradient(k, i);
            for a in 0..n {
                let dot: f64 = (0..d).map(|c| g[a * d + c] * grad_l[c]).sum();
                out[v * n + a] += flux * dot;
            }
        }
    }
    out
}

/// `(‖R‖, ‖F‖)` over degrees of freedom not fixed by Dirichlet data.
fn free_norms(problem: &Problem, g: &[f64]) -> (f64, f64) {
    let n = problem.components;
    let (mut r, mut f) = (0.0, 0.0);
    for v in 0..problem.mesh.num_vertices() {
        if problem.is_constrained(v) {
            continue;
        }
        for a in 0..n {
            r += g[v * n + a] * g[v * n + a];
            f += problem.lumped[v * n + a] * problem.lumped[v * n + a];
        }
    }
    (r.sqrt(), f.sqrt())
}

/// Returns `None` if a coefficient is not finite.
fn assemble_hessian(
    problem: &Problem,
    disc: &Discretization,
    spec: &NonlinearitySpec,
    u: &[f64],
) -> Option<SkylineMatrix> {
    let mesh = &problem.mesh;
    let (n, d) = (problem.components, mesh.dim());
    let mut h = SkylineMatrix::new(disc.first.clone());
    let mut g = vec![0.0; n * d];
    let nodes = d + 1;
    let mut w = vec![0.0; nodes * n];
    for (k, m) in mesh.cell_measures().iter().enumerate() {
        let cell = mesh.cell(k);
        // fully constrained cells (e.g. domain corners) carry no unknowns and
        // may have a singular coefficient at zero gradient
        if cell.iter().all(|&v| disc.rank[v].is_none()) {
            continue;
        }
        cell_gradient(mesh, n, u, k, &mut g);
        let t = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = spec.a(t);
        let c = if t == 0.0 { 0.0 } else { spec.a_prime_over_t(t) };
        if !a.is_finite() || !c.is_finite() {
            return None;
        }
        for i in 0..nodes {
            let gl = mesh.barycentric_gradient(k, i);
            for al in 0..n {
                w[i * n + al] = (0..d).map(|cc| g[al * d + cc] * gl[cc]).sum();
            }
        }
        for i in 0..nodes {
            let gi = mesh.barycentric_gradient(k, i);
            for kk in 0..nodes {
                let gk = mesh.barycentric_gradient(k, kk);
                let s: f64 = (0..d).map(|cc| gi[cc] * gk[cc]).sum();
                for al in 0..n {
                    let Some(row) = disc.dof(cell[i], al, n) else { continue };
                    for be in 0..n {
                        let Some(col) = disc.dof(cell[kk], be, n) else { continue };
                        if col > row {
                            continue;
                        }
                        let mut val = c * w[i * n + al] * w[kk * n + be];
                        if al == be {
                            val += a * s;
                        }
                        h.add(row, col, m * val);
                    }
                }
            }
        }
    }
    Some(h)
}

fn project_mean(problem: &Problem, u: &mut [f64]) {
    let n = problem.components;
    let masses = problem.mesh.vertex_masses();
    let total = problem.mesh.measure();
    for a in 0..n {
        let mean: f64 = masses.iter().enumerate().map(|(v, m)| m * u[v * n + a]).sum::<f64>() / total;
        for v in 0..masses.len() {
            u[v * n + a] -= mean;
        }
    }
}
