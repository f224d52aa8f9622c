//! Solution text format.
//!
//! ```text
//! uhlenbeck-solution 1
//! mesh-sha256 <hex digest of the mesh text>
//! components 1
//! vertices 7
//! eps-final 0
//! iterations 12
//! residual 3.1e-13
//! energy -0.39
//! grad-sup 0.98
//! 0.5             one line per vertex, `components` values each
//! ...
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use super::{Result, Solution, SolverError};
use crate::mesh::{Mesh, NodalField};

const MAGIC: &str = "uhlenbeck-solution 1";

impl Solution {
    pub fn to_text(&self) -> String {
        let mesh = self.u.mesh();
        let n = self.u.components();
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "mesh-sha256 {}", mesh.content_hash());
        let _ = writeln!(s, "components {n}");
        let _ = writeln!(s, "vertices {}", mesh.num_vertices());
        let _ = writeln!(s, "eps-final {}", self.eps_final);
        let _ = writeln!(s, "iterations {}", self.iterations);
        let _ = writeln!(s, "residual {}", self.residual);
        let _ = writeln!(s, "energy {}", self.energy);
        let _ = writeln!(s, "grad-sup {}", self.grad_sup);
        for v in 0..mesh.num_vertices() {
            let line: Vec<String> = self.u.at(v).iter().map(f64::to_string).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    /// Reads a solution written for `mesh`; the mesh hash must match.
    /// Stage and iteration history are not stored and come back empty.
    pub fn from_text(text: &str, mesh: Arc<Mesh>) -> Result<Solution> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| SolverError::Parse { line: 0, message: format!("missing `{key}`") })?;
            let value = if key == MAGIC {
                (l == MAGIC).then(String::new)
            } else {
                l.strip_prefix(key).map(|r| r.trim().to_string())
            };
            value
                .map(|v| (ln, v))
                .ok_or_else(|| SolverError::Parse { line: ln, message: format!("expected `{key}`") })
        };
        header(MAGIC)?;
        let (ln, hash) = header("mesh-sha256")?;
        if hash != mesh.content_hash() {
            return Err(SolverError::Parse { line: ln, message: "mesh hash does not match".into() });
        }
        let n: usize = parse(header("components")?)?;
        let nv: usize = parse(header("vertices")?)?;
        if nv != mesh.num_vertices() {
            return Err(SolverError::Shape(format!("{nv} vertices in file, mesh has {}", mesh.num_vertices())));
        }
        let eps_final: f64 = parse(header("eps-final")?)?;
        let iterations: usize = parse(header("iterations")?)?;
        let residual: f64 = parse(header("residual")?)?;
        let energy: f64 = parse(header("energy")?)?;
        let grad_sup: f64 = parse(header("grad-sup")?)?;
        let mut values = Vec::with_capacity(nv * n);
        for _ in 0..nv {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| SolverError::Parse { line: 0, message: "missing vertex values".into() })?;
            let before = values.len();
            for f in l.split_whitespace() {
                values.push(f.parse::<f64>().map_err(|e| SolverError::Parse { line: ln, message: e.to_string() })?);
            }
            if values.len() - before != n {
                return Err(SolverError::Parse { line: ln, message: format!("expected {n} values") });
            }
        }
        let u = NodalField::new(mesh, n, values)?;
        Ok(Solution {
            u,
            grad_sup,
            energy,
            residual,
            eps_final,
            iterations,
            stages: Vec::new(),
            history: Vec::new(),
        })
    }
}

fn parse<T: std::str::FromStr>((ln, v): (usize, String)) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e: T::Err| SolverError::Parse { line: ln, message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::disk_mesh_rings;
    use crate::nonlinearity::NonlinearitySpec;
    use crate::solver::{solve, BoundaryCondition, Load, Problem, SolverConfig};

    #[test]
    fn round_trip() {
        let mesh = Arc::new(disk_mesh_rings(1.0, 3).unwrap());
        let prob = Problem::new(
            mesh.clone(),
            NonlinearitySpec::power(2.5).unwrap(),
            2,
            Load::Cellwise(vec![1.0; 2 * mesh.num_cells()]),
            BoundaryCondition::Dirichlet,
        )
        .unwrap();
        let sol = solve(&prob, &SolverConfig::default()).unwrap();
        let text = sol.to_text();
        let back = Solution::from_text(&text, mesh.clone()).unwrap();
        assert_eq!(back.u, sol.u);
        assert_eq!(back.grad_sup, sol.grad_sup);
        assert_eq!(back.residual, sol.residual);
        assert_eq!(back.to_text(), text);

        let other = Arc::new(disk_mesh_rings(1.0, 4).unwrap());
        assert!(matches!(Solution::from_text(&text, other), Err(SolverError::Parse { line: 2, .. })));
        let broken = text.replacen("components 2", "components two", 1);
        assert!(matches!(Solution::from_text(&broken, mesh), Err(SolverError::Parse { line: 3, .. })));
    }
}
