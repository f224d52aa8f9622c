//! Named right-hand sides, evaluated cellwise on a mesh.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RhsError {
    #[error("unknown right-hand side `{0}`")]
    Unknown(String),
    #[error("right-hand side `{name}`: {message}")]
    Invalid { name: String, message: String },
    #[error("cellwise file {path}: {message}")]
    File { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, RhsError>;

/// Config-file form of a right-hand side.
///
/// ```json
/// {"name": "constant", "value": 2.0}
/// {"name": "cos-pi-x"}
/// {"name": "radial-bump", "radius": 0.5, "center": [0.0, 0.0]}
/// {"name": "cellwise-file", "path": "f.txt"}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsRecord {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl RhsRecord {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), value: None, radius: None, center: None, path: None }
    }

    pub fn constant(value: f64) -> Self {
        Self { value: Some(value), ..Self::named("constant") }
    }
}

/// A right-hand side `f: Ω → R^N`.
pub trait RightHandSide: Send + Sync {
    fn name(&self) -> &str;
    /// `N` values per cell, cell-major.
    fn cell_values(&self, mesh: &Mesh, components: usize) -> Result<Vec<f64>>;
    /// Whether the data integrates to zero on symmetric domains, so it can
    /// drive a Neumann problem.
    fn mean_free(&self) -> bool {
        false
    }
}

/// Scalar profile `g(x)` copied into every component.
struct Sampled<F> {
    name: &'static str,
    g: F,
    mean_free: bool,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> RightHandSide for Sampled<F> {
    fn name(&self) -> &str {
        self.name
    }

    fn cell_values(&self, mesh: &Mesh, components: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(mesh.num_cells() * components);
        for k in 0..mesh.num_cells() {
            let v = (self.g)(&mesh.cell_centroid(k));
            out.extend(std::iter::repeat(v).take(components));
        }
        Ok(out)
    }

    fn mean_free(&self) -> bool {
        self.mean_free
    }
}

struct CellwiseFile {
    path: PathBuf,
}

impl RightHandSide for CellwiseFile {
    fn name(&self) -> &str {
        "cellwise-file"
    }

    /// One line per cell with `N` whitespace-separated values; `#` starts a
    /// comment.
    fn cell_values(&self, mesh: &Mesh, components: usize) -> Result<Vec<f64>> {
        let err = |message: String| RhsError::File { path: self.path.display().to_string(), message };
        let text = std::fs::read_to_string(&self.path).map_err(|e| err(e.to_string()))?;
        let mut out = Vec::with_capacity(mesh.num_cells() * components);
        let mut rows = 0;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let before = out.len();
            for f in line.split_whitespace() {
                out.push(f.parse::<f64>().map_err(|e| err(format!("line {}: {e}", i + 1)))?);
            }
            if out.len() - before != components {
                return Err(err(format!("line {}: expected {components} values", i + 1)));
            }
            rows += 1;
        }
        if rows != mesh.num_cells() {
            return Err(err(format!("{rows} rows for {} cells", mesh.num_cells())));
        }
        Ok(out)
    }
}

type Builder = Box<dyn Fn(&RhsRecord) -> Result<Box<dyn RightHandSide>> + Send + Sync>;

/// Name → constructor table of right-hand sides.
pub struct RhsCatalog {
    builders: BTreeMap<String, Builder>,
}

impl Default for RhsCatalog {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl RhsCatalog {
    pub fn empty() -> Self {
        Self { builders: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut c = Self::empty();
        c.register("constant", |r: &RhsRecord| {
            let value = r.value.unwrap_or(1.0);
            Ok(Box::new(Sampled { name: "constant", g: move |_: &[f64]| value, mean_free: false }) as Box<dyn RightHandSide>)
        });
        c.register("cos-pi-x", |r: &RhsRecord| {
            let value = r.value.unwrap_or(1.0);
            Ok(Box::new(Sampled {
                name: "cos-pi-x",
                g: move |x: &[f64]| value * (PI * x[0]).cos(),
                mean_free: true,
            }) as Box<dyn RightHandSide>)
        });
        c.register("radial-bump", |r: &RhsRecord| {
            let value = r.value.unwrap_or(1.0);
            let radius = r.radius.unwrap_or(0.5);
            if !(radius > 0.0) {
                return Err(RhsError::Invalid { name: r.name.clone(), message: format!("radius must be positive, got {radius}") });
            }
            let center = r.center.clone().unwrap_or_default();
            // (1 − |x−c|²/ρ²)₊
            Ok(Box::new(Sampled {
                name: "radial-bump",
                g: move |x: &[f64]| {
                    let d2: f64 = x
                        .iter()
                        .enumerate()
                        .map(|(i, xi)| (xi - center.get(i).copied().unwrap_or(0.0)).powi(2))
                        .sum();
                    value * (1.0 - d2 / (radius * radius)).max(0.0)
                },
                mean_free: false,
            }) as Box<dyn RightHandSide>)
        });
        c.register("cellwise-file", |r: &RhsRecord| {
            let path = r.path.clone().ok_or_else(|| RhsError::Invalid {
                name: r.name.clone(),
                message: "field `path` is required".into(),
            })?;
            Ok(Box::new(CellwiseFile { path }) as Box<dyn RightHandSide>)
        });
        c
    }

    pub fn register(
        &mut self,
        name: &str,
        builder: impl Fn(&RhsRecord) -> Result<Box<dyn RightHandSide>> + Send + Sync + 'static,
    ) {
        self.builders.insert(name.to_string(), Box::new(builder));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn build(&self, record: &RhsRecord) -> Result<Box<dyn RightHandSide>> {
        let builder = self
            .builders
            .get(&record.name)
            .ok_or_else(|| RhsError::Unknown(record.name.clone()))?;
        builder(record)
    }
}
