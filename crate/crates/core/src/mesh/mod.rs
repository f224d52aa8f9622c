//! Simplicial meshes of convex domains and P1 field calculus.
//!
//! Coordinates and connectivity are stored flat: vertex `v` occupies
//! `points[v*dim .. (v+1)*dim]` and cell `k` occupies
//! `cells[k*(dim+1) .. (k+1)*(dim+1)]`. Barycentric gradients, measures and
//! lumped vertex masses are computed once at construction.

mod generate;
mod io;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

pub use generate::{box_mesh, disk_mesh, disk_mesh_rings, triangulate_convex_polygon, DomainSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cell {cell} is degenerate (signed measure {measure:e})")]
    Degenerate { cell: usize, measure: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("mesh text line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, MeshError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    points: Vec<f64>,
    cells: Vec<usize>,
    boundary: Vec<bool>,
    measures: Vec<f64>,
    /// `(dim+1) × dim` barycentric gradients per cell, row per local vertex.
    bary: Vec<f64>,
    vertex_masses: Vec<f64>,
    h: f64,
}

impl Mesh {
    /// Validates connectivity, orients every cell positively and classifies
    /// boundary vertices as those lying on a facet owned by a single cell.
    pub fn new(dim: usize, points: Vec<f64>, mut cells: Vec<usize>) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(MeshError::Domain(format!("dimension must be 2 or 3, got {dim}")));
        }
        if points.len() % dim != 0 || cells.len() % (dim + 1) != 0 || cells.is_empty() {
            return Err(MeshError::Shape(format!(
                "{} coordinates / {} cell indices for dimension {dim}",
                points.len(),
                cells.len()
            )));
        }
        if let Some(x) = points.iter().find(|x| !x.is_finite()) {
            return Err(MeshError::Domain(format!("non-finite coordinate {x}")));
        }
        let nv = points.len() / dim;
        if let Some(&i) = cells.iter().find(|&&i| i >= nv) {
            return Err(MeshError::Shape(format!("cell references vertex {i} of {nv}")));
        }
        let nc = cells.len() / (dim + 1);
        let scale = bounding_diameter(dim, &points).max(f64::MIN_POSITIVE);

        let mut measures = Vec::with_capacity(nc);
        let mut bary = Vec::with_capacity(nc * (dim + 1) * dim);
        let mut h: f64 = 0.0;
        for k in 0..nc {
            let cell = &mut cells[k * (dim + 1)..(k + 1) * (dim + 1)];
            let mut geo = simplex_geometry(dim, &points, cell);
            if geo.signed_measure < 0.0 {
                cell.swap(0, 1);
                geo = simplex_geometry(dim, &points, cell);
            }
            if !(geo.signed_measure > 1e-14 * scale.powi(dim as i32)) {
                return Err(MeshError::Degenerate { cell: k, measure: geo.signed_measure });
            }
            measures.push(geo.signed_measure);
            bary.extend_from_slice(&geo.gradients);
            h = h.max(cell_diameter(dim, &points, cell));
        }

        let mut vertex_masses = vec![0.0; nv];
        for k in 0..nc {
            let share = measures[k] / (dim + 1) as f64;
            for &v in &cells[k * (dim + 1)..(k + 1) * (dim + 1)] {
                vertex_masses[v] += share;
            }
        }

        let mut facet_count: HashMap<Vec<usize>, u32> = HashMap::new();
        for cell in cells.chunks(dim + 1) {
            for skip in 0..=dim {
                let mut facet: Vec<usize> = cell
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, v)| *v)
                    .collect();
                facet.sort_unstable();
                *facet_count.entry(facet).or_insert(0) += 1;
            }
        }
        let mut boundary = vec![false; nv];
        for (facet, count) in &facet_count {
            if *count == 1 {
                for &v in facet {
                    boundary[v] = true;
                }
            }
        }

        Ok(Self {
            dim,
            points,
            cells,
            boundary,
            measures,
            bary,
            vertex_masses,
            h,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.measures.len()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.points[v * self.dim..(v + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn cell(&self, k: usize) -> &[usize] {
        &self.cells[k * (self.dim + 1)..(k + 1) * (self.dim + 1)]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks(self.dim + 1)
    }

    /// Gradient of the barycentric coordinate of local vertex `i` in cell `k`.
    pub fn barycentric_gradient(&self, k: usize, i: usize) -> &[f64] {
        let d = self.dim;
        let off = (k * (d + 1) + i) * d;
        &self.bary[off..off + d]
    }

    pub fn cell_measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn vertex_masses(&self) -> &[f64] {
        &self.vertex_masses
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary.iter().enumerate().filter(|(_, b)| **b).map(|(v, _)| v)
    }

    /// Maximum cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn measure(&self) -> f64 {
        self.measures.iter().sum()
    }

    pub fn cell_centroid(&self, k: usize) -> Vec<f64> {
        let d = self.dim;
        let mut c = vec![0.0; d];
        for &v in self.cell(k) {
            for (ci, x) in c.iter_mut().zip(self.vertex(v)) {
                *ci += x / (d + 1) as f64;
            }
        }
        c
    }
}

struct SimplexGeometry {
    signed_measure: f64,
    gradients: Vec<f64>,
}

fn simplex_geometry(dim: usize, points: &[f64], cell: &[usize]) -> SimplexGeometry {
    let p = |v: usize, c: usize| points[v * dim + c];
    // Columns of J are the edge vectors x_i - x_0.
    let mut j = [[0.0; 3]; 3];
    for i in 0..dim {
        for c in 0..dim {
            j[c][i] = p(cell[i + 1], c) - p(cell[0], c);
        }
    }
    let (det, inv) = if dim == 2 {
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv = [
            [j[1][1] / det, -j[0][1] / det, 0.0],
            [-j[1][0] / det, j[0][0] / det, 0.0],
            [0.0; 3],
        ];
        (det, inv)
    } else {
        let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
            - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
            + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
        let mut inv = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                inv[r][c] = (j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]) / det;
            }
        }
        (det, inv)
    };
    let factorial = if dim == 2 { 2.0 } else { 6.0 };
    // Row i of J⁻¹ is ∇λ_{i+1}; ∇λ_0 closes the partition of unity.
    let mut gradients = vec![0.0; (dim + 1) * dim];
    for i in 0..dim {
        for c in 0..dim {
            gradients[(i + 1) * dim + c] = inv[i][c];
            gradients[c] -= inv[i][c];
        }
    }
    SimplexGeometry {
        signed_measure: det / factorial,
        gradients,
    }
}

fn cell_diameter(dim: usize, points: &[f64], cell: &[usize]) -> f64 {
    let mut d2: f64 = 0.0;
    for (a, &u) in cell.iter().enumerate() {
        for &v in &cell[a + 1..] {
            let s: f64 = (0..dim)
                .map(|c| (points[u * dim + c] - points[v * dim + c]).powi(2))
                .sum();
            d2 = d2.max(s);
        }
    }
    d2.sqrt()
}

fn bounding_diameter(dim: usize, points: &[f64]) -> f64 {
    let mut s = 0.0;
    for c in 0..dim {
        let (lo, hi) = points
            .iter()
            .skip(c)
            .step_by(dim)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
        s += (hi - lo) * (hi - lo);
    }
    s.sqrt()
}

/// Per-vertex vectors in `R^N`, vertex-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    mesh: Arc<Mesh>,
    components: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(mesh: Arc<Mesh>, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 || values.len() != components * mesh.num_vertices() {
            return Err(MeshError::Shape(format!(
                "{} values for {} vertices × {components} components",
                values.len(),
                mesh.num_vertices()
            )));
        }
        Ok(Self { mesh, components, values })
    }

    pub fn zeros(mesh: Arc<Mesh>, components: usize) -> Self {
        let values = vec![0.0; components * mesh.num_vertices()];
        Self { mesh, components, values }
    }

    /// Samples `f(x) ∈ R^N` at every vertex.
    pub fn from_fn(mesh: Arc<Mesh>, components: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(components * mesh.num_vertices());
        for v in 0..mesh.num_vertices() {
            let y = f(mesh.vertex(v));
            if y.len() != components {
                return Err(MeshError::Shape(format!("sample has {} components, want {components}", y.len())));
            }
            values.extend(y);
        }
        Ok(Self { mesh, components, values })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, v: usize) -> &[f64] {
        &self.values[v * self.components..(v + 1) * self.components]
    }

    /// Lumped mean `∫u_α / |Ω|` of each component.
    pub fn component_means(&self) -> Vec<f64> {
        let n = self.components;
        let mut acc = vec![0.0; n];
        for (v, m) in self.mesh.vertex_masses().iter().enumerate() {
            for a in 0..n {
                acc[a] += m * self.values[v * n + a];
            }
        }
        let total = self.mesh.measure();
        acc.into_iter().map(|s| s / total).collect()
    }
}

/// Cellwise constant `N × n` gradient matrices, row-major per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGradients {
    components: usize,
    dim: usize,
    data: Vec<f64>,
}

impl CellGradients {
    pub fn components(&self) -> usize {
        self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.components * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn cell(&self, k: usize) -> &[f64] {
        let s = self.components * self.dim;
        &self.data[k * s..(k + 1) * s]
    }

    pub fn frobenius(&self, k: usize) -> f64 {
        self.cell(k).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn frobenius_norms(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.frobenius(k)).collect()
    }

    pub fn max_frobenius(&self) -> f64 {
        (0..self.len()).map(|k| self.frobenius(k)).fold(0.0, f64::max)
    }
}

/// Exact gradient of the piecewise-linear interpolant.
pub fn p1_gradient(field: &NodalField) -> CellGradients {
    let mesh = &field.mesh;
    let (n, d) = (field.components, mesh.dim);
    let mut data = vec![0.0; mesh.num_cells() * n * d];
    for k in 0..mesh.num_cells() {
        let g = &mut data[k * n * d..(k + 1) * n * d];
        for (i, &v) in mesh.cell(k).iter().enumerate() {
            let grad_l = mesh.barycentric_gradient(k, i);
            for a in 0..n {
                let u = field.values[v * n + a];
                for c in 0..d {
                    g[a * d + c] += u * grad_l[c];
                }
            }
        }
    }
    CellGradients { components: n, dim: d, data }
}

/// `Σ value_k |K_k|`.
pub fn integrate_cellwise(mesh: &Mesh, cell_values: &[f64]) -> Result<f64> {
    if cell_values.len() != mesh.num_cells() {
        return Err(MeshError::Shape(format!(
            "{} cell values for {} cells",
            cell_values.len(),
            mesh.num_cells()
        )));
    }
    Ok(cell_values.iter().zip(&mesh.measures).map(|(v, m)| v * m).sum())
}

/// Lumped-mass rule `Σ value_v m_v`.
pub fn vertex_quadrature(mesh: &Mesh, vertex_values: &[f64]) -> Result<f64> {
    if vertex_values.len() != mesh.num_vertices() {
        return Err(MeshError::Shape(format!(
            "{} vertex values for {} vertices",
            vertex_values.len(),
            mesh.num_vertices()
        )));
    }
    Ok(vertex_values.iter().zip(&mesh.vertex_masses).map(|(v, m)| v * m).sum())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn unit_square(h: f64) -> Arc<Mesh> {
        Arc::new(triangulate_convex_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], h).unwrap())
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Mesh::new(1, vec![0.0, 1.0], vec![0, 1]), Err(MeshError::Domain(_))));
        assert!(matches!(Mesh::new(2, vec![0.0, 0.0, 1.0, 0.0], vec![0, 1, 2]), Err(MeshError::Shape(_))));
        let collinear = vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0];
        assert!(matches!(Mesh::new(2, collinear, vec![0, 1, 2]), Err(MeshError::Degenerate { .. })));
    }

    #[test]
    fn orientation_is_normalised() {
        let m = Mesh::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0], vec![0, 1, 2]).unwrap();
        assert_eq!(m.cell_measures(), &[0.5]);
        assert_eq!(m.boundary_vertices().count(), 3);
    }

    #[test]
    fn linear_fields_have_exact_gradients() {
        let mesh = unit_square(0.3);
        let u = NodalField::from_fn(mesh.clone(), 1, |x| vec![x[0]]).unwrap();
        let g = p1_gradient(&u);
        for k in 0..g.len() {
            assert!((g.cell(k)[0] - 1.0).abs() < 1e-13 && g.cell(k)[1].abs() < 1e-13);
        }
        let c = NodalField::from_fn(mesh.clone(), 2, |_| vec![3.0, -1.0]).unwrap();
        assert!(p1_gradient(&c).max_frobenius() < 1e-13);
    }

    #[test]
    fn box_gradients_exact() {
        let mesh = Arc::new(box_mesh([0.0; 3], [1.0, 2.0, 0.5], 0.6).unwrap());
        let u = NodalField::from_fn(mesh, 2, |x| vec![x[0] - 2.0 * x[2], 0.5 * x[1]]).unwrap();
        let g = p1_gradient(&u);
        for k in 0..g.len() {
            let expected = [1.0, 0.0, -2.0, 0.0, 0.5, 0.0];
            for (a, b) in g.cell(k).iter().zip(expected) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_rules() {
        let mesh = unit_square(0.5);
        let ones = vec![1.0; mesh.num_cells()];
        assert!((integrate_cellwise(&mesh, &ones).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(vertex_quadrature(&mesh, &vec![0.0; mesh.num_vertices()]).unwrap(), 0.0);
        assert!(integrate_cellwise(&mesh, &[1.0]).is_err());
        assert!(vertex_quadrature(&mesh, &[1.0]).is_err());

        // a linear integrand on one simplex: lumped = exact = |K| × centroid value
        let tri = Mesh::new(2, vec![0.0, 0.0, 2.0, 0.0, 0.0, 1.0], vec![0, 1, 2]).unwrap();
        let vals: Vec<f64> = (0..3).map(|v| 1.0 + 3.0 * tri.vertex(v)[0] - tri.vertex(v)[1]).collect();
        let c = tri.cell_centroid(0);
        let exact = 1.0 * (1.0 + 3.0 * c[0] - c[1]);
        assert!((vertex_quadrature(&tri, &vals).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn component_means() {
        let mesh = unit_square(0.5);
        let u = NodalField::from_fn(mesh, 2, |x| vec![x[0], 4.0]).unwrap();
        let m = u.component_means();
        assert!((m[0] - 0.5).abs() < 1e-14 && (m[1] - 4.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn affine_exactness_and_masses(cx in -3.0f64..3.0, cy in -3.0f64..3.0, r in 0.3f64..3.0, k in 1usize..4) {
            let mesh = Arc::new(disk_mesh_rings(r, k).unwrap());
            let u = NodalField::from_fn(mesh.clone(), 1, |x| vec![cx * x[0] + cy * x[1] + 1.0]).unwrap();
            let g = p1_gradient(&u);
            for i in 0..g.len() {
                prop_assert!((g.cell(i)[0] - cx).abs() < 1e-12 * (1.0 + cx.abs() + cy.abs()) / r);
                prop_assert!((g.cell(i)[1] - cy).abs() < 1e-12 * (1.0 + cx.abs() + cy.abs()) / r);
            }
            let mass: f64 = mesh.vertex_masses().iter().sum();
            prop_assert!((mass - mesh.measure()).abs() < 1e-12 * mesh.measure());
        }
    }
}
