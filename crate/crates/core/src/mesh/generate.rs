use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Mesh, MeshError, Result};

/// Geometry of a convex domain as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    /// `[0, side]²`.
    Square {
        #[serde(default = "unit")]
        side: f64,
    },
    /// Counter-clockwise, strictly convex vertex list.
    Polygon { vertices: Vec<[f64; 2]> },
    /// Disk of radius `radius` centred at the origin.
    Disk {
        #[serde(default = "unit")]
        radius: f64,
    },
    Box { lower: [f64; 3], upper: [f64; 3] },
}

fn unit() -> f64 {
    1.0
}

impl DomainSpec {
    pub fn unit_square() -> Self {
        DomainSpec::Square { side: 1.0 }
    }

    pub fn unit_disk() -> Self {
        DomainSpec::Disk { radius: 1.0 }
    }

    pub fn reference_triangle() -> Self {
        DomainSpec::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Box { .. } => 3,
            _ => 2,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DomainSpec::Square { side } => format!("square(side={side})"),
            DomainSpec::Polygon { vertices } if vertices.len() == 3 => "triangle".into(),
            DomainSpec::Polygon { vertices } => format!("polygon({})", vertices.len()),
            DomainSpec::Disk { radius } => format!("disk(R={radius})"),
            DomainSpec::Box { lower, upper } => format!(
                "box({}x{}x{})",
                upper[0] - lower[0],
                upper[1] - lower[1],
                upper[2] - lower[2]
            ),
        }
    }

    pub fn mesh(&self, h: f64) -> Result<Mesh> {
        match self {
            DomainSpec::Square { side } => {
                triangulate_convex_polygon(&[[0.0, 0.0], [*side, 0.0], [*side, *side], [0.0, *side]], h)
            }
            DomainSpec::Polygon { vertices } => triangulate_convex_polygon(vertices, h),
            DomainSpec::Disk { radius } => disk_mesh(*radius, h),
            DomainSpec::Box { lower, upper } => box_mesh(*lower, *upper, h),
        }
    }
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(MeshError::Domain(format!("target size must be positive, got {h}")))
    }
}

/// Fan from the first vertex, then uniform red refinement until every cell
/// has diameter at most `h_target`.
pub fn triangulate_convex_polygon(vertices: &[[f64; 2]], h_target: f64) -> Result<Mesh> {
    check_h(h_target)?;
    let n = vertices.len();
    if n < 3 {
        return Err(MeshError::Domain(format!("polygon needs at least 3 vertices, got {n}")));
    }
    let scale = vertices
        .iter()
        .flat_map(|a| vertices.iter().map(move |b| (a[0] - b[0]).hypot(a[1] - b[1])))
        .fold(0.0, f64::max);
    let mut turning = 0.0;
    for i in 0..n {
        let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
        let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - b[0], c[1] - b[1]]);
        let cross = e1[0] * e2[1] - e1[1] * e2[0];
        if !(cross > 1e-12 * scale * scale) {
            return Err(MeshError::Domain(format!(
                "polygon is not strictly convex and counter-clockwise at vertex {}",
                (i + 1) % n
            )));
        }
        turning += cross.atan2(e1[0] * e2[0] + e1[1] * e2[1]);
    }
    if turning > 2.0 * PI + 1e-9 {
        return Err(MeshError::Domain("polygon boundary winds more than once".into()));
    }

    let mut points: Vec<f64> = vertices.iter().flat_map(|v| [v[0], v[1]]).collect();
    let mut cells: Vec<usize> = (1..n - 1).flat_map(|i| [0, i, i + 1]).collect();
    let mut mesh = Mesh::new(2, points.clone(), cells.clone())?;
    while mesh.h() > h_target * (1.0 + 1e-12) {
        (points, cells) = refine_triangles(&points, &cells);
        mesh = Mesh::new(2, points.clone(), cells.clone())?;
    }
    Ok(mesh)
}

/// Splits every triangle into four through its edge midpoints.
fn refine_triangles(points: &[f64], cells: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let mut points = points.to_vec();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, points: &mut Vec<f64>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            let idx = points.len() / 2;
            let (x, y) = (0.5 * (points[2 * a] + points[2 * b]), 0.5 * (points[2 * a + 1] + points[2 * b + 1]));
            points.push(x);
            points.push(y);
            idx
        })
    };
    let mut out = Vec::with_capacity(cells.len() * 4);
    for t in cells.chunks(3) {
        let (a, b, c) = (t[0], t[1], t[2]);
        let ab = midpoint(a, b, &mut points);
        let bc = midpoint(b, c, &mut points);
        let ca = midpoint(c, a, &mut points);
        out.extend([a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca]);
    }
    (points, out)
}

/// Disk mesh with the fewest rings whose cells all have diameter at most
/// `h_target`.
pub fn disk_mesh(radius: f64, h_target: f64) -> Result<Mesh> {
    check_h(h_target)?;
    let mut rings = (radius / h_target).ceil().max(1.0) as usize;
    let mut mesh = disk_mesh_rings(radius, rings)?;
    if mesh.h() > h_target {
        // diameters scale like 1/rings; jump close, then step
        rings = ((rings as f64) * mesh.h() / h_target).ceil() as usize;
        mesh = disk_mesh_rings(radius, rings)?;
        while mesh.h() > h_target {
            rings += 1;
            mesh = disk_mesh_rings(radius, rings)?;
        }
    }
    while rings > 1 {
        let coarser = disk_mesh_rings(radius, rings - 1)?;
        if coarser.h() > h_target {
            break;
        }
        rings -= 1;
        mesh = coarser;
    }
    Ok(mesh)
}

/// Concentric-ring triangulation of the regular `6·rings`-gon inscribed in
/// the circle of radius `radius`: ring `j` carries `6j` equally spaced
/// vertices at radius `j·radius/rings`, consecutive rings are zipped by
/// angle. The mesh has `6·rings²` cells and diameter close to
/// `1.45·radius/rings`.
pub fn disk_mesh_rings(radius: f64, rings: usize) -> Result<Mesh> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(MeshError::Domain(format!("radius must be positive, got {radius}")));
    }
    if rings == 0 {
        return Err(MeshError::Domain("need at least one ring".into()));
    }
    let mut points = vec![0.0, 0.0];
    let ring_start = |j: usize| 1 + 3 * j * (j - 1);
    for j in 1..=rings {
        let r = radius * j as f64 / rings as f64;
        let m = 6 * j;
        for k in 0..m {
            let theta = 2.0 * PI * k as f64 / m as f64;
            points.push(r * theta.cos());
            points.push(r * theta.sin());
        }
    }
    let mut cells = Vec::with_capacity(18 * rings * rings);
    for k in 0..6 {
        cells.extend([0, ring_start(1) + k, ring_start(1) + (k + 1) % 6]);
    }
    for j in 1..rings {
        let (mi, mo) = (6 * j, 6 * (j + 1));
        let (si, so) = (ring_start(j), ring_start(j + 1));
        let (mut i, mut o) = (0, 0);
        while i < mi || o < mo {
            // compare next angles (i+1)/mi and (o+1)/mo exactly
            let advance_inner = o == mo || (i < mi && (i + 1) * mo <= (o + 1) * mi);
            if advance_inner {
                cells.extend([si + i % mi, si + (i + 1) % mi, so + o % mo]);
                i += 1;
            } else {
                cells.extend([si + i % mi, so + (o + 1) % mo, so + o % mo]);
                o += 1;
            }
        }
    }
    Mesh::new(2, points, cells)
}

/// Structured tetrahedral mesh of an axis-aligned box: each cube is split
/// into six tetrahedra sharing its main diagonal.
pub fn box_mesh(lower: [f64; 3], upper: [f64; 3], h_target: f64) -> Result<Mesh> {
    check_h(h_target)?;
    let mut counts = [0usize; 3];
    for c in 0..3 {
        let len = upper[c] - lower[c];
        if !(len > 0.0 && len.is_finite()) {
            return Err(MeshError::Domain(format!("box extent {c} must be positive, got {len}")));
        }
        counts[c] = ((len * 3f64.sqrt() / h_target).ceil() as usize).max(1);
    }
    let [nx, ny, nz] = counts;
    let idx = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut points = Vec::with_capacity(3 * (nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                points.push(lower[0] + (upper[0] - lower[0]) * i as f64 / nx as f64);
                points.push(lower[1] + (upper[1] - lower[1]) * j as f64 / ny as f64);
                points.push(lower[2] + (upper[2] - lower[2]) * k as f64 / nz as f64);
            }
        }
    }
    const PATHS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(24 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for path in PATHS {
                    let mut corner = [i, j, k];
                    cells.push(idx(corner[0], corner[1], corner[2]));
                    for axis in path {
                        corner[axis] += 1;
                        cells.push(idx(corner[0], corner[1], corner[2]));
                    }
                }
            }
        }
    }
    Mesh::new(3, points, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_examples() {
        let sq = triangulate_convex_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 0.5).unwrap();
        assert!((sq.measure() - 1.0).abs() < 1e-15);
        assert!(sq.h() <= 0.5);
        let tri = triangulate_convex_polygon(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 10.0).unwrap();
        assert_eq!(tri.num_cells(), 1);
        assert_eq!(tri.measure(), 0.5);
        let collinear = triangulate_convex_polygon(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]], 1.0);
        assert!(matches!(collinear, Err(MeshError::Domain(_))));
        let clockwise = triangulate_convex_polygon(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], 1.0);
        assert!(clockwise.is_err());
        let star: Vec<[f64; 2]> = (0..5)
            .map(|k| {
                let t = 4.0 * PI * k as f64 / 5.0;
                [t.cos(), t.sin()]
            })
            .collect();
        assert!(triangulate_convex_polygon(&star, 1.0).is_err());
        assert!(triangulate_convex_polygon(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0.0).is_err());
    }

    #[test]
    fn boundary_vertices_lie_on_polygon() {
        let sq = triangulate_convex_polygon(&[[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]], 0.3).unwrap();
        let mut count = 0;
        for v in sq.boundary_vertices() {
            let x = sq.vertex(v);
            let on = x[0].abs() < 1e-14 || x[1].abs() < 1e-14 || (x[0] - 2.0).abs() < 1e-14 || (x[1] - 2.0).abs() < 1e-14;
            assert!(on, "{x:?}");
            count += 1;
        }
        // 16 boundary segments per side after three refinements
        assert_eq!(count, 4 * 16);
    }

    #[test]
    fn refinement_quadruples_cells() {
        let verts = [[0.0, 0.0], [1.0, 0.0], [1.2, 0.8], [0.1, 1.0]];
        let coarse = triangulate_convex_polygon(&verts, 0.2).unwrap();
        let fine = triangulate_convex_polygon(&verts, 0.5 * coarse.h()).unwrap();
        let r = fine.num_cells() as f64 / coarse.num_cells() as f64;
        assert!((3.0..=5.0).contains(&r), "{r}");
        let d1 = disk_mesh(1.0, 0.1).unwrap();
        let d2 = disk_mesh(1.0, 0.05).unwrap();
        let r = d2.num_cells() as f64 / d1.num_cells() as f64;
        assert!((3.0..=5.0).contains(&r), "{r}");
    }

    #[test]
    fn disk_examples() {
        let hex = disk_mesh_rings(1.0, 1).unwrap();
        assert_eq!(hex.num_cells(), 6);
        assert!((hex.measure() - 1.5 * 3f64.sqrt()).abs() < 1e-14);
        let big = disk_mesh_rings(2.0, 1).unwrap();
        assert!((big.measure() - 4.0 * hex.measure()).abs() < 1e-13);
        let mut prev = 0.0;
        for k in 1..12 {
            let m = disk_mesh_rings(1.0, k).unwrap();
            assert_eq!(m.num_cells(), 6 * k * k);
            // area of the regular 6k-gon
            let exact = 3.0 * k as f64 * (PI / (3.0 * k as f64)).sin();
            assert!((m.measure() - exact).abs() < 1e-12);
            assert!(m.measure() > prev && m.measure() < PI);
            prev = m.measure();
            assert_eq!(m.boundary_vertices().count(), 6 * k);
            for v in m.boundary_vertices() {
                let x = m.vertex(v);
                assert!((x[0].hypot(x[1]) - 1.0).abs() < 1e-14);
            }
        }
        let d = disk_mesh(1.0, 0.05).unwrap();
        assert!(d.h() <= 0.05);
        assert!((3000..=5500).contains(&d.num_cells()), "{}", d.num_cells());
        let coarser = disk_mesh_rings(1.0, (d.num_cells() as f64 / 6.0).sqrt() as usize - 1).unwrap();
        assert!(coarser.h() > 0.05);
    }

    #[test]
    fn box_examples() {
        let b = box_mesh([0.0; 3], [1.0; 3], 2.0).unwrap();
        assert_eq!(b.num_cells(), 6);
        assert!((b.measure() - 1.0).abs() < 1e-15);
        let b = box_mesh([-1.0, 0.0, 0.0], [1.0, 1.0, 0.5], 0.4).unwrap();
        assert!((b.measure() - 1.0).abs() < 1e-12);
        assert!(b.h() <= 0.4 + 1e-15);
        assert_eq!(b.num_vertices() - b.boundary_vertices().count(), {
            let n = |l: f64| (l * 3f64.sqrt() / 0.4).ceil() as usize - 1;
            n(2.0) * n(1.0) * n(0.5)
        });
        assert!(box_mesh([0.0; 3], [1.0, 0.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn domain_spec_serde() {
        let d: DomainSpec = serde_json::from_str(r#"{"kind":"square"}"#).unwrap();
        assert_eq!(d, DomainSpec::unit_square());
        let d: DomainSpec = serde_json::from_str(r#"{"kind":"disk","radius":2.0}"#).unwrap();
        assert_eq!(d.label(), "disk(R=2)");
        assert_eq!(DomainSpec::reference_triangle().mesh(0.25).unwrap().measure(), 0.5);
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"disk","r":2.0}"#).is_err());
        assert_eq!(DomainSpec::Box { lower: [0.0; 3], upper: [1.0; 3] }.dim(), 3);
    }
}
