//! Line-oriented mesh text format.
//!
//! ```text
//! uhlenbeck-mesh 1
//! dim 2
//! vertices 4
//! cells 2
//! 0 0 1          x y boundary-flag, one line per vertex
//! ...
//! 0 1 2          vertex indices, one line per cell
//! ```
//!
//! Coordinates use the shortest representation that round-trips, so
//! writing and re-reading reproduces the mesh bit for bit.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{Mesh, MeshError, Result};

const MAGIC: &str = "uhlenbeck-mesh 1";

impl Mesh {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "vertices {}", self.num_vertices());
        let _ = writeln!(s, "cells {}", self.num_cells());
        for v in 0..self.num_vertices() {
            for x in self.vertex(v) {
                let _ = write!(s, "{x} ");
            }
            let _ = writeln!(s, "{}", u8::from(self.boundary[v]));
        }
        for cell in self.cells() {
            let line: Vec<String> = cell.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    /// Parses [`Mesh::to_text`] output. Boundary flags are recomputed and
    /// must agree with the stored ones.
    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| MeshError::Parse { line: 0, message: format!("missing {what}") })
        };
        let (ln, magic) = next("header")?;
        if magic != MAGIC {
            return Err(parse(ln, format!("expected `{MAGIC}`")));
        }
        let dim = header_value(next("dim")?, "dim")?;
        let nv = header_value(next("vertices")?, "vertices")?;
        let nc = header_value(next("cells")?, "cells")?;
        let mut points = Vec::with_capacity(nv * dim);
        let mut flags = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = next("vertex line")?;
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields.len() != dim + 1 {
                return Err(parse(ln, format!("expected {} fields", dim + 1)));
            }
            for f in &fields[..dim] {
                points.push(f.parse::<f64>().map_err(|e| parse(ln, e.to_string()))?);
            }
            flags.push(match fields[dim] {
                "0" => false,
                "1" => true,
                other => return Err(parse(ln, format!("boundary flag `{other}`"))),
            });
        }
        let mut cells = Vec::with_capacity(nc * (dim + 1));
        for _ in 0..nc {
            let (ln, l) = next("cell line")?;
            let before = cells.len();
            for f in l.split_whitespace() {
                cells.push(f.parse::<usize>().map_err(|e| parse(ln, e.to_string()))?);
            }
            if cells.len() - before != dim + 1 {
                return Err(parse(ln, format!("expected {} vertex indices", dim + 1)));
            }
        }
        let mesh = Mesh::new(dim, points, cells)?;
        if mesh.boundary != flags {
            return Err(MeshError::Parse {
                line: 0,
                message: "boundary flags disagree with connectivity".into(),
            });
        }
        Ok(mesh)
    }

    /// Hex SHA-256 of [`Mesh::to_text`].
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse(line: usize, message: String) -> MeshError {
    MeshError::Parse { line, message }
}

fn header_value((ln, l): (usize, &str), key: &str) -> Result<usize> {
    let rest = l
        .strip_prefix(key)
        .ok_or_else(|| parse(ln, format!("expected `{key} <count>`")))?;
    rest.trim().parse().map_err(|_| parse(ln, format!("bad `{key}` count")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, disk_mesh_rings};

    #[test]
    fn round_trip_is_exact() {
        for mesh in [disk_mesh_rings(1.3, 4).unwrap(), box_mesh([0.0; 3], [1.0, 0.7, 0.3], 0.5).unwrap()] {
            let text = mesh.to_text();
            let back = Mesh::from_text(&text).unwrap();
            assert_eq!(back, mesh);
            assert_eq!(back.content_hash(), mesh.content_hash());
        }
        let hex = disk_mesh_rings(1.0, 1).unwrap().to_text();
        assert!(hex.starts_with("uhlenbeck-mesh 1\ndim 2\nvertices 7\ncells 6\n"));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let text = disk_mesh_rings(1.0, 1).unwrap().to_text();
        let broken = text.replacen("cells 6", "cells six", 1);
        assert!(matches!(Mesh::from_text(&broken), Err(MeshError::Parse { line: 4, .. })));
        let truncated: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(Mesh::from_text(&truncated).is_err());
        assert!(Mesh::from_text("hello").is_err());
        assert_ne!(
            disk_mesh_rings(1.0, 2).unwrap().content_hash(),
            disk_mesh_rings(1.0, 3).unwrap().content_hash()
        );
    }
}
