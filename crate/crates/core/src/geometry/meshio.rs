use super::{Mesh, Point};
use crate::error::{Error, Result};
use std::fmt::Write as _;

/// Serializes a mesh in the plain-text `nodes` / `triangles` / `boundary`
/// section format.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# robinucq mesh, h = {:.17e}", mesh.h());
    let _ = writeln!(out, "nodes {}", mesh.num_nodes());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(out, "{i} {:.17e} {:.17e}", p.x, p.y);
    }
    let _ = writeln!(out, "triangles {}", mesh.triangles().len());
    for t in mesh.triangles() {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "boundary {}", mesh.num_boundary());
    for (k, &i) in mesh.boundary_nodes().iter().enumerate() {
        let _ = writeln!(out, "{i} {:.17e}", mesh.arclength()[k]);
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Nodes,
    Triangles,
    Boundary,
}

/// Parses the text mesh format. Blank lines and `#` comments are ignored;
/// a section starts with its keyword, optionally followed by a count.
pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut section = Section::None;
    let mut nodes: Vec<(usize, Point)> = Vec::new();
    let mut triangles = Vec::new();
    let mut boundary = Vec::new();
    let mut arclength = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        match fields[0] {
            "nodes" => {
                section = Section::Nodes;
                continue;
            }
            "triangles" => {
                section = Section::Triangles;
                continue;
            }
            "boundary" => {
                section = Section::Boundary;
                continue;
            }
            _ => {}
        }
        let num = |k: usize| -> Result<f64> {
            fields
                .get(k)
                .ok_or_else(|| err(format!("missing field {}", k + 1)))?
                .parse::<f64>()
                .map_err(|e| err(format!("{e}")))
        };
        let idx = |k: usize| -> Result<usize> {
            fields
                .get(k)
                .ok_or_else(|| err(format!("missing field {}", k + 1)))?
                .parse::<usize>()
                .map_err(|e| err(format!("{e}")))
        };
        match section {
            Section::None => return Err(err("data before any section header".into())),
            Section::Nodes => nodes.push((idx(0)?, Point::new(num(1)?, num(2)?))),
            Section::Triangles => triangles.push([idx(0)?, idx(1)?, idx(2)?]),
            Section::Boundary => {
                boundary.push(idx(0)?);
                arclength.push(num(1)?);
            }
        }
    }
    nodes.sort_by_key(|(i, _)| *i);
    for (expected, (i, _)) in nodes.iter().enumerate() {
        if *i != expected {
            return Err(Error::InvalidMesh(format!("node indices must be 0..n, missing {expected}")));
        }
    }
    Mesh::from_parts(nodes.into_iter().map(|(_, p)| p).collect(), triangles, boundary, arclength)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, Domain};

    #[test]
    fn text_round_trip_is_exact() {
        let m = triangulate(&Domain::regular(12, 1.0).unwrap(), 0.3).unwrap();
        let text = write_mesh(&m);
        let back = read_mesh(&text).unwrap();
        assert_eq!(back.nodes(), m.nodes());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_nodes(), m.boundary_nodes());
        assert_eq!(back.arclength(), m.arclength());
        assert_eq!(write_mesh(&back), text);
    }

    #[test]
    fn comments_and_errors() {
        let text = "# unit triangle\nnodes\n0 0 0\n1 1 0 # right\n2 0 1\ntriangles\n0 1 2\nboundary\n0 0\n1 1\n2 2.414\n";
        let m = read_mesh(text).unwrap();
        assert_eq!(m.triangles().len(), 1);
        assert!(matches!(read_mesh("nodes\n0 zero 1\n"), Err(Error::Parse { line: 2, .. })));
    }
}
