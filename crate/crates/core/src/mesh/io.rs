//! Plain-text mesh files.
//!
//! ```text
//! ddfv-mesh <dim> <nverts> <ncells> <nbfaces>
//! x y [z]                  (nverts lines)
//! i0 i1 i2 [i3]            (ncells lines, 0-based vertex indices)
//! i0 i1 [i2] D|N           (nbfaces lines, boundary faces with their label)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryLabel, Mesh, MeshInput};
use crate::error::{DdfvError, Result};

fn parse_err(line: usize, reason: impl Into<String>) -> DdfvError {
    DdfvError::Parse {
        line,
        reason: reason.into(),
    }
}

/// Parse the text of a mesh file into a [`MeshInput`].
pub fn parse_mesh_input(text: &str) -> Result<MeshInput> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty mesh file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "ddfv-mesh" {
        return Err(parse_err(
            hline,
            "expected header `ddfv-mesh <dim> <nverts> <ncells> <nbfaces>`",
        ));
    }
    let num = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| parse_err(hline, format!("invalid count `{s}`")))
    };
    let (dim, nv, nc, nb) = (num(h[1])?, num(h[2])?, num(h[3])?, num(h[4])?);
    if dim != 2 && dim != 3 {
        return Err(parse_err(hline, format!("unsupported dimension {dim}")));
    }

    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of file while reading {what}")))
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertices")?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(ln, format!("invalid coordinate `{t}`")))
            })
            .collect::<Result<_>>()?;
        if c.len() != dim {
            return Err(parse_err(ln, format!("expected {dim} coordinates")));
        }
        vertices.push([c[0], c[1], if dim == 3 { c[2] } else { 0.0 }]);
    }
    let indices = |ln: usize, toks: &[&str]| -> Result<Vec<usize>> {
        toks.iter()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| parse_err(ln, format!("invalid index `{t}`")))
            })
            .collect()
    };
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = next("cells")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != dim + 1 {
            return Err(parse_err(
                ln,
                format!("expected {} vertex indices", dim + 1),
            ));
        }
        cells.push(indices(ln, &toks)?);
    }
    let mut boundary_faces = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = next("boundary faces")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != dim + 1 {
            return Err(parse_err(
                ln,
                format!("expected {dim} vertex indices and a label"),
            ));
        }
        let label = match toks[dim] {
            "D" => BoundaryLabel::Dirichlet,
            "N" => BoundaryLabel::Neumann,
            other => return Err(parse_err(ln, format!("unknown boundary label `{other}`"))),
        };
        boundary_faces.push((indices(ln, &toks[..dim])?, label));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after the declared entries"));
    }
    Ok(MeshInput {
        dim,
        vertices,
        cells,
        boundary_faces,
    })
}

/// Parse and build a mesh from the text of a mesh file.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    Mesh::build(parse_mesh_input(text)?)
}

/// Read and build a mesh from a file.
pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DdfvError::io(path, e))?;
    parse_mesh(&text)
}

/// Serialize the primal mesh and its boundary labels.
pub fn mesh_to_string(mesh: &Mesh) -> String {
    let dim = mesh.dim();
    let bfaces: Vec<_> = mesh.faces.iter().filter(|f| f.boundary.is_some()).collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "ddfv-mesh {dim} {} {} {}",
        mesh.vertices.len(),
        mesh.cells.len(),
        bfaces.len()
    );
    for v in &mesh.vertices {
        let coords: Vec<String> = v[..dim].iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(s, "{}", coords.join(" "));
    }
    for c in &mesh.cells {
        let idx: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", idx.join(" "));
    }
    for f in bfaces {
        let idx: Vec<String> = f.vertices.iter().map(|i| i.to_string()).collect();
        let label = match f.boundary {
            Some(BoundaryLabel::Dirichlet) => "D",
            _ => "N",
        };
        let _ = writeln!(s, "{} {label}", idx.join(" "));
    }
    s
}

/// Write the primal mesh and its boundary labels to a file.
pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| DdfvError::io(path, e))
}
