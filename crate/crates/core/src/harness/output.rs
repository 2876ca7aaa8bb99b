//! VTK and CSV output.

use std::fmt::Write as _;
use std::path::Path;

use super::overlay::SimplicialOverlay;
use crate::error::{DdfvError, Result};
use crate::mesh::Mesh;

/// A named table of numbers, written as CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.headers.len() {
            return Err(DdfvError::Mismatch(format!(
                "row of {} values for {} columns",
                row.len(),
                self.headers.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| DdfvError::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&table.headers).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|x| format!("{x:e}")))
            .map_err(io)?;
    }
    w.flush().map_err(|e| DdfvError::io(path, e))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let io = |e: csv::Error| DdfvError::io(path, std::io::Error::other(e));
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let headers = r.headers().map_err(io)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(io)?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| DdfvError::Parse {
                    line: line + 2,
                    reason: format!("{s:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { headers, rows })
}

/// Write point fields on the simplicial overlay as a legacy ASCII VTK
/// unstructured grid. Absent values (for example nodes that never activated)
/// are written as `-1`.
pub fn write_vtk_overlay(
    overlay: &SimplicialOverlay,
    fields: &[(&str, Vec<Option<f64>>)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let nv = overlay.dim + 1;
    let mut s = String::new();
    s.push_str(
        "# vtk DataFile Version 3.0\nddfv overlay fields\nASCII\nDATASET UNSTRUCTURED_GRID\n",
    );
    let _ = writeln!(s, "POINTS {} double", overlay.n_nodes());
    for p in &overlay.nodes {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    let ns = overlay.simplices.len();
    let _ = writeln!(s, "CELLS {} {}", ns, ns * (nv + 1));
    for simplex in &overlay.simplices {
        s.push_str(&nv.to_string());
        for &i in &simplex[..nv] {
            let _ = write!(s, " {i}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {ns}");
    let cell_type = if overlay.dim == 2 { "5" } else { "10" };
    for _ in 0..ns {
        s.push_str(cell_type);
        s.push('\n');
    }
    let _ = writeln!(s, "POINT_DATA {}", overlay.n_nodes());
    for (name, values) in fields {
        if values.len() != overlay.n_nodes() {
            return Err(DdfvError::Mismatch(format!(
                "field {name} has {} values for {} nodes",
                values.len(),
                overlay.n_nodes()
            )));
        }
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(s, "{}", v.unwrap_or(-1.0));
        }
    }
    std::fs::write(path, s).map_err(|e| DdfvError::io(path, e))
}

/// Write piecewise-constant element fields (one value per element of the
/// mesh decomposition) as a legacy ASCII VTK unstructured grid.
pub fn write_vtk_elements(
    mesh: &Mesh,
    fields: &[(&str, Vec<f64>)],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let dim = mesh.dim();
    let nv = dim + 1;
    let ne = mesh.elements.len();
    let mut s = String::new();
    s.push_str(
        "# vtk DataFile Version 3.0\nddfv element fields\nASCII\nDATASET UNSTRUCTURED_GRID\n",
    );
    let _ = writeln!(s, "POINTS {} double", ne * nv);
    for el in &mesh.elements {
        for p in &el.simplex.points[..nv] {
            let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
        }
    }
    let _ = writeln!(s, "CELLS {} {}", ne, ne * (nv + 1));
    for e in 0..ne {
        s.push_str(&nv.to_string());
        for a in 0..nv {
            let _ = write!(s, " {}", e * nv + a);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    let cell_type = if dim == 2 { "5" } else { "10" };
    for _ in 0..ne {
        s.push_str(cell_type);
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_DATA {ne}");
    for (name, values) in fields {
        if values.len() != ne {
            return Err(DdfvError::Mismatch(format!(
                "field {name} has {} values for {ne} elements",
                values.len()
            )));
        }
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(s, "{v}");
        }
    }
    std::fs::write(path, s).map_err(|e| DdfvError::io(path, e))
}
