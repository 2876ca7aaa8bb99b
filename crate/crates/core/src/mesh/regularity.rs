//! Mesh regularity metrics: distortion ratios, inclinations, neighbour
//! counts, face/volume ratios and the mesh size.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::geometry::{add, cross, det2, dist, norm, scale, sub, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Maximum of `(diam K + diam L)/d_{K,L}` over primal and dual neighbours and
    /// of `diam D / min(d_{K,L}, d_{K*,L*})` over diamonds.
    pub reg_distance: f64,
    /// Maximum inverse cosine of the primal inclination (between `x_K x_L`
    /// and the face normal) and inverse sine of the dual inclination (between
    /// a dual edge and the segment joining its midpoint to the face center).
    pub reg_inclination: f64,
    pub max_neighbors: usize,
    /// Maximum of `|K|L| d_{K,L} / Vol(K)` and the dual analogue.
    pub reg_volume_ratio: f64,
    /// Maximum diameter of primal volumes, dual volumes and diamonds.
    pub mesh_size: f64,
}

impl fmt::Display for RegularityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reg_distance     {:.6}", self.reg_distance)?;
        writeln!(f, "reg_inclination  {:.6}", self.reg_inclination)?;
        writeln!(f, "max_neighbors    {}", self.max_neighbors)?;
        writeln!(f, "reg_volume_ratio {:.6}", self.reg_volume_ratio)?;
        write!(f, "mesh_size        {:.6e}", self.mesh_size)
    }
}

fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.max(dist(points[i], points[j]));
        }
    }
    d
}

fn dedup(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

/// Compute all regularity metrics by exhaustive loops over the mesh objects.
pub fn regularity_report(mesh: &Mesh) -> RegularityReport {
    let dim = mesh.dim();
    let primal_diam: Vec<f64> = mesh
        .primal
        .iter()
        .map(|p| {
            diameter(
                &p.vertices
                    .iter()
                    .map(|&v| mesh.vertices[v])
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let dual_diam: Vec<f64> = mesh
        .dual
        .iter()
        .map(|dv| {
            let pts: Vec<Point> = dv
                .elements
                .iter()
                .flat_map(|&t| mesh.elements[t].simplex.vertices().to_vec())
                .collect();
            diameter(&dedup(pts))
        })
        .collect();

    let mut reg_distance: f64 = 0.0;
    let mut reg_inclination: f64 = 1.0;
    let mut mesh_size: f64 = 0.0;
    // dual interfaces m_{K*|L*}, keyed by the sorted edge
    let mut dual_interface: BTreeMap<(usize, usize), f64> = BTreeMap::new();

    for dm in &mesh.diamonds {
        let a = sub(dm.x_plus, dm.x_minus);
        let face = &mesh.faces[dm.face];
        let xs: Vec<Point> = dm.dual.iter().map(|&v| mesh.vertices[v]).collect();
        reg_distance = reg_distance.max((primal_diam[dm.minus] + primal_diam[dm.plus]) / dm.d);
        let mut pts = xs.clone();
        pts.push(dm.x_minus);
        pts.push(dm.x_plus);
        let ddiam = diameter(&pts);
        mesh_size = mesh_size.max(ddiam);
        let mut min_dual_edge = f64::INFINITY;
        reg_inclination = reg_inclination.max(1.0 / crate::geometry::dot(dm.e, dm.normal));
        if dim == 3 {
            for i in 0..3 {
                let j = (i + 1) % 3;
                let t = sub(xs[j], xs[i]);
                min_dual_edge = min_dual_edge.min(norm(t));
                let m = scale(0.5, add(xs[i], xs[j]));
                let u = sub(face.center, m);
                let sin = norm(cross(t, u)) / (norm(t) * norm(u));
                reg_inclination = reg_inclination.max(1.0 / sin);
                let key = (dm.dual[i].min(dm.dual[j]), dm.dual[i].max(dm.dual[j]));
                *dual_interface.entry(key).or_insert(0.0) +=
                    0.5 * norm(cross(a, sub(m, face.center)));
            }
        } else {
            let b = sub(xs[1], xs[0]);
            min_dual_edge = norm(b);
            let sin = det2(a, b).abs() / (norm(a) * norm(b));
            reg_inclination = reg_inclination.max(1.0 / sin);
            let key = (dm.dual[0].min(dm.dual[1]), dm.dual[0].max(dm.dual[1]));
            *dual_interface.entry(key).or_insert(0.0) += norm(a);
        }
        reg_distance = reg_distance.max(ddiam / dm.d.min(min_dual_edge));
    }

    let nc = mesh.n_cells();
    let mut reg_volume_ratio: f64 = 0.0;
    let mut max_neighbors = 0;
    for k in 0..nc {
        mesh_size = mesh_size.max(primal_diam[k]);
        let p = &mesh.primal[k];
        max_neighbors = max_neighbors.max(p.faces.len());
        for &f in &p.faces {
            let d = mesh.diamonds[f].d;
            reg_volume_ratio = reg_volume_ratio.max(mesh.faces[f].area * d / p.volume);
        }
    }
    let mut dual_neighbors = vec![0usize; mesh.n_vertices()];
    for (&(i, j), &area) in &dual_interface {
        let d = dist(mesh.vertices[i], mesh.vertices[j]);
        reg_distance = reg_distance.max((dual_diam[i] + dual_diam[j]) / d);
        dual_neighbors[i] += 1;
        dual_neighbors[j] += 1;
        for v in [i, j] {
            reg_volume_ratio = reg_volume_ratio.max(area * d / mesh.dual[v].volume);
        }
    }
    max_neighbors = max_neighbors.max(dual_neighbors.iter().copied().max().unwrap_or(0));
    for d in &dual_diam {
        mesh_size = mesh_size.max(*d);
    }

    RegularityReport {
        reg_distance,
        reg_inclination,
        max_neighbors,
        reg_volume_ratio,
        mesh_size,
    }
}
