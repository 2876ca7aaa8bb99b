//! Structured simplicial meshes of the unit square and the unit cube.

use super::{BoundaryLabel, Mesh, MeshInput};
use crate::error::Result;
use crate::geometry::Point;

/// Rule deciding the boundary label of a boundary face from its barycenter.
pub type BoundaryRule = dyn Fn(Point) -> BoundaryLabel;

/// Structured mesh of `[0,1]^dim` with `n` subdivisions per axis and a pure
/// Neumann boundary.
///
/// In 2D each square is cut along one of its diagonals, alternating in a
/// checkerboard pattern; in 3D each cube is cut into six tetrahedra sharing
/// its main diagonal.
pub fn structured(dim: usize, n: usize) -> Result<Mesh> {
    structured_with(dim, n, &|_| BoundaryLabel::Neumann)
}

/// Structured mesh with boundary labels chosen by `rule`.
pub fn structured_with(dim: usize, n: usize, rule: &BoundaryRule) -> Result<Mesh> {
    Mesh::build(structured_input(dim, n, rule))
}

pub(crate) fn structured_input(dim: usize, n: usize, rule: &BoundaryRule) -> MeshInput {
    assert!(n >= 1, "at least one subdivision per axis");
    let h = 1.0 / n as f64;
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    if dim == 2 {
        let id = |i: usize, j: usize| j * (n + 1) + i;
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h, 0.0]);
            }
        }
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if (i + j) % 2 == 0 {
                    cells.push(vec![a, b, c]);
                    cells.push(vec![a, c, d]);
                } else {
                    cells.push(vec![a, b, d]);
                    cells.push(vec![b, c, d]);
                }
            }
        }
    } else {
        let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
        for k in 0..=n {
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
                }
            }
        }
        // Kuhn split: every path from corner 0 to corner 7 along the axes.
        const PATHS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for path in PATHS {
                        let mut c = [i, j, k];
                        let mut tet = vec![id(c[0], c[1], c[2])];
                        for axis in path {
                            c[axis] += 1;
                            tet.push(id(c[0], c[1], c[2]));
                        }
                        // orient positively
                        let p: Vec<Point> = tet.iter().map(|&v| vertices[v]).collect();
                        if crate::geometry::tet_signed_volume(p[0], p[1], p[2], p[3]) < 0.0 {
                            tet.swap(2, 3);
                        }
                        cells.push(tet);
                    }
                }
            }
        }
    }
    let boundary_faces = boundary_faces_of(dim, &vertices, &cells)
        .into_iter()
        .map(|f| {
            let pts: Vec<Point> = f.iter().map(|&v| vertices[v]).collect();
            let label = rule(crate::geometry::barycenter(&pts));
            (f, label)
        })
        .collect();
    MeshInput {
        dim,
        vertices,
        cells,
        boundary_faces,
    }
}

/// Faces that belong to exactly one cell, in order of first appearance.
pub(crate) fn boundary_faces_of(
    dim: usize,
    _vertices: &[Point],
    cells: &[Vec<usize>],
) -> Vec<Vec<usize>> {
    use std::collections::HashMap;
    let mut count: HashMap<Vec<usize>, (usize, Vec<usize>)> = HashMap::new();
    let mut order = Vec::new();
    for cell in cells {
        for skip in 0..=dim {
            let f: Vec<usize> = cell
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, v)| *v)
                .collect();
            let mut key = f.clone();
            key.sort_unstable();
            let e = count.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (0, f)
            });
            e.0 += 1;
        }
    }
    order
        .into_iter()
        .filter_map(|k| {
            let (c, f) = &count[&k];
            (*c == 1).then(|| f.clone())
        })
        .collect()
}
