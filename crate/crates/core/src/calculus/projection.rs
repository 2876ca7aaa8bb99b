//! Projections of continuous data onto discrete spaces.
//!
//! Mean-value projections integrate with the order-two Gauss rule on every
//! element (cells and dual volumes), diamond or face piece.

use super::{DirichletData, DiscreteField, DiscreteFunction, NeumannData};
use crate::geometry::{add, gauss2_rule, scale, Point};
use crate::mesh::{Dof, Mesh};

fn face_mean(mesh: &Mesh, face: usize, f: &dyn Fn(Point) -> f64) -> f64 {
    let fc = &mesh.faces[face];
    let pts: Vec<Point> = fc.vertices.iter().map(|&v| mesh.vertices[v]).collect();
    let integral: f64 = gauss2_rule(&pts, fc.area)
        .iter()
        .map(|(p, w)| w * f(*p))
        .sum();
    integral / fc.area
}

/// Pieces of a face belonging to each of its vertices: `(vertex, points of the piece, measure)`.
fn face_vertex_pieces(mesh: &Mesh, face: usize) -> Vec<(usize, Vec<Point>, f64)> {
    let fc = &mesh.faces[face];
    let xs: Vec<Point> = fc.vertices.iter().map(|&v| mesh.vertices[v]).collect();
    let c = fc.center;
    let mut pieces = Vec::new();
    if xs.len() == 2 {
        for (i, &v) in fc.vertices.iter().enumerate() {
            pieces.push((v, vec![xs[i], c], fc.vertex_areas[i]));
        }
    } else {
        for i in 0..3 {
            let j = (i + 1) % 3;
            let m = scale(0.5, add(xs[i], xs[j]));
            for &(v, x) in &[(fc.vertices[i], xs[i]), (fc.vertices[j], xs[j])] {
                let area = crate::geometry::tri_area(x, m, c);
                pieces.push((v, vec![x, m, c], area));
            }
        }
    }
    pieces
}

/// Mean values over cells and dual volumes; degenerate Neumann volumes get face means.
pub fn project_mean(mesh: &Mesh, f: &dyn Fn(Point) -> f64) -> DiscreteFunction {
    let mut pint = vec![0.0; mesh.primal.len()];
    let mut dint = vec![0.0; mesh.n_vertices()];
    for el in &mesh.elements {
        let i: f64 = el.simplex.gauss2().iter().map(|(p, w)| w * f(*p)).sum();
        pint[el.primal] += i;
        dint[el.dual] += i;
    }
    let nc = mesh.n_cells();
    let mut out = DiscreteFunction::zeros(mesh);
    for (i, &k) in mesh.primal_unknowns.iter().enumerate() {
        out.primal[i] = if i < nc {
            pint[k] / mesh.primal[k].volume
        } else {
            face_mean(mesh, mesh.primal[k].faces[0], f)
        };
    }
    for (i, &v) in mesh.dual_unknowns.iter().enumerate() {
        out.dual[i] = dint[v] / mesh.dual[v].volume;
    }
    out
}

/// Point values at the centers `x_K`, `x_K*` (face centers for degenerate volumes).
pub fn project_center(mesh: &Mesh, f: &dyn Fn(Point) -> f64) -> DiscreteFunction {
    DiscreteFunction {
        primal: mesh
            .primal_unknowns
            .iter()
            .map(|&k| f(mesh.primal[k].center))
            .collect(),
        dual: mesh
            .dual_unknowns
            .iter()
            .map(|&v| f(mesh.vertices[v]))
            .collect(),
    }
}

/// Mean values of boundary data over Dirichlet faces and over the Dirichlet
/// part of the boundary of each Dirichlet dual volume.
pub fn project_boundary(mesh: &Mesh, g: &dyn Fn(Point) -> f64) -> DirichletData {
    let mut out = DirichletData::zeros(mesh);
    for (i, &k) in mesh.dirichlet_primal.iter().enumerate() {
        out.primal[i] = face_mean(mesh, mesh.primal[k].faces[0], g);
    }
    let mut int = vec![0.0; mesh.n_vertices()];
    let mut meas = vec![0.0; mesh.n_vertices()];
    for &k in &mesh.dirichlet_primal {
        for (v, pts, area) in face_vertex_pieces(mesh, mesh.primal[k].faces[0]) {
            int[v] += gauss2_rule(&pts, area)
                .iter()
                .map(|(p, w)| w * g(*p))
                .sum::<f64>();
            meas[v] += area;
        }
    }
    for (i, &v) in mesh.dirichlet_dual.iter().enumerate() {
        out.dual[i] = int[v] / meas[v];
    }
    out
}

/// Face means of a flux datum on every Neumann face.
pub fn project_neumann(mesh: &Mesh, s: &dyn Fn(Point) -> f64) -> NeumannData {
    NeumannData {
        values: (0..mesh.n_neumann_faces())
            .map(|j| face_mean(mesh, mesh.neumann_face(j), s))
            .collect(),
    }
}

/// Mean value of a vector function over every diamond.
pub fn project_field(mesh: &Mesh, m: &dyn Fn(Point) -> Point) -> DiscreteField {
    let mut acc = vec![[0.0; 3]; mesh.diamonds.len()];
    for el in &mesh.elements {
        for (p, w) in el.simplex.gauss2() {
            acc[el.diamond] = add(acc[el.diamond], scale(w, m(p)));
        }
    }
    DiscreteField {
        values: acc
            .into_iter()
            .zip(&mesh.diamonds)
            .map(|(a, dm)| scale(1.0 / dm.volume, a))
            .collect(),
    }
}

/// Averages of `f` over the time steps `(nΔt, (n+1)Δt)`, `n = 0..steps`,
/// with the two-point Gauss rule.
pub fn project_time(f: &dyn Fn(f64) -> f64, dt: f64, steps: usize) -> Vec<f64> {
    let g = 0.5 / 3f64.sqrt();
    (0..steps)
        .map(|n| {
            let t0 = n as f64 * dt;
            0.5 * (f(t0 + (0.5 - g) * dt) + f(t0 + (0.5 + g) * dt))
        })
        .collect()
}

/// Value of the dof of a vertex, with the Dirichlet datum for Dirichlet vertices.
pub(crate) fn vertex_value(
    mesh: &Mesh,
    w: &DiscreteFunction,
    g: Option<&DirichletData>,
    v: usize,
) -> f64 {
    match mesh.dual_dof(v) {
        Dof::Dual(i) => w.dual[i],
        Dof::DirichletDual(i) => g.map_or(0.0, |g| g.dual[i]),
        _ => unreachable!("vertex dofs are dual"),
    }
}
