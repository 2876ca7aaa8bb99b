//! Piecewise-constant reconstruction of a discrete function on the elements.

use super::projection::vertex_value;
use super::{DirichletData, DiscreteFunction};
use crate::error::{DdfvError, Result};
use crate::geometry::Point;
use crate::mesh::Mesh;

/// The lifting `w(x) = (1/d) w_K + ((d−1)/d) w_K*` for `x` in an element of `K ∩ K*`.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// One value per mesh element.
    pub values: Vec<f64>,
}

impl Reconstruction {
    /// Reconstruct `w`; Dirichlet vertices take their value from `g` (zero if `None`).
    pub fn new(mesh: &Mesh, w: &DiscreteFunction, g: Option<&DirichletData>) -> Result<Self> {
        w.check(mesh)?;
        let (wp, wd) = (mesh.primal_weight(), mesh.dual_weight());
        let values = mesh
            .elements
            .iter()
            .map(|el| {
                // elements only live in cells, whose unknown index is the cell index
                wp * w.primal[el.primal] + wd * vertex_value(mesh, w, g, el.dual)
            })
            .collect();
        Ok(Self { values })
    }

    /// Value at a point of the domain.
    pub fn value_at(&self, mesh: &Mesh, p: Point) -> Result<f64> {
        mesh.locate_element(p)
            .map(|t| self.values[t])
            .ok_or(DdfvError::OutsideDomain {
                x: p[0],
                y: p[1],
                z: p[2],
            })
    }

    /// `∫_Ω f(w(x)) dx`, exact element by element.
    pub fn integrate(&self, mesh: &Mesh, f: impl Fn(f64) -> f64) -> f64 {
        mesh.elements
            .iter()
            .zip(&self.values)
            .map(|(el, v)| el.simplex.volume * f(*v))
            .sum()
    }

    /// `∫_Ω w(x) φ(x) dx` for another reconstruction `φ`.
    pub fn integrate_product(&self, mesh: &Mesh, other: &Reconstruction) -> f64 {
        mesh.elements
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(el, (a, b))| el.simplex.volume * a * b)
            .sum()
    }
}
