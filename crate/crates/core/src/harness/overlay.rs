//! The simplicial overlay of a mesh, cross-mesh projection and the relative
//! `L²` error metrics.
//!
//! Cutting every diamond in two along its face gives simplices
//! `co(x_K, σ)` whose vertices are cell centers and mesh vertices. A discrete
//! function defines a piecewise-affine function on this overlay by its cell
//! values at the centers and its vertex values at the vertices.

use crate::calculus::{DirichletData, DiscreteFunction};
use crate::error::{DdfvError, Result};
use crate::geometry::{Point, Simplex};
use crate::mesh::{Dof, Mesh, SimplexLocator};
use crate::solver::CsrMatrix;

/// Values at the overlay nodes: cell centers first, then mesh vertices.
pub type NodalField = Vec<f64>;

#[derive(Debug, Clone)]
pub struct SimplicialOverlay {
    pub dim: usize,
    pub n_cells: usize,
    pub nodes: Vec<Point>,
    /// Node indices of every simplex (the first `dim + 1` entries are used).
    pub simplices: Vec<[usize; 4]>,
    pub volumes: Vec<f64>,
}

impl SimplicialOverlay {
    pub fn new(mesh: &Mesh) -> Self {
        let nc = mesh.n_cells();
        let mut nodes: Vec<Point> = mesh.primal[..nc].iter().map(|p| p.center).collect();
        nodes.extend_from_slice(&mesh.vertices);
        let mut simplices = Vec::new();
        let mut volumes = Vec::new();
        for k in 0..nc {
            for &f in &mesh.primal[k].faces {
                let mut s = [k; 4];
                for (i, &v) in mesh.faces[f].vertices.iter().enumerate() {
                    s[i + 1] = nc + v;
                }
                volumes.push(Self::make_simplex(mesh.dim(), &nodes, &s).volume);
                simplices.push(s);
            }
        }
        Self {
            dim: mesh.dim(),
            n_cells: nc,
            nodes,
            simplices,
            volumes,
        }
    }

    fn make_simplex(dim: usize, nodes: &[Point], s: &[usize; 4]) -> Simplex {
        if dim == 2 {
            Simplex::triangle(nodes[s[0]], nodes[s[1]], nodes[s[2]])
        } else {
            Simplex::tetrahedron(nodes[s[0]], nodes[s[1]], nodes[s[2]], nodes[s[3]])
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn simplex(&self, i: usize) -> Simplex {
        Self::make_simplex(self.dim, &self.nodes, &self.simplices[i])
    }

    /// The `P1` mass matrix, `uᵀ M w = ∫ u w` for the piecewise-affine
    /// interpolants (equal to the order-two Gauss rule on every simplex).
    pub fn mass_matrix(&self) -> CsrMatrix {
        let nv = self.dim + 1;
        let denom = ((self.dim + 1) * (self.dim + 2)) as f64;
        let mut trip = Vec::with_capacity(self.simplices.len() * nv * nv);
        for (s, vol) in self.simplices.iter().zip(&self.volumes) {
            for a in 0..nv {
                for b in 0..nv {
                    let w = if a == b { 2.0 } else { 1.0 };
                    trip.push((s[a], s[b], vol * w / denom));
                }
            }
        }
        let n = self.n_nodes();
        CsrMatrix::from_triplets(n, n, &trip)
    }

    /// Sparse matrix evaluating the interpolant at `points`.
    ///
    /// Points outside the overlay (beyond the snapping tolerance) are a
    /// geometry error.
    pub fn interpolation_matrix(&self, points: &[Point]) -> Result<CsrMatrix> {
        let locator = SimplexLocator::new(
            self.dim,
            (0..self.simplices.len()).map(|i| self.simplex(i)).collect(),
        );
        let mut trip = Vec::with_capacity(points.len() * (self.dim + 1));
        for (r, &p) in points.iter().enumerate() {
            let (s, l) = locator.locate(p).ok_or(DdfvError::OutsideDomain {
                x: p[0],
                y: p[1],
                z: p[2],
            })?;
            for a in 0..=self.dim {
                trip.push((r, self.simplices[s][a], l[a]));
            }
        }
        Ok(CsrMatrix::from_triplets(
            points.len(),
            self.n_nodes(),
            &trip,
        ))
    }

    /// Value of the interpolant of `values` at `p`.
    pub fn evaluate(&self, values: &[f64], p: Point) -> Result<f64> {
        Ok(self.interpolation_matrix(&[p])?.mul_vec(values)[0])
    }
}

/// Values of a discrete function at the overlay nodes (Dirichlet vertices read
/// from `g`, zero when `None`).
pub fn nodal_values(mesh: &Mesh, f: &DiscreteFunction, g: Option<&DirichletData>) -> NodalField {
    let nc = mesh.n_cells();
    let mut out = Vec::with_capacity(nc + mesh.n_vertices());
    for k in 0..nc {
        out.push(match mesh.primal_dof(k) {
            Dof::Primal(i) => f.primal[i],
            _ => unreachable!("cells carry unknowns"),
        });
    }
    for v in 0..mesh.n_vertices() {
        out.push(match mesh.dual_dof(v) {
            Dof::Dual(i) => f.dual[i],
            Dof::DirichletDual(i) => g.map_or(0.0, |g| g.dual[i]),
            _ => unreachable!("vertices carry dual values"),
        });
    }
    out
}

/// Project a coarse discrete function onto the nodes of a fine mesh through the
/// piecewise-affine interpolant on the coarse overlay.
pub fn project_between(
    coarse_mesh: &Mesh,
    coarse: &DiscreteFunction,
    fine_mesh: &Mesh,
) -> Result<NodalField> {
    let overlay = SimplicialOverlay::new(coarse_mesh);
    let target = SimplicialOverlay::new(fine_mesh);
    let p = overlay.interpolation_matrix(&target.nodes)?;
    Ok(p.mul_vec(&nodal_values(coarse_mesh, coarse, None)))
}

/// Relative error `‖ũ^r − ũ^c‖ / ‖ũ^r‖` in `L²` on the reference overlay,
/// given its mass matrix and both nodal fields on the reference nodes.
pub fn error_space(mass: &CsrMatrix, reference: &[f64], approx: &[f64]) -> Result<f64> {
    let (num, den) = error_terms(mass, reference, approx)?;
    if den == 0.0 {
        return Err(DdfvError::UndefinedMetric(
            "reference has zero L2 norm".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// `(‖ũ^r − ũ^c‖², ‖ũ^r‖²)`.
pub fn error_terms(mass: &CsrMatrix, reference: &[f64], approx: &[f64]) -> Result<(f64, f64)> {
    if reference.len() != mass.nrows || approx.len() != mass.nrows {
        return Err(DdfvError::Mismatch(format!(
            "nodal fields of length {} and {} for {} nodes",
            reference.len(),
            approx.len(),
            mass.nrows
        )));
    }
    let d: Vec<f64> = reference.iter().zip(approx).map(|(a, b)| a - b).collect();
    Ok((mass.bilinear(&d, &d), mass.bilinear(reference, reference)))
}

/// Relative error in `L²(Q)` of two trajectories recorded on the same time grid:
/// `Σ_n δt ‖ũ^r_n − ũ^c_n‖² / Σ_n δt ‖ũ^r_n‖²`, square-rooted.
pub fn error_space_time(
    mass: &CsrMatrix,
    reference: &[NodalField],
    approx: &[NodalField],
) -> Result<f64> {
    if reference.len() != approx.len() {
        return Err(DdfvError::Mismatch(format!(
            "trajectories with {} and {} frames",
            reference.len(),
            approx.len()
        )));
    }
    let mut acc = SpaceTimeError::default();
    for (r, a) in reference.iter().zip(approx) {
        acc.add(mass, r, a)?;
    }
    acc.value()
}

/// Accumulator of the space-time error frame by frame.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpaceTimeError {
    num: f64,
    den: f64,
}

impl SpaceTimeError {
    pub fn add(&mut self, mass: &CsrMatrix, reference: &[f64], approx: &[f64]) -> Result<()> {
        let (n, d) = error_terms(mass, reference, approx)?;
        self.num += n;
        self.den += d;
        Ok(())
    }

    pub fn value(&self) -> Result<f64> {
        if self.den == 0.0 {
            return Err(DdfvError::UndefinedMetric(
                "reference trajectory vanishes".into(),
            ));
        }
        Ok((self.num / self.den).sqrt())
    }
}
