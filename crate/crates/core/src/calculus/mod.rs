//! Discrete calculus on the double mesh.
//!
//! A [`DiscreteFunction`] carries one value per primal unknown (cells, then
//! degenerate Neumann volumes) and one per dual unknown (vertices not on the
//! Dirichlet boundary). A [`DiscreteField`] carries one vector per diamond.
//!
//! The inner products weight primal and dual parts by `1/d` and `(d−1)/d`:
//! `(1/3, 2/3)` in 3D and `(1/2, 1/2)` in 2D. These are the only weights for
//! which the discrete gradient and divergence below are exactly adjoint:
//!
//! ```text
//! [[−div_s F, v]] = {{F, ∇₀v}} − ⟨⟨s, v⟩⟩_Γ_N
//! ```
//!
//! where the Neumann datum `s` is the outward flux `F·n` on `Γ_N`. The
//! degenerate entry of `div_s F` on a Neumann face is the residual
//! `F_D·n_K + s_K` (with `n_K` pointing into the domain) and enters the
//! pairing with the weight `|σ|/d`.

mod projection;
mod reconstruct;

pub use projection::{
    project_boundary, project_center, project_field, project_mean, project_neumann, project_time,
};
pub use reconstruct::Reconstruction;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DdfvError, Result};
use crate::geometry::{add, cross, det2, dot, scale, sub, Point};
use crate::mesh::{Dof, Mesh};

/// One value per primal unknown and one per dual unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFunction {
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
}

/// One vector per diamond.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub values: Vec<Point>,
}

/// Boundary values on the Dirichlet part: one per Dirichlet face and one per Dirichlet vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletData {
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
}

/// Outward flux datum: one value per Neumann face, in Neumann-face order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannData {
    pub values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self {
            primal: vec![c; mesh.n_primal_unknowns()],
            dual: vec![c; mesh.n_dual_unknowns()],
        }
    }

    /// Indicator of the primal unknowns (`U^Mᵒ`).
    pub fn primal_ones(mesh: &Mesh) -> Self {
        Self {
            primal: vec![1.0; mesh.n_primal_unknowns()],
            dual: vec![0.0; mesh.n_dual_unknowns()],
        }
    }

    /// Indicator of the dual unknowns (`U^M*`).
    pub fn dual_ones(mesh: &Mesh) -> Self {
        Self {
            primal: vec![0.0; mesh.n_primal_unknowns()],
            dual: vec![1.0; mesh.n_dual_unknowns()],
        }
    }

    /// Uniform random values in `[lo, hi)`.
    pub fn random<R: Rng>(mesh: &Mesh, rng: &mut R, lo: f64, hi: f64) -> Self {
        Self {
            primal: (0..mesh.n_primal_unknowns())
                .map(|_| rng.gen_range(lo..hi))
                .collect(),
            dual: (0..mesh.n_dual_unknowns())
                .map(|_| rng.gen_range(lo..hi))
                .collect(),
        }
    }

    /// Concatenated `[primal, dual]` vector.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.primal.clone();
        v.extend_from_slice(&self.dual);
        v
    }

    pub fn from_flat(mesh: &Mesh, flat: &[f64]) -> Result<Self> {
        let np = mesh.n_primal_unknowns();
        if flat.len() != mesh.n_unknowns() {
            return Err(DdfvError::Mismatch(format!(
                "vector of length {} for {} unknowns",
                flat.len(),
                mesh.n_unknowns()
            )));
        }
        Ok(Self {
            primal: flat[..np].to_vec(),
            dual: flat[np..].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.primal.len() + self.dual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Check that the value counts match the mesh and all values are finite.
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.primal.len() != mesh.n_primal_unknowns()
            || self.dual.len() != mesh.n_dual_unknowns()
        {
            return Err(DdfvError::Mismatch(format!(
                "discrete function has {}+{} values, mesh has {}+{} unknowns",
                self.primal.len(),
                self.dual.len(),
                mesh.n_primal_unknowns(),
                mesh.n_dual_unknowns()
            )));
        }
        if self.primal.iter().chain(&self.dual).any(|x| !x.is_finite()) {
            return Err(DdfvError::Input(
                "non-finite value in discrete function".into(),
            ));
        }
        Ok(())
    }

    /// `self ← self + a·other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (x, y) in self.primal.iter_mut().zip(&other.primal) {
            *x += a * y;
        }
        for (x, y) in self.dual.iter_mut().zip(&other.dual) {
            *x += a * y;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            primal: self.primal.iter().map(|x| a * x).collect(),
            dual: self.dual.iter().map(|x| a * x).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            primal: self.primal.iter().map(|&x| f(x)).collect(),
            dual: self.dual.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.primal
            .iter()
            .chain(&self.dual)
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl DiscreteField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            values: vec![[0.0; 3]; mesh.diamonds.len()],
        }
    }

    pub fn random<R: Rng>(mesh: &Mesh, rng: &mut R) -> Self {
        let dim = mesh.dim();
        Self {
            values: (0..mesh.diamonds.len())
                .map(|_| {
                    let mut v = [0.0; 3];
                    for c in v.iter_mut().take(dim) {
                        *c = rng.gen_range(-1.0..1.0);
                    }
                    v
                })
                .collect(),
        }
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.diamonds.len() {
            return Err(DdfvError::Mismatch(format!(
                "field has {} vectors, mesh has {} diamonds",
                self.values.len(),
                mesh.diamonds.len()
            )));
        }
        if self.values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(DdfvError::Input(
                "non-finite value in discrete field".into(),
            ));
        }
        Ok(())
    }
}

impl DirichletData {
    /// Homogeneous data (empty when the mesh has no Dirichlet boundary).
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            primal: vec![0.0; mesh.dirichlet_primal.len()],
            dual: vec![0.0; mesh.dirichlet_dual.len()],
        }
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.primal.len() != mesh.dirichlet_primal.len()
            || self.dual.len() != mesh.dirichlet_dual.len()
        {
            return Err(DdfvError::Input(format!(
                "Dirichlet data has {}+{} values, mesh needs {}+{}",
                self.primal.len(),
                self.dual.len(),
                mesh.dirichlet_primal.len(),
                mesh.dirichlet_dual.len()
            )));
        }
        Ok(())
    }
}

impl NeumannData {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            values: vec![0.0; mesh.n_neumann_faces()],
        }
    }

    pub fn random<R: Rng>(mesh: &Mesh, rng: &mut R) -> Self {
        Self {
            values: (0..mesh.n_neumann_faces())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        }
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.n_neumann_faces() {
            return Err(DdfvError::Mismatch(format!(
                "Neumann data has {} values, mesh has {} Neumann faces",
                self.values.len(),
                mesh.n_neumann_faces()
            )));
        }
        Ok(())
    }

    /// `Σ_σ |σ| s_σ`, the total prescribed flux.
    pub fn total_flux(&self, mesh: &Mesh) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(j, s)| mesh.faces[mesh.neumann_face(j)].area * s)
            .sum()
    }
}

/// Value attached to a dof, reading Dirichlet entries from `g`.
#[inline]
pub(crate) fn dof_value(w: &DiscreteFunction, g: &DirichletData, dof: Dof) -> f64 {
    match dof {
        Dof::Primal(i) => w.primal[i],
        Dof::Dual(i) => w.dual[i],
        Dof::DirichletPrimal(i) => g.primal[i],
        Dof::DirichletDual(i) => g.dual[i],
    }
}

fn check_same(mesh: &Mesh, a: &DiscreteFunction, b: &DiscreteFunction) -> Result<()> {
    a.check(mesh)?;
    b.check(mesh)
}

/// `[[w, v]] = (1/d) Σ_K Vol(K) w_K v_K + ((d−1)/d) Σ_K* Vol(K*) w_K* v_K*`.
pub fn inner_omega(mesh: &Mesh, w: &DiscreteFunction, v: &DiscreteFunction) -> Result<f64> {
    check_same(mesh, w, v)?;
    let mut p = 0.0;
    for (i, &k) in mesh.primal_unknowns.iter().enumerate() {
        p += mesh.primal[k].volume * w.primal[i] * v.primal[i];
    }
    let mut d = 0.0;
    for (i, &k) in mesh.dual_unknowns.iter().enumerate() {
        d += mesh.dual[k].volume * w.dual[i] * v.dual[i];
    }
    Ok(mesh.primal_weight() * p + mesh.dual_weight() * d)
}

/// `{{F, G}} = Σ_D Vol(D) F_D · G_D`.
pub fn inner_fields(mesh: &Mesh, f: &DiscreteField, g: &DiscreteField) -> Result<f64> {
    f.check(mesh)?;
    g.check(mesh)?;
    Ok(mesh
        .diamonds
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .map(|(dm, (a, b))| dm.volume * dot(*a, *b))
        .sum())
}

/// `⟨⟨s, v⟩⟩` on `Γ_N`: the face integral of `s` against the trace of `v`,
/// which equals `(1/d) v_σ + ((d−1)/d) v_K*` on the part `σ ∩ K*` of each
/// Neumann face. Dirichlet vertices contribute nothing (homogeneous trace).
pub fn inner_gamma_n(mesh: &Mesh, s: &NeumannData, v: &DiscreteFunction) -> Result<f64> {
    s.check(mesh)?;
    v.check(mesh)?;
    let nc = mesh.n_cells();
    let (wp, wd) = (mesh.primal_weight(), mesh.dual_weight());
    let mut total = 0.0;
    for (j, sj) in s.values.iter().enumerate() {
        let face = &mesh.faces[mesh.neumann_face(j)];
        let mut dual_part = 0.0;
        for (vert, area) in face.vertices.iter().zip(&face.vertex_areas) {
            if let Dof::Dual(i) = mesh.dual_dof(*vert) {
                dual_part += area * v.dual[i];
            }
        }
        total += sj * (wp * face.area * v.primal[nc + j] + wd * dual_part);
    }
    Ok(total)
}

/// Discrete gradient with Dirichlet data `g`.
///
/// On each diamond the normal part is the difference quotient of the primal
/// values and the in-face part is the affine interpolation of the dual values.
/// The result is exact for affine functions.
pub fn gradient(mesh: &Mesh, w: &DiscreteFunction, g: &DirichletData) -> Result<DiscreteField> {
    w.check(mesh)?;
    g.check(mesh)?;
    let values = mesh
        .diamonds
        .iter()
        .map(|dm| {
            let dp = dof_value(w, g, mesh.primal_dof(dm.plus))
                - dof_value(w, g, mesh.primal_dof(dm.minus));
            let mut grad = scale(dp, dm.plus_coef);
            for (v, c) in dm.dual.iter().zip(&dm.dual_coef) {
                grad = add(grad, scale(dof_value(w, g, mesh.dual_dof(*v)), *c));
            }
            grad
        })
        .collect();
    Ok(DiscreteField { values })
}

/// Discrete gradient with homogeneous Dirichlet data, `∇₀`.
pub fn gradient0(mesh: &Mesh, w: &DiscreteFunction) -> Result<DiscreteField> {
    gradient(mesh, w, &DirichletData::zeros(mesh))
}

/// Discrete divergence of a field with Neumann datum `s`.
///
/// Cell and dual entries are flux balances divided by the volume. Dual
/// volumes touching `Γ_N` receive the prescribed flux `s` through their part
/// of the boundary. The entry of a degenerate Neumann volume is the residual
/// `F_D·n_K + s_K` with `n_K` pointing into the domain.
pub fn divergence(mesh: &Mesh, f: &DiscreteField, s: &NeumannData) -> Result<DiscreteFunction> {
    f.check(mesh)?;
    s.check(mesh)?;
    let (pflux, dflux) = flux_balances(mesh, f);
    let nc = mesh.n_cells();
    let mut out = DiscreteFunction::zeros(mesh);
    for k in 0..nc {
        out.primal[k] = pflux[k] / mesh.primal[k].volume;
    }
    let mut dual_total = dflux;
    for (j, sj) in s.values.iter().enumerate() {
        let fid = mesh.neumann_face(j);
        let face = &mesh.faces[fid];
        out.primal[nc + j] = -dot(f.values[fid], face.normal) + sj;
        for (v, area) in face.vertices.iter().zip(&face.vertex_areas) {
            dual_total[*v] += sj * area;
        }
    }
    for (i, &v) in mesh.dual_unknowns.iter().enumerate() {
        out.dual[i] = dual_total[v] / mesh.dual[v].volume;
    }
    Ok(out)
}

/// Outgoing flux of a field through the boundary of every primal volume
/// (indexed by primal volume id) and every dual volume (indexed by vertex),
/// excluding the domain boundary.
fn flux_balances(mesh: &Mesh, f: &DiscreteField) -> (Vec<f64>, Vec<f64>) {
    let mut pflux = vec![0.0; mesh.primal.len()];
    let mut dflux = vec![0.0; mesh.n_vertices()];
    for (dm, fd) in mesh.diamonds.iter().zip(&f.values) {
        let a = sub(dm.x_plus, dm.x_minus);
        if mesh.dim() == 3 {
            let c = mesh.faces[dm.face].center;
            for sd in &mesh.subdiamonds[dm.subdiamonds.clone()] {
                let (xi, xj) = (mesh.vertices[sd.edge.0], mesh.vertices[sd.edge.1]);
                let m = scale(0.5, add(xi, xj));
                let mc = sub(m, c);
                let pf = 0.5 * dot(*fd, cross(mc, sub(xj, xi)));
                pflux[dm.minus] += pf;
                pflux[dm.plus] -= pf;
                let df = 0.5 * dot(*fd, cross(a, mc));
                dflux[sd.edge.0] += df;
                dflux[sd.edge.1] -= df;
            }
        } else {
            let b = sub(mesh.vertices[dm.dual[1]], mesh.vertices[dm.dual[0]]);
            let pf = det2(*fd, b);
            pflux[dm.minus] += pf;
            pflux[dm.plus] -= pf;
            let df = det2(a, *fd);
            dflux[dm.dual[0]] += df;
            dflux[dm.dual[1]] -= df;
        }
    }
    (pflux, dflux)
}

/// `[[−div_s F, v]]`, with degenerate Neumann entries weighted by `|σ|/d`.
pub fn divergence_pairing(
    mesh: &Mesh,
    div: &DiscreteFunction,
    v: &DiscreteFunction,
) -> Result<f64> {
    check_same(mesh, div, v)?;
    let nc = mesh.n_cells();
    let mut p = 0.0;
    for k in 0..nc {
        p += mesh.primal[k].volume * div.primal[k] * v.primal[k];
    }
    for j in 0..mesh.n_neumann_faces() {
        p += mesh.faces[mesh.neumann_face(j)].area * div.primal[nc + j] * v.primal[nc + j];
    }
    let mut d = 0.0;
    for (i, &k) in mesh.dual_unknowns.iter().enumerate() {
        d += mesh.dual[k].volume * div.dual[i] * v.dual[i];
    }
    Ok(-(mesh.primal_weight() * p + mesh.dual_weight() * d))
}

/// Both sides of the duality identity for one `(F, v, s)` triple:
/// `([[−div_s F, v]], {{F, ∇₀v}} − ⟨⟨s, v⟩⟩)`.
pub fn duality_sides(
    mesh: &Mesh,
    f: &DiscreteField,
    v: &DiscreteFunction,
    s: &NeumannData,
) -> Result<(f64, f64)> {
    let div = divergence(mesh, f, s)?;
    let lhs = divergence_pairing(mesh, &div, v)?;
    let rhs = inner_fields(mesh, f, &gradient0(mesh, v)?)? - inner_gamma_n(mesh, s, v)?;
    Ok((lhs, rhs))
}

/// Maximum over `trials` random `(F, v, s)` of `|LHS − RHS| / (1 + |LHS|)` in the
/// duality identity.
pub fn duality_residual(mesh: &Mesh, trials: usize, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = DiscreteField::random(mesh, &mut rng);
        let v = DiscreteFunction::random(mesh, &mut rng, -1.0, 1.0);
        let s = NeumannData::random(mesh, &mut rng);
        let (lhs, rhs) = duality_sides(mesh, &f, &v, &s)?;
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    Ok(worst)
}

/// Element-wise means `w̌_K`, `w̌_K*` of the reconstruction over each volume.
///
/// For a cell, `w̌_K = (1/d) w_K + ((d−1)/d) Σ_K* Vol(K∩K*)/Vol(K) w_K*`; for a
/// dual volume, `w̌_K* = (1/d) Σ_K Vol(K∩K*)/Vol(K*) w_K + ((d−1)/d) w_K*`.
/// Degenerate volumes get the face mean of the trace. Dirichlet dual values
/// are taken as zero.
pub fn reconstruction_means(mesh: &Mesh, w: &DiscreteFunction) -> Result<DiscreteFunction> {
    w.check(mesh)?;
    let zero = DirichletData::zeros(mesh);
    let (wp, wd) = (mesh.primal_weight(), mesh.dual_weight());
    let nc = mesh.n_cells();
    let mut out = DiscreteFunction::zeros(mesh);
    let mut dual_acc = vec![0.0; mesh.n_vertices()];
    for k in 0..nc {
        let vol = mesh.primal[k].volume;
        let mut acc = 0.0;
        for &(v, o) in mesh.cell_overlaps(k) {
            acc += o * dof_value(w, &zero, mesh.dual_dof(v));
            dual_acc[v] += o * w.primal[k];
        }
        out.primal[k] = wp * w.primal[k] + wd * acc / vol;
    }
    for j in 0..mesh.n_neumann_faces() {
        let face = &mesh.faces[mesh.neumann_face(j)];
        let mut acc = 0.0;
        for (v, a) in face.vertices.iter().zip(&face.vertex_areas) {
            acc += a * dof_value(w, &zero, mesh.dual_dof(*v));
        }
        out.primal[nc + j] = wp * w.primal[nc + j] + wd * acc / face.area;
    }
    for (i, &v) in mesh.dual_unknowns.iter().enumerate() {
        out.dual[i] = wp * dual_acc[v] / mesh.dual[v].volume + wd * w.dual[i];
    }
    Ok(out)
}
