//! Assembly of the mass, stiffness and reaction matrices and of the load
//! vectors carrying boundary data.

use super::sparse::CsrMatrix;
use super::tensor::TensorField;
use crate::calculus::{DirichletData, NeumannData};
use crate::error::Result;
use crate::geometry::{dot, Point};
use crate::mesh::{Dof, Mesh};

/// Flat index of an unknown dof, `None` for Dirichlet data.
#[inline]
fn flat(mesh: &Mesh, dof: Dof) -> Option<usize> {
    match dof {
        Dof::Primal(i) => Some(i),
        Dof::Dual(i) => Some(mesh.n_primal_unknowns() + i),
        _ => None,
    }
}

/// The gradient stencil of a diamond: `∇_D w = Σ coef · w_dof`.
fn stencil(mesh: &Mesh, d: usize) -> Vec<(Dof, Point)> {
    let dm = &mesh.diamonds[d];
    let mut s = Vec::with_capacity(2 + dm.dual.len());
    let c = dm.plus_coef;
    s.push((mesh.primal_dof(dm.minus), [-c[0], -c[1], -c[2]]));
    s.push((mesh.primal_dof(dm.plus), c));
    for (v, c) in dm.dual.iter().zip(&dm.dual_coef) {
        s.push((mesh.dual_dof(*v), *c));
    }
    s
}

/// Diagonal of the mass matrix: `(1/d) Vol(K)` on primal unknowns (zero on
/// degenerate volumes) and `((d−1)/d) Vol(K*)` on dual unknowns.
pub fn mass_diagonal(mesh: &Mesh) -> Vec<f64> {
    let (wp, wd) = (mesh.primal_weight(), mesh.dual_weight());
    let (pv, dv) = mesh.unknown_volumes();
    pv.iter()
        .map(|v| wp * v)
        .chain(dv.iter().map(|v| wd * v))
        .collect()
}

/// The diagonal mass matrix `Λ` with `[[w, v]] = wᵀ Λ v`.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    CsrMatrix::diagonal_matrix(&mass_diagonal(mesh))
}

/// The stiffness matrix `Σ` with `vᵀ Σ w = {{M ∇₀v, ∇₀w}}`, assembled from the
/// gradient stencils. Each off-diagonal value is computed once and mirrored,
/// so the result is exactly symmetric.
pub fn assemble_stiffness(mesh: &Mesh, tensor: &TensorField) -> Result<CsrMatrix> {
    let n = mesh.n_unknowns();
    let mut trip = Vec::with_capacity(mesh.diamonds.len() * 25);
    for (d, dm) in mesh.diamonds.iter().enumerate() {
        let st: Vec<(usize, Point)> = stencil(mesh, d)
            .into_iter()
            .filter_map(|(dof, c)| flat(mesh, dof).map(|i| (i, c)))
            .collect();
        let mc: Vec<Point> = st.iter().map(|(_, c)| tensor.apply(d, *c)).collect();
        for a in 0..st.len() {
            for b in a..st.len() {
                let val = dm.volume * dot(st[a].1, mc[b]);
                trip.push((st[a].0, st[b].0, val));
                if a != b {
                    trip.push((st[b].0, st[a].0, val));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &trip))
}

/// The vector `b` with `b_j = {{M ∇_g 0, ∇₀ φ_j}}` for the canonical basis
/// functions `φ_j`, so that `{{M ∇_g w, ∇₀ φ}} = φᵀ(Σ w + b)`.
pub fn dirichlet_load(mesh: &Mesh, tensor: &TensorField, g: &DirichletData) -> Result<Vec<f64>> {
    g.check(mesh)?;
    let mut out = vec![0.0; mesh.n_unknowns()];
    for (d, dm) in mesh.diamonds.iter().enumerate() {
        let st = stencil(mesh, d);
        let mut grad_g = [0.0; 3];
        let mut any = false;
        for (dof, c) in &st {
            let val = match dof {
                Dof::DirichletPrimal(i) => g.primal[*i],
                Dof::DirichletDual(i) => g.dual[*i],
                _ => continue,
            };
            any = true;
            for k in 0..3 {
                grad_g[k] += val * c[k];
            }
        }
        if !any {
            continue;
        }
        let flux = tensor.apply(d, grad_g);
        for (dof, c) in &st {
            if let Some(i) = flat(mesh, *dof) {
                out[i] += dm.volume * dot(*c, flux);
            }
        }
    }
    Ok(out)
}

/// The vector `b` with `b_j = ⟨⟨s, φ_j⟩⟩` on `Γ_N`.
pub fn neumann_load(mesh: &Mesh, s: &NeumannData) -> Result<Vec<f64>> {
    s.check(mesh)?;
    let nc = mesh.n_cells();
    let (wp, wd) = (mesh.primal_weight(), mesh.dual_weight());
    let mut out = vec![0.0; mesh.n_unknowns()];
    for (j, sj) in s.values.iter().enumerate() {
        let face = &mesh.faces[mesh.neumann_face(j)];
        out[nc + j] += wp * face.area * sj;
        for (v, a) in face.vertices.iter().zip(&face.vertex_areas) {
            if let Some(i) = flat(mesh, mesh.dual_dof(*v)) {
                out[i] += wd * a * sj;
            }
        }
    }
    Ok(out)
}

/// Flat indices and weights `r_T = (1/d) e_K + ((d−1)/d) e_K*` of an element.
fn element_vector(mesh: &Mesh, el: usize) -> [(Option<usize>, f64); 2] {
    let e = &mesh.elements[el];
    [
        (flat(mesh, mesh.primal_dof(e.primal)), mesh.primal_weight()),
        (flat(mesh, mesh.dual_dof(e.dual)), mesh.dual_weight()),
    ]
}

/// The reaction matrix `R = Σ_T Vol(T) c_T r_T r_Tᵀ` for one coefficient per
/// element, so that `φᵀ R w = ∫_Ω c(x) w(x) φ(x) dx` for the reconstructions.
pub fn assemble_reaction(mesh: &Mesh, coef: &[f64]) -> CsrMatrix {
    assert_eq!(
        coef.len(),
        mesh.elements.len(),
        "one coefficient per element"
    );
    let n = mesh.n_unknowns();
    let mut trip = Vec::with_capacity(mesh.elements.len() * 4);
    for (t, c) in coef.iter().enumerate() {
        let vol = mesh.elements[t].simplex.volume;
        let r = element_vector(mesh, t);
        for a in 0..2 {
            let Some(ia) = r[a].0 else { continue };
            for b in a..2 {
                let Some(ib) = r[b].0 else { continue };
                let val = vol * c * r[a].1 * r[b].1;
                trip.push((ia, ib, val));
                if a != b {
                    trip.push((ib, ia, val));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &trip)
}

/// The vector `b_j = Σ_T Vol(T) f_T (r_T)_j = ∫_Ω f(x) φ_j(x) dx` for one value per element.
pub fn element_load(mesh: &Mesh, values: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), mesh.elements.len(), "one value per element");
    let mut out = vec![0.0; mesh.n_unknowns()];
    for (t, f) in values.iter().enumerate() {
        let vol = mesh.elements[t].simplex.volume;
        for (i, w) in element_vector(mesh, t) {
            if let Some(i) = i {
                out[i] += vol * f * w;
            }
        }
    }
    out
}

/// Kernel of the stiffness matrices: the primal and the dual indicator
/// vectors when `Γ_D = ∅`, nothing otherwise.
pub fn nullspace_basis(mesh: &Mesh) -> Vec<Vec<f64>> {
    if mesh.has_dirichlet() {
        return Vec::new();
    }
    let (np, n) = (mesh.n_primal_unknowns(), mesh.n_unknowns());
    let mut p = vec![0.0; n];
    let mut d = vec![0.0; n];
    p[..np].iter_mut().for_each(|x| *x = 1.0);
    d[np..].iter_mut().for_each(|x| *x = 1.0);
    vec![p, d]
}
