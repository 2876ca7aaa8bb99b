//! Ionic current models and their discretization.
//!
//! The default model is the cubic `h(v) = v (v − 1)(v − α)`. Every model
//! comes with a monotonicity shift `(L, l)` such that
//! `h̃(z) = h(z) + L z + l` is nondecreasing, the slope function
//! `b(z) = h̃(z)/z` (with `b(0) = 0`) and the primitive `H(z) = ∫₀^z h`.

use std::fmt;
use std::sync::Arc;

use crate::calculus::{DirichletData, DiscreteFunction};
use crate::error::Result;
use crate::mesh::{Dof, Mesh};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum IonicKind {
    Cubic {
        alpha: f64,
    },
    /// No ionic current (pure diffusion).
    Zero,
    /// A user-supplied current with its derivative and primitive.
    Custom {
        h: ScalarFn,
        dh: ScalarFn,
        primitive: ScalarFn,
    },
}

#[derive(Clone)]
pub struct IonicModel {
    pub kind: IonicKind,
    /// Linear monotonicity shift `L`.
    pub shift: f64,
    /// Constant monotonicity shift `l`.
    pub offset: f64,
    /// Growth exponent `r` of `|h(z)| ≲ |z|^{r−1}`.
    pub growth: f64,
}

impl fmt::Debug for IonicModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            IonicKind::Cubic { alpha } => format!("Cubic {{ alpha: {alpha} }}"),
            IonicKind::Zero => "Zero".to_string(),
            IonicKind::Custom { .. } => "Custom".to_string(),
        };
        f.debug_struct("IonicModel")
            .field("kind", &kind)
            .field("shift", &self.shift)
            .field("offset", &self.offset)
            .field("growth", &self.growth)
            .finish()
    }
}

impl IonicModel {
    /// Cubic current with threshold `alpha`; the shift `L` is the smallest
    /// value making `h̃` increasing, plus a margin of `1e-6`.
    pub fn cubic(alpha: f64) -> Self {
        // h'(z) = 3z² − 2(1+α)z + α is minimal at z = (1+α)/3
        let zmin = (1.0 + alpha) / 3.0;
        let min_slope = 3.0 * zmin * zmin - 2.0 * (1.0 + alpha) * zmin + alpha;
        Self {
            kind: IonicKind::Cubic { alpha },
            shift: (-min_slope).max(0.0) + 1e-6,
            offset: 0.0,
            growth: 4.0,
        }
    }

    pub fn zero() -> Self {
        Self {
            kind: IonicKind::Zero,
            shift: 0.0,
            offset: 0.0,
            growth: 2.0,
        }
    }

    pub fn custom(
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dh: impl Fn(f64) -> f64 + Send + Sync + 'static,
        primitive: impl Fn(f64) -> f64 + Send + Sync + 'static,
        shift: f64,
        offset: f64,
        growth: f64,
    ) -> Self {
        Self {
            kind: IonicKind::Custom {
                h: Arc::new(h),
                dh: Arc::new(dh),
                primitive: Arc::new(primitive),
            },
            shift,
            offset,
            growth,
        }
    }

    #[inline]
    pub fn h(&self, v: f64) -> f64 {
        match &self.kind {
            IonicKind::Cubic { alpha } => v * (v - 1.0) * (v - alpha),
            IonicKind::Zero => 0.0,
            IonicKind::Custom { h, .. } => h(v),
        }
    }

    /// Derivative `h'(v)`.
    #[inline]
    pub fn dh(&self, v: f64) -> f64 {
        match &self.kind {
            IonicKind::Cubic { alpha } => 3.0 * v * v - 2.0 * (1.0 + alpha) * v + alpha,
            IonicKind::Zero => 0.0,
            IonicKind::Custom { dh, .. } => dh(v),
        }
    }

    /// Primitive `H(v) = ∫₀^v h(s) ds`.
    #[inline]
    pub fn primitive(&self, v: f64) -> f64 {
        match &self.kind {
            IonicKind::Cubic { alpha } => {
                v.powi(4) / 4.0 - (1.0 + alpha) * v.powi(3) / 3.0 + alpha * v * v / 2.0
            }
            IonicKind::Zero => 0.0,
            IonicKind::Custom { primitive, .. } => primitive(v),
        }
    }

    /// `h̃(z) = h(z) + L z + l`.
    #[inline]
    pub fn h_tilde(&self, z: f64) -> f64 {
        self.h(z) + self.shift * z + self.offset
    }

    /// `b(z) = h̃(z)/z` with `b(0) = 0`.
    #[inline]
    pub fn b(&self, z: f64) -> f64 {
        if z == 0.0 {
            0.0
        } else {
            self.h_tilde(z) / z
        }
    }

    /// Largest time step allowed by the implicit schemes, `ε/(2L)`
    /// (`+∞` when `L = 0`).
    pub fn max_implicit_dt(&self, epsilon: f64) -> f64 {
        if self.shift > 0.0 {
            epsilon / (2.0 * self.shift)
        } else {
            f64::INFINITY
        }
    }
}

/// Mean of `h(w(·))` over every volume, where `w(·)` is the piecewise-constant
/// reconstruction of `w` (Dirichlet vertices read from `g`, zero if `None`).
///
/// This is the projection for which
/// `[[ionic_project(w), φ]] = ∫_Ω h(w(x)) φ(x) dx` holds for every `φ`. The
/// stencil of a volume is the set of volumes it overlaps, so no coupling
/// beyond the diffusion stencil is introduced. Degenerate Neumann entries are
/// means of `h` of the boundary trace over the face.
pub fn ionic_project(
    mesh: &Mesh,
    w: &DiscreteFunction,
    model: &IonicModel,
    g: Option<&DirichletData>,
) -> Result<DiscreteFunction> {
    element_means(mesh, w, g, |z| model.h(z))
}

/// Volume means of `ψ(w(·))` for a scalar function `ψ`.
pub fn element_means(
    mesh: &Mesh,
    w: &DiscreteFunction,
    g: Option<&DirichletData>,
    psi: impl Fn(f64) -> f64,
) -> Result<DiscreteFunction> {
    w.check(mesh)?;
    let (wp, wd) = (mesh.primal_weight(), mesh.dual_weight());
    let vval = |v: usize| -> f64 {
        match mesh.dual_dof(v) {
            Dof::Dual(i) => w.dual[i],
            Dof::DirichletDual(i) => g.map_or(0.0, |g| g.dual[i]),
            _ => unreachable!(),
        }
    };
    let mut pint = vec![0.0; mesh.n_cells()];
    let mut dint = vec![0.0; mesh.n_vertices()];
    for el in &mesh.elements {
        let val = el.simplex.volume * psi(wp * w.primal[el.primal] + wd * vval(el.dual));
        pint[el.primal] += val;
        dint[el.dual] += val;
    }
    let nc = mesh.n_cells();
    let mut out = DiscreteFunction::zeros(mesh);
    for k in 0..nc {
        out.primal[k] = pint[k] / mesh.primal[k].volume;
    }
    for j in 0..mesh.n_neumann_faces() {
        let face = &mesh.faces[mesh.neumann_face(j)];
        let mut acc = 0.0;
        for (v, a) in face.vertices.iter().zip(&face.vertex_areas) {
            acc += a * psi(wp * w.primal[nc + j] + wd * vval(*v));
        }
        out.primal[nc + j] = acc / face.area;
    }
    for (i, &v) in mesh.dual_unknowns.iter().enumerate() {
        out.dual[i] = dint[v] / mesh.dual[v].volume;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots_and_value() {
        let m = IonicModel::cubic(0.2);
        for r in [0.0, 0.2, 1.0] {
            assert_eq!(m.h(r), 0.0);
        }
        assert!((m.h(0.5) + 0.075).abs() < 1e-15);
    }

    #[test]
    fn default_shift_for_alpha_02() {
        let m = IonicModel::cubic(0.2);
        // h'(0.4) = 0.48 − 0.96 + 0.2 = −0.28
        assert!((m.shift - 0.28 - 1e-6).abs() < 1e-12);
        assert_eq!(m.offset, 0.0);
    }

    #[test]
    fn b_at_zero_is_zero() {
        assert_eq!(IonicModel::cubic(0.2).b(0.0), 0.0);
    }
}
