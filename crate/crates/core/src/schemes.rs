//! Time-stepping schemes for the bidomain system written in `(u_e, v)`:
//!
//! ```text
//! div((M_e + M_i)∇u_e) + div(M_i∇v) = 0,
//! ε ∂_t v + ε² div(M_e∇u_e) + h(v) = I_app.
//! ```
//!
//! Three treatments of the ionic current are provided:
//!
//! * semi-implicit — `h` evaluated at the old values, one linear solve with
//!   the coupled matrix `M` per step;
//! * linearized implicit — `h ≈ (b(v^n) − L) v^{n+1} − l` through the
//!   reconstruction, one symmetric solve per step;
//! * fully implicit — `h(v^{n+1})` through the reconstruction; the step
//!   minimizes a convex functional `J` by Newton's method with a backtracking
//!   line search.
//!
//! With `Γ_D = ∅` the potential `u_e` is fixed by requiring its primal and
//! dual weighted means to vanish.
//!
//! Neumann data are fluxes of `εM∇u` through the boundary, outward normal.

use std::sync::Arc;

use crate::calculus::{inner_omega, DirichletData, DiscreteFunction, NeumannData, Reconstruction};
use crate::error::{DdfvError, Result};
use crate::ionic::IonicModel;
use crate::mesh::Mesh;
use crate::solver::{
    assemble_coupled, assemble_reaction, dirichlet_load, element_load, neumann_load,
    ConductivityTensors, CoupledOperator, CoupledPreconditioner, CoupledSolver, CsrMatrix,
    PinnedFactor, COUPLED_TOLERANCE,
};

/// The applied current averaged over a time interval `(t0, t1)`, as volume means.
pub type Source = Arc<dyn Fn(f64, f64) -> DiscreteFunction + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    FullyImplicit,
    LinearizedImplicit,
    SemiImplicit,
}

impl SchemeKind {
    pub fn is_implicit(self) -> bool {
        !matches!(self, SchemeKind::SemiImplicit)
    }
}

/// Boundary data of the intra- and extracellular potentials (constant in time).
#[derive(Debug, Clone, Default)]
pub struct BoundaryData {
    pub intra_dirichlet: Option<DirichletData>,
    pub extra_dirichlet: Option<DirichletData>,
    pub intra_neumann: Option<NeumannData>,
    pub extra_neumann: Option<NeumannData>,
}

#[derive(Clone)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub epsilon: f64,
    pub dt: f64,
    pub ionic: IonicModel,
    pub tensors: ConductivityTensors,
    pub source: Option<Source>,
    pub boundary: BoundaryData,
    /// Relative tolerance of the coupled GMRES solve.
    pub coupled_tol: f64,
    /// Tolerance on the gradient of `J` (relative, `Λ⁻¹` metric).
    pub newton_tol: f64,
    pub max_newton: usize,
    pub preconditioner: CoupledPreconditioner,
}

impl std::fmt::Debug for SchemeConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchemeConfig")
            .field("kind", &self.kind)
            .field("epsilon", &self.epsilon)
            .field("dt", &self.dt)
            .field("ionic", &self.ionic)
            .field("tensors", &self.tensors)
            .field("source", &self.source.is_some())
            .field("coupled_tol", &self.coupled_tol)
            .field("newton_tol", &self.newton_tol)
            .field("max_newton", &self.max_newton)
            .field("preconditioner", &self.preconditioner)
            .finish()
    }
}

impl SchemeConfig {
    pub fn new(
        kind: SchemeKind,
        epsilon: f64,
        dt: f64,
        ionic: IonicModel,
        tensors: ConductivityTensors,
    ) -> Self {
        Self {
            kind,
            epsilon,
            dt,
            ionic,
            tensors,
            source: None,
            boundary: BoundaryData::default(),
            coupled_tol: COUPLED_TOLERANCE,
            newton_tol: 1e-9,
            max_newton: 50,
            preconditioner: CoupledPreconditioner::Factorized,
        }
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = Some(source);
        self
    }
}

/// The unknowns at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub step: usize,
    pub time: f64,
    pub v: DiscreteFunction,
    pub ue: DiscreteFunction,
}

impl SchemeState {
    /// State at `t = 0` with `u_e = 0`.
    pub fn initial(mesh: &Mesh, v0: DiscreteFunction) -> Result<Self> {
        v0.check(mesh)?;
        Ok(Self {
            step: 0,
            time: 0.0,
            ue: DiscreteFunction::zeros(mesh),
            v: v0,
        })
    }

    /// The intracellular potential `u_i = v + u_e`.
    pub fn ui(&self) -> DiscreteFunction {
        let mut u = self.v.clone();
        u.axpy(1.0, &self.ue);
        u
    }
}

/// Per-step solver statistics.
#[derive(Debug, Clone, Default)]
pub struct StepInfo {
    /// Krylov or Newton iterations.
    pub iterations: usize,
    /// Final relative residual (linear solve) or gradient norm (Newton).
    pub residual: f64,
    /// Values of `J` along the Newton iterates (fully implicit only).
    pub j_history: Vec<f64>,
}

/// Shift the primal and dual parts of `u_e` so that both weighted means vanish.
pub fn normalize_ue(mesh: &Mesh, ue: &mut DiscreteFunction) {
    let (pv, dv) = mesh.unknown_volumes();
    let mean = |vals: &[f64], vols: &[f64]| {
        let total: f64 = vols.iter().sum();
        if total > 0.0 {
            vals.iter().zip(vols).map(|(a, b)| a * b).sum::<f64>() / total
        } else {
            0.0
        }
    };
    let cp = mean(&ue.primal, &pv);
    let cd = mean(&ue.dual, &dv);
    ue.primal.iter_mut().for_each(|x| *x -= cp);
    ue.dual.iter_mut().for_each(|x| *x -= cd);
}

/// Operators and data prepared once for a mesh and a configuration.
pub struct Stepper<'m> {
    mesh: &'m Mesh,
    config: SchemeConfig,
    n: usize,
    op: CoupledOperator,
    semi: Option<CoupledSolver>,
    s0: Option<CsrMatrix>,
    g_v: DirichletData,
    di: Vec<f64>,
    de: Vec<f64>,
    ni: Vec<f64>,
    ne: Vec<f64>,
    metric: Vec<f64>,
    warnings: Vec<String>,
}

impl<'m> Stepper<'m> {
    pub fn new(mesh: &'m Mesh, config: SchemeConfig) -> Result<Self> {
        if !(config.dt > 0.0 && config.epsilon > 0.0) {
            return Err(DdfvError::Config(format!(
                "time step and scaling must be positive (dt = {}, epsilon = {})",
                config.dt, config.epsilon
            )));
        }
        let mut warnings = Vec::new();
        if config.kind.is_implicit() {
            let limit = config.ionic.max_implicit_dt(config.epsilon);
            if config.dt >= limit {
                return Err(DdfvError::Config(format!(
                    "implicit schemes need dt < epsilon/(2L) = {limit:e}, got {}",
                    config.dt
                )));
            }
            if config.kind == SchemeKind::LinearizedImplicit
                && mesh.dim() == 3
                && config.ionic.growth >= 16.0 / 3.0
            {
                warnings.push(format!(
                    "growth exponent r = {} is not covered by the convergence theory of the linearized scheme in 3D (r < 16/3)",
                    config.ionic.growth
                ));
            }
        }
        config
            .tensors
            .validate(mesh.dim(), mesh.diamonds.len(), f64::INFINITY)?;

        let n = mesh.n_unknowns();
        let b = &config.boundary;
        let zero_g = DirichletData::zeros(mesh);
        let g_i = b.intra_dirichlet.clone().unwrap_or_else(|| zero_g.clone());
        let g_e = b.extra_dirichlet.clone().unwrap_or_else(|| zero_g.clone());
        let s_i = b
            .intra_neumann
            .clone()
            .unwrap_or_else(|| NeumannData::zeros(mesh));
        let s_e = b
            .extra_neumann
            .clone()
            .unwrap_or_else(|| NeumannData::zeros(mesh));
        g_i.check(mesh)?;
        g_e.check(mesh)?;
        if !mesh.has_dirichlet() {
            let total = s_i.total_flux(mesh) + s_e.total_flux(mesh);
            let scale: f64 = mesh
                .neumann_faces()
                .iter()
                .zip(s_i.values.iter().zip(&s_e.values))
                .map(|(&f, (a, b))| mesh.faces[f].area * (a.abs() + b.abs()))
                .sum();
            if total.abs() > 1e-12 * (1.0 + scale) {
                return Err(DdfvError::Config(format!(
                    "Neumann data violate the compatibility condition: total flux {total:e}"
                )));
            }
        }
        let di = dirichlet_load(mesh, &config.tensors.intra, &g_i)?;
        let de = dirichlet_load(mesh, &config.tensors.extra, &g_e)?;
        let ni = neumann_load(mesh, &s_i)?;
        let ne = neumann_load(mesh, &s_e)?;
        let g_v = DirichletData {
            primal: g_i
                .primal
                .iter()
                .zip(&g_e.primal)
                .map(|(a, b)| a - b)
                .collect(),
            dual: g_i.dual.iter().zip(&g_e.dual).map(|(a, b)| a - b).collect(),
        };

        let op = assemble_coupled(mesh, &config.tensors, config.epsilon, config.dt)?;
        let (semi, s0) = if config.kind.is_implicit() {
            (None, Some(op.symmetric(None)))
        } else {
            (
                Some(CoupledSolver::new(
                    op.clone(),
                    config.preconditioner,
                    config.coupled_tol,
                )?),
                None,
            )
        };

        let wp = mesh.primal_weight();
        let metric = op
            .mass
            .iter()
            .enumerate()
            .map(|(j, &m)| {
                if m > 0.0 {
                    m
                } else {
                    let k = mesh.primal_unknowns[j];
                    wp * mesh.faces[mesh.primal[k].faces[0]].area * mesh.degenerate_length(k)
                }
            })
            .collect();

        Ok(Self {
            mesh,
            config,
            n,
            op,
            semi,
            s0,
            g_v,
            di,
            de,
            ni,
            ne,
            metric,
            warnings,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn operator(&self) -> &CoupledOperator {
        &self.op
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Dirichlet data of `v = u_i − u_e`.
    pub fn v_dirichlet(&self) -> &DirichletData {
        &self.g_v
    }

    fn source_flat(&self, t0: f64, t1: f64) -> Result<Vec<f64>> {
        match &self.config.source {
            None => Ok(vec![0.0; self.n]),
            Some(f) => {
                let s = f(t0, t1);
                s.check(self.mesh)?;
                Ok(s.to_flat())
            }
        }
    }

    /// Reconstructed values of `v` on every element.
    fn element_values(&self, v: &DiscreteFunction) -> Result<Vec<f64>> {
        Ok(Reconstruction::new(self.mesh, v, Some(&self.g_v))?.values)
    }

    fn split(&self, x: &[f64]) -> Result<(DiscreteFunction, DiscreteFunction)> {
        let ue = DiscreteFunction::from_flat(self.mesh, &x[..self.n])?;
        let v = DiscreteFunction::from_flat(self.mesh, &x[self.n..])?;
        Ok((ue, v))
    }

    fn finish(&self, state: &SchemeState, x: &[f64]) -> Result<SchemeState> {
        let (mut ue, v) = self.split(x)?;
        if !self.mesh.has_dirichlet() {
            normalize_ue(self.mesh, &mut ue);
        }
        Ok(SchemeState {
            step: state.step + 1,
            time: state.time + self.config.dt,
            v,
            ue,
        })
    }

    /// Advance one time step.
    pub fn step(&self, state: &SchemeState) -> Result<SchemeState> {
        Ok(self.step_with_info(state)?.0)
    }

    pub fn step_with_info(&self, state: &SchemeState) -> Result<(SchemeState, StepInfo)> {
        state.v.check(self.mesh)?;
        let wrap = |e: DdfvError| DdfvError::Step {
            step: state.step,
            source: Box::new(e),
        };
        match self.config.kind {
            SchemeKind::SemiImplicit => self.semi_implicit(state),
            SchemeKind::LinearizedImplicit => self.linearized(state),
            SchemeKind::FullyImplicit => self.fully_implicit(state),
        }
        .map_err(wrap)
    }

    /// The right-hand side of the first (elliptic) row of `M`.
    fn elliptic_rhs(&self) -> Vec<f64> {
        let eps = self.config.epsilon;
        (0..self.n)
            .map(|j| -(self.di[j] + self.de[j]) + (self.ni[j] + self.ne[j]) / eps)
            .collect()
    }

    fn semi_implicit(&self, state: &SchemeState) -> Result<(SchemeState, StepInfo)> {
        let (eps, dt) = (self.config.epsilon, self.config.dt);
        let n = self.n;
        let vn = state.v.to_flat();
        let iapp = self.source_flat(state.time, state.time + dt)?;
        let mut rhs = self.elliptic_rhs();
        rhs.reserve(n);
        for j in 0..n {
            let h = self.config.ionic.h(vn[j]);
            rhs.push(
                self.op.mass[j] * (vn[j] + dt * (iapp[j] - h) / eps) + eps * dt * self.de[j]
                    - dt * self.ne[j],
            );
        }
        let solver = self.semi.as_ref().expect("semi-implicit solver");
        let (x, info) = solver.solve(&rhs, None)?;
        Ok((
            self.finish(state, &x)?,
            StepInfo {
                iterations: info.iterations,
                residual: info.residual,
                j_history: Vec::new(),
            },
        ))
    }

    /// Right-hand side of the symmetric system with the `v` row completed by `extra`.
    fn symmetric_rhs(&self, vn: &[f64], iapp: &[f64], extra: &[f64]) -> Vec<f64> {
        let (eps, dt) = (self.config.epsilon, self.config.dt);
        let mut rhs: Vec<f64> = self.elliptic_rhs().iter().map(|r| eps * r).collect();
        for j in 0..self.n {
            let m = self.op.mass[j];
            rhs.push(
                m * vn[j] / dt + (m * iapp[j] + extra[j]) / eps - eps * self.di[j] + self.ni[j],
            );
        }
        rhs
    }

    fn linearized_reaction(&self, v: &DiscreteFunction) -> Result<CsrMatrix> {
        let model = &self.config.ionic;
        let coef: Vec<f64> = self
            .element_values(v)?
            .iter()
            .map(|&z| model.b(z) - model.shift)
            .collect();
        Ok(assemble_reaction(self.mesh, &coef))
    }

    fn linearized(&self, state: &SchemeState) -> Result<(SchemeState, StepInfo)> {
        let dt = self.config.dt;
        let r = self.linearized_reaction(&state.v)?;
        let a = self.op.symmetric(Some(&r));
        let vn = state.v.to_flat();
        let iapp = self.source_flat(state.time, state.time + dt)?;
        let l = self.config.ionic.offset;
        let extra = if l != 0.0 {
            element_load(self.mesh, &vec![l; self.mesh.elements.len()])
        } else {
            vec![0.0; self.n]
        };
        let rhs = self.symmetric_rhs(&vn, &iapp, &extra);
        let x = PinnedFactor::new(&a, &self.op.pins)?.solve(&rhs);
        Ok((self.finish(state, &x)?, StepInfo::default()))
    }

    /// The functional `J` at `x = (u_e, v)` for the step starting from `v^n`.
    ///
    /// `J = (1/2Δt)[[v,v]] − (1/Δt)[[v,vⁿ]] + (1/ε)∫H(v(·)) + (ε/2){{M_i∇u_i,∇u_i}}
    ///    + (ε/2){{M_e∇u_e,∇u_e}} − ⟨⟨s_i,u_i⟩⟩ − ⟨⟨s_e,u_e⟩⟩ − (1/ε)[[I,v]]`,
    /// with `u_i = v + u_e`, up to a constant depending on the Dirichlet data.
    pub fn functional(&self, x: &[f64], vn: &[f64], iapp: &[f64]) -> Result<f64> {
        let (eps, dt) = (self.config.epsilon, self.config.dt);
        let n = self.n;
        let (ue, v) = x.split_at(n);
        let ui: Vec<f64> = v.iter().zip(ue).map(|(a, b)| a + b).collect();
        let vfun = DiscreteFunction::from_flat(self.mesh, v)?;
        let h_int: f64 = self
            .element_values(&vfun)?
            .iter()
            .zip(&self.mesh.elements)
            .map(|(z, el)| el.simplex.volume * self.config.ionic.primitive(*z))
            .sum();
        let mut j = h_int / eps;
        for k in 0..n {
            let m = self.op.mass[k];
            j += m * (0.5 * v[k] * v[k] - v[k] * vn[k]) / dt - m * iapp[k] * v[k] / eps;
            j += eps * (ui[k] * self.di[k] + ue[k] * self.de[k])
                - self.ni[k] * ui[k]
                - self.ne[k] * ue[k];
        }
        j += 0.5 * eps * (self.op.sigma_i.bilinear(&ui, &ui) + self.op.sigma_e.bilinear(ue, ue));
        Ok(j)
    }

    /// Gradient of [`functional`](Self::functional).
    pub fn functional_gradient(&self, x: &[f64], vn: &[f64], iapp: &[f64]) -> Result<Vec<f64>> {
        let (eps, dt) = (self.config.epsilon, self.config.dt);
        let n = self.n;
        let (ue, v) = x.split_at(n);
        let ui: Vec<f64> = v.iter().zip(ue).map(|(a, b)| a + b).collect();
        let vfun = DiscreteFunction::from_flat(self.mesh, v)?;
        let hz: Vec<f64> = self
            .element_values(&vfun)?
            .iter()
            .map(|&z| self.config.ionic.h(z))
            .collect();
        let hv = element_load(self.mesh, &hz);
        let si = self.op.sigma_i.mul_vec(&ui);
        let se = self.op.sigma_e.mul_vec(ue);
        let mut g = vec![0.0; 2 * n];
        for k in 0..n {
            let fi = eps * (si[k] + self.di[k]) - self.ni[k];
            let fe = eps * (se[k] + self.de[k]) - self.ne[k];
            g[k] = fi + fe;
            let m = self.op.mass[k];
            g[n + k] = m * (v[k] - vn[k]) / dt + (hv[k] - m * iapp[k]) / eps + fi;
        }
        Ok(g)
    }

    fn metric_norm(&self, g: &[f64]) -> f64 {
        let n = self.n;
        g.iter()
            .enumerate()
            .map(|(k, gk)| gk * gk / self.metric[k % n])
            .sum::<f64>()
            .sqrt()
    }

    fn newton_matrix(&self, v: &[f64]) -> Result<CsrMatrix> {
        let vfun = DiscreteFunction::from_flat(self.mesh, v)?;
        let coef: Vec<f64> = self
            .element_values(&vfun)?
            .iter()
            .map(|&z| self.config.ionic.dh(z))
            .collect();
        let r = assemble_reaction(self.mesh, &coef);
        let s0 = self.s0.as_ref().expect("implicit operator");
        let n = self.n;
        // add R/ε to the v block of S
        let mut trip = Vec::with_capacity(r.nnz());
        for i in 0..n {
            trip.extend(
                r.row(i)
                    .map(|(j, a)| (n + i, n + j, a / self.config.epsilon)),
            );
        }
        let shifted = CsrMatrix::from_triplets(2 * n, 2 * n, &trip);
        Ok(CsrMatrix::linear_combination(1.0, s0, 1.0, &shifted))
    }

    fn fully_implicit(&self, state: &SchemeState) -> Result<(SchemeState, StepInfo)> {
        let (eps, dt) = (self.config.epsilon, self.config.dt);
        let n = self.n;
        let vn = state.v.to_flat();
        let iapp = self.source_flat(state.time, state.time + dt)?;
        let scale =
            1.0 + self.metric_norm(
                &[
                    vec![0.0; n],
                    (0..n).map(|k| self.op.mass[k] * vn[k] / dt).collect(),
                ]
                .concat(),
            ) + self.metric_norm(
                &[
                    vec![0.0; n],
                    (0..n).map(|k| self.op.mass[k] * iapp[k] / eps).collect(),
                ]
                .concat(),
            );
        let tol = self.config.newton_tol * scale;

        let mut x = [state.ue.to_flat(), vn.clone()].concat();
        let mut jx = self.functional(&x, &vn, &iapp)?;
        let mut g = self.functional_gradient(&x, &vn, &iapp)?;
        let mut gnorm = self.metric_norm(&g);
        let mut history = vec![jx];
        let mut iterations = 0;
        let mut polished = false;
        loop {
            if gnorm <= tol {
                if polished || gnorm == 0.0 {
                    break;
                }
                polished = true;
            }
            if iterations >= self.config.max_newton {
                return Err(DdfvError::Solver {
                    method: "Newton on J",
                    iterations,
                    residual: gnorm / scale,
                    history,
                });
            }
            iterations += 1;
            let h = self.newton_matrix(&x[n..])?;
            let minus_g: Vec<f64> = g.iter().map(|a| -a).collect();
            let mut dir = PinnedFactor::new(&h, &self.op.pins)?.solve(&minus_g);
            let mut slope: f64 = dir.iter().zip(&g).map(|(d, gk)| d * gk).sum();
            if !(slope < 0.0) {
                // not a descent direction: fall back to the scaled gradient
                dir = g
                    .iter()
                    .enumerate()
                    .map(|(k, gk)| -gk / self.metric[k % n])
                    .collect();
                slope = dir.iter().zip(&g).map(|(d, gk)| d * gk).sum();
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..50 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                let jt = self.functional(&trial, &vn, &iapp)?;
                if jt <= jx + 1e-4 * t * slope + 1e-13 * jx.abs().max(1.0) {
                    accepted = Some((trial, jt));
                    break;
                }
                t *= 0.5;
            }
            let Some((trial, jt)) = accepted else {
                if gnorm <= tol {
                    break;
                }
                return Err(DdfvError::Solver {
                    method: "Newton line search on J",
                    iterations,
                    residual: gnorm / scale,
                    history,
                });
            };
            let gt = self.functional_gradient(&trial, &vn, &iapp)?;
            let gtn = self.metric_norm(&gt);
            if polished && gtn >= gnorm {
                // the polishing step did not improve anything
                break;
            }
            x = trial;
            jx = jt;
            g = gt;
            gnorm = gtn;
            history.push(jx);
        }
        Ok((
            self.finish(state, &x)?,
            StepInfo {
                iterations,
                residual: gnorm / scale,
                j_history: history,
            },
        ))
    }

    /// Residuals of the two discrete weak-form lines of the step `old → new`,
    /// one entry per canonical basis test function:
    ///
    /// ```text
    /// A = Λ(v' − v)/Δt + ε(Σ_i u_i' + d_i) − n_i + (H − Λ I)/ε,
    /// B = Λ(v' − v)/Δt − ε(Σ_e u_e' + d_e) + n_e + (H − Λ I)/ε,
    /// ```
    ///
    /// where `H_j = [[h^{n+1}, φ_j]]` is the ionic term of the scheme.
    pub fn weak_form_residuals(
        &self,
        old: &SchemeState,
        new: &SchemeState,
    ) -> Result<[Vec<f64>; 2]> {
        let (eps, dt) = (self.config.epsilon, self.config.dt);
        let n = self.n;
        let vn = old.v.to_flat();
        let v1 = new.v.to_flat();
        let ue = new.ue.to_flat();
        let ui: Vec<f64> = v1.iter().zip(&ue).map(|(a, b)| a + b).collect();
        let iapp = self.source_flat(old.time, old.time + dt)?;
        let hvec: Vec<f64> = match self.config.kind {
            SchemeKind::SemiImplicit => (0..n)
                .map(|k| self.op.mass[k] * self.config.ionic.h(vn[k]))
                .collect(),
            SchemeKind::LinearizedImplicit => {
                let rv = self.linearized_reaction(&old.v)?.mul_vec(&v1);
                let l = self.config.ionic.offset;
                let lvec = element_load(self.mesh, &vec![l; self.mesh.elements.len()]);
                rv.iter().zip(&lvec).map(|(a, b)| a - b).collect()
            }
            SchemeKind::FullyImplicit => {
                let hz: Vec<f64> = self
                    .element_values(&new.v)?
                    .iter()
                    .map(|&z| self.config.ionic.h(z))
                    .collect();
                element_load(self.mesh, &hz)
            }
        };
        let si = self.op.sigma_i.mul_vec(&ui);
        let se = self.op.sigma_e.mul_vec(&ue);
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for k in 0..n {
            let m = self.op.mass[k];
            let common = m * (v1[k] - vn[k]) / dt + (hvec[k] - m * iapp[k]) / eps;
            a[k] = common + eps * (si[k] + self.di[k]) - self.ni[k];
            b[k] = common - eps * (se[k] + self.de[k]) + self.ne[k];
        }
        Ok([a, b])
    }
}

/// One semi-implicit step (prepares the operators on every call; use
/// [`Stepper`] for repeated steps).
pub fn step_semi_implicit(
    mesh: &Mesh,
    state: &SchemeState,
    config: &SchemeConfig,
) -> Result<SchemeState> {
    let mut c = config.clone();
    c.kind = SchemeKind::SemiImplicit;
    Stepper::new(mesh, c)?.step(state)
}

/// One linearized implicit step.
pub fn step_linearized_implicit(
    mesh: &Mesh,
    state: &SchemeState,
    config: &SchemeConfig,
) -> Result<SchemeState> {
    let mut c = config.clone();
    c.kind = SchemeKind::LinearizedImplicit;
    Stepper::new(mesh, c)?.step(state)
}

/// One fully implicit step.
pub fn step_fully_implicit(
    mesh: &Mesh,
    state: &SchemeState,
    config: &SchemeConfig,
) -> Result<SchemeState> {
    let mut c = config.clone();
    c.kind = SchemeKind::FullyImplicit;
    Stepper::new(mesh, c)?.step(state)
}

/// Receiver of the recorded frames of a run.
pub trait FrameSink {
    fn frame(
        &mut self,
        index: usize,
        time: f64,
        v: &DiscreteFunction,
        ue: &DiscreteFunction,
    ) -> Result<()>;
}

/// A sink keeping every frame in memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub v: Vec<DiscreteFunction>,
    pub ue: Vec<DiscreteFunction>,
}

impl FrameSink for Trajectory {
    fn frame(
        &mut self,
        _index: usize,
        time: f64,
        v: &DiscreteFunction,
        ue: &DiscreteFunction,
    ) -> Result<()> {
        self.times.push(time);
        self.v.push(v.clone());
        self.ue.push(ue.clone());
        Ok(())
    }
}

/// Monitors collected during a run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub frames: usize,
    /// `[[vⁿ, vⁿ]]` for `n = 0..=steps`.
    pub energy: Vec<f64>,
    /// Largest one-step increase of `max|v|` (a stability monitor for the
    /// explicit treatment of the ionic current; reported, not enforced).
    pub max_growth: f64,
    pub final_state: SchemeState,
    pub warnings: Vec<String>,
}

fn interpolate(a: &DiscreteFunction, b: &DiscreteFunction, theta: f64) -> DiscreteFunction {
    let mut out = a.scaled(1.0 - theta);
    out.axpy(theta, b);
    out
}

/// Run from `v0` up to `t_final`, sending frames recorded every `record_dt`
/// (linearly interpolated in time between steps) to `sink`.
///
/// `t_final` must be a whole number of steps. A failing step aborts the run;
/// the frames recorded so far have already been delivered.
pub fn run_simulation(
    mesh: &Mesh,
    config: &SchemeConfig,
    v0: &DiscreteFunction,
    t_final: f64,
    record_dt: f64,
    sink: &mut dyn FrameSink,
) -> Result<RunSummary> {
    let stepper = Stepper::new(mesh, config.clone())?;
    run_with(&stepper, v0, t_final, record_dt, sink)
}

/// [`run_simulation`] with prepared operators.
pub fn run_with(
    stepper: &Stepper<'_>,
    v0: &DiscreteFunction,
    t_final: f64,
    record_dt: f64,
    sink: &mut dyn FrameSink,
) -> Result<RunSummary> {
    let mesh = stepper.mesh();
    let dt = stepper.config().dt;
    if !(t_final >= 0.0) || !(record_dt > 0.0) {
        return Err(DdfvError::Config(format!(
            "final time must be nonnegative and recording interval positive (T = {t_final}, record = {record_dt})"
        )));
    }
    let steps = (t_final / dt).round() as usize;
    if ((steps as f64) * dt - t_final).abs() > 1e-9 * t_final.max(dt) {
        return Err(DdfvError::Config(format!(
            "final time {t_final} is not a multiple of the time step {dt}"
        )));
    }
    let n_frames = (t_final / record_dt + 1e-9).floor() as usize + 1;
    let mut state = SchemeState::initial(mesh, v0.clone())?;
    sink.frame(0, 0.0, &state.v, &state.ue)?;
    let mut next_frame = 1;
    let mut energy = vec![inner_omega(mesh, &state.v, &state.v)?];
    let mut max_growth: f64 = 0.0;
    for n in 0..steps {
        let new = stepper.step(&state)?;
        let (t0, t1) = (n as f64 * dt, (n + 1) as f64 * dt);
        while next_frame < n_frames {
            let tf = next_frame as f64 * record_dt;
            if tf > t1 + 1e-9 * dt {
                break;
            }
            let theta = ((tf - t0) / dt).clamp(0.0, 1.0);
            let (v, ue) = if theta >= 1.0 {
                (new.v.clone(), new.ue.clone())
            } else {
                (
                    interpolate(&state.v, &new.v, theta),
                    interpolate(&state.ue, &new.ue, theta),
                )
            };
            sink.frame(next_frame, tf, &v, &ue)?;
            next_frame += 1;
        }
        energy.push(inner_omega(mesh, &new.v, &new.v)?);
        max_growth = max_growth.max(new.v.max_abs() - state.v.max_abs());
        state = new;
    }
    Ok(RunSummary {
        steps,
        frames: next_frame,
        energy,
        max_growth,
        final_state: state,
        warnings: stepper.warnings().to_vec(),
    })
}

/// Outcome of a contraction check.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    /// `[[δvⁿ, δvⁿ]]` for `n = 1..=steps`.
    pub lhs: Vec<f64>,
    /// `e^{L n Δt/ε} [[δv⁰, δv⁰]]`.
    pub bound: Vec<f64>,
    /// Largest `lhs/bound` (0 when both sides vanish).
    pub worst_ratio: f64,
}

/// Run the fully implicit scheme from `v0` and `v0_hat` and check
/// `[[vⁿ − v̂ⁿ, vⁿ − v̂ⁿ]] ≤ e^{L n Δt/ε} [[v⁰ − v̂⁰, v⁰ − v̂⁰]]` at every step.
pub fn contraction_check(
    mesh: &Mesh,
    config: &SchemeConfig,
    v0: &DiscreteFunction,
    v0_hat: &DiscreteFunction,
    steps: usize,
) -> Result<ContractionReport> {
    if config.kind != SchemeKind::FullyImplicit {
        return Err(DdfvError::Config(
            "the contraction property is established for the fully implicit scheme only".into(),
        ));
    }
    let stepper = Stepper::new(mesh, config.clone())?;
    let diff = |a: &DiscreteFunction, b: &DiscreteFunction| -> Result<f64> {
        let mut d = a.clone();
        d.axpy(-1.0, b);
        inner_omega(mesh, &d, &d)
    };
    let mut a = SchemeState::initial(mesh, v0.clone())?;
    let mut b = SchemeState::initial(mesh, v0_hat.clone())?;
    let d0 = diff(v0, v0_hat)?;
    let rate = config.ionic.shift * config.dt / config.epsilon;
    let mut report = ContractionReport {
        lhs: Vec::with_capacity(steps),
        bound: Vec::with_capacity(steps),
        worst_ratio: 0.0,
    };
    for n in 1..=steps {
        a = stepper.step(&a)?;
        b = stepper.step(&b)?;
        let lhs = diff(&a.v, &b.v)?;
        let bound = (rate * n as f64).exp() * d0;
        if lhs > bound * (1.0 + 1e-12) + 1e-300 {
            return Err(DdfvError::Diagnostic {
                step: n,
                reason: format!("contraction violated: {lhs:e} > {bound:e}"),
            });
        }
        if bound > 0.0 {
            report.worst_ratio = report.worst_ratio.max(lhs / bound);
        }
        report.lhs.push(lhs);
        report.bound.push(bound);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::structured;

    fn config(kind: SchemeKind) -> SchemeConfig {
        SchemeConfig::new(
            kind,
            0.02,
            0.002,
            IonicModel::cubic(0.2),
            ConductivityTensors::fibres((1.0, 1.0 / 9.0), (1.0, 0.5)).unwrap(),
        )
    }

    #[test]
    fn zero_state_stays_zero() {
        let m = structured(2, 3).unwrap();
        for kind in [
            SchemeKind::SemiImplicit,
            SchemeKind::LinearizedImplicit,
            SchemeKind::FullyImplicit,
        ] {
            let s = SchemeState::initial(&m, DiscreteFunction::zeros(&m)).unwrap();
            let next = Stepper::new(&m, config(kind)).unwrap().step(&s).unwrap();
            assert_eq!(next.v.max_abs(), 0.0);
            assert_eq!(next.ue.max_abs(), 0.0);
        }
    }

    #[test]
    fn implicit_time_step_limit_is_enforced() {
        let m = structured(2, 2).unwrap();
        let mut c = config(SchemeKind::FullyImplicit);
        c.dt = 1.0;
        assert!(matches!(Stepper::new(&m, c), Err(DdfvError::Config(_))));
    }

    #[test]
    fn normalization_is_idempotent() {
        let m = structured(2, 3).unwrap();
        let mut ue = DiscreteFunction::constant(&m, 2.0);
        ue.primal[0] = 5.0;
        normalize_ue(&m, &mut ue);
        let once = ue.clone();
        normalize_ue(&m, &mut ue);
        for (a, b) in once.to_flat().iter().zip(ue.to_flat()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
