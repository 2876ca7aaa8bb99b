//! The "double" finite volume mesh: primal cells with their centers,
//! degenerate boundary volumes, vertex-centered dual volumes, one diamond
//! per face and the subdiamonds / elements that tile every diamond.
//!
//! Only simplicial primal meshes are supported (triangles in 2D,
//! tetrahedra in 3D). All centers are barycenters; the center of a
//! boundary volume is the barycenter of its face.
//!
//! Geometry is decomposed into *elements*: in 3D the tetrahedra
//! `(x_K, x_K*, x_{K|L}, x_{K*|L*})` spanned by a cell center, a vertex, a
//! face center and the midpoint of a face edge; in 2D the triangles
//! `(x_K, x_K*, x_{K|L})`. Every element carries the ids of the primal
//! volume, dual volume, diamond and subdiamond it belongs to, so that dual
//! volumes, overlaps `Vol(K ∩ K*)` and subdiamonds are all views of the
//! same list.

mod generate;
mod io;
mod locate;
mod regularity;

pub use generate::{structured, structured_with, BoundaryRule};
pub use io::{mesh_to_string, parse_mesh, parse_mesh_input, read_mesh, write_mesh};
pub use locate::SimplexLocator;
pub use regularity::{regularity_report, RegularityReport};

use std::collections::HashMap;
use std::ops::Range;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{DdfvError, Result};
use crate::geometry::{
    add, barycenter, cross, det2, dist, dot, norm, scale, sub, tet_signed_volume, tri_area,
    tri_signed_area, triple, Point, Simplex,
};

/// Boundary condition label of a boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryLabel {
    Dirichlet,
    Neumann,
}

/// Raw mesh description: vertex coordinates, simplicial cells and labelled boundary faces.
#[derive(Debug, Clone)]
pub struct MeshInput {
    pub dim: usize,
    pub vertices: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
    pub boundary_faces: Vec<(Vec<usize>, BoundaryLabel)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimalKind {
    Interior,
    NeumannDegenerate,
    DirichletBoundary,
}

/// A primal control volume: a cell, or a boundary face seen as a zero-volume volume.
#[derive(Debug, Clone)]
pub struct PrimalVolume {
    pub kind: PrimalKind,
    pub center: Point,
    pub vertices: Vec<usize>,
    pub faces: Vec<usize>,
    pub volume: f64,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub vertices: Vec<usize>,
    pub center: Point,
    /// Area in 3D, length in 2D.
    pub area: f64,
    /// Unit normal pointing from `minus` to `plus` (outward on the boundary).
    pub normal: Point,
    pub minus: usize,
    pub plus: usize,
    pub boundary: Option<BoundaryLabel>,
    /// `|σ ∩ K*|` for each face vertex, aligned with `vertices`.
    pub vertex_areas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualKind {
    Interior,
    DirichletBoundary,
}

/// A vertex-centered dual control volume.
#[derive(Debug, Clone)]
pub struct DualVolume {
    pub center: Point,
    pub kind: DualKind,
    pub elements: Vec<usize>,
    pub volume: f64,
}

/// The diamond attached to one face, together with its gradient stencil.
#[derive(Debug, Clone)]
pub struct Diamond {
    pub face: usize,
    pub minus: usize,
    pub plus: usize,
    pub x_minus: Point,
    pub x_plus: Point,
    /// Face vertices ordered positively with respect to `normal`.
    pub dual: Vec<usize>,
    pub normal: Point,
    /// Unit vector from `x_minus` to `x_plus`.
    pub e: Point,
    pub d: f64,
    pub volume: f64,
    pub subdiamonds: Range<usize>,
    /// Gradient weight of the `plus` value (the `minus` weight is its negative).
    pub plus_coef: Point,
    /// Gradient weights of the dual values, aligned with `dual`.
    pub dual_coef: Vec<Point>,
}

#[derive(Debug, Clone)]
pub struct Subdiamond {
    pub diamond: usize,
    /// Vertex ids `(x*_i, x*_{i+1})`.
    pub edge: (usize, usize),
    pub volume: f64,
}

#[derive(Debug, Clone)]
pub struct Element {
    pub primal: usize,
    pub dual: usize,
    pub diamond: usize,
    pub subdiamond: usize,
    pub simplex: Simplex,
}

/// Where the value attached to a primal or dual volume lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dof {
    /// Index into the primal block of a discrete function.
    Primal(usize),
    /// Index into the dual block of a discrete function.
    Dual(usize),
    /// Index into the primal block of the Dirichlet data.
    DirichletPrimal(usize),
    /// Index into the dual block of the Dirichlet data.
    DirichletDual(usize),
}

/// The immutable DDFV mesh database.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    pub vertices: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
    pub primal: Vec<PrimalVolume>,
    pub faces: Vec<Face>,
    pub dual: Vec<DualVolume>,
    pub diamonds: Vec<Diamond>,
    pub subdiamonds: Vec<Subdiamond>,
    pub elements: Vec<Element>,
    /// Dof of every primal volume (indexed by primal volume id).
    pub primal_dof: Vec<Dof>,
    /// Dof of every dual volume (indexed by vertex id).
    pub dual_dof: Vec<Dof>,
    /// Primal volume id of every primal unknown.
    pub primal_unknowns: Vec<usize>,
    /// Vertex id of every dual unknown.
    pub dual_unknowns: Vec<usize>,
    /// Primal volume id of every Dirichlet primal datum.
    pub dirichlet_primal: Vec<usize>,
    /// Vertex id of every Dirichlet dual datum.
    pub dirichlet_dual: Vec<usize>,
    /// Per cell: `(vertex, Vol(K ∩ K*))` for each of its vertices.
    overlaps: Vec<Vec<(usize, f64)>>,
    domain_volume: f64,
    element_locator: OnceLock<SimplexLocator>,
}

fn face_key(v: &[usize]) -> [usize; 3] {
    let mut k = [usize::MAX; 3];
    k[..v.len()].copy_from_slice(v);
    k[..v.len()].sort_unstable();
    k
}

fn local_faces(cell: &[usize]) -> Vec<Vec<usize>> {
    (0..cell.len())
        .map(|skip| {
            cell.iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, v)| *v)
                .collect()
        })
        .collect()
}

impl Mesh {
    /// Build and validate the double mesh from a simplicial primal mesh.
    pub fn build(input: MeshInput) -> Result<Mesh> {
        let MeshInput {
            dim,
            vertices,
            cells,
            boundary_faces,
        } = input;
        if dim != 2 && dim != 3 {
            return Err(DdfvError::Input(format!("unsupported dimension {dim}")));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(DdfvError::Input("non-finite vertex coordinate".into()));
        }
        if dim == 2 && vertices.iter().any(|v| v[2] != 0.0) {
            return Err(DdfvError::Input("2D vertices must have z = 0".into()));
        }
        let nv = vertices.len();

        // bounding box measure for the degeneracy tolerance
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let bbox: f64 = (0..dim).map(|k| hi[k] - lo[k]).product();
        let vol_tol = 1e-14 * bbox;

        // cells
        let mut primal = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != dim + 1 {
                return Err(DdfvError::Geometry {
                    cell: c,
                    reason: format!("expected {} vertices, found {}", dim + 1, cell.len()),
                });
            }
            if let Some(&bad) = cell.iter().find(|&&v| v >= nv) {
                return Err(DdfvError::Input(format!(
                    "cell {c} references vertex {bad} but there are only {nv} vertices"
                )));
            }
            let p: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let vol = if dim == 3 {
                tet_signed_volume(p[0], p[1], p[2], p[3])
            } else {
                tri_signed_area(p[0], p[1], p[2])
            };
            if vol.abs() <= vol_tol {
                return Err(DdfvError::Geometry {
                    cell: c,
                    reason: format!("zero volume ({vol:.3e})"),
                });
            }
            if vol < 0.0 {
                return Err(DdfvError::Geometry {
                    cell: c,
                    reason: format!("inverted (signed volume {vol:.3e})"),
                });
            }
            primal.push(PrimalVolume {
                kind: PrimalKind::Interior,
                center: barycenter(&p),
                vertices: cell.clone(),
                faces: Vec::with_capacity(dim + 1),
                volume: vol,
            });
        }
        let nc = cells.len();

        // faces, in order of first appearance
        let mut face_index: HashMap<[usize; 3], usize> = HashMap::new();
        let mut face_verts: Vec<Vec<usize>> = Vec::new();
        let mut face_cells: Vec<Vec<usize>> = Vec::new();
        for (c, cell) in cells.iter().enumerate() {
            for f in local_faces(cell) {
                let key = face_key(&f);
                let id = *face_index.entry(key).or_insert_with(|| {
                    face_verts.push(f.clone());
                    face_cells.push(Vec::new());
                    face_verts.len() - 1
                });
                face_cells[id].push(c);
                if face_cells[id].len() > 2 {
                    return Err(DdfvError::Topology(format!(
                        "face {:?} is shared by more than two cells",
                        face_verts[id]
                    )));
                }
                primal[c].faces.push(id);
            }
        }
        let nf = face_verts.len();

        // boundary classification
        let mut labels: Vec<Option<BoundaryLabel>> = vec![None; nf];
        for (verts, label) in &boundary_faces {
            let id = *face_index.get(&face_key(verts)).ok_or_else(|| {
                DdfvError::Input(format!(
                    "labelled boundary face {verts:?} is not a mesh face"
                ))
            })?;
            if face_cells[id].len() != 1 {
                return Err(DdfvError::Input(format!(
                    "labelled face {verts:?} is an interior face"
                )));
            }
            if labels[id].is_some() {
                return Err(DdfvError::Input(format!(
                    "boundary face {verts:?} is classified twice"
                )));
            }
            labels[id] = Some(*label);
        }
        for id in 0..nf {
            if face_cells[id].len() == 1 && labels[id].is_none() {
                return Err(DdfvError::Input(format!(
                    "boundary face {:?} is not classified",
                    face_verts[id]
                )));
            }
        }

        // boundary volumes and dirichlet vertices
        let mut face_plus = vec![usize::MAX; nf];
        let mut vertex_dirichlet = vec![false; nv];
        for id in 0..nf {
            let fc = &face_cells[id];
            if fc.len() == 2 {
                face_plus[id] = fc[0].max(fc[1]);
                continue;
            }
            let label = labels[id].unwrap();
            let kind = match label {
                BoundaryLabel::Neumann => PrimalKind::NeumannDegenerate,
                BoundaryLabel::Dirichlet => {
                    for &v in &face_verts[id] {
                        vertex_dirichlet[v] = true;
                    }
                    PrimalKind::DirichletBoundary
                }
            };
            let pts: Vec<Point> = face_verts[id].iter().map(|&v| vertices[v]).collect();
            face_plus[id] = primal.len();
            primal.push(PrimalVolume {
                kind,
                center: barycenter(&pts),
                vertices: face_verts[id].clone(),
                faces: vec![id],
                volume: 0.0,
            });
        }

        // dofs
        let mut primal_dof = Vec::with_capacity(primal.len());
        let mut primal_unknowns = Vec::new();
        let mut dirichlet_primal = Vec::new();
        for (k, pv) in primal.iter().enumerate() {
            match pv.kind {
                PrimalKind::Interior | PrimalKind::NeumannDegenerate => {
                    primal_dof.push(Dof::Primal(primal_unknowns.len()));
                    primal_unknowns.push(k);
                }
                PrimalKind::DirichletBoundary => {
                    primal_dof.push(Dof::DirichletPrimal(dirichlet_primal.len()));
                    dirichlet_primal.push(k);
                }
            }
        }
        let mut dual_dof = Vec::with_capacity(nv);
        let mut dual_unknowns = Vec::new();
        let mut dirichlet_dual = Vec::new();
        for (v, &is_d) in vertex_dirichlet.iter().enumerate() {
            if is_d {
                dual_dof.push(Dof::DirichletDual(dirichlet_dual.len()));
                dirichlet_dual.push(v);
            } else {
                dual_dof.push(Dof::Dual(dual_unknowns.len()));
                dual_unknowns.push(v);
            }
        }

        // faces, diamonds, subdiamonds, elements
        let mut faces = Vec::with_capacity(nf);
        let mut diamonds = Vec::with_capacity(nf);
        let mut subdiamonds = Vec::with_capacity(nf * dim);
        let mut elements = Vec::with_capacity(nf * 4 * (dim - 1) * 2);
        for id in 0..nf {
            let minus = face_cells[id][0].min(*face_cells[id].last().unwrap());
            let plus = face_plus[id];
            let x_minus = primal[minus].center;
            let x_plus = primal[plus].center;
            let a = sub(x_plus, x_minus);
            let mut fv = face_verts[id].clone();
            let pts: Vec<Point> = fv.iter().map(|&v| vertices[v]).collect();
            let center = barycenter(&pts);

            let (normal, area) = if dim == 3 {
                let mut n = cross(sub(pts[1], pts[0]), sub(pts[2], pts[0]));
                let area = norm(n) / 2.0;
                if dot(n, a) < 0.0 {
                    fv.swap(1, 2);
                    n = scale(-1.0, n);
                }
                (scale(1.0 / norm(n), n), area)
            } else {
                let mut b = sub(pts[1], pts[0]);
                if det2(a, b) < 0.0 {
                    fv.swap(0, 1);
                    b = scale(-1.0, b);
                }
                let len = norm(b);
                ([b[1] / len, -b[0] / len, 0.0], len)
            };
            let a_n = dot(a, normal);
            if a_n <= 1e-12 * norm(a) {
                return Err(DdfvError::Topology(format!(
                    "centers adjacent to face {:?} are not separated by it",
                    face_verts[id]
                )));
            }
            let xs: Vec<Point> = fv.iter().map(|&v| vertices[v]).collect();
            let sides: Vec<usize> = if primal[plus].volume > 0.0 {
                vec![minus, plus]
            } else {
                vec![minus]
            };
            let diamond_id = diamonds.len();
            let sd_start = subdiamonds.len();
            let mut dvol = 0.0;
            let mut vertex_areas = vec![0.0; fv.len()];
            let mut dual_coef = vec![[0.0; 3]; fv.len()];
            if dim == 3 {
                let mids: Vec<Point> = (0..3)
                    .map(|i| scale(0.5, add(xs[i], xs[(i + 1) % 3])))
                    .collect();
                let mut sd_vols = [0.0; 3];
                for i in 0..3 {
                    let j = (i + 1) % 3;
                    let mc = sub(mids[i], center);
                    let sv = triple(a, mc, sub(xs[j], xs[i])) / 6.0;
                    if sv <= 0.0 {
                        return Err(DdfvError::Topology(format!(
                            "non-positive subdiamond volume on face {:?}",
                            face_verts[id]
                        )));
                    }
                    sd_vols[i] = sv;
                    dvol += sv;
                    vertex_areas[i] += tri_area(xs[i], mids[i], center);
                    vertex_areas[j] += tri_area(xs[j], center, mids[i]);
                }
                for (i, &sv) in sd_vols.iter().enumerate() {
                    let j = (i + 1) % 3;
                    let sd = subdiamonds.len();
                    subdiamonds.push(Subdiamond {
                        diamond: diamond_id,
                        edge: (fv[i], fv[j]),
                        volume: sv,
                    });
                    for &k in &sides {
                        let xk = primal[k].center;
                        for &(vl, xv) in &[(fv[i], xs[i]), (fv[j], xs[j])] {
                            elements.push(Element {
                                primal: k,
                                dual: vl,
                                diamond: diamond_id,
                                subdiamond: sd,
                                simplex: Simplex::tetrahedron(xk, xv, center, mids[i]),
                            });
                        }
                    }
                }
                // ∇_D w = (1/|D|) Σ_i [ |S_i| (w⊕−w⊖) n/(a·n) + (1/3)(w*_{i+1} − w*_i) a × (m_i − c) ]
                for i in 0..3 {
                    let prev = (i + 2) % 3;
                    let c_prev = cross(a, sub(mids[prev], center));
                    let c_here = cross(a, sub(mids[i], center));
                    dual_coef[i] = scale(1.0 / (3.0 * dvol), sub(c_prev, c_here));
                }
            } else {
                let b = sub(xs[1], xs[0]);
                dvol = det2(a, b) / 2.0;
                let sd = subdiamonds.len();
                subdiamonds.push(Subdiamond {
                    diamond: diamond_id,
                    edge: (fv[0], fv[1]),
                    volume: dvol,
                });
                vertex_areas = vec![area / 2.0, area / 2.0];
                for &k in &sides {
                    let xk = primal[k].center;
                    for j in 0..2 {
                        elements.push(Element {
                            primal: k,
                            dual: fv[j],
                            diamond: diamond_id,
                            subdiamond: sd,
                            simplex: Simplex::triangle(xk, xs[j], center),
                        });
                    }
                }
                let rot = [-a[1] / (2.0 * dvol), a[0] / (2.0 * dvol), 0.0];
                dual_coef[0] = scale(-1.0, rot);
                dual_coef[1] = rot;
            }
            let plus_coef = scale(1.0 / a_n, normal);
            let d = norm(a);
            diamonds.push(Diamond {
                face: id,
                minus,
                plus,
                x_minus,
                x_plus,
                dual: fv.clone(),
                normal,
                e: scale(1.0 / d, a),
                d,
                volume: dvol,
                subdiamonds: sd_start..subdiamonds.len(),
                plus_coef,
                dual_coef,
            });
            faces.push(Face {
                vertices: fv,
                center,
                area,
                normal,
                minus,
                plus,
                boundary: labels[id],
                vertex_areas,
            });
        }

        // dual volumes and overlaps
        let mut dual: Vec<DualVolume> = (0..nv)
            .map(|v| DualVolume {
                center: vertices[v],
                kind: if vertex_dirichlet[v] {
                    DualKind::DirichletBoundary
                } else {
                    DualKind::Interior
                },
                elements: Vec::new(),
                volume: 0.0,
            })
            .collect();
        let mut overlaps: Vec<Vec<(usize, f64)>> = cells
            .iter()
            .map(|c| c.iter().map(|&v| (v, 0.0)).collect())
            .collect();
        for (t, el) in elements.iter().enumerate() {
            let dv = &mut dual[el.dual];
            dv.elements.push(t);
            dv.volume += el.simplex.volume;
            let slot = overlaps[el.primal]
                .iter_mut()
                .find(|(v, _)| *v == el.dual)
                .expect("element vertex belongs to its cell");
            slot.1 += el.simplex.volume;
        }
        let domain_volume = primal[..nc].iter().map(|p| p.volume).sum();

        Ok(Mesh {
            dim,
            vertices,
            cells,
            primal,
            faces,
            dual,
            diamonds,
            subdiamonds,
            elements,
            primal_dof,
            dual_dof,
            primal_unknowns,
            dual_unknowns,
            dirichlet_primal,
            dirichlet_dual,
            overlaps,
            domain_volume,
            element_locator: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of nodes: cell centers plus mesh vertices.
    pub fn n_nodes(&self) -> usize {
        self.cells.len() + self.vertices.len()
    }

    pub fn n_primal_unknowns(&self) -> usize {
        self.primal_unknowns.len()
    }

    pub fn n_dual_unknowns(&self) -> usize {
        self.dual_unknowns.len()
    }

    /// Total number of unknowns of a discrete function.
    pub fn n_unknowns(&self) -> usize {
        self.primal_unknowns.len() + self.dual_unknowns.len()
    }

    pub fn has_dirichlet(&self) -> bool {
        !self.dirichlet_primal.is_empty()
    }

    /// `|Ω|`, the sum of the cell volumes.
    pub fn domain_volume(&self) -> f64 {
        self.domain_volume
    }

    /// Face ids on the Neumann part of the boundary, in face order.
    pub fn neumann_faces(&self) -> Vec<usize> {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.boundary == Some(BoundaryLabel::Neumann))
            .map(|(i, _)| i)
            .collect()
    }

    /// Weight of the primal part in the inner products and the reconstruction: `1/d`.
    pub fn primal_weight(&self) -> f64 {
        1.0 / self.dim as f64
    }

    /// Weight of the dual part: `(d − 1)/d`.
    pub fn dual_weight(&self) -> f64 {
        (self.dim as f64 - 1.0) / self.dim as f64
    }

    /// `Vol(K ∩ K*)` for a cell `K` and a vertex `K*`.
    pub fn overlap_volume(&self, cell: usize, vertex: usize) -> Result<f64> {
        if cell >= self.primal.len() {
            return Err(DdfvError::Lookup(format!("unknown primal volume {cell}")));
        }
        if vertex >= self.vertices.len() {
            return Err(DdfvError::Lookup(format!("unknown dual volume {vertex}")));
        }
        if cell >= self.cells.len() {
            return Ok(0.0);
        }
        Ok(self.overlaps[cell]
            .iter()
            .find(|(v, _)| *v == vertex)
            .map_or(0.0, |(_, o)| *o))
    }

    /// All `(vertex, Vol(K ∩ K*))` pairs of a cell.
    pub fn cell_overlaps(&self, cell: usize) -> &[(usize, f64)] {
        &self.overlaps[cell]
    }

    /// Volume of every primal unknown (zero for degenerate volumes) followed by
    /// the volume of every dual unknown.
    pub fn unknown_volumes(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.primal_unknowns
                .iter()
                .map(|&k| self.primal[k].volume)
                .collect(),
            self.dual_unknowns
                .iter()
                .map(|&v| self.dual[v].volume)
                .collect(),
        )
    }

    /// Location of the value of a primal volume.
    #[inline]
    pub fn primal_dof(&self, k: usize) -> Dof {
        self.primal_dof[k]
    }

    /// Location of the value of a dual volume.
    #[inline]
    pub fn dual_dof(&self, v: usize) -> Dof {
        self.dual_dof[v]
    }

    /// Index of the element containing `p` (points within a small tolerance of
    /// the boundary are snapped inside).
    pub fn locate_element(&self, p: Point) -> Option<usize> {
        self.element_locator
            .get_or_init(|| {
                SimplexLocator::new(self.dim, self.elements.iter().map(|e| e.simplex).collect())
            })
            .locate(p)
            .map(|(t, _)| t)
    }

    /// Face id of the `j`-th Neumann face (the `j`-th degenerate unknown).
    pub fn neumann_face(&self, j: usize) -> usize {
        self.primal[self.primal_unknowns[self.cells.len() + j]].faces[0]
    }

    /// Number of Neumann faces.
    pub fn n_neumann_faces(&self) -> usize {
        self.primal_unknowns.len() - self.cells.len()
    }

    /// Distance from a boundary volume's center to the center of its adjacent cell;
    /// a length scale for degenerate volumes.
    pub fn degenerate_length(&self, k: usize) -> f64 {
        let f = &self.faces[self.primal[k].faces[0]];
        dist(self.primal[f.minus].center, f.center)
    }
}
