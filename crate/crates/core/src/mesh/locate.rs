//! Point location in a set of simplices through a uniform bucket grid.

use crate::geometry::{Point, Simplex};

/// Barycentric tolerance under which a point is snapped into a simplex.
const SNAP: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SimplexLocator {
    simplices: Vec<Simplex>,
    dim: usize,
    lo: Point,
    cell: Point,
    res: [usize; 3],
    buckets: Vec<Vec<u32>>,
}

impl SimplexLocator {
    pub fn new(dim: usize, simplices: Vec<Simplex>) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for s in &simplices {
            for p in s.vertices() {
                for k in 0..dim {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        }
        let per_axis = ((simplices.len().max(1) as f64).powf(1.0 / dim as f64)).ceil() as usize;
        let mut res = [1usize; 3];
        let mut cell = [1.0; 3];
        for k in 0..dim {
            res[k] = per_axis.max(1);
            let ext = (hi[k] - lo[k]).max(1e-300);
            cell[k] = ext / res[k] as f64;
        }
        if dim == 2 {
            lo[2] = 0.0;
        }
        let mut loc = Self {
            simplices,
            dim,
            lo,
            cell,
            res,
            buckets: vec![Vec::new(); res[0] * res[1] * res[2]],
        };
        for (i, s) in loc.simplices.iter().enumerate() {
            let mut a = [0usize; 3];
            let mut b = [0usize; 3];
            for k in 0..dim {
                let mn = s
                    .vertices()
                    .iter()
                    .map(|p| p[k])
                    .fold(f64::INFINITY, f64::min);
                let mx = s
                    .vertices()
                    .iter()
                    .map(|p| p[k])
                    .fold(f64::NEG_INFINITY, f64::max);
                a[k] = loc.axis_index(k, mn - 1e-12 * loc.cell[k]);
                b[k] = loc.axis_index(k, mx + 1e-12 * loc.cell[k]);
            }
            for z in a[2]..=b[2] {
                for y in a[1]..=b[1] {
                    for x in a[0]..=b[0] {
                        let id = (z * loc.res[1] + y) * loc.res[0] + x;
                        loc.buckets[id].push(i as u32);
                    }
                }
            }
        }
        loc
    }

    fn axis_index(&self, k: usize, x: f64) -> usize {
        let t = ((x - self.lo[k]) / self.cell[k]).floor();
        (t.max(0.0) as usize).min(self.res[k] - 1)
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    /// Find the simplex containing `p` and the barycentric coordinates of `p` in it.
    ///
    /// Points slightly outside (barycentric tolerance `1e-8`) are snapped onto
    /// the nearest simplex; `None` if the point is outside all simplices.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 4])> {
        let mut id = 0;
        let mut mult = 1;
        for k in 0..self.dim {
            if p[k] < self.lo[k] - 1e-8 * self.cell[k] * self.res[k] as f64
                || p[k] > self.lo[k] + (1.0 + 1e-8) * self.cell[k] * self.res[k] as f64
            {
                return None;
            }
            id += self.axis_index(k, p[k]) * mult;
            mult *= self.res[k];
        }
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        for &s in &self.buckets[id] {
            let simplex = &self.simplices[s as usize];
            let l = simplex.barycentric(p);
            let worst = l[..simplex.nverts]
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some((s as usize, l));
            }
            if best.as_ref().map_or(true, |b| worst > b.2) {
                best = Some((s as usize, l, worst));
            }
        }
        let (s, mut l, worst) = best?;
        if worst < -SNAP {
            return None;
        }
        let n = self.simplices[s].nverts;
        let mut total = 0.0;
        for x in l[..n].iter_mut() {
            *x = x.max(0.0);
            total += *x;
        }
        for x in l[..n].iter_mut() {
            *x /= total;
        }
        Some((s, l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locates_points_in_structured_triangles() {
        let m = crate::mesh::structured(2, 4).unwrap();
        let simplices: Vec<Simplex> = m.elements.iter().map(|e| e.simplex).collect();
        let loc = SimplexLocator::new(2, simplices);
        for p in [
            [0.1, 0.2, 0.0],
            [0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.5, 0.999, 0.0],
        ] {
            let (s, l) = loc.locate(p).unwrap();
            let t = &loc.simplices()[s];
            let mut q = [0.0; 3];
            for k in 0..3 {
                q = crate::geometry::add(q, crate::geometry::scale(l[k], t.points[k]));
            }
            assert!(crate::geometry::dist(p, q) < 1e-12);
        }
        assert!(loc.locate([1.5, 0.5, 0.0]).is_none());
    }
}
