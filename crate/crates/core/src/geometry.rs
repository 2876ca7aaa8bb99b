//! Small fixed-size vector helpers, simplex measures and quadrature rules.
//!
//! Points are always stored with three coordinates; two-dimensional meshes
//! keep `z = 0`.

/// A point (or vector) in space. In 2D the third coordinate is zero.
pub type Point = [f64; 3];

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(s: f64, a: Point) -> Point {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// `det[a, b]` of the first two components (the 2D cross product).
#[inline]
pub fn det2(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Mixed product `a · (b × c)`.
#[inline]
pub fn triple(a: Point, b: Point, c: Point) -> f64 {
    dot(a, cross(b, c))
}

/// Arithmetic mean of a set of points.
pub fn barycenter(points: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in points {
        c = add(c, *p);
    }
    scale(1.0 / points.len() as f64, c)
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
#[inline]
pub fn tet_signed_volume(a: Point, b: Point, c: Point, d: Point) -> f64 {
    triple(sub(b, a), sub(c, a), sub(d, a)) / 6.0
}

/// Signed area of the planar triangle `(a, b, c)` (2D, counter-clockwise positive).
#[inline]
pub fn tri_signed_area(a: Point, b: Point, c: Point) -> f64 {
    det2(sub(b, a), sub(c, a)) / 2.0
}

/// Unsigned area of a triangle embedded in 3D.
#[inline]
pub fn tri_area(a: Point, b: Point, c: Point) -> f64 {
    norm(cross(sub(b, a), sub(c, a))) / 2.0
}

/// A simplex of full dimension (triangle in 2D, tetrahedron in 3D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    pub points: [Point; 4],
    /// Number of vertices: 3 (triangle) or 4 (tetrahedron).
    pub nverts: usize,
    pub volume: f64,
}

impl Simplex {
    pub fn triangle(a: Point, b: Point, c: Point) -> Self {
        Self {
            points: [a, b, c, [0.0; 3]],
            nverts: 3,
            volume: tri_signed_area(a, b, c).abs(),
        }
    }

    pub fn tetrahedron(a: Point, b: Point, c: Point, d: Point) -> Self {
        Self {
            points: [a, b, c, d],
            nverts: 4,
            volume: tet_signed_volume(a, b, c, d).abs(),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.points[..self.nverts]
    }

    /// Order-two Gauss rule: quadrature points and weights (weights sum to the volume).
    pub fn gauss2(&self) -> Vec<(Point, f64)> {
        gauss2_rule(self.vertices(), self.volume)
    }

    /// Barycentric coordinates of `p`; only meaningful for points in the simplex plane/space.
    pub fn barycentric(&self, p: Point) -> [f64; 4] {
        let v = self.vertices();
        if self.nverts == 3 {
            let total = tri_signed_area(v[0], v[1], v[2]);
            let l0 = tri_signed_area(p, v[1], v[2]) / total;
            let l1 = tri_signed_area(v[0], p, v[2]) / total;
            [l0, l1, 1.0 - l0 - l1, 0.0]
        } else {
            let total = tet_signed_volume(v[0], v[1], v[2], v[3]);
            let l0 = tet_signed_volume(p, v[1], v[2], v[3]) / total;
            let l1 = tet_signed_volume(v[0], p, v[2], v[3]) / total;
            let l2 = tet_signed_volume(v[0], v[1], p, v[3]) / total;
            [l0, l1, l2, 1.0 - l0 - l1 - l2]
        }
    }
}

/// Order-two Gauss rule on a segment, triangle or tetrahedron given by its vertices.
///
/// The rule integrates polynomials of degree two exactly. `measure` is the
/// length / area / volume of the simplex.
pub fn gauss2_rule(vertices: &[Point], measure: f64) -> Vec<(Point, f64)> {
    let combine = |bary: &[f64]| -> Point {
        let mut p = [0.0; 3];
        for (l, v) in bary.iter().zip(vertices) {
            p = add(p, scale(*l, *v));
        }
        p
    };
    match vertices.len() {
        2 => {
            let g = 0.5 / 3f64.sqrt();
            let w = measure / 2.0;
            vec![
                (combine(&[0.5 + g, 0.5 - g]), w),
                (combine(&[0.5 - g, 0.5 + g]), w),
            ]
        }
        3 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            let w = measure / 3.0;
            vec![
                (combine(&[a, b, b]), w),
                (combine(&[b, a, b]), w),
                (combine(&[b, b, a]), w),
            ]
        }
        4 => {
            let a = 0.585_410_196_624_968_5;
            let b = 0.138_196_601_125_010_5;
            let w = measure / 4.0;
            vec![
                (combine(&[a, b, b, b]), w),
                (combine(&[b, a, b, b]), w),
                (combine(&[b, b, a, b]), w),
                (combine(&[b, b, b, a]), w),
            ]
        }
        n => panic!("no quadrature rule for a simplex with {n} vertices"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss2_integrates_quadratics_on_reference_tet() {
        // ∫ x² over the reference tetrahedron is 1/60.
        let t = Simplex::tetrahedron(
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        );
        let i: f64 = t.gauss2().iter().map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((i - 1.0 / 60.0).abs() < 1e-15);
        // ∫ xy = 1/120
        let j: f64 = t.gauss2().iter().map(|(p, w)| w * p[0] * p[1]).sum();
        assert!((j - 1.0 / 120.0).abs() < 1e-15);
    }

    #[test]
    fn gauss2_integrates_quadratics_on_reference_triangle() {
        let t = Simplex::triangle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let i: f64 = t.gauss2().iter().map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((i - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn barycentric_coordinates_reproduce_point() {
        let t = Simplex::tetrahedron(
            [0.1, 0.0, 0.0],
            [1.0, 0.2, 0.0],
            [0.0, 1.0, 0.3],
            [0.0, 0.1, 1.0],
        );
        let p = [0.2, 0.3, 0.25];
        let l = t.barycentric(p);
        let mut q = [0.0; 3];
        for k in 0..4 {
            q = add(q, scale(l[k], t.points[k]));
        }
        assert!(dist(p, q) < 1e-14);
    }
}
