//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ddfv::geometry::Point;
use ddfv::mesh::{structured_with, BoundaryLabel, Mesh};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dirichlet on the face `x = 0`, Neumann elsewhere.
pub fn mixed_label(p: Point) -> BoundaryLabel {
    if p[0] < 1e-12 {
        BoundaryLabel::Dirichlet
    } else {
        BoundaryLabel::Neumann
    }
}

pub fn mixed(dim: usize, n: usize) -> Mesh {
    structured_with(dim, n, &mixed_label).unwrap()
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        assert!(a[c][c].abs() > 1e-300, "singular dense system");
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Largest absolute entry difference.
pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Slope of the least-squares line through `(log h, log e)`.
pub fn slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let (x, y): (Vec<f64>, Vec<f64>) = h.iter().zip(e).map(|(a, b)| (a.ln(), b.ln())).unzip();
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let num: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

/// Root of `(z − v)/dt + h(z)/ε = 0` nearest to `v`, by bisection on a
/// bracket where the left side is increasing (`dt·L/ε < 1`).
pub fn implicit_scalar_step(v: f64, dt: f64, eps: f64, h: impl Fn(f64) -> f64) -> f64 {
    let f = |z: f64| (z - v) / dt + h(z) / eps;
    let (mut lo, mut hi) = (v - 10.0, v + 10.0);
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
