//! Slice-based vector helpers.
//!
//! The solvers in this crate work on flat `Vec<T>` decision vectors and
//! row-major Jacobian blocks, so a handful of BLAS-1 style routines is all
//! the linear algebra needed.

use crate::real::Real;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

pub fn scale<T: Real>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi = *xi * alpha;
    }
}

pub fn norm2<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

pub fn norm_inf<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Euclidean distance between two points.
pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

/// `out += J^T w` for a row-major `rows x cols` matrix block.
pub fn accum_jt_w<T: Real>(j: &[T], rows: usize, cols: usize, w: &[T], out: &mut [T]) {
    debug_assert_eq!(j.len(), rows * cols);
    debug_assert_eq!(w.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for r in 0..rows {
        let wr = w[r];
        if wr == T::zero() {
            continue;
        }
        let row = &j[r * cols..(r + 1) * cols];
        for c in 0..cols {
            out[c] = out[c] + wr * row[c];
        }
    }
}

/// Shortest signed distance between two angles, in `(-pi, pi]`.
pub fn angle_diff<T: Real>(a: T, b: T) -> T {
    let two_pi = T::of(std::f64::consts::TAU);
    let mut d = (a - b) % two_pi;
    let pi = T::of(std::f64::consts::PI);
    if d > pi {
        d = d - two_pi;
    } else if d <= -pi {
        d = d + two_pi;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn angle_diff_shortest_arc() {
        use std::f64::consts::PI;
        assert_abs_diff_eq!(angle_diff(0.1, -0.1), 0.2, epsilon = 1e-12);
        // across the cut: 3.1 and -3.1 are 2*pi - 6.2 apart, not 6.2
        assert_abs_diff_eq!(angle_diff(3.1, -3.1), 6.2 - 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(angle_diff(-3.1, 3.1), 2.0 * PI - 6.2, epsilon = 1e-12);
    }

    #[test]
    fn jt_w_matches_manual_expansion() {
        // J = [[1,2,3],[4,5,6]], w = [10, 100]
        let j = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let w = [10.0, 100.0];
        let mut out = [0.0; 3];
        accum_jt_w(&j, 2, 3, &w, &mut out);
        assert_eq!(out, [410.0, 520.0, 630.0]);
    }
}
