//! Reusable guard chart implementations.
//!
//! Charts map guard parameters to from-mode sampled coordinates. The two
//! charts here cover axis-aligned switching surfaces (one coordinate held
//! at the surface value) and planar curves such as shorelines.

use crate::hybrid::{GuardChart, ParamSpec, ResetFn};
use crate::real::Real;

fn snap_spec<T: Real>(c: T, spec: &ParamSpec<T>) -> T {
    match spec {
        ParamSpec::Fixed(v) => *v,
        ParamSpec::Range([lo, hi]) => c.max(*lo).min(*hi),
        ParamSpec::Grid(vals) => vals
            .iter()
            .copied()
            .min_by(|a, b| {
                (c - *a)
                    .abs()
                    .partial_cmp(&(c - *b).abs())
                    .expect("finite grid values")
            })
            .expect("non-empty grid"),
    }
}

/// One parameter per sampled coordinate; fixed coordinates pin the chart
/// onto the surface, ranged/gridded ones span it. The parameter-to-point
/// map is the identity, which keeps multi-phase solver Jacobians trivial.
pub struct CoordSectionChart<T> {
    pub coords: Vec<ParamSpec<T>>,
    /// Probe step for boundary-consistency checks, in full-state space;
    /// `None` when the two sides live in different state spaces.
    pub transversal: Option<Vec<T>>,
}

impl<T: Real> GuardChart<T> for CoordSectionChart<T> {
    fn param_dim(&self) -> usize {
        self.coords.len()
    }

    fn out_dim(&self) -> usize {
        self.coords.len()
    }

    fn params(&self) -> Vec<ParamSpec<T>> {
        self.coords.clone()
    }

    fn point(&self, q: &[T], out: &mut [T]) {
        out.copy_from_slice(q);
    }

    fn jacobian(&self, _q: &[T], out: &mut [T]) {
        let n = self.coords.len();
        out.fill(T::zero());
        for i in 0..n {
            out[i * n + i] = T::one();
        }
    }

    fn distance(&self, coords: &[T]) -> T {
        let mut d = T::zero();
        for (c, spec) in coords.iter().zip(&self.coords) {
            let dev = match spec {
                ParamSpec::Fixed(v) => (*c - *v).abs(),
                ParamSpec::Range([lo, hi]) => (*lo - *c).max(*c - *hi).max(T::zero()),
                ParamSpec::Grid(vals) => vals
                    .iter()
                    .map(|&v| (*c - v).abs())
                    .fold(T::infinity(), T::min),
            };
            d = d.max(dev);
        }
        d
    }

    fn snap(&self, coords: &mut [T]) {
        for (c, spec) in coords.iter_mut().zip(&self.coords) {
            *c = snap_spec(*c, spec);
        }
    }

    fn transversal(&self) -> Option<Vec<T>> {
        self.transversal.clone()
    }
}

/// Planar curve for shoreline-style guards.
#[derive(Debug, Clone)]
pub enum PlanarCurve<T> {
    /// `p(s) = point + s * dir`, `dir` unit length, `s` in `range`.
    Line {
        point: [T; 2],
        dir: [T; 2],
        range: [T; 2],
    },
    /// `p(s) = center + r * (cos s, sin s)`, `s` in `range` (radians).
    Arc {
        center: [T; 2],
        radius: T,
        range: [T; 2],
    },
}

impl<T: Real> PlanarCurve<T> {
    fn range(&self) -> [T; 2] {
        match self {
            PlanarCurve::Line { range, .. } | PlanarCurve::Arc { range, .. } => *range,
        }
    }

    fn eval(&self, s: T) -> ([T; 2], [T; 2]) {
        match self {
            PlanarCurve::Line { point, dir, .. } => {
                ([point[0] + s * dir[0], point[1] + s * dir[1]], *dir)
            }
            PlanarCurve::Arc { center, radius, .. } => (
                [
                    center[0] + *radius * s.cos(),
                    center[1] + *radius * s.sin(),
                ],
                [-s.sin(), s.cos()],
            ),
        }
    }

    /// Left-hand normal of the tangent direction at `s`.
    fn normal(&self, s: T) -> [T; 2] {
        let (_, t) = self.eval(s);
        [-t[1], t[0]]
    }

    /// Signed perpendicular offset of `p` from the curve (left positive).
    fn signed_offset(&self, p: [T; 2]) -> T {
        match self {
            PlanarCurve::Line { point, dir, .. } => {
                let dx = p[0] - point[0];
                let dy = p[1] - point[1];
                -dir[1] * dx + dir[0] * dy
            }
            PlanarCurve::Arc { center, radius, .. } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                // left normal of a counter-clockwise arc points inward? No:
                // tangent (-sin, cos), left normal (-cos, -sin) points to
                // the center, so inward offset is positive.
                *radius - (dx * dx + dy * dy).sqrt()
            }
        }
    }
}

/// Shoreline-style guard: world position rides a planar curve (offset a
/// hair onto the open side so resets land in the target domain), the
/// remaining sampled coordinates are fixed or gridded.
pub struct CurveSectionChart<T> {
    pub out_dim: usize,
    /// Indices of the two position coordinates in the sampled space.
    pub pos_dims: (usize, usize),
    pub curve: PlanarCurve<T>,
    /// Signed offset along the curve's left normal applied to `point`.
    pub normal_offset: T,
    /// `(sampled dim, spec)` for every non-position sampled coordinate.
    pub others: Vec<(usize, ParamSpec<T>)>,
    pub transversal: Option<Vec<T>>,
}

impl<T: Real> GuardChart<T> for CurveSectionChart<T> {
    fn param_dim(&self) -> usize {
        1 + self.others.len()
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn params(&self) -> Vec<ParamSpec<T>> {
        let mut p = vec![ParamSpec::Range(self.curve.range())];
        p.extend(self.others.iter().map(|(_, s)| s.clone()));
        p
    }

    fn point(&self, q: &[T], out: &mut [T]) {
        out.fill(T::zero());
        let (pos, _) = self.curve.eval(q[0]);
        let n = self.curve.normal(q[0]);
        out[self.pos_dims.0] = pos[0] + self.normal_offset * n[0];
        out[self.pos_dims.1] = pos[1] + self.normal_offset * n[1];
        for (k, (dim, _)) in self.others.iter().enumerate() {
            out[*dim] = q[1 + k];
        }
    }

    fn jacobian(&self, q: &[T], out: &mut [T]) {
        let np = self.param_dim();
        out.fill(T::zero());
        let (_, tangent) = self.curve.eval(q[0]);
        // normal-offset curvature term for arcs shrinks the tangent
        let scale = match &self.curve {
            PlanarCurve::Line { .. } => T::one(),
            PlanarCurve::Arc { radius, .. } => (*radius - self.normal_offset) / *radius,
        };
        out[self.pos_dims.0 * np] = tangent[0] * scale;
        out[self.pos_dims.1 * np] = tangent[1] * scale;
        for (k, (dim, _)) in self.others.iter().enumerate() {
            out[dim * np + 1 + k] = T::one();
        }
    }

    fn distance(&self, coords: &[T]) -> T {
        let p = [coords[self.pos_dims.0], coords[self.pos_dims.1]];
        let mut d = (self.curve.signed_offset(p) - self.normal_offset).abs();
        for (dim, spec) in &self.others {
            let c = coords[*dim];
            let dev = match spec {
                ParamSpec::Fixed(v) => (c - *v).abs(),
                ParamSpec::Range([lo, hi]) => (*lo - c).max(c - *hi).max(T::zero()),
                ParamSpec::Grid(vals) => vals
                    .iter()
                    .map(|&v| (c - v).abs())
                    .fold(T::infinity(), T::min),
            };
            d = d.max(dev);
        }
        d
    }

    fn snap(&self, coords: &mut [T]) {
        let p = [coords[self.pos_dims.0], coords[self.pos_dims.1]];
        let snapped = match &self.curve {
            PlanarCurve::Line { point, dir, .. } => {
                // remove the perpendicular deviation from the offset line
                let n = [-dir[1], dir[0]];
                let dev = n[0] * (p[0] - point[0]) + n[1] * (p[1] - point[1]) - self.normal_offset;
                [p[0] - dev * n[0], p[1] - dev * n[1]]
            }
            PlanarCurve::Arc { center, radius, .. } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                let target = *radius - self.normal_offset;
                if r > T::zero() {
                    [center[0] + dx * target / r, center[1] + dy * target / r]
                } else {
                    [center[0] + target, center[1]]
                }
            }
        };
        coords[self.pos_dims.0] = snapped[0];
        coords[self.pos_dims.1] = snapped[1];
        for (dim, spec) in &self.others {
            coords[*dim] = snap_spec(coords[*dim], spec);
        }
    }

    fn transversal(&self) -> Option<Vec<T>> {
        self.transversal.clone()
    }
}

/// Reset for shoreline-style guards between modes whose leading
/// coordinates coincide: copy the first `take` coordinates, append a
/// constant tail (equilibrium actuator states), then push the world
/// position (coordinates 0 and 1) by `shift` along the curve's left
/// normal at the landing point. A positive `shift` steps to the curve's
/// left; use `+-eps_guard / 2` to land strictly inside an open target
/// domain, or zero when the target owns the boundary.
pub struct CurveShiftReset<T> {
    pub in_dim: usize,
    pub take: usize,
    pub append: Vec<T>,
    pub curve: PlanarCurve<T>,
    pub shift: T,
}

impl<T: Real> CurveShiftReset<T> {
    /// Left normal of the curve nearest to planar point `p`.
    fn normal_at(&self, p: [T; 2]) -> [T; 2] {
        match &self.curve {
            PlanarCurve::Line { dir, .. } => [-dir[1], dir[0]],
            PlanarCurve::Arc { center, .. } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let r = (dx * dx + dy * dy).sqrt();
                if r > T::zero() {
                    // CCW tangent's left normal points at the center
                    [-dx / r, -dy / r]
                } else {
                    [-T::one(), T::zero()]
                }
            }
        }
    }
}

impl<T: Real> ResetFn<T> for CurveShiftReset<T> {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.take + self.append.len()
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        out[..self.take].copy_from_slice(&x[..self.take]);
        for (o, &a) in out[self.take..].iter_mut().zip(&self.append) {
            *o = a;
        }
        let n = self.normal_at([x[0], x[1]]);
        out[0] = out[0] + self.shift * n[0];
        out[1] = out[1] + self.shift * n[1];
    }

    fn jacobian(&self, x: &[T], out: &mut [T]) {
        out.fill(T::zero());
        for i in 0..self.take {
            out[i * self.in_dim + i] = T::one();
        }
        if let PlanarCurve::Arc { center, .. } = &self.curve {
            // position block: I - (shift / r)(I - rhat rhat^T)
            let dx = x[0] - center[0];
            let dy = x[1] - center[1];
            let r = (dx * dx + dy * dy).sqrt();
            if r > T::zero() {
                let rh = [dx / r, dy / r];
                let s = self.shift / r;
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { T::one() } else { T::zero() };
                        out[i * self.in_dim + j] =
                            delta - s * (delta - rh[i] * rh[j]);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn coord_section_identity_map_and_distance() {
        let chart = CoordSectionChart::<f64> {
            coords: vec![ParamSpec::Fixed(0.0), ParamSpec::Range([-1.0, 1.0])],
            transversal: Some(vec![1e-6, 0.0]),
        };
        let mut out = [0.0; 2];
        chart.point(&[0.0, 0.3], &mut out);
        assert_eq!(out, [0.0, 0.3]);
        assert_abs_diff_eq!(chart.distance(&[0.02, 0.3]), 0.02);
        assert_abs_diff_eq!(chart.distance(&[0.0, 1.5]), 0.5);
    }

    #[test]
    fn line_chart_offsets_along_left_normal() {
        // vertical line x = 2 traversed upward; left normal points to -x
        let chart = CurveSectionChart::<f64> {
            out_dim: 4,
            pos_dims: (0, 1),
            curve: PlanarCurve::Line {
                point: [2.0, 0.0],
                dir: [0.0, 1.0],
                range: [-3.0, 3.0],
            },
            normal_offset: 0.5,
            others: vec![(2, ParamSpec::Fixed(0.1)), (3, ParamSpec::Grid(vec![0.0]))],
            transversal: None,
        };
        let mut out = [0.0; 4];
        chart.point(&[1.0, 0.1, 0.0], &mut out);
        assert_abs_diff_eq!(out[0], 1.5);
        assert_abs_diff_eq!(out[1], 1.0);
        assert_abs_diff_eq!(out[2], 0.1);
        assert_abs_diff_eq!(chart.distance(&out), 0.0);
        assert_abs_diff_eq!(chart.distance(&[1.4, 1.0, 0.1, 0.0]), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn arc_chart_point_sits_at_reduced_radius() {
        let chart = CurveSectionChart::<f64> {
            out_dim: 2,
            pos_dims: (0, 1),
            curve: PlanarCurve::Arc {
                center: [0.0, 0.0],
                radius: 2.0,
                range: [0.0, std::f64::consts::PI],
            },
            normal_offset: 0.25,
            others: vec![],
            transversal: None,
        };
        let mut out = [0.0; 2];
        chart.point(&[0.0], &mut out);
        // inward offset puts the point at radius 1.75
        assert_abs_diff_eq!(out[0], 1.75, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chart.distance(&out), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn curve_shift_reset_steps_across_a_line_and_appends_tail() {
        // horizontal shoreline y = 1.2 traversed in +x; left normal is +y
        let reset = CurveShiftReset::<f64> {
            in_dim: 6,
            take: 6,
            append: vec![100.0, 100.0],
            curve: PlanarCurve::Line {
                point: [0.0, 1.2],
                dir: [1.0, 0.0],
                range: [0.0, 3.0],
            },
            shift: 0.005,
        };
        let x = [1.5, 1.2, 0.3, 0.0, 0.7, 0.0];
        let mut out = [0.0; 8];
        reset.apply(&x, &mut out);
        assert_abs_diff_eq!(out[0], 1.5);
        assert_abs_diff_eq!(out[1], 1.205);
        assert_eq!(&out[2..6], &x[2..6]);
        assert_eq!(&out[6..], &[100.0, 100.0]);
    }

    #[test]
    fn curve_shift_reset_on_an_arc_steps_radially_and_matches_fd_jacobian() {
        let reset = CurveShiftReset::<f64> {
            in_dim: 4,
            take: 4,
            append: vec![],
            curve: PlanarCurve::Arc {
                center: [2.0, 1.5],
                radius: 0.6,
                range: [-std::f64::consts::PI, std::f64::consts::PI],
            },
            shift: -0.01, // step outward (away from the center)
        };
        let x = [2.0 + 0.6, 1.5, 0.1, -0.2];
        let mut out = [0.0; 4];
        reset.apply(&x, &mut out);
        assert_abs_diff_eq!(out[0], 2.61, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 1.5, epsilon = 1e-12);

        // central-difference check of the position-block jacobian
        let x0 = [2.3, 1.9, 0.0, 0.0];
        let mut jac = [0.0; 16];
        reset.jacobian(&x0, &mut jac);
        let h = 1e-6;
        for j in 0..4 {
            let mut xp = x0;
            let mut xm = x0;
            xp[j] += h;
            xm[j] -= h;
            let mut op = [0.0; 4];
            let mut om = [0.0; 4];
            reset.apply(&xp, &mut op);
            reset.apply(&xm, &mut om);
            for i in 0..4 {
                let fd = (op[i] - om[i]) / (2.0 * h);
                assert_abs_diff_eq!(jac[i * 4 + j], fd, epsilon = 1e-8);
            }
        }
    }
}
