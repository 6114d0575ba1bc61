//! Trapezoidal direct collocation of a single-mode boundary-value
//! problem into an [`NlpProblem`].
//!
//! Decision vector layout: all node states, then all node inputs, then
//! (for free-time problems) the duration:
//!
//! ```text
//! z = [x_0 .. x_{N-1} | u_0 .. u_{N-1} | T?]
//! ```
//!
//! The horizon is normalized to `s in [0, 1]` with `N` evenly spaced
//! nodes; dynamics are scaled by the duration, so free-time problems add
//! one variable and no extra constraints. Defect rows are written in
//! rate form,
//!
//! ```text
//! d_k = (x_{k+1} - x_k) / h - (f_k + f_{k+1}) / 2,  h = T / (N-1)
//! ```
//!
//! so their magnitudes and input sensitivities are O(1) regardless of
//! the step size; with the unscaled `x_{k+1} - x_k - (h/2)(f_k+f_{k+1})`
//! form the input columns shrink with `h` and the multiplier method needs
//! enormous penalties to enforce the dynamics against the control cost.
//! Boundary states are enforced by pinning the first and last node's
//! bounds, so the subproblem solver never moves them.

use crate::hybrid::{HybridSystem, ModeId};
use crate::real::Real;
use crate::trajopt::nlp::NlpProblem;
use crate::trajopt::Horizon;

pub struct SegmentNlp<'a, T: Real> {
    sys: &'a HybridSystem<T>,
    mode: ModeId,
    pub n_nodes: usize,
    pub nx: usize,
    pub nu: usize,
    start: Vec<T>,
    goal: Vec<T>,
    horizon: Horizon<T>,
    state_bounds: Vec<[T; 2]>,
    input_bounds: Vec<[T; 2]>,
}

impl<'a, T: Real> SegmentNlp<'a, T> {
    pub fn new(
        sys: &'a HybridSystem<T>,
        mode: ModeId,
        start: Vec<T>,
        goal: Vec<T>,
        horizon: Horizon<T>,
        n_nodes: usize,
        state_bounds: Option<Vec<[T; 2]>>,
        input_bounds: Option<Vec<[T; 2]>>,
    ) -> Self {
        let m = sys.mode(mode);
        let nx = m.state_dim();
        let nu = m.input_dim();
        assert!(n_nodes >= 2, "need at least two collocation nodes");
        assert_eq!(start.len(), nx);
        assert_eq!(goal.len(), nx);
        // default state box: the domain box inflated 25% so trajectories
        // may overshoot the sampled region without going infeasible;
        // angular coordinates get a half-turn of slack each way instead,
        // because circle-wrapped boundary values can sit up to a full
        // turn from the domain interval
        let state_bounds = state_bounds.unwrap_or_else(|| {
            let pi = T::of(std::f64::consts::PI);
            m.domain
                .bounds
                .iter()
                .enumerate()
                .map(|(d, b)| {
                    let w = if m.domain.angular_dims.contains(&d) {
                        pi
                    } else {
                        (b[1] - b[0]) * T::of(0.125)
                    };
                    [b[0] - w, b[1] + w]
                })
                .collect()
        });
        let input_bounds = input_bounds.unwrap_or_else(|| m.input_bounds.clone());
        SegmentNlp {
            sys,
            mode,
            n_nodes,
            nx,
            nu,
            start,
            goal,
            horizon,
            state_bounds,
            input_bounds,
        }
    }

    #[inline]
    pub fn xi(&self, k: usize) -> usize {
        k * self.nx
    }

    #[inline]
    pub fn ui(&self, k: usize) -> usize {
        self.n_nodes * self.nx + k * self.nu
    }

    pub fn free_time(&self) -> bool {
        matches!(self.horizon, Horizon::Free { .. })
    }

    /// Index of the duration variable (free-time problems only).
    pub fn ti(&self) -> usize {
        self.n_nodes * (self.nx + self.nu)
    }

    fn duration(&self, z: &[T]) -> T {
        match self.horizon {
            Horizon::Fixed(t) => t,
            Horizon::Free { .. } => z[self.ti()],
        }
    }

    /// Linear-interpolation initial guess: states between the pinned
    /// endpoints (shortest arc on angular coordinates), inputs at the box
    /// midpoint, duration mid-window.
    pub fn initial_guess(&self) -> Vec<T> {
        let n = self.num_vars();
        let mut z = vec![T::zero(); n];
        let angular = &self.sys.mode(self.mode).domain.angular_dims;
        let last = T::of((self.n_nodes - 1) as f64);
        for k in 0..self.n_nodes {
            let a = T::of(k as f64) / last;
            for i in 0..self.nx {
                let v = if angular.contains(&i) {
                    self.start[i] + a * crate::linalg::angle_diff(self.goal[i], self.start[i])
                } else {
                    self.start[i] + a * (self.goal[i] - self.start[i])
                };
                z[self.xi(k) + i] = v;
            }
            for j in 0..self.nu {
                let b = self.input_bounds[j];
                z[self.ui(k) + j] = (b[0] + b[1]) / T::of(2.0);
            }
        }
        if let Horizon::Free { min, max } = self.horizon {
            z[self.ti()] = (min + max) / T::of(2.0);
        }
        z
    }

    /// Extract `(times, states, inputs)` from a decision vector.
    pub fn unpack(&self, z: &[T]) -> (Vec<T>, Vec<Vec<T>>, Vec<Vec<T>>) {
        let dur = self.duration(z);
        let last = T::of((self.n_nodes - 1) as f64);
        let times = (0..self.n_nodes)
            .map(|k| dur * T::of(k as f64) / last)
            .collect();
        let states = (0..self.n_nodes)
            .map(|k| z[self.xi(k)..self.xi(k) + self.nx].to_vec())
            .collect();
        let inputs = (0..self.n_nodes)
            .map(|k| z[self.ui(k)..self.ui(k) + self.nu].to_vec())
            .collect();
        (times, states, inputs)
    }

    fn dynamics_at(&self, z: &[T], k: usize, f: &mut [T]) {
        let m = self.sys.mode(self.mode);
        m.dynamics.derivative(
            &z[self.xi(k)..self.xi(k) + self.nx],
            &z[self.ui(k)..self.ui(k) + self.nu],
            f,
        );
    }
}

impl<'a, T: Real> NlpProblem<T> for SegmentNlp<'a, T> {
    fn num_vars(&self) -> usize {
        self.n_nodes * (self.nx + self.nu) + usize::from(self.free_time())
    }

    fn num_eq(&self) -> usize {
        (self.n_nodes - 1) * self.nx
    }

    fn bounds(&self) -> Vec<[T; 2]> {
        let mut b = Vec::with_capacity(self.num_vars());
        for k in 0..self.n_nodes {
            if k == 0 {
                b.extend(self.start.iter().map(|&v| [v, v]));
            } else if k == self.n_nodes - 1 {
                b.extend(self.goal.iter().map(|&v| [v, v]));
            } else {
                b.extend(self.state_bounds.iter().copied());
            }
        }
        for _ in 0..self.n_nodes {
            b.extend(self.input_bounds.iter().copied());
        }
        if let Horizon::Free { min, max } = self.horizon {
            b.push([min, max]);
        }
        b
    }

    fn objective(&self, z: &[T]) -> T {
        let m = self.sys.mode(self.mode);
        let dur = self.duration(z);
        let h = dur / T::of((self.n_nodes - 1) as f64);
        let mut total = T::zero();
        let mut prev = T::zero();
        for k in 0..self.n_nodes {
            let l = m.cost.evaluate(
                &z[self.xi(k)..self.xi(k) + self.nx],
                &z[self.ui(k)..self.ui(k) + self.nu],
            );
            if k > 0 {
                total = total + h / T::of(2.0) * (prev + l);
            }
            prev = l;
        }
        total + m.cost.terminal(&z[self.xi(self.n_nodes - 1)..self.xi(self.n_nodes - 1) + self.nx])
    }

    fn gradient(&self, z: &[T], grad: &mut [T]) {
        let m = self.sys.mode(self.mode);
        let dur = self.duration(z);
        let last = T::of((self.n_nodes - 1) as f64);
        let h = dur / last;
        grad.fill(T::zero());
        let mut gx = vec![T::zero(); self.nx];
        let mut gu = vec![T::zero(); self.nu];
        let mut running = T::zero();
        for k in 0..self.n_nodes {
            let xs = &z[self.xi(k)..self.xi(k) + self.nx];
            let us = &z[self.ui(k)..self.ui(k) + self.nu];
            // trapezoid weight: h/2 at the ends, h inside
            let w = if k == 0 || k == self.n_nodes - 1 {
                h / T::of(2.0)
            } else {
                h
            };
            m.cost.grad_state(xs, us, &mut gx);
            m.cost.grad_input(xs, us, &mut gu);
            for i in 0..self.nx {
                grad[self.xi(k) + i] = w * gx[i];
            }
            for j in 0..self.nu {
                grad[self.ui(k) + j] = w * gu[j];
            }
            let lw = if k == 0 || k == self.n_nodes - 1 {
                T::of(0.5)
            } else {
                T::one()
            };
            running = running + lw * m.cost.evaluate(xs, us);
        }
        let end = self.xi(self.n_nodes - 1);
        m.cost.terminal_grad(&z[end..end + self.nx], &mut gx);
        for i in 0..self.nx {
            grad[end + i] = grad[end + i] + gx[i];
        }
        if self.free_time() {
            // running cost is linear in the duration
            grad[self.ti()] = running / last;
        }
    }

    fn equalities(&self, z: &[T], c: &mut [T]) {
        let dur = self.duration(z);
        let h = dur / T::of((self.n_nodes - 1) as f64);
        let mut fk = vec![T::zero(); self.nx];
        let mut fk1 = vec![T::zero(); self.nx];
        self.dynamics_at(z, 0, &mut fk);
        for k in 0..self.n_nodes - 1 {
            self.dynamics_at(z, k + 1, &mut fk1);
            for i in 0..self.nx {
                c[k * self.nx + i] = (z[self.xi(k + 1) + i] - z[self.xi(k) + i]) / h
                    - (fk[i] + fk1[i]) / T::of(2.0);
            }
            std::mem::swap(&mut fk, &mut fk1);
        }
    }

    fn accumulate_jt(&self, z: &[T], w: &[T], grad: &mut [T]) {
        let m = self.sys.mode(self.mode);
        let dur = self.duration(z);
        let last = T::of((self.n_nodes - 1) as f64);
        let h = dur / last;
        let half = T::of(0.5);
        let nx = self.nx;
        let nu = self.nu;

        // per-node state Jacobians and input Jacobians
        let mut a = vec![vec![T::zero(); nx * nx]; self.n_nodes];
        let mut b = vec![vec![T::zero(); nx * nu]; self.n_nodes];
        for k in 0..self.n_nodes {
            let xs = &z[self.xi(k)..self.xi(k) + nx];
            let us = &z[self.ui(k)..self.ui(k) + nu];
            m.dynamics.jac_state(xs, us, &mut a[k]);
            m.dynamics.jac_input(xs, us, &mut b[k]);
        }

        for k in 0..self.n_nodes - 1 {
            let wk = &w[k * nx..(k + 1) * nx];
            for i in 0..nx {
                let wi = wk[i];
                if wi == T::zero() {
                    continue;
                }
                // d d_k / d x_{k+1} = I/h - A_{k+1}/2; d d_k / d x_k = -I/h - A_k/2
                grad[self.xi(k + 1) + i] = grad[self.xi(k + 1) + i] + wi / h;
                grad[self.xi(k) + i] = grad[self.xi(k) + i] - wi / h;
                for j in 0..nx {
                    grad[self.xi(k) + j] = grad[self.xi(k) + j] - wi * half * a[k][i * nx + j];
                    grad[self.xi(k + 1) + j] =
                        grad[self.xi(k + 1) + j] - wi * half * a[k + 1][i * nx + j];
                }
                for j in 0..nu {
                    grad[self.ui(k) + j] = grad[self.ui(k) + j] - wi * half * b[k][i * nu + j];
                    grad[self.ui(k + 1) + j] =
                        grad[self.ui(k + 1) + j] - wi * half * b[k + 1][i * nu + j];
                }
                if self.free_time() {
                    // d d_k / d T = -(x_{k+1} - x_k) (N-1) / T^2
                    let dx = z[self.xi(k + 1) + i] - z[self.xi(k) + i];
                    grad[self.ti()] = grad[self.ti()] - wi * dx * last / (dur * dur);
                }
            }
        }
    }
}
