//! Built-in vehicle models and their hybrid system constructors.

pub mod ambot;
pub mod double_integrator;
pub mod flydrive;
pub mod terrain;

use serde::{Deserialize, Serialize};

use crate::hybrid::RunningCost;
use crate::real::Real;

/// `L(x, u) = sum u_i^2`, the control-effort cost.
#[derive(Debug, Clone, Copy)]
pub struct InputEnergy;

impl<T: Real> RunningCost<T> for InputEnergy {
    fn evaluate(&self, _x: &[T], u: &[T]) -> T {
        u.iter().map(|&ui| ui * ui).sum()
    }

    fn grad_state(&self, _x: &[T], _u: &[T], out: &mut [T]) {
        out.fill(T::zero());
    }

    fn grad_input(&self, _x: &[T], u: &[T], out: &mut [T]) {
        for (o, &ui) in out.iter_mut().zip(u) {
            *o = T::of(2.0) * ui;
        }
    }
}

/// Brushed DC motor electrical constants shared by all drive modes of a
/// vehicle: torque constant `k_t` (N·m/A, equal to the back-EMF constant
/// in V·s/rad), winding resistance `r` (ohm), supply voltage `v_cc` (V),
/// and constant avionics draw `p_d` (W).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct MotorParams {
    pub k_t: f64,
    pub r: f64,
    pub v_cc: f64,
    pub p_d: f64,
}

/// Instantaneous electrical power drawn from the supply by a bank of
/// motors driven by duty-cycle commands `u` at shaft speeds `phi`
/// (rad/s), plus the constant avionics draw:
///
/// `P = sum_i v_cc u_i (k_t / r) (v_cc u_i - k_t phi_i) + p_d`
///
/// Each term is supply voltage times winding current; the current is the
/// applied voltage minus back-EMF over the winding resistance. A motor
/// back-driven faster than its applied voltage supports contributes
/// negative power (regeneration).
pub fn electrical_power<T: Real>(motor: &MotorParams, u: &[T], phi: &[T]) -> T {
    debug_assert_eq!(u.len(), phi.len());
    let kt = T::of(motor.k_t);
    let r = T::of(motor.r);
    let vcc = T::of(motor.v_cc);
    let mut p = T::of(motor.p_d);
    for (&ui, &fi) in u.iter().zip(phi) {
        p = p + vcc * ui * (kt / r) * (vcc * ui - kt * fi);
    }
    p
}

/// How one motor of an [`ElectricalPower`] cost maps onto the mode's
/// state and input vectors: `input` is the index of the duty-cycle
/// command, and the shaft speed is the linear functional
/// `phi = sum_j coeff_j * x_j` over the listed `(state index, coeff)`
/// pairs. Wheel motors geared to body velocities use kinematic
/// functionals; motors with their own spin-up state use a single
/// unit-coefficient tap.
#[derive(Debug, Clone)]
pub struct MotorTap {
    pub input: usize,
    pub phi: Vec<(usize, f64)>,
}

impl MotorTap {
    pub fn speed<T: Real>(&self, x: &[T]) -> T {
        self.phi
            .iter()
            .map(|&(j, c)| T::of(c) * x[j])
            .fold(T::zero(), |a, b| a + b)
    }
}

/// Running cost equal to the total electrical power drawn by a bank of
/// motors plus the constant avionics draw. With `clamp_regen` set, each
/// motor's contribution is floored at zero (no recuperation into the
/// battery); by default regeneration offsets the draw as the circuit
/// equation dictates.
#[derive(Debug, Clone)]
pub struct ElectricalPower {
    pub motor: MotorParams,
    pub taps: Vec<MotorTap>,
    pub clamp_regen: bool,
}

impl ElectricalPower {
    pub fn new(motor: MotorParams, taps: Vec<MotorTap>) -> Self {
        ElectricalPower {
            motor,
            taps,
            clamp_regen: false,
        }
    }

    /// Per-motor power before the avionics term.
    fn motor_power<T: Real>(&self, x: &[T], u: &[T], tap: &MotorTap) -> T {
        let kt = T::of(self.motor.k_t);
        let r = T::of(self.motor.r);
        let vcc = T::of(self.motor.v_cc);
        let ui = u[tap.input];
        vcc * ui * (kt / r) * (vcc * ui - kt * tap.speed(x))
    }
}

impl<T: Real> RunningCost<T> for ElectricalPower {
    fn evaluate(&self, x: &[T], u: &[T]) -> T {
        let mut p = T::of(self.motor.p_d);
        for tap in &self.taps {
            let pm = self.motor_power(x, u, tap);
            p = p + if self.clamp_regen { pm.max(T::zero()) } else { pm };
        }
        p
    }

    fn grad_state(&self, x: &[T], u: &[T], out: &mut [T]) {
        out.fill(T::zero());
        let kt = T::of(self.motor.k_t);
        let r = T::of(self.motor.r);
        let vcc = T::of(self.motor.v_cc);
        for tap in &self.taps {
            if self.clamp_regen && self.motor_power(x, u, tap) < T::zero() {
                continue;
            }
            // d/dx_j [v u (kt/r)(v u - kt phi)] = -v u kt^2/r * coeff_j
            let w = -vcc * u[tap.input] * kt * kt / r;
            for &(j, c) in &tap.phi {
                out[j] = out[j] + w * T::of(c);
            }
        }
    }

    fn grad_input(&self, x: &[T], u: &[T], out: &mut [T]) {
        out.fill(T::zero());
        let kt = T::of(self.motor.k_t);
        let r = T::of(self.motor.r);
        let vcc = T::of(self.motor.v_cc);
        for tap in &self.taps {
            if self.clamp_regen && self.motor_power(x, u, tap) < T::zero() {
                continue;
            }
            // d/du [v u (kt/r)(v u - kt phi)] = (v kt/r)(2 v u - kt phi)
            let g = vcc * kt / r * (T::of(2.0) * vcc * u[tap.input] - kt * tap.speed(x));
            out[tap.input] = out[tap.input] + g;
        }
    }
}

/// Finite-difference checkers shared by the model test suites.
#[cfg(test)]
pub(crate) mod testutil {
    use crate::hybrid::{ModeDynamics, RunningCost};

    /// Max relative error between the analytic state/input jacobians of
    /// `dyn_` and central differences at `(x, u)`.
    pub fn dynamics_jacobian_error(dyn_: &dyn ModeDynamics<f64>, x: &[f64], u: &[f64]) -> f64 {
        let n = dyn_.state_dim();
        let m = dyn_.input_dim();
        let h = 1e-6;
        let f = |x: &[f64], u: &[f64]| -> Vec<f64> {
            let mut dx = vec![0.0; n];
            dyn_.drift(x, &mut dx);
            let mut g = vec![0.0; n * m];
            dyn_.input_matrix(x, &mut g);
            for i in 0..n {
                for j in 0..m {
                    dx[i] += g[i * m + j] * u[j];
                }
            }
            dx
        };
        let mut ja = vec![0.0; n * n];
        dyn_.jac_state(x, u, &mut ja);
        let mut jb = vec![0.0; n * m];
        dyn_.jac_input(x, u, &mut jb);

        let mut worst: f64 = 0.0;
        let scale = |v: f64| v.abs().max(1.0);
        for j in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (f(&xp, u), f(&xm, u));
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                worst = worst.max((ja[i * n + j] - fd).abs() / scale(fd));
            }
        }
        for j in 0..m {
            let mut up = u.to_vec();
            let mut um = u.to_vec();
            up[j] += h;
            um[j] -= h;
            let (fp, fm) = (f(x, &up), f(x, &um));
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                worst = worst.max((jb[i * m + j] - fd).abs() / scale(fd));
            }
        }
        worst
    }

    /// Max relative error between the analytic gradients of `cost` and
    /// central differences at `(x, u)`.
    pub fn cost_gradient_error(cost: &dyn RunningCost<f64>, x: &[f64], u: &[f64]) -> f64 {
        let h = 1e-6;
        let scale = |v: f64| v.abs().max(1.0);
        let mut gx = vec![0.0; x.len()];
        cost.grad_state(x, u, &mut gx);
        let mut gu = vec![0.0; u.len()];
        cost.grad_input(x, u, &mut gu);
        let mut worst: f64 = 0.0;
        for j in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let fd = (cost.evaluate(&xp, u) - cost.evaluate(&xm, u)) / (2.0 * h);
            worst = worst.max((gx[j] - fd).abs() / scale(fd));
        }
        for j in 0..u.len() {
            let mut up = u.to_vec();
            let mut um = u.to_vec();
            up[j] += h;
            um[j] -= h;
            let fd = (cost.evaluate(x, &up) - cost.evaluate(x, &um)) / (2.0 * h);
            worst = worst.max((gu[j] - fd).abs() / scale(fd));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn motor() -> MotorParams {
        MotorParams {
            k_t: 0.015,
            r: 1.0,
            v_cc: 12.0,
            p_d: 1.0,
        }
    }

    #[test]
    fn idle_power_is_exactly_the_avionics_draw() {
        let m = motor();
        let p = electrical_power(&m, &[0.0_f64, 0.0], &[35.0, -12.0]);
        assert_eq!(p, m.p_d);
    }

    #[test]
    fn stall_power_grows_with_the_squared_applied_voltage() {
        // at stall (phi = 0) there is no back-EMF term and the draw above
        // avionics is (k_t / r) (v u)^2 per motor
        let m = motor();
        let u = 0.7_f64;
        let p = electrical_power(&m, &[u], &[0.0]);
        let applied = m.v_cc * u;
        assert!((p - (m.k_t / m.r * applied * applied + m.p_d)).abs() < 1e-12);
        let p2 = electrical_power(&m, &[2.0 * u], &[0.0]);
        assert!((p2 - m.p_d - 4.0 * (p - m.p_d)).abs() < 1e-9);
    }

    #[test]
    fn back_emf_reduces_the_draw_and_can_regenerate() {
        let m = motor();
        let u = 0.5_f64;
        let slow = electrical_power(&m, &[u], &[100.0]);
        let fast = electrical_power(&m, &[u], &[300.0]);
        assert!(fast < slow);
        // Driven far above the supported speed the motor pushes power back.
        let overdriven = electrical_power(&m, &[u], &[2000.0]);
        assert!(overdriven - m.p_d < 0.0);
    }

    #[test]
    fn clamped_cost_floors_each_motor_at_zero() {
        let m = motor();
        let taps = vec![
            MotorTap {
                input: 0,
                phi: vec![(0, 1.0)],
            },
            MotorTap {
                input: 1,
                phi: vec![(1, 1.0)],
            },
        ];
        let mut cost = ElectricalPower::new(m, taps);
        let x = [2000.0_f64, 100.0];
        let u = [0.5_f64, 0.5];
        let raw = cost.evaluate(&x, &u);
        cost.clamp_regen = true;
        let clamped = cost.evaluate(&x, &u);
        assert!(clamped > raw);
        // Motor 0 regenerates and is floored; motor 1's draw is unchanged.
        let solo = ElectricalPower::new(motor(), vec![cost.taps[1].clone()]);
        assert!((clamped - solo.evaluate(&x, &u)).abs() < 1e-12);
    }

    #[test]
    fn tapped_cost_agrees_with_the_direct_formula() {
        let m = motor();
        // Two motors reading kinematic speeds off a 3-state vector.
        let taps = vec![
            MotorTap {
                input: 0,
                phi: vec![(0, 25.0), (2, -2.5)],
            },
            MotorTap {
                input: 1,
                phi: vec![(0, 25.0), (2, 2.5)],
            },
        ];
        let cost = ElectricalPower::new(m, taps.clone());
        let x = [0.8_f64, 0.0, -1.2];
        let u = [0.4_f64, 0.55];
        let phis = [taps[0].speed(&x), taps[1].speed(&x)];
        let want = electrical_power(&m, &u, &phis);
        let got = RunningCost::<f64>::evaluate(&cost, &x, &u);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn electrical_power_gradients_match_finite_differences() {
        let taps = vec![
            MotorTap {
                input: 0,
                phi: vec![(0, 25.0), (2, -2.5)],
            },
            MotorTap {
                input: 1,
                phi: vec![(0, 25.0), (2, 2.5)],
            },
        ];
        let mut cost = ElectricalPower::new(motor(), taps);
        let x = [0.8_f64, 0.3, -1.2];
        let u = [0.4_f64, 0.55];
        assert!(testutil::cost_gradient_error(&cost, &x, &u) < 1e-6);
        // Clamped variant away from the kink is also smooth.
        cost.clamp_regen = true;
        assert!(testutil::cost_gradient_error(&cost, &x, &u) < 1e-6);
    }
}
