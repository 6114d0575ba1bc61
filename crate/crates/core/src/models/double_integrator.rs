//! Hybrid double integrator: a unit point mass on a line that coasts
//! freely on the left half (`p < 0`) and sees linear velocity drag on the
//! right half (`p >= 0`).
//!
//! ```text
//!   pdot = v
//!   vdot = u            (p < 0)
//!   vdot = u - drag * v (p >= 0)
//! ```
//!
//! Both modes pay `L = u^2`. The guard is the line `p = 0` with an
//! identity reset and zero switch cost, which makes this the smallest
//! system exercising every switching code path.

use std::sync::Arc;

use crate::hybrid::charts::CoordSectionChart;
use crate::hybrid::{
    Domain, Guard, HalfSpace, HybridSystem, Mode, ModeDynamics, ParamSpec, PlanningMeta,
    SharedCoordReset, VirtualConstraint,
};
use crate::models::InputEnergy;
use crate::real::Real;

#[derive(Debug, Clone)]
pub struct DoubleIntegratorParams<T> {
    pub u_max: T,
    /// Drag coefficient active on the `p >= 0` side.
    pub drag: T,
    /// Half-width of the position interval: positions span `[-extent, extent]`.
    pub extent: T,
    /// Velocity box half-width. Kept below the dragged side's terminal
    /// velocity `u_max / drag` by default, so every state in the box can
    /// actually be reached in finite time.
    pub v_max: T,
    pub nominal_speed: T,
    pub eps_guard: T,
}

impl<T: Real> Default for DoubleIntegratorParams<T> {
    fn default() -> Self {
        DoubleIntegratorParams {
            u_max: T::one(),
            drag: T::one(),
            extent: T::one(),
            v_max: T::of(0.8),
            nominal_speed: T::of(0.4),
            eps_guard: T::of(1e-6),
        }
    }
}

struct DiDynamics<T> {
    drag: T,
}

impl<T: Real> ModeDynamics<T> for DiDynamics<T> {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn drift(&self, x: &[T], out: &mut [T]) {
        out[0] = x[1];
        out[1] = -self.drag * x[1];
    }

    fn input_matrix(&self, _x: &[T], out: &mut [T]) {
        out[0] = T::zero();
        out[1] = T::one();
    }

    fn jac_state(&self, _x: &[T], _u: &[T], out: &mut [T]) {
        out.fill(T::zero());
        out[1] = T::one(); // d pdot / d v
        out[3] = -self.drag; // d vdot / d v
    }
}

/// Index of the drag-free `p < 0` mode.
pub const DI_FREE: usize = 0;
/// Index of the dragged `p >= 0` mode.
pub const DI_DRAG: usize = 1;

pub fn double_integrator<T: Real>(p: &DoubleIntegratorParams<T>) -> HybridSystem<T> {
    let mk_mode = |name: &str, drag: T, lo: T, hi: T| {
        let strict = name == "free"; // p < 0 is the open side
        let normal = if strict {
            vec![-T::one(), T::zero()]
        } else {
            vec![T::one(), T::zero()]
        };
        Mode {
            name: name.to_string(),
            dynamics: Arc::new(DiDynamics { drag }),
            domain: Domain {
                predicate: Arc::new(HalfSpace {
                    normal,
                    offset: T::zero(),
                    strict,
                }),
                bounds: vec![[lo, hi], [-p.v_max, p.v_max]],
                angular_dims: vec![],
            },
            input_bounds: vec![[-p.u_max, p.u_max]],
            cost: Arc::new(InputEnergy),
            vc: VirtualConstraint::identity(2),
            planning: PlanningMeta {
                position_dims: vec![0],
                velocity_dims: vec![1],
                nominal_speed: p.nominal_speed,
                accel_limit: Some(p.u_max),
                turn_rate: None,
            },
        }
    };

    let free = mk_mode("free", T::zero(), -p.extent, T::zero());
    let drag = mk_mode("drag", p.drag, T::zero(), p.extent);

    let chart = |probe: T| {
        Arc::new(CoordSectionChart {
            coords: vec![
                ParamSpec::Fixed(T::zero()),
                ParamSpec::Range([-p.v_max, p.v_max]),
            ],
            transversal: Some(vec![probe, T::zero()]),
        })
    };
    let probe = p.eps_guard;
    // crossing into the open `p < 0` side steps half a guard tolerance
    // past the boundary so the landing satisfies the strict predicate
    let nudge = p.eps_guard / T::of(2.0);

    let guards = vec![
        Guard {
            from: crate::hybrid::ModeId(DI_FREE),
            to: crate::hybrid::ModeId(DI_DRAG),
            chart: chart(probe),
            reset: Arc::new(SharedCoordReset::identity(2)),
            switch_cost: T::zero(),
        },
        Guard {
            from: crate::hybrid::ModeId(DI_DRAG),
            to: crate::hybrid::ModeId(DI_FREE),
            chart: chart(probe),
            reset: Arc::new(SharedCoordReset {
                in_dim: 2,
                take: 2,
                append: vec![],
                offset: vec![-nudge, T::zero()],
            }),
            switch_cost: T::zero(),
        },
    ];

    HybridSystem {
        modes: vec![free, drag],
        guards,
        eps_guard: p.eps_guard,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::ModeId;
    use approx::assert_abs_diff_eq;

    fn sys() -> HybridSystem<f64> {
        double_integrator(&DoubleIntegratorParams::default())
    }

    #[test]
    fn drift_fields_per_mode() {
        let s = sys();
        let mut out = [0.0; 2];
        s.modes[DI_FREE].dynamics.drift(&[-0.5, 0.7], &mut out);
        assert_eq!(out, [0.7, 0.0]);
        // dragged side at (p, v) = (0, 1): vdot drift is -v
        s.modes[DI_DRAG].dynamics.drift(&[0.0, 1.0], &mut out);
        assert_eq!(out, [1.0, -1.0]);
        s.modes[DI_DRAG]
            .dynamics
            .derivative(&[0.0, 1.0], &[0.25], &mut out);
        assert_eq!(out, [1.0, -0.75]);
    }

    #[test]
    fn boundary_belongs_to_drag_side_only() {
        let s = sys();
        assert_eq!(s.mode_of(&[0.0, 0.3]).unwrap(), ModeId(DI_DRAG));
        assert_eq!(s.mode_of(&[-1e-9, 0.3]).unwrap(), ModeId(DI_FREE));
        assert_eq!(s.mode_of(&[0.5, -0.2]).unwrap(), ModeId(DI_DRAG));
    }

    #[test]
    fn structural_checks_pass() {
        let s = sys();
        s.validate().unwrap();
        s.check_domain_disjointness(200, 7).unwrap();
        s.check_guard_consistency(50, 11).unwrap();
        s.check_reset_landing(50, 13).unwrap();
    }

    #[test]
    fn reset_is_identity_within_guard_tolerance() {
        let s = sys();
        let (landed, cost) = s.apply_reset(&[0.0, 0.5], ModeId(DI_FREE)).unwrap();
        assert_eq!(cost, 0.0);
        assert_abs_diff_eq!(landed[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(landed[1], 0.5, epsilon = 0.0);
        assert_eq!(s.mode_of(&landed).unwrap(), ModeId(DI_FREE));

        let (back, _) = s.apply_reset(&landed, ModeId(DI_DRAG)).unwrap();
        assert_eq!(s.mode_of(&back).unwrap(), ModeId(DI_DRAG));
    }

    #[test]
    fn reset_rejects_states_off_the_guard() {
        let s = sys();
        let err = s.apply_reset(&[0.2, 0.5], ModeId(DI_FREE)).unwrap_err();
        assert!(matches!(
            err,
            crate::error::HybridError::NotOnGuard { .. }
        ));
    }
}
