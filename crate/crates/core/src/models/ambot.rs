//! Amphibious skid-steer robot: wheeled drive on land, twin propeller
//! thrusters in water, sharing one battery and one pair of drive motors.
//!
//! Ground mode (6 states: `px, py, vx, vy, heading, yaw rate`) is a
//! no-slip skid-steer platform whose wheels are geared to the motors, so
//! back-EMF brakes the robot and cruising at steady speed draws almost
//! only the avionics power. Marine mode (8 states: the same six plus two
//! propeller speeds) sees quadratic hull drag and propeller spin-up lag;
//! holding cruise speed needs sustained positive motor current, which
//! makes water travel several times more expensive per meter than ground
//! travel — the asymmetry that makes land detours worth planning.
//!
//! Scenes describe the water region and its shoreline curves; every
//! shoreline becomes a pair of directed guards (enter / exit water) whose
//! resets carry position, planar velocity and heading across and
//! append/drop the propeller states.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::hybrid::charts::{CurveSectionChart, CurveShiftReset, PlanarCurve};
use crate::hybrid::region::Region;
use crate::hybrid::{
    Domain, Guard, HybridSystem, Mode, ModeDynamics, ParamSpec, PlanarRegion, PlanningMeta,
    VirtualConstraint,
};
use crate::models::{ElectricalPower, MotorParams, MotorTap};

/// Index of the wheeled ground mode.
pub const AMBOT_GROUND: usize = 0;
/// Index of the thruster-driven marine mode.
pub const AMBOT_MARINE: usize = 1;

/// Skid-steer ground platform parameters (desk-scale robot).
#[derive(Debug, Clone)]
pub struct GroundParams {
    pub mass: f64,
    /// Yaw inertia.
    pub inertia: f64,
    /// Lateral wheel offset from the centerline.
    pub half_track: f64,
    pub wheel_radius: f64,
    /// Motor-to-wheel gear reduction.
    pub gear: f64,
    pub motor: MotorParams,
    /// Forward-speed box half width. Kept below the drivetrain's terminal
    /// speed `v_cc / drive_constant` so boxed states are reachable.
    pub v_max: f64,
    /// Yaw-rate box half width.
    pub omega_max: f64,
    pub nominal_speed: f64,
    /// Heading rate assumed when estimating reorientation time.
    pub turn_rate: f64,
    pub accel_limit: f64,
}

impl Default for GroundParams {
    fn default() -> Self {
        GroundParams {
            mass: 2.0,
            inertia: 0.05,
            half_track: 0.1,
            wheel_radius: 0.04,
            gear: 4.0,
            motor: MotorParams {
                k_t: 0.05,
                r: 3.0,
                v_cc: 12.0,
                p_d: 1.0,
            },
            v_max: 1.0,
            omega_max: 3.0,
            nominal_speed: 0.5,
            turn_rate: 2.0,
            accel_limit: 10.0,
        }
    }
}

impl GroundParams {
    /// Ground force per volt of winding headroom: `gear * k_t / wheel_radius`.
    /// Also the back-EMF volts per meter-per-second of wheel surface speed.
    pub fn drive_constant(&self) -> f64 {
        self.gear * self.motor.k_t / self.wheel_radius
    }

    /// Motor shaft speed per unit of wheel surface speed.
    pub fn shaft_per_speed(&self) -> f64 {
        self.gear / self.wheel_radius
    }
}

/// No-slip skid-steer dynamics with geared DC motors.
///
/// State `(px, py, vx, vy, theta, omega)`; inputs are the two motor duty
/// cycles in `[-1, 1]`. Track forces come from the winding equation, so
/// the only longitudinal "drag" is back-EMF braking:
///
/// ```text
/// px'    = vx cos(theta)
/// py'    = vx sin(theta)
/// vx'    = (-2 c^2 vx + c v_cc (uL + uR)) / (m r)
/// vy'    = 0                              (lateral no-slip)
/// theta' = omega
/// omega' = (-2 c^2 w^2 omega + w c v_cc (uR - uL)) / (I r)
/// ```
///
/// with `c` the drive constant and `w` the half track.
pub struct SkidSteerDynamics {
    pub p: GroundParams,
}

impl ModeDynamics<f64> for SkidSteerDynamics {
    fn state_dim(&self) -> usize {
        6
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        let c = self.p.drive_constant();
        let w = self.p.half_track;
        let (vx, theta, omega) = (x[2], x[4], x[5]);
        out[0] = vx * theta.cos();
        out[1] = vx * theta.sin();
        out[2] = -2.0 * c * c * vx / (self.p.mass * self.p.motor.r);
        out[3] = 0.0;
        out[4] = omega;
        out[5] = -2.0 * c * c * w * w * omega / (self.p.inertia * self.p.motor.r);
    }

    fn input_matrix(&self, _x: &[f64], out: &mut [f64]) {
        let c = self.p.drive_constant();
        let w = self.p.half_track;
        let fv = c * self.p.motor.v_cc / (self.p.mass * self.p.motor.r);
        let fw = w * c * self.p.motor.v_cc / (self.p.inertia * self.p.motor.r);
        out.fill(0.0);
        out[2 * 2] = fv;
        out[2 * 2 + 1] = fv;
        out[5 * 2] = -fw;
        out[5 * 2 + 1] = fw;
    }

    fn jac_state(&self, x: &[f64], _u: &[f64], out: &mut [f64]) {
        let c = self.p.drive_constant();
        let w = self.p.half_track;
        let (vx, theta) = (x[2], x[4]);
        out.fill(0.0);
        out[2] = theta.cos();
        out[4] = -vx * theta.sin();
        out[6 + 2] = theta.sin();
        out[6 + 4] = vx * theta.cos();
        out[2 * 6 + 2] = -2.0 * c * c / (self.p.mass * self.p.motor.r);
        out[4 * 6 + 5] = 1.0;
        out[5 * 6 + 5] = -2.0 * c * c * w * w / (self.p.inertia * self.p.motor.r);
    }
}

/// Electrical power draw of the two geared drive motors, whose shaft
/// speeds follow kinematically from forward speed and yaw rate.
pub fn ground_cost(p: &GroundParams) -> ElectricalPower {
    let k = p.shaft_per_speed();
    let w = p.half_track;
    ElectricalPower::new(
        p.motor,
        vec![
            MotorTap {
                input: 0,
                phi: vec![(2, k), (5, -w * k)],
            },
            MotorTap {
                input: 1,
                phi: vec![(2, k), (5, w * k)],
            },
        ],
    )
}

/// Surface-swimming parameters for the same robot driving twin propellers.
#[derive(Debug, Clone)]
pub struct MarineParams {
    /// Quadratic surge drag coefficient (N per (m/s)^2).
    pub drag_x: f64,
    /// Quadratic sway drag coefficient.
    pub drag_y: f64,
    /// Quadratic yaw drag coefficient.
    pub drag_yaw: f64,
    /// Smoothing speed for the `v |v|` drag terms, keeping them C^1.
    pub drag_eps: f64,
    /// Propeller thrust per unit shaft speed (N per rad/s).
    pub thrust_coeff: f64,
    /// Loaded shaft speed per volt. `k_v * motor.k_t < 1` for a propeller
    /// load, so holding speed draws sustained positive current.
    pub k_v: f64,
    /// Propeller spin-up time constant.
    pub tau: f64,
    /// Design surge speed; thrust from the nominal propeller speed
    /// balances hull drag here. Doubles as the sampled surge box half
    /// width: with the propellers held at their nominal speed during
    /// screening, faster targets would look unreachable.
    pub cruise_speed: f64,
    pub vy_max: f64,
    pub omega_max: f64,
    pub nominal_speed: f64,
    pub turn_rate: f64,
}

impl Default for MarineParams {
    fn default() -> Self {
        MarineParams {
            drag_x: 8.0,
            drag_y: 16.0,
            drag_yaw: 0.1,
            drag_eps: 1e-3,
            thrust_coeff: 0.0061,
            k_v: 10.0,
            tau: 0.15,
            cruise_speed: 0.4,
            vy_max: 0.3,
            omega_max: 2.0,
            nominal_speed: 0.3,
            turn_rate: 1.0,
        }
    }
}

fn smooth_abs(v: f64, eps: f64) -> f64 {
    (v * v + eps * eps).sqrt()
}

/// `d/dv (v * smooth_abs(v))`.
fn smooth_vabs_deriv(v: f64, eps: f64) -> f64 {
    let s = smooth_abs(v, eps);
    s + v * v / s
}

impl MarineParams {
    /// Propeller speed at which twin thrust balances surge drag at cruise.
    pub fn cruise_prop_speed(&self) -> f64 {
        let v = self.cruise_speed;
        self.drag_x * v * smooth_abs(v, self.drag_eps) / (2.0 * self.thrust_coeff)
    }

    /// Duty cycle holding the cruise propeller speed.
    pub fn cruise_duty(&self, motor: &MotorParams) -> f64 {
        self.cruise_prop_speed() / (self.k_v * motor.v_cc)
    }

    /// Propeller speed box half width (full-duty steady state).
    pub fn prop_speed_max(&self, motor: &MotorParams) -> f64 {
        self.k_v * motor.v_cc
    }
}

/// Planar vessel dynamics with first-order propeller lag.
///
/// State `(px, py, vx, vy, theta, omega, phiL, phiR)` with body-frame
/// planar velocity, heading, yaw rate and the two propeller speeds;
/// inputs are the motor duty cycles in `[-1, 1]`:
///
/// ```text
/// px'    = vx cos(theta) - vy sin(theta)
/// py'    = vx sin(theta) + vy cos(theta)
/// vx'    = (k_p (phiL + phiR) - drag_x vx |vx|) / m + omega vy
/// vy'    = -drag_y vy |vy| / m - omega vx
/// theta' = omega
/// omega' = (w k_p (phiR - phiL) - drag_yaw omega |omega|) / I
/// phiI'  = (k_v v_cc uI - phiI) / tau
/// ```
///
/// The `|.|` factors are smoothed with `drag_eps`.
pub struct MarineDynamics {
    pub p: MarineParams,
    pub mass: f64,
    pub inertia: f64,
    /// Lateral thruster offset from the centerline.
    pub arm: f64,
    /// Motor supply voltage (sets the duty-to-speed gain).
    pub v_cc: f64,
}

impl ModeDynamics<f64> for MarineDynamics {
    fn state_dim(&self) -> usize {
        8
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        let p = &self.p;
        let (vx, vy, theta, omega) = (x[2], x[3], x[4], x[5]);
        let (fl, fr) = (x[6], x[7]);
        out[0] = vx * theta.cos() - vy * theta.sin();
        out[1] = vx * theta.sin() + vy * theta.cos();
        out[2] = (p.thrust_coeff * (fl + fr) - p.drag_x * vx * smooth_abs(vx, p.drag_eps))
            / self.mass
            + omega * vy;
        out[3] = -p.drag_y * vy * smooth_abs(vy, p.drag_eps) / self.mass - omega * vx;
        out[4] = omega;
        out[5] = (self.arm * p.thrust_coeff * (fr - fl)
            - p.drag_yaw * omega * smooth_abs(omega, p.drag_eps))
            / self.inertia;
        out[6] = -fl / p.tau;
        out[7] = -fr / p.tau;
    }

    fn input_matrix(&self, _x: &[f64], out: &mut [f64]) {
        let gain = self.p.k_v * self.v_cc / self.p.tau;
        out.fill(0.0);
        out[6 * 2] = gain;
        out[7 * 2 + 1] = gain;
    }

    fn jac_state(&self, x: &[f64], _u: &[f64], out: &mut [f64]) {
        let p = &self.p;
        let (vx, vy, theta, omega) = (x[2], x[3], x[4], x[5]);
        let n = 8;
        out.fill(0.0);
        out[2] = theta.cos();
        out[3] = -theta.sin();
        out[4] = -vx * theta.sin() - vy * theta.cos();
        out[n + 2] = theta.sin();
        out[n + 3] = theta.cos();
        out[n + 4] = vx * theta.cos() - vy * theta.sin();
        out[2 * n + 2] = -p.drag_x * smooth_vabs_deriv(vx, p.drag_eps) / self.mass;
        out[2 * n + 3] = omega;
        out[2 * n + 5] = vy;
        out[2 * n + 6] = p.thrust_coeff / self.mass;
        out[2 * n + 7] = p.thrust_coeff / self.mass;
        out[3 * n + 2] = -omega;
        out[3 * n + 3] = -p.drag_y * smooth_vabs_deriv(vy, p.drag_eps) / self.mass;
        out[3 * n + 5] = -vx;
        out[4 * n + 5] = 1.0;
        out[5 * n + 5] = -p.drag_yaw * smooth_vabs_deriv(omega, p.drag_eps) / self.inertia;
        out[5 * n + 6] = -self.arm * p.thrust_coeff / self.inertia;
        out[5 * n + 7] = self.arm * p.thrust_coeff / self.inertia;
        out[6 * n + 6] = -1.0 / p.tau;
        out[7 * n + 7] = -1.0 / p.tau;
    }
}

/// Electrical power draw of the two propeller motors, each reading its
/// own spin-up state.
pub fn marine_cost(motor: &MotorParams) -> ElectricalPower {
    ElectricalPower::new(
        *motor,
        vec![
            MotorTap {
                input: 0,
                phi: vec![(6, 1.0)],
            },
            MotorTap {
                input: 1,
                phi: vec![(7, 1.0)],
            },
        ],
    )
}

/// One land/water boundary curve of a scene.
#[derive(Debug, Clone)]
pub struct Shoreline {
    pub curve: PlanarCurve<f64>,
    /// Water lies on the curve's left (the side its left normal points to).
    pub water_left: bool,
}

/// World box, water region and the shorelines connecting land and water.
#[derive(Debug, Clone)]
pub struct AmbotScene {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub water: Region,
    pub shorelines: Vec<Shoreline>,
}

/// Single straight shoreline: water fills the top of a 3 x 2 world.
pub fn shoreline_scene() -> AmbotScene {
    AmbotScene {
        x_range: [0.0, 3.0],
        y_range: [0.0, 2.0],
        water: Region::HalfPlane {
            normal: [0.0, 1.0],
            offset: -1.2,
        },
        shorelines: vec![Shoreline {
            curve: PlanarCurve::Line {
                point: [0.0, 1.2],
                dir: [1.0, 0.0],
                range: [0.1, 2.9],
            },
            water_left: true,
        }],
    }
}

/// Straight river crossing the middle of a 3 x 2 world, with banks on
/// both sides.
pub fn river_scene() -> AmbotScene {
    AmbotScene {
        x_range: [0.0, 3.0],
        y_range: [0.0, 2.0],
        water: Region::Rect {
            min: [0.0, 0.8],
            max: [3.0, 1.4],
        },
        shorelines: vec![
            Shoreline {
                curve: PlanarCurve::Line {
                    point: [0.0, 0.8],
                    dir: [1.0, 0.0],
                    range: [0.1, 2.9],
                },
                water_left: true,
            },
            Shoreline {
                curve: PlanarCurve::Line {
                    point: [0.0, 1.4],
                    dir: [1.0, 0.0],
                    range: [0.1, 2.9],
                },
                water_left: false,
            },
        ],
    }
}

/// Channel with a circular island: water spans `x in [0.7, 3.3]` of a
/// 4 x 3 world except a drivable island disc in the middle. The island's
/// shoreline is an arc guard; the two channel edges are straight guards
/// of opposite orientation.
pub fn island_scene() -> AmbotScene {
    let disc = Region::Disc {
        center: [2.0, 1.5],
        radius: 0.6,
    };
    AmbotScene {
        x_range: [0.0, 4.0],
        y_range: [0.0, 3.0],
        water: Region::Intersection {
            parts: vec![
                Region::HalfPlane {
                    normal: [1.0, 0.0],
                    offset: -0.7,
                },
                Region::HalfPlane {
                    normal: [-1.0, 0.0],
                    offset: 3.3,
                },
                disc.complement(),
            ],
        },
        shorelines: vec![
            Shoreline {
                curve: PlanarCurve::Line {
                    point: [0.7, 0.0],
                    dir: [0.0, 1.0],
                    range: [0.1, 2.9],
                },
                water_left: false,
            },
            Shoreline {
                // full circle, counter-clockwise; the left normal points
                // at the center, i.e. into the island
                curve: PlanarCurve::Arc {
                    center: [2.0, 1.5],
                    radius: 0.6,
                    range: [-PI, PI],
                },
                water_left: false,
            },
            Shoreline {
                curve: PlanarCurve::Line {
                    point: [3.3, 0.0],
                    dir: [0.0, 1.0],
                    range: [0.1, 2.9],
                },
                water_left: true,
            },
        ],
    }
}

#[derive(Debug, Clone)]
pub struct AmbotParams {
    pub ground: GroundParams,
    pub marine: MarineParams,
    pub eps_guard: f64,
}

impl Default for AmbotParams {
    fn default() -> Self {
        AmbotParams {
            ground: GroundParams::default(),
            marine: MarineParams::default(),
            eps_guard: 0.01,
        }
    }
}

/// Build the amphibious robot over a scene. Both modes sample
/// `(px, py, vx, heading)`; lateral velocity, yaw rate and the propeller
/// speeds are planned at their steady values and released during
/// trajectory optimization.
pub fn ambot(params: &AmbotParams, scene: &AmbotScene) -> HybridSystem<f64> {
    let g = &params.ground;
    let m = &params.marine;
    let phi_n = m.cruise_prop_speed();
    let phi_max = m.prop_speed_max(&g.motor);
    let land = scene.water.clone().complement();

    let ground = Mode {
        name: "ground".to_string(),
        dynamics: Arc::new(SkidSteerDynamics { p: g.clone() }),
        domain: Domain {
            predicate: Arc::new(PlanarRegion {
                region: land,
                x_dim: 0,
                y_dim: 1,
            }),
            bounds: vec![
                scene.x_range,
                scene.y_range,
                [-g.v_max, g.v_max],
                [0.0, 0.0],
                [-PI, PI],
                [-g.omega_max, g.omega_max],
            ],
            angular_dims: vec![4],
        },
        input_bounds: vec![[-1.0, 1.0], [-1.0, 1.0]],
        cost: Arc::new(ground_cost(g)),
        vc: VirtualConstraint::new(6, vec![0, 1, 2, 4], vec![(3, 0.0), (5, 0.0)]),
        planning: PlanningMeta {
            position_dims: vec![0, 1],
            velocity_dims: vec![2],
            nominal_speed: g.nominal_speed,
            accel_limit: Some(g.accel_limit),
            turn_rate: Some(g.turn_rate),
        },
    };

    let marine = Mode {
        name: "marine".to_string(),
        dynamics: Arc::new(MarineDynamics {
            p: m.clone(),
            mass: g.mass,
            inertia: g.inertia,
            arm: g.half_track,
            v_cc: g.motor.v_cc,
        }),
        domain: Domain {
            predicate: Arc::new(PlanarRegion {
                region: scene.water.clone(),
                x_dim: 0,
                y_dim: 1,
            }),
            bounds: vec![
                scene.x_range,
                scene.y_range,
                [-m.cruise_speed, m.cruise_speed],
                [-m.vy_max, m.vy_max],
                [-PI, PI],
                [-m.omega_max, m.omega_max],
                [-phi_max, phi_max],
                [-phi_max, phi_max],
            ],
            angular_dims: vec![4],
        },
        input_bounds: vec![[-1.0, 1.0], [-1.0, 1.0]],
        cost: Arc::new(marine_cost(&g.motor)),
        vc: VirtualConstraint::new(
            8,
            vec![0, 1, 2, 4],
            vec![(3, 0.0), (5, 0.0), (6, phi_n), (7, phi_n)],
        ),
        planning: PlanningMeta {
            position_dims: vec![0, 1],
            // surge authority flows through the propeller states, which the
            // direct input-to-velocity screen cannot see; the surge box is
            // capped at cruise speed instead, where thrust reversal makes
            // every boxed change feasible
            velocity_dims: vec![],
            nominal_speed: m.nominal_speed,
            accel_limit: None,
            turn_rate: Some(m.turn_rate),
        },
    };

    let mut guards = Vec::new();
    for shore in &scene.shorelines {
        let toward_water = if shore.water_left { 1.0 } else { -1.0 };
        let v_cross = m.cruise_speed;
        let chart = |transversal: Option<Vec<f64>>| {
            Arc::new(CurveSectionChart {
                out_dim: 4,
                pos_dims: (0, 1),
                curve: shore.curve.clone(),
                normal_offset: 0.0,
                others: vec![
                    (2, ParamSpec::Range([-v_cross, v_cross])),
                    (3, ParamSpec::Range([-PI, PI])),
                ],
                transversal,
            })
        };
        // enter water: keep pose and surge, spin the propellers up to the
        // cruise speed they are planned at
        guards.push(Guard {
            from: crate::hybrid::ModeId(AMBOT_GROUND),
            to: crate::hybrid::ModeId(AMBOT_MARINE),
            chart: chart(None),
            reset: Arc::new(CurveShiftReset {
                in_dim: 6,
                take: 6,
                append: vec![phi_n, phi_n],
                curve: shore.curve.clone(),
                // land strictly inside the water so region membership never
                // hangs on the last ulp of a boundary comparison
                shift: toward_water * params.eps_guard / 2.0,
            }),
            switch_cost: 0.0,
        });
        // exit water: drop the propeller states
        guards.push(Guard {
            from: crate::hybrid::ModeId(AMBOT_MARINE),
            to: crate::hybrid::ModeId(AMBOT_GROUND),
            chart: chart(None),
            reset: Arc::new(CurveShiftReset {
                in_dim: 8,
                take: 6,
                append: vec![],
                curve: shore.curve.clone(),
                // step strictly ashore, mirroring the entry reset
                shift: -toward_water * params.eps_guard / 2.0,
            }),
            switch_cost: 0.0,
        });
    }

    let sys = HybridSystem {
        modes: vec![ground, marine],
        guards,
        eps_guard: params.eps_guard,
    };
    sys.validate().expect("amphibious robot system is consistent");

    // cruise must be an exact marine equilibrium: thrust from the nominal
    // propeller speed balances hull drag, and the cruise duty holds that
    // speed
    let u_n = m.cruise_duty(&g.motor);
    let x_n = [0.0, 0.0, m.cruise_speed, 0.0, 0.0, 0.0, phi_n, phi_n];
    let mut dx = [0.0; 8];
    sys.modes[AMBOT_MARINE]
        .dynamics
        .derivative(&x_n, &[u_n, u_n], &mut dx);
    for (d, &v) in dx.iter().enumerate().skip(2) {
        assert!(
            v.abs() <= 1e-8 * (1.0 + phi_n),
            "marine cruise is not an equilibrium: state {d} drifts at {v}"
        );
    }

    sys
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::ModeId;
    use crate::models::testutil::{cost_gradient_error, dynamics_jacobian_error};
    use crate::models::{electrical_power, RunningCost};
    use crate::trajopt::{solve_segment, SegmentProblem, SolverSettings};
    use approx::assert_abs_diff_eq;

    fn ground_dyn() -> SkidSteerDynamics {
        SkidSteerDynamics {
            p: GroundParams::default(),
        }
    }

    fn marine_dyn() -> MarineDynamics {
        let g = GroundParams::default();
        let m = MarineParams::default();
        MarineDynamics {
            p: m,
            mass: g.mass,
            inertia: g.inertia,
            arm: g.half_track,
            v_cc: g.motor.v_cc,
        }
    }

    #[test]
    fn equal_duty_drives_straight_and_opposite_duty_spins_in_place() {
        let d = ground_dyn();
        let rest = [0.0; 6];
        let mut dx = [0.0; 6];
        d.derivative(&rest, &[0.5, 0.5], &mut dx);
        assert!(dx[2] > 0.0);
        assert_eq!(dx[5], 0.0);
        d.derivative(&rest, &[-0.5, 0.5], &mut dx);
        assert_eq!(dx[2], 0.0);
        assert!(dx[5] > 0.0);
        // rest with idle motors is an equilibrium
        d.derivative(&rest, &[0.0, 0.0], &mut dx);
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn back_emf_brakes_a_coasting_robot_toward_duty_matched_speed() {
        let d = ground_dyn();
        let mut dx = [0.0; 6];
        // coasting with idle motors decelerates
        d.derivative(&[0.0, 0.0, 0.8, 0.0, 0.0, 0.0], &[0.0, 0.0], &mut dx);
        assert!(dx[2] < 0.0);
        // steady speed for duty u is v = v_cc u / c
        let u = 0.2;
        let v_ss = d.p.motor.v_cc * u / d.p.drive_constant();
        d.derivative(&[0.0, 0.0, v_ss, 0.0, 0.0, 0.0], &[u, u], &mut dx);
        assert_abs_diff_eq!(dx[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ground_cruise_draws_only_avionics_power() {
        // at duty-matched speed the back-EMF cancels the applied voltage,
        // so winding current and electrical drive power vanish
        let p = GroundParams::default();
        let cost = ground_cost(&p);
        let u = 0.2;
        let v_ss = p.motor.v_cc * u / p.drive_constant();
        let x = [0.0, 0.0, v_ss, 0.0, 0.3, 0.0];
        let draw = RunningCost::<f64>::evaluate(&cost, &x, &[u, u]);
        assert_abs_diff_eq!(draw, p.motor.p_d, epsilon = 1e-9);
    }

    #[test]
    fn marine_cruise_draws_several_times_the_ground_cruise_power() {
        let g = GroundParams::default();
        let m = MarineParams::default();
        let phi_n = m.cruise_prop_speed();
        let u_n = m.cruise_duty(&g.motor);
        let p_marine = electrical_power(&g.motor, &[u_n, u_n], &[phi_n, phi_n]);
        assert!(
            p_marine > 2.5 && p_marine < 4.0,
            "marine cruise draw {p_marine} W out of expected band"
        );
        // loaded speed constant below the electrical one keeps current positive
        assert!(m.k_v * g.motor.k_t < 1.0);
    }

    #[test]
    fn hull_drag_and_reverse_thrust_decelerate_the_vessel() {
        let d = marine_dyn();
        let mut dx = [0.0; 8];
        d.drift(&[0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0], &mut dx);
        assert!(dx[2] < 0.0);
        let coasting = dx[2];
        d.drift(&[0.0, 0.0, 0.3, 0.0, 0.0, 0.0, -100.0, -100.0], &mut dx);
        assert!(dx[2] < coasting);
        // sway damps toward zero and couples with yaw
        d.drift(&[0.0, 0.0, 0.4, 0.2, 0.0, 0.5, 0.0, 0.0], &mut dx);
        assert!(dx[3] < 0.0);
    }

    #[test]
    fn dynamics_jacobians_match_finite_differences() {
        let gd = ground_dyn();
        let md = marine_dyn();
        let xs_g = [
            [0.3, 1.1, 0.4, 0.0, 0.7, -0.8],
            [1.0, 0.2, -0.6, 0.0, -2.4, 1.5],
        ];
        for x in &xs_g {
            assert!(dynamics_jacobian_error(&gd, x, &[0.3, -0.7]) < 1e-6);
        }
        let xs_m = [
            [0.5, 1.0, 0.3, 0.1, 0.4, 0.6, 80.0, -40.0],
            [2.0, 0.8, -0.2, -0.15, -1.9, -0.4, 150.0, 90.0],
        ];
        for x in &xs_m {
            assert!(dynamics_jacobian_error(&md, x, &[0.6, 0.2]) < 1e-6);
        }
    }

    #[test]
    fn cost_gradients_match_finite_differences() {
        let g = GroundParams::default();
        let gc = ground_cost(&g);
        assert!(cost_gradient_error(&gc, &[0.0, 0.0, 0.5, 0.0, 0.2, 0.8], &[0.3, 0.5]) < 1e-6);
        let mc = marine_cost(&g.motor);
        assert!(
            cost_gradient_error(
                &mc,
                &[0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 120.0, 60.0],
                &[0.4, 0.1]
            ) < 1e-6
        );
    }

    #[test]
    fn every_scene_preset_builds_a_consistent_system() {
        let params = AmbotParams::default();
        for (name, scene) in [
            ("shoreline", shoreline_scene()),
            ("river", river_scene()),
            ("island", island_scene()),
        ] {
            let sys = ambot(&params, &scene);
            sys.check_domain_disjointness(200, 11)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            sys.check_reset_landing(100, 12)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(sys.guards.len(), 2 * scene.shorelines.len());
        }
    }

    #[test]
    fn river_crossing_resets_round_trip_between_modes() {
        let params = AmbotParams::default();
        let sys = ambot(&params, &river_scene());
        let phi_n = params.marine.cruise_prop_speed();
        // just inland of the lower bank, heading north at cruise speed
        let x_land = [1.5, 0.8 - params.eps_guard / 2.0, 0.3, 0.0, 1.3, 0.0];
        let (splash, cost_in) = sys.apply_reset(&x_land, ModeId(AMBOT_MARINE)).unwrap();
        assert_eq!(splash.len(), 8);
        assert_abs_diff_eq!(splash[0], 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(splash[1], 0.8 + params.eps_guard / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(splash[2], 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(splash[4], 1.3, epsilon = 1e-9);
        assert_abs_diff_eq!(splash[6], phi_n, epsilon = 1e-9);
        assert_eq!(cost_in, 0.0);
        assert_eq!(sys.mode_of(&splash).unwrap(), ModeId(AMBOT_MARINE));

        // swim to the far bank and climb out; the landing steps strictly
        // ashore
        let x_far = [1.7, 1.4, 0.2, 0.0, 1.6, 0.0, phi_n, phi_n];
        let (ashore, _) = sys.apply_reset(&x_far, ModeId(AMBOT_GROUND)).unwrap();
        assert_eq!(ashore.len(), 6);
        assert_abs_diff_eq!(ashore[1], 1.4 + params.eps_guard / 2.0, epsilon = 1e-9);
        assert_eq!(sys.mode_of(&ashore).unwrap(), ModeId(AMBOT_GROUND));
    }

    #[test]
    fn island_arc_resets_land_on_the_correct_sides() {
        let params = AmbotParams::default();
        let sys = ambot(&params, &island_scene());
        // guards 2 and 3 belong to the island arc shoreline
        let arc_in = &sys.guards[2]; // ground (island) -> marine
        let arc_out = &sys.guards[3]; // marine -> ground (island)
        assert_eq!(arc_in.from, ModeId(AMBOT_GROUND));
        let island_edge = [2.6, 1.5, 0.1, 0.0, 0.5, 0.0];
        let mut splash = [0.0; 8];
        arc_in.reset.apply(&island_edge, &mut splash);
        // stepped outward off the island circle into open water
        assert!(splash[0] > 2.6);
        assert_eq!(sys.mode_of(&splash).unwrap(), ModeId(AMBOT_MARINE));

        let phi_n = params.marine.cruise_prop_speed();
        let afloat = [2.0, 1.5 - 0.6, 0.0, 0.0, 0.0, 0.0, phi_n, phi_n];
        let mut ashore = [0.0; 6];
        arc_out.reset.apply(&afloat, &mut ashore);
        // the landing steps strictly onto the island (inward off the arc)
        assert_abs_diff_eq!(ashore[1], 0.9 + params.eps_guard / 2.0, epsilon = 1e-9);
        assert_eq!(sys.mode_of(&ashore).unwrap(), ModeId(AMBOT_GROUND));
    }

    #[test]
    fn ground_segment_cost_is_invariant_under_world_rotation() {
        // a quarter-turn of the whole problem must not change the energy
        let params = AmbotParams::default();
        // all-land scene so both orientations stay in-domain
        let scene = AmbotScene {
            x_range: [-2.0, 2.0],
            y_range: [-2.0, 2.0],
            water: Region::HalfPlane {
                normal: [0.0, 1.0],
                offset: -10.0,
            },
            shorelines: vec![],
        };
        let sys = ambot(&params, &scene);
        let settings = SolverSettings::default();
        let solve = |start: Vec<f64>, goal: Vec<f64>| {
            let prob = SegmentProblem::free_between(
                &sys,
                ModeId(AMBOT_GROUND),
                start,
                goal,
                25,
            );
            solve_segment(&sys, &prob, &settings).expect("segment solves")
        };
        let base = solve(
            vec![0.0, 0.0, 0.2, 0.0, 0.0, 0.0],
            vec![0.6, 0.0, 0.2, 0.0, 0.0, 0.0],
        );
        let quarter = std::f64::consts::FRAC_PI_2;
        let turned = solve(
            vec![0.0, 0.0, 0.2, 0.0, quarter, 0.0],
            vec![0.0, 0.6, 0.2, 0.0, quarter, 0.0],
        );
        assert!(base.converged && turned.converged);
        let rel = (base.cost - turned.cost).abs() / base.cost.max(1e-9);
        assert!(rel < 1e-3, "rotated cost differs by {rel}");
    }
}
