//! Flying-driving drone over piecewise-flat terrain: a skid-steer ground
//! platform that can take off, fly as a point-mass quadrotor, and land.
//!
//! Ground mode reuses the skid-steer drivetrain (6 states) and drives on
//! the terrain's drivable patches; patches at different heights are
//! disconnected on the ground, so crossing a chasm requires flight.
//! Flight mode (7 states: position, velocity, collective rotor speed) is
//! a reduced quadrotor: one spin-up state drives total thrust, steered by
//! per-axis thrust-fraction inputs. Hover draws roughly an order of
//! magnitude more electrical power than driving, so plans fly only where
//! the ground graph cannot go — and for long chasms it pays to land on
//! the chasm floor and drive, despite the extra takeoff/landing pair.
//!
//! Takeoff happens from standstill anywhere on a patch (heading snapped
//! to one of two grid values; the skid-steer turns in place cheaply) and
//! delivers the vehicle hovering one clearance above the patch. Landing
//! happens from hover at that same height and puts the vehicle down at
//! rest with a reference heading.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::hybrid::charts::CoordSectionChart;
use crate::hybrid::{
    Domain, Guard, HybridSystem, Mode, ModeDynamics, ModeId, ParamSpec, PlanarRegion,
    PlanningMeta, ResetFn, SharedCoordReset, StatePredicate, VirtualConstraint,
};
use crate::models::ambot::{ground_cost, GroundParams, SkidSteerDynamics};
use crate::models::terrain::Terrain;
use crate::models::{ElectricalPower, MotorParams, MotorTap};

/// Index of the skid-steer ground mode.
pub const FLYDRIVE_GROUND: usize = 0;
/// Index of the quadrotor flight mode.
pub const FLYDRIVE_FLIGHT: usize = 1;

const GRAVITY: f64 = 9.81;

/// Reduced quadrotor parameters (desk-scale drone).
#[derive(Debug, Clone)]
pub struct FlightParams {
    pub mass: f64,
    /// Thrust per rotor per (rad/s)^2 of collective speed.
    pub lift_coeff: f64,
    /// One of the four identical rotor motors.
    pub motor: MotorParams,
    /// Loaded shaft speed per volt; `k_v * k_t < 1` so holding speed
    /// under propeller load draws sustained positive current.
    pub k_v: f64,
    /// Rotor spin-up time constant.
    pub tau: f64,
    /// Linear aerodynamic drag on translational velocity.
    pub lin_drag: f64,
    /// Bound on the lateral thrust-fraction inputs.
    pub tilt_max: f64,
    /// Hover height above the local terrain; also the flight domain's
    /// clearance floor.
    pub clearance: f64,
    /// Energy charged for the takeoff maneuver (spin-up, ground effect).
    pub takeoff_cost: f64,
    /// Energy charged for the landing maneuver.
    pub landing_cost: f64,
    pub v_max: f64,
    pub vz_max: f64,
    pub nominal_speed: f64,
    pub accel_limit: f64,
}

impl Default for FlightParams {
    fn default() -> Self {
        FlightParams {
            mass: 1.2,
            lift_coeff: 1.2e-5,
            motor: MotorParams {
                k_t: 0.01,
                r: 0.08,
                v_cc: 12.0,
                p_d: 6.0,
            },
            k_v: 50.0,
            tau: 0.1,
            lin_drag: 0.3,
            tilt_max: 0.5,
            clearance: 1.0,
            takeoff_cost: 25.0,
            landing_cost: 8.0,
            v_max: 1.5,
            vz_max: 1.0,
            nominal_speed: 1.0,
            accel_limit: 4.0,
        }
    }
}

impl FlightParams {
    /// Collective rotor speed whose four-rotor thrust balances gravity.
    pub fn hover_prop_speed(&self) -> f64 {
        (self.mass * GRAVITY / (4.0 * self.lift_coeff)).sqrt()
    }

    /// Duty cycle holding the hover rotor speed.
    pub fn hover_duty(&self) -> f64 {
        self.hover_prop_speed() / (self.k_v * self.motor.v_cc)
    }

    /// Rotor speed box upper end (full-duty steady state).
    pub fn prop_speed_max(&self) -> f64 {
        self.k_v * self.motor.v_cc
    }
}

/// Point-mass quadrotor with a collective rotor-speed state.
///
/// State `(px, py, pz, vx, vy, vz, phi)`; inputs are the collective duty
/// cycle `u_m` in `[0, 1]` and per-axis thrust fractions
/// `(a_x, a_y, a_z)`, laterally bounded by the tilt limit and vertically
/// in `[0, 1]`:
///
/// ```text
/// p'   = v
/// v'   = (4 k_f phi^2 / m) (a_x, a_y, a_z) - g e_z - (c_a / m) v
/// phi' = (k_v v_cc u_m - phi) / tau
/// ```
///
/// At the hover speed, `a = (0, 0, 1)` exactly cancels gravity.
pub struct QuadLiftDynamics {
    pub p: FlightParams,
}

impl QuadLiftDynamics {
    /// Specific thrust `4 k_f phi^2 / m`.
    fn thrust_accel(&self, phi: f64) -> f64 {
        4.0 * self.p.lift_coeff * phi * phi / self.p.mass
    }
}

impl ModeDynamics<f64> for QuadLiftDynamics {
    fn state_dim(&self) -> usize {
        7
    }

    fn input_dim(&self) -> usize {
        4
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        let d = self.p.lin_drag / self.p.mass;
        out[0] = x[3];
        out[1] = x[4];
        out[2] = x[5];
        out[3] = -d * x[3];
        out[4] = -d * x[4];
        out[5] = -GRAVITY - d * x[5];
        out[6] = -x[6] / self.p.tau;
    }

    fn input_matrix(&self, x: &[f64], out: &mut [f64]) {
        let ta = self.thrust_accel(x[6]);
        out.fill(0.0);
        out[3 * 4 + 1] = ta;
        out[4 * 4 + 2] = ta;
        out[5 * 4 + 3] = ta;
        out[6 * 4] = self.p.k_v * self.p.motor.v_cc / self.p.tau;
    }

    fn jac_state(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        let n = 7;
        let d = self.p.lin_drag / self.p.mass;
        // d thrust_accel / d phi
        let dta = 8.0 * self.p.lift_coeff * x[6] / self.p.mass;
        out.fill(0.0);
        out[3] = 1.0;
        out[n + 4] = 1.0;
        out[2 * n + 5] = 1.0;
        out[3 * n + 3] = -d;
        out[3 * n + 6] = dta * u[1];
        out[4 * n + 4] = -d;
        out[4 * n + 6] = dta * u[2];
        out[5 * n + 5] = -d;
        out[5 * n + 6] = dta * u[3];
        out[6 * n + 6] = -1.0 / self.p.tau;
    }
}

/// Electrical power of the four identical rotor motors, all commanded by
/// the collective duty and spinning at the collective speed.
pub fn flight_cost(p: &FlightParams) -> ElectricalPower {
    ElectricalPower::new(
        p.motor,
        (0..4)
            .map(|_| MotorTap {
                input: 0,
                phi: vec![(6, 1.0)],
            })
            .collect(),
    )
}

/// Flight stays at least `clearance` above the terrain (closed, so hover
/// exactly at the clearance height — the takeoff/landing surface —
/// belongs to flight).
pub struct TerrainClearance {
    pub terrain: Terrain,
    pub clearance: f64,
}

impl StatePredicate<f64> for TerrainClearance {
    fn accepts(&self, x: &[f64]) -> bool {
        x[2] >= self.terrain.height(x[0], x[1]) + self.clearance
    }
}

/// Takeoff map: from a standstill ground pose to a hover one clearance
/// above the local patch, rotors at hover speed.
struct TakeoffReset {
    terrain: Terrain,
    clearance: f64,
    hover_speed: f64,
}

impl ResetFn<f64> for TakeoffReset {
    fn in_dim(&self) -> usize {
        6
    }

    fn out_dim(&self) -> usize {
        7
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = x[0];
        out[1] = x[1];
        out[2] = self.terrain.height(x[0], x[1]) + self.clearance;
        out[6] = self.hover_speed;
    }

    fn jacobian(&self, _x: &[f64], out: &mut [f64]) {
        // patch heights are locally constant, so the altitude row is flat
        out.fill(0.0);
        out[0] = 1.0;
        out[6 + 1] = 1.0;
    }
}

#[derive(Debug, Clone)]
pub struct FlyDriveParams {
    pub ground: GroundParams,
    pub flight: FlightParams,
    pub eps_guard: f64,
    /// Guard charts stay this far inside patch edges.
    pub patch_margin: f64,
}

impl Default for FlyDriveParams {
    fn default() -> Self {
        FlyDriveParams {
            ground: GroundParams {
                mass: 1.2,
                inertia: 0.02,
                half_track: 0.08,
                wheel_radius: 0.03,
                gear: 10.0,
                motor: MotorParams {
                    k_t: 0.015,
                    r: 1.0,
                    v_cc: 12.0,
                    p_d: 1.0,
                },
                v_max: 1.0,
                omega_max: 3.0,
                nominal_speed: 0.5,
                turn_rate: 2.0,
                accel_limit: 10.0,
            },
            flight: FlightParams::default(),
            eps_guard: 0.01,
            patch_margin: 0.1,
        }
    }
}

/// Build the flying-driving vehicle over a terrain. Every drivable patch
/// gets a takeoff and a landing guard; flight planning samples position
/// and velocity with the collective rotor speed held at hover.
pub fn flydrive(params: &FlyDriveParams, terrain: &Terrain) -> HybridSystem<f64> {
    let g = &params.ground;
    let f = &params.flight;
    let phi_n = f.hover_prop_speed();
    let phi_max = f.prop_speed_max();
    let z_max = terrain.z_max();

    let ground = Mode {
        name: "drive".to_string(),
        dynamics: Arc::new(SkidSteerDynamics { p: g.clone() }),
        domain: Domain {
            predicate: Arc::new(PlanarRegion {
                region: terrain.drivable_region(),
                x_dim: 0,
                y_dim: 1,
            }),
            bounds: vec![
                terrain.x_range,
                terrain.y_range,
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

    let flight = Mode {
        name: "fly".to_string(),
        dynamics: Arc::new(QuadLiftDynamics { p: f.clone() }),
        domain: Domain {
            predicate: Arc::new(TerrainClearance {
                terrain: terrain.clone(),
                clearance: f.clearance,
            }),
            bounds: vec![
                terrain.x_range,
                terrain.y_range,
                [0.0, z_max],
                [-f.v_max, f.v_max],
                [-f.v_max, f.v_max],
                [-f.vz_max, f.vz_max],
                [0.0, phi_max],
            ],
            angular_dims: vec![],
        },
        input_bounds: vec![
            [0.0, 1.0],
            [-f.tilt_max, f.tilt_max],
            [-f.tilt_max, f.tilt_max],
            [0.0, 1.0],
        ],
        cost: Arc::new(flight_cost(f)),
        vc: VirtualConstraint::new(7, vec![0, 1, 2, 3, 4, 5], vec![(6, phi_n)]),
        planning: PlanningMeta {
            position_dims: vec![0, 1, 2],
            // vertical authority flows through the rotor-speed state, which
            // the direct input-to-velocity screen cannot see; only the
            // tilt-steered lateral axes are screened
            velocity_dims: vec![3, 4],
            nominal_speed: f.nominal_speed,
            accel_limit: Some(f.accel_limit),
            turn_rate: None,
        },
    };

    let mut guards = Vec::new();
    for patch in &terrain.patches {
        let [xr, yr] = patch.shrunk(params.patch_margin);
        assert!(
            xr[0] < xr[1] && yr[0] < yr[1],
            "patch too small for guard margin"
        );
        let hover_z = patch.height + f.clearance;
        // takeoff: from standstill at either of two reference headings
        guards.push(Guard {
            from: ModeId(FLYDRIVE_GROUND),
            to: ModeId(FLYDRIVE_FLIGHT),
            chart: Arc::new(CoordSectionChart {
                coords: vec![
                    ParamSpec::Range(xr),
                    ParamSpec::Range(yr),
                    ParamSpec::Fixed(0.0),
                    ParamSpec::Grid(vec![0.0, PI]),
                ],
                transversal: None,
            }),
            reset: Arc::new(TakeoffReset {
                terrain: terrain.clone(),
                clearance: f.clearance,
                hover_speed: phi_n,
            }),
            switch_cost: f.takeoff_cost,
        });
        // landing: from hover at the patch's clearance height to rest
        guards.push(Guard {
            from: ModeId(FLYDRIVE_FLIGHT),
            to: ModeId(FLYDRIVE_GROUND),
            chart: Arc::new(CoordSectionChart {
                coords: vec![
                    ParamSpec::Range(xr),
                    ParamSpec::Range(yr),
                    ParamSpec::Fixed(hover_z),
                    ParamSpec::Fixed(0.0),
                    ParamSpec::Fixed(0.0),
                    ParamSpec::Fixed(0.0),
                ],
                transversal: None,
            }),
            reset: Arc::new(SharedCoordReset {
                in_dim: 7,
                take: 2,
                append: vec![0.0, 0.0, 0.0, 0.0],
                offset: vec![],
            }),
            switch_cost: f.landing_cost,
        });
    }

    let sys = HybridSystem {
        modes: vec![ground, flight],
        guards,
        eps_guard: params.eps_guard,
    };
    sys.validate().expect("flying-driving system is consistent");

    // hover must be an exact flight equilibrium: four-rotor thrust at the
    // hover speed balances gravity, and the hover duty holds that speed
    let u_n = [f.hover_duty(), 0.0, 0.0, 1.0];
    let x_n = [0.0, 0.0, f.clearance, 0.0, 0.0, 0.0, phi_n];
    let mut dx = [0.0; 7];
    sys.modes[FLYDRIVE_FLIGHT]
        .dynamics
        .derivative(&x_n, &u_n, &mut dx);
    for (d, &v) in dx.iter().enumerate() {
        assert!(
            v.abs() <= 1e-8 * (1.0 + phi_n),
            "hover is not an equilibrium: state {d} drifts at {v}"
        );
    }

    sys
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{corridor_clear, reachable};
    use crate::models::terrain::{chasm, flat, ChasmSpec};
    use crate::models::testutil::{cost_gradient_error, dynamics_jacobian_error};
    use crate::models::{electrical_power, RunningCost};
    use approx::assert_abs_diff_eq;

    fn flight_dyn() -> QuadLiftDynamics {
        QuadLiftDynamics {
            p: FlightParams::default(),
        }
    }

    #[test]
    fn hover_balances_gravity_and_tilts_steer() {
        let d = flight_dyn();
        let phi_n = d.p.hover_prop_speed();
        let hover = [0.0, 0.0, 2.0, 0.0, 0.0, 0.0, phi_n];
        let mut dx = [0.0; 7];
        d.derivative(&hover, &[d.p.hover_duty(), 0.0, 0.0, 1.0], &mut dx);
        for &v in &dx {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
        }
        // tilting the thrust vector accelerates laterally
        d.derivative(&hover, &[d.p.hover_duty(), 0.3, 0.0, 1.0], &mut dx);
        assert!(dx[3] > 0.0);
        // spinning down while keeping level attitude descends
        let slow = [0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.8 * phi_n];
        d.derivative(&slow, &[d.p.hover_duty(), 0.0, 0.0, 1.0], &mut dx);
        assert!(dx[5] < 0.0);
    }

    #[test]
    fn hover_draws_an_order_of_magnitude_more_than_ground_cruise() {
        let f = FlightParams::default();
        let phi_n = f.hover_prop_speed();
        let u_n = f.hover_duty();
        let p_hover = electrical_power(
            &f.motor,
            &[u_n, u_n, u_n, u_n],
            &[phi_n, phi_n, phi_n, phi_n],
        );
        assert!(
            p_hover > 20.0 && p_hover < 40.0,
            "hover draw {p_hover} W out of expected band"
        );
        // ground cruise of the same vehicle is essentially avionics-only
        let g = FlyDriveParams::default().ground;
        assert!(p_hover > 10.0 * g.motor.p_d);
    }

    #[test]
    fn flight_jacobians_and_cost_gradients_match_finite_differences() {
        let d = flight_dyn();
        let xs = [
            [0.5, -1.0, 2.2, 0.4, -0.3, 0.2, 400.0],
            [3.0, 0.8, 1.4, -1.0, 0.5, -0.6, 550.0],
        ];
        for x in &xs {
            assert!(dynamics_jacobian_error(&d, x, &[0.5, 0.2, -0.1, 0.8]) < 1e-6);
        }
        let cost = flight_cost(&d.p);
        assert!(
            cost_gradient_error(&cost, &xs[0], &[0.5, 0.2, -0.1, 0.8]) < 1e-6
        );
    }

    #[test]
    fn chasm_system_builds_with_guards_on_every_patch() {
        let t = chasm(&ChasmSpec::default());
        let sys = flydrive(&FlyDriveParams::default(), &t);
        assert_eq!(sys.guards.len(), 6);
        sys.check_domain_disjointness(200, 21).unwrap();
        sys.check_reset_landing(100, 22).unwrap();
    }

    #[test]
    fn takeoff_and_landing_resets_connect_the_modes() {
        let params = FlyDriveParams::default();
        let t = chasm(&ChasmSpec::default());
        let sys = flydrive(&params, &t);
        let phi_n = params.flight.hover_prop_speed();

        // takeoff from the left platform (height 1) hovers at z = 2
        let parked = [-4.0, 0.3, 0.0, 0.0, 0.0, 0.0];
        let (airborne, cost) = sys.apply_reset(&parked, ModeId(FLYDRIVE_FLIGHT)).unwrap();
        assert_eq!(cost, params.flight.takeoff_cost);
        assert_abs_diff_eq!(airborne[2], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(airborne[6], phi_n, epsilon = 1e-12);
        assert_eq!(sys.mode_of(&airborne).unwrap(), ModeId(FLYDRIVE_FLIGHT));

        // landing from hover over the chasm floor (height 0) parks at rest
        let hover = [0.5, -0.2, 1.0, 0.0, 0.0, 0.0, phi_n];
        let (parked2, cost2) = sys.apply_reset(&hover, ModeId(FLYDRIVE_GROUND)).unwrap();
        assert_eq!(cost2, params.flight.landing_cost);
        assert_eq!(parked2, vec![0.5, -0.2, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(sys.mode_of(&parked2).unwrap(), ModeId(FLYDRIVE_GROUND));

        // hovering over the cliff wall cannot land (no guard accepts it)
        let over_wall = [-2.9, 0.0, 2.0, 0.0, 0.0, 0.0, phi_n];
        assert!(sys.apply_reset(&over_wall, ModeId(FLYDRIVE_GROUND)).is_err());
    }

    #[test]
    fn ground_patches_are_disconnected_and_flight_respects_clearance() {
        let t = chasm(&ChasmSpec::default());
        let sys = flydrive(&FlyDriveParams::default(), &t);
        let ground = ModeId(FLYDRIVE_GROUND);
        let flight = ModeId(FLYDRIVE_FLIGHT);

        // driving across the chasm walls is screened out, driving within a
        // patch is not
        let on_platform = [-4.0, 0.0, 0.2, 0.0];
        let on_floor = [0.0, 0.0, 0.2, 0.0];
        let on_floor_2 = [1.5, 0.4, 0.2, 0.0];
        assert!(!reachable(&sys, ground, &on_platform, &on_floor));
        assert!(reachable(&sys, ground, &on_floor, &on_floor_2));

        // a straight flight edge dipping below the wall clearance is
        // rejected; the same crossing at altitude passes
        let m = sys.mode(flight);
        let dip = |z: f64| {
            corridor_clear(
                &sys,
                flight,
                &m.vc.lift(&[-3.5, 0.0, 2.0, 0.5, 0.0, 0.0]),
                &m.vc.lift(&[-2.0, 0.0, z, 0.5, 0.0, 0.0]),
            )
        };
        assert!(!dip(1.05));
        assert!(dip(2.0));
    }

    #[test]
    fn flat_terrain_builds_one_takeoff_landing_pair() {
        let t = flat([-2.0, 2.0], [-1.0, 1.0]);
        let sys = flydrive(&FlyDriveParams::default(), &t);
        assert_eq!(sys.guards.len(), 2);
        let cost = &sys.modes[FLYDRIVE_FLIGHT].cost;
        // idle rotors draw exactly the avionics power
        let x = [0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 300.0];
        let p = cost.evaluate(&x, &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(p, FlightParams::default().motor.p_d);
    }
}
