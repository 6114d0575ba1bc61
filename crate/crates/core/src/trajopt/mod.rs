//! Trajectory optimization: single-mode boundary-value problems via
//! trapezoidal collocation, solved with an augmented-Lagrangian NLP
//! solver, plus multi-phase problems that link segments across guards.

pub mod collocation;
pub mod multiphase;
pub mod nlp;
pub mod smooth;

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::hybrid::{HybridSystem, ModeId};
use crate::linalg;
use crate::real::Real;
use collocation::SegmentNlp;
use nlp::{solve_auglag, AugLagSettings, NlpProblem};

/// Segment duration: fixed, or a free variable inside a window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum Horizon<T> {
    Fixed(T),
    Free { min: T, max: T },
}

/// Single-mode two-point boundary-value problem.
#[derive(Debug, Clone)]
pub struct SegmentProblem<T> {
    pub mode: ModeId,
    pub start: Vec<T>,
    pub goal: Vec<T>,
    pub horizon: Horizon<T>,
    pub n_nodes: usize,
    /// Per-state box; defaults to the mode's domain box inflated 25%.
    pub state_bounds: Option<Vec<[T; 2]>>,
    /// Defaults to the mode's input box.
    pub input_bounds: Option<Vec<[T; 2]>>,
}

/// Lower-bound estimate of the time needed to carry the velocity
/// coordinates from one state to another: per velocity dimension, the
/// midpoint-rule integral of inverse best-case acceleration along the
/// straight-line state path, taking the largest dimension. This captures
/// drag saturation — near a mode's terminal velocity the inputs buy
/// almost no acceleration, so small velocity gaps can cost long stretches
/// of time. `None` when some midpoint has no acceleration toward the
/// target at all (the drift outruns every admissible input there), which
/// makes the transfer hopeless along this corridor.
pub fn velocity_change_time<T: Real>(
    sys: &HybridSystem<T>,
    mode: ModeId,
    xa: &[T],
    xb: &[T],
) -> Option<T> {
    let m = sys.mode(mode);
    let nx = m.state_dim();
    let nu = m.input_dim();
    let mut drift = vec![T::zero(); nx];
    let mut bmat = vec![T::zero(); nx * nu];
    const K: usize = 8;
    let mut worst = T::zero();
    for &vd in &m.planning.velocity_dims {
        let full = m.vc.sampled_dims[vd];
        let dv = xb[full] - xa[full];
        if dv.abs() <= T::of(1e-12) {
            continue;
        }
        let mut t_need = T::zero();
        for k in 0..K {
            let s = T::of((k as f64 + 0.5) / K as f64);
            let x: Vec<T> = xa
                .iter()
                .zip(xb)
                .map(|(&p, &q)| p + s * (q - p))
                .collect();
            m.dynamics.drift(&x, &mut drift);
            m.dynamics.input_matrix(&x, &mut bmat);
            let mut rate = drift[full];
            for j in 0..nu {
                let w = bmat[full * nu + j];
                let [lo, hi] = m.input_bounds[j];
                rate = rate
                    + if dv > T::zero() {
                        (w * lo).max(w * hi)
                    } else {
                        (w * lo).min(w * hi)
                    };
            }
            let accel = if dv > T::zero() { rate } else { -rate };
            if accel <= T::of(1e-9) {
                return None;
            }
            t_need = t_need + dv.abs() / T::of(K as f64) / accel;
        }
        worst = worst.max(t_need);
    }
    Some(worst)
}

/// Nominal duration for travel between two full states of a mode: the
/// larger of position distance over the mode's nominal speed and the
/// velocity-change time estimate, floored so that pure heading changes
/// still get a usable window.
pub fn nominal_duration<T: Real>(sys: &HybridSystem<T>, mode: ModeId, a: &[T], b: &[T]) -> T {
    let m = sys.mode(mode);
    let mut d2 = T::zero();
    let mut scale = T::zero();
    for &pd in &m.planning.position_dims {
        let full = m.vc.sampled_dims[pd];
        let diff = a[full] - b[full];
        d2 = d2 + diff * diff;
        scale = scale + m.domain.bounds[full][1] - m.domain.bounds[full][0];
    }
    let n = T::of(m.planning.position_dims.len().max(1) as f64);
    let floor = T::of(0.02) * scale / n;
    let mut t = d2.sqrt().max(floor) / m.planning.nominal_speed;
    // no feasible velocity sweep along the corridor leaves the window to
    // the travel estimate and lets the solver report infeasibility
    if let Some(t_vel) = velocity_change_time(sys, mode, a, b) {
        t = t.max(t_vel);
    }
    if let Some(rate) = m.planning.turn_rate {
        for sd in m.sampled_angular_dims() {
            let full = m.vc.sampled_dims[sd];
            t = t.max(linalg::angle_diff(b[full], a[full]).abs() / rate);
        }
    }
    t
}

impl<T: Real> SegmentProblem<T> {
    /// Free-time problem between two full states with the standard
    /// horizon window `[0.2 T_nom, 5 T_nom]`.
    pub fn free_between(
        sys: &HybridSystem<T>,
        mode: ModeId,
        start: Vec<T>,
        goal: Vec<T>,
        n_nodes: usize,
    ) -> Self {
        let t_nom = nominal_duration(sys, mode, &start, &goal);
        SegmentProblem {
            mode,
            start,
            goal,
            horizon: Horizon::Free {
                min: T::of(0.2) * t_nom,
                max: T::of(5.0) * t_nom,
            },
            n_nodes,
            state_bounds: None,
            input_bounds: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverSettings<T> {
    pub auglag: AugLagSettings<T>,
    /// Collocation nodes when the problem doesn't specify.
    pub n_nodes: usize,
    /// Perturbed-guess retries after a failed solve.
    pub retries: usize,
    /// Retry perturbation, as a fraction of each variable's box width.
    pub retry_jitter: T,
    pub seed: u64,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        SolverSettings {
            auglag: AugLagSettings::default(),
            n_nodes: 40,
            retries: 1,
            retry_jitter: T::of(0.05),
            seed: 0,
        }
    }
}

/// Discrete trajectory through one mode, with solve diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySegment<T> {
    pub mode: ModeId,
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub inputs: Vec<Vec<T>>,
    pub cost: T,
    pub converged: bool,
    /// Projected-gradient norm of the augmented Lagrangian at the end.
    pub kkt_residual: T,
    pub max_defect: T,
}

/// Largest collocation defect of a sampled trajectory, recomputed from
/// the system dynamics alone. Independent of any solver state, so it
/// doubles as an output validity check.
pub fn max_defect<T: Real>(
    sys: &HybridSystem<T>,
    mode: ModeId,
    times: &[T],
    states: &[Vec<T>],
    inputs: &[Vec<T>],
) -> T {
    let dyn_ = &sys.mode(mode).dynamics;
    let nx = dyn_.state_dim();
    let mut fk = vec![T::zero(); nx];
    let mut fk1 = vec![T::zero(); nx];
    let mut worst = T::zero();
    for k in 0..times.len() - 1 {
        let h = times[k + 1] - times[k];
        dyn_.derivative(&states[k], &inputs[k], &mut fk);
        dyn_.derivative(&states[k + 1], &inputs[k + 1], &mut fk1);
        for i in 0..nx {
            let d = states[k + 1][i]
                - states[k][i]
                - h / T::of(2.0) * (fk[i] + fk1[i]);
            worst = worst.max(d.abs());
        }
    }
    worst
}

/// Solve a single-mode boundary-value problem. Retries with a perturbed
/// initial guess before classifying the problem as infeasible; retries
/// are seeded, so results are deterministic for fixed settings.
pub fn solve_segment<T: Real>(
    sys: &HybridSystem<T>,
    prob: &SegmentProblem<T>,
    settings: &SolverSettings<T>,
) -> Result<TrajectorySegment<T>, SolveError> {
    let n_nodes = if prob.n_nodes >= 2 {
        prob.n_nodes
    } else {
        settings.n_nodes
    };
    // Angular coordinates are matched on the circle: target the goal
    // representative nearest the start so pairs straddling the +-pi seam
    // take the short way around. The returned final state may differ from
    // the requested goal by a full turn.
    let mut goal = prob.goal.clone();
    for &d in &sys.mode(prob.mode).domain.angular_dims {
        goal[d] = prob.start[d] + linalg::angle_diff(prob.goal[d], prob.start[d]);
    }
    let nlp = SegmentNlp::new(
        sys,
        prob.mode,
        prob.start.clone(),
        goal,
        prob.horizon,
        n_nodes,
        prob.state_bounds.clone(),
        prob.input_bounds.clone(),
    );
    let z0 = nlp.initial_guess();
    let bounds = nlp.bounds();

    let mut best: Option<nlp::AugLagReport<T>> = None;
    for attempt in 0..=settings.retries {
        let guess = if attempt == 0 {
            z0.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed.wrapping_add(attempt as u64));
            z0.iter()
                .zip(&bounds)
                .map(|(&v, b)| {
                    let w = (b[1] - b[0]).to_f64_lossy();
                    if w.is_finite() && w > 0.0 {
                        let j = settings.retry_jitter.to_f64_lossy() * w;
                        v + T::of(rng.gen_range(-j..=j))
                    } else {
                        v
                    }
                })
                .collect()
        };
        let report = solve_auglag(&nlp, &guess, &settings.auglag);
        let better = match &best {
            None => true,
            Some(b) => {
                (report.converged && !b.converged)
                    || (report.converged == b.converged && report.violation < b.violation)
            }
        };
        if better {
            best = Some(report);
        }
        if best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    let report = best.expect("at least one attempt ran");

    if !report.converged
        && report.violation > T::of(100.0) * settings.auglag.tol_constraint
    {
        return Err(SolveError::Infeasible {
            violation: report.violation.to_f64_lossy(),
        });
    }

    let (times, states, inputs) = nlp.unpack(&report.z);
    let defect = max_defect(sys, prob.mode, &times, &states, &inputs);
    Ok(TrajectorySegment {
        mode: prob.mode,
        times,
        states,
        inputs,
        cost: report.objective,
        converged: report.converged,
        kkt_residual: report.pg_norm,
        max_defect: defect,
    })
}

/// Metadata sidecar stored next to a trajectory CSV.
#[derive(Debug, Serialize, Deserialize)]
struct SegmentMeta<T> {
    schema: u32,
    mode: usize,
    state_dim: usize,
    input_dim: usize,
    cost: T,
    converged: bool,
    kkt_residual: T,
    max_defect: T,
}

const SEGMENT_SCHEMA: u32 = 1;

fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("meta.json")
}

/// Write a segment as `path` (CSV: time, state coords, input coords) plus
/// a JSON metadata sidecar at `path` with extension `meta.json`.
pub fn write_segment<T: Real>(seg: &TrajectorySegment<T>, path: &Path) -> std::io::Result<()> {
    let nx = seg.states.first().map_or(0, Vec::len);
    let nu = seg.inputs.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..nx).map(|i| format!("x{i}")));
    header.extend((0..nu).map(|j| format!("u{j}")));
    w.write_record(&header)?;
    for k in 0..seg.times.len() {
        let mut row = vec![format!("{}", seg.times[k])];
        row.extend(seg.states[k].iter().map(|v| format!("{v}")));
        row.extend(seg.inputs[k].iter().map(|v| format!("{v}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    let meta = SegmentMeta {
        schema: SEGMENT_SCHEMA,
        mode: seg.mode.0,
        state_dim: nx,
        input_dim: nu,
        cost: seg.cost,
        converged: seg.converged,
        kkt_residual: seg.kkt_residual,
        max_defect: seg.max_defect,
    };
    std::fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&meta).expect("segment metadata serializes"),
    )
}

pub fn read_segment<T: Real>(path: &Path) -> std::io::Result<TrajectorySegment<T>> {
    let meta: SegmentMeta<T> = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    let mut r = csv::Reader::from_path(path)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut inputs = Vec::new();
    let parse = |s: &str| -> std::io::Result<T> {
        s.parse::<f64>()
            .map(T::of)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    };
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 1 + meta.state_dim + meta.input_dim {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "trajectory row width doesn't match metadata dims",
            ));
        }
        times.push(parse(&rec[0])?);
        states.push(
            (0..meta.state_dim)
                .map(|i| parse(&rec[1 + i]))
                .collect::<Result<_, _>>()?,
        );
        inputs.push(
            (0..meta.input_dim)
                .map(|j| parse(&rec[1 + meta.state_dim + j]))
                .collect::<Result<_, _>>()?,
        );
    }
    Ok(TrajectorySegment {
        mode: ModeId(meta.mode),
        times,
        states,
        inputs,
        cost: meta.cost,
        converged: meta.converged,
        kkt_residual: meta.kkt_residual,
        max_defect: meta.max_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::double_integrator::{
        double_integrator, DoubleIntegratorParams, DI_DRAG, DI_FREE,
    };
    use approx::assert_abs_diff_eq;

    /// Minimum control energy for a drag-free double integrator steered
    /// from `(p0, v0)` to `(p1, v1)` in time `t` with unbounded input:
    /// the optimal input is affine in time, giving a closed form.
    fn lq_cost(p0: f64, v0: f64, p1: f64, v1: f64, t: f64) -> f64 {
        let dv = v1 - v0;
        let d = (p1 - p0) - v0 * t;
        let b = (6.0 * dv * t - 12.0 * d) / t.powi(3);
        let a = (dv - b * t * t / 2.0) / t;
        a * a * t + a * b * t * t + b * b * t.powi(3) / 3.0
    }

    fn wide_open() -> (crate::hybrid::HybridSystem<f64>, SegmentProblem<f64>) {
        // effectively unconstrained: huge input bound, loose state box
        let sys = double_integrator(&DoubleIntegratorParams {
            u_max: 100.0,
            drag: 0.0,
            ..DoubleIntegratorParams::default()
        });
        let prob = SegmentProblem {
            mode: ModeId(DI_DRAG),
            start: vec![0.0, 0.0],
            goal: vec![1.0, 0.0],
            horizon: Horizon::Fixed(1.0),
            n_nodes: 40,
            state_bounds: Some(vec![[-10.0, 10.0], [-10.0, 10.0]]),
            input_bounds: None,
        };
        (sys, prob)
    }

    #[test]
    fn transcription_sizes_match_hand_count() {
        let (sys, _) = wide_open();
        let nlp = SegmentNlp::new(
            &sys,
            ModeId(DI_FREE),
            vec![-0.5, 0.0],
            vec![-0.1, 0.0],
            Horizon::Fixed(1.0),
            3,
            None,
            None,
        );
        // 3 nodes x (2 states + 1 input) = 9 variables, 2 intervals x 2
        // defect rows = 4 equalities
        assert_eq!(nlp.num_vars(), 9);
        assert_eq!(nlp.num_eq(), 4);
        let free = SegmentNlp::new(
            &sys,
            ModeId(DI_FREE),
            vec![-0.5, 0.0],
            vec![-0.1, 0.0],
            Horizon::Free { min: 0.5, max: 2.0 },
            3,
            None,
            None,
        );
        assert_eq!(free.num_vars(), 10);
        assert_eq!(free.num_eq(), 4);
    }

    #[test]
    fn rest_to_rest_unit_transfer_costs_twelve() {
        let (sys, prob) = wide_open();
        let seg = solve_segment(&sys, &prob, &SolverSettings::default()).unwrap();
        assert!(seg.converged, "kkt={} defect={}", seg.kkt_residual, seg.max_defect);
        // analytic minimum is 12 with u(t) = 6 - 12 t; trapezoidal
        // discretization at 40 nodes lands within half a percent
        assert_abs_diff_eq!(seg.cost, 12.0, epsilon = 0.06);
        // optimal position curve is 3 t^2 - 2 t^3; check the midpoint
        let mid = &seg.states[seg.states.len() / 2];
        assert_abs_diff_eq!(mid[0], 0.5, epsilon = 0.02);
        assert!(seg.max_defect < 1e-5);
    }

    #[test]
    fn asymmetric_fixed_time_transfer_matches_closed_form() {
        let (sys, mut prob) = wide_open();
        prob.start = vec![0.2, -0.3];
        prob.goal = vec![0.9, 0.1];
        prob.horizon = Horizon::Fixed(1.7);
        let seg = solve_segment(&sys, &prob, &SolverSettings::default()).unwrap();
        assert!(seg.converged);
        let expect = lq_cost(0.2, -0.3, 0.9, 0.1, 1.7);
        assert_abs_diff_eq!(seg.cost, expect, epsilon = 0.01 * expect.abs().max(1.0));
    }

    #[test]
    fn free_time_rides_to_the_cheap_end_of_the_window() {
        // with no drag, energy 12 d^2 / T^3 always prefers the longest T
        let (sys, mut prob) = wide_open();
        prob.goal = vec![0.5, 0.0];
        prob.horizon = Horizon::Free { min: 0.4, max: 2.0 };
        let seg = solve_segment(&sys, &prob, &SolverSettings::default()).unwrap();
        assert!(seg.converged);
        let t_end = *seg.times.last().unwrap();
        assert_abs_diff_eq!(t_end, 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(seg.cost, lq_cost(0.0, 0.0, 0.5, 0.0, 2.0), epsilon = 0.01);
    }

    #[test]
    fn over_ambitious_transfer_is_infeasible() {
        // |u| <= 1 can cover at most T^2/4 = 0.25 from rest to rest
        let sys = double_integrator(&DoubleIntegratorParams {
            drag: 0.0,
            ..DoubleIntegratorParams::default()
        });
        let prob = SegmentProblem {
            mode: ModeId(DI_DRAG),
            start: vec![0.0, 0.0],
            goal: vec![0.5, 0.0],
            horizon: Horizon::Fixed(1.0),
            n_nodes: 30,
            state_bounds: Some(vec![[-10.0, 10.0], [-10.0, 10.0]]),
            input_bounds: None,
        };
        let err = solve_segment(&sys, &prob, &SolverSettings::default()).unwrap_err();
        assert!(matches!(err, SolveError::Infeasible { .. }), "{err:?}");
    }

    #[test]
    fn node_refinement_approaches_the_analytic_cost() {
        let (sys, mut prob) = wide_open();
        let mut errs = Vec::new();
        for n in [10, 20, 40] {
            prob.n_nodes = n;
            let seg = solve_segment(&sys, &prob, &SolverSettings::default()).unwrap();
            errs.push((seg.cost - 12.0).abs());
        }
        assert!(
            errs[2] < errs[0],
            "refinement did not reduce discretization error: {errs:?}"
        );
    }

    #[test]
    fn reported_cost_matches_independent_quadrature() {
        let (sys, prob) = wide_open();
        let seg = solve_segment(&sys, &prob, &SolverSettings::default()).unwrap();
        let j = sys
            .running_cost(seg.mode, &seg.times, &seg.states, &seg.inputs)
            .unwrap();
        assert_abs_diff_eq!(seg.cost, j, epsilon = 1e-9);
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let (sys, prob) = wide_open();
        let settings = SolverSettings {
            seed: 42,
            ..SolverSettings::default()
        };
        let a = solve_segment(&sys, &prob, &settings).unwrap();
        let b = solve_segment(&sys, &prob, &settings).unwrap();
        assert_eq!(a.cost, b.cost);
        assert_eq!(a.states, b.states);
        assert_eq!(a.inputs, b.inputs);
    }

    #[test]
    fn segment_io_round_trips_exactly() {
        let (sys, prob) = wide_open();
        let seg = solve_segment(&sys, &prob, &SolverSettings::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seg.csv");
        write_segment(&seg, &path).unwrap();
        let back: TrajectorySegment<f64> = read_segment(&path).unwrap();
        assert_eq!(seg.mode, back.mode);
        assert_eq!(seg.times, back.times);
        assert_eq!(seg.states, back.states);
        assert_eq!(seg.inputs, back.inputs);
        assert_eq!(seg.cost, back.cost);
        assert_eq!(seg.converged, back.converged);
    }

    /// Central finite differences of objective and weighted equalities
    /// against the analytic gradient and Jacobian-transpose product.
    #[test]
    fn analytic_derivatives_match_finite_differences() {
        use rand::Rng;
        use rand::SeedableRng;
        let sys = double_integrator(&DoubleIntegratorParams {
            u_max: 2.0,
            drag: 0.7,
            ..DoubleIntegratorParams::default()
        });
        for free_time in [false, true] {
            let horizon = if free_time {
                Horizon::Free { min: 0.5, max: 3.0 }
            } else {
                Horizon::Fixed(1.3)
            };
            let nlp = SegmentNlp::new(
                &sys,
                ModeId(DI_DRAG),
                vec![0.1, 0.2],
                vec![0.8, -0.1],
                horizon,
                7,
                Some(vec![[-2.0, 2.0], [-2.0, 2.0]]),
                None,
            );
            let n = nlp.num_vars();
            let m = nlp.num_eq();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            let z: Vec<f64> = nlp
                .bounds()
                .iter()
                .map(|b: &[f64; 2]| {
                    let lo = b[0].max(-3.0);
                    let hi = b[1].min(3.0);
                    rng.gen_range(lo..=hi.max(lo + f64::EPSILON))
                })
                .collect();
            let w: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let mut grad = vec![0.0; n];
            nlp.gradient(&z, &mut grad);
            let mut jtw = vec![0.0; n];
            nlp.accumulate_jt(&z, &w, &mut jtw);

            let h = 1e-6;
            let mut c_hi = vec![0.0; m];
            let mut c_lo = vec![0.0; m];
            for i in 0..n {
                let mut zp = z.clone();
                zp[i] += h;
                let f_hi = nlp.objective(&zp);
                nlp.equalities(&zp, &mut c_hi);
                zp[i] -= 2.0 * h;
                let f_lo = nlp.objective(&zp);
                nlp.equalities(&zp, &mut c_lo);
                let fd_obj = (f_hi - f_lo) / (2.0 * h);
                let fd_jtw = (0..m)
                    .map(|j| w[j] * (c_hi[j] - c_lo[j]) / (2.0 * h))
                    .sum::<f64>();
                assert_abs_diff_eq!(grad[i], fd_obj, epsilon = 1e-5 * (1.0 + fd_obj.abs()));
                assert_abs_diff_eq!(jtw[i], fd_jtw, epsilon = 1e-5 * (1.0 + fd_jtw.abs()));
            }
        }
    }
}
