//! Multi-phase trajectory optimization through a fixed mode sequence.
//!
//! A problem is a chain of single-mode phases separated by guard
//! crossings. Pinning every crossing (fixing each guard point)
//! decouples the chain into independent single-segment solves. Free
//! crossings are handled by a nested scheme: the guard-chart parameters
//! are optimized by a quadratic-fit coordinate search whose objective is
//! the total cost of the pinned chain at those parameters. Each inner
//! evaluation is a set of decoupled segment solves, which keeps every
//! subproblem in the regime where the collocation solver is reliable,
//! and the search is monotone, so freeing a crossing can only improve on
//! its initial pinning. Crossing points stay exactly on the guard
//! surface because they are only ever produced through the chart.

use std::collections::HashMap;

use crate::error::SolveError;
use crate::hybrid::{HybridSystem, ModeId, ParamSpec};
use crate::real::Real;
use crate::trajopt::{
    solve_segment, Horizon, SegmentProblem, SolverSettings, TrajectorySegment,
};

#[derive(Debug, Clone)]
pub struct PhaseSpec<T> {
    pub mode: ModeId,
    pub n_nodes: usize,
    pub horizon: Horizon<T>,
}

#[derive(Debug, Clone)]
pub enum CrossingKind<T> {
    /// Fixed from-side sampled coordinates on the guard surface.
    Pinned { coords: Vec<T> },
    /// Guard chart parameters are optimized, starting from `q_init`.
    /// Only `Range` parameters move; `Fixed` and `Grid` parameters stay
    /// at their pinned values.
    Free { q_init: Vec<T> },
}

#[derive(Debug, Clone)]
pub struct CrossingSpec<T> {
    pub guard: usize,
    pub kind: CrossingKind<T>,
}

impl<T: Real> CrossingSpec<T> {
    /// Free crossing started from the chart's neutral parameters: fixed
    /// values as given, ranges at their midpoint, grids at their middle
    /// entry. The standard baseline when nothing better is known.
    pub fn free_neutral(sys: &HybridSystem<T>, guard: usize) -> Self {
        let q_init = sys.guards[guard]
            .chart
            .params()
            .iter()
            .map(|p| match p {
                ParamSpec::Fixed(v) => *v,
                ParamSpec::Range([lo, hi]) => (*lo + *hi) / T::of(2.0),
                ParamSpec::Grid(vs) => vs[vs.len() / 2],
            })
            .collect();
        CrossingSpec {
            guard,
            kind: CrossingKind::Free { q_init },
        }
    }
}

/// Phase chain with `crossings.len() == phases.len() - 1`.
#[derive(Debug, Clone)]
pub struct MultiPhaseProblem<T> {
    pub phases: Vec<PhaseSpec<T>>,
    pub crossings: Vec<CrossingSpec<T>>,
    /// Full start state in the first phase's mode.
    pub start: Vec<T>,
    /// Full goal state in the last phase's mode.
    pub goal: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct MultiPhaseSolution<T> {
    /// One segment per phase; times accumulate across phases.
    pub segments: Vec<TrajectorySegment<T>>,
    /// Running cost plus switch costs.
    pub cost: T,
    pub switch_cost: T,
    pub converged: bool,
    /// `(from-side state, landed state)` at each crossing.
    pub crossing_states: Vec<(Vec<T>, Vec<T>)>,
}

/// Full from-side and landed states for a guard point given by from-side
/// sampled coordinates.
pub fn crossing_states<T: Real>(
    sys: &HybridSystem<T>,
    guard: usize,
    coords: &[T],
) -> (Vec<T>, Vec<T>) {
    let g = &sys.guards[guard];
    let from_full = sys.mode(g.from).vc.lift(coords);
    let mut to_full = vec![T::zero(); g.reset.out_dim()];
    g.reset.apply(&from_full, &mut to_full);
    (from_full, to_full)
}

/// One free chart parameter in the coordinate search.
struct FreeCoord<T> {
    crossing: usize,
    param: usize,
    lo: T,
    hi: T,
}

/// Phase solves are memoized on their exact boundary states so that
/// probing one crossing never re-solves untouched phases.
struct ChainSolver<'a, T: Real> {
    sys: &'a HybridSystem<T>,
    prob: &'a MultiPhaseProblem<T>,
    settings: &'a SolverSettings<T>,
    cache: HashMap<(usize, Vec<u64>, Vec<u64>), Result<TrajectorySegment<T>, SolveError>>,
}

fn state_key<T: Real>(x: &[T]) -> Vec<u64> {
    x.iter().map(|v| v.to_f64_lossy().to_bits()).collect()
}

impl<'a, T: Real> ChainSolver<'a, T> {
    fn solve_phase(
        &mut self,
        p: usize,
        start: &[T],
        goal: &[T],
    ) -> Result<TrajectorySegment<T>, SolveError> {
        let key = (p, state_key(start), state_key(goal));
        if let Some(r) = self.cache.get(&key) {
            return r.clone();
        }
        let phase = &self.prob.phases[p];
        let r = solve_segment(
            self.sys,
            &SegmentProblem {
                mode: phase.mode,
                start: start.to_vec(),
                goal: goal.to_vec(),
                horizon: phase.horizon,
                n_nodes: phase.n_nodes,
                state_bounds: None,
                input_bounds: None,
            },
            self.settings,
        );
        self.cache.insert(key, r.clone());
        r
    }

    /// Solve every phase of the pinned chain given per-crossing from-side
    /// sampled coordinates. Returns the segments in order.
    fn solve_chain(
        &mut self,
        coords: &[Vec<T>],
    ) -> Result<Vec<TrajectorySegment<T>>, SolveError> {
        let mut segments = Vec::with_capacity(self.prob.phases.len());
        let mut start = self.prob.start.clone();
        for p in 0..self.prob.phases.len() {
            let (goal, next_start) = if p == self.prob.phases.len() - 1 {
                (self.prob.goal.clone(), Vec::new())
            } else {
                let (from_full, to_full) =
                    crossing_states(self.sys, self.prob.crossings[p].guard, &coords[p]);
                (from_full, to_full)
            };
            segments.push(self.solve_phase(p, &start, &goal)?);
            start = next_start;
        }
        Ok(segments)
    }

    /// Total running cost of a chain; `None` unless every phase converged.
    fn chain_cost(&mut self, coords: &[Vec<T>]) -> Option<T> {
        let segments = self.solve_chain(coords).ok()?;
        if segments.iter().all(|s| s.converged) {
            Some(segments.iter().map(|s| s.cost).sum())
        } else {
            None
        }
    }
}

/// Assemble the solution struct from per-phase segments solved at the
/// given crossing coordinates: offset times, add switch costs, record
/// crossing states.
fn assemble<T: Real>(
    sys: &HybridSystem<T>,
    prob: &MultiPhaseProblem<T>,
    mut segments: Vec<TrajectorySegment<T>>,
    coords: &[Vec<T>],
) -> MultiPhaseSolution<T> {
    let mut offset = T::zero();
    let mut total = T::zero();
    let mut converged = true;
    for seg in &mut segments {
        for t in &mut seg.times {
            *t = *t + offset;
        }
        offset = *seg.times.last().expect("segment has nodes");
        total = total + seg.cost;
        converged &= seg.converged;
    }
    let mut switch_cost = T::zero();
    let mut crossings = Vec::with_capacity(prob.crossings.len());
    for (c, spec) in prob.crossings.iter().enumerate() {
        switch_cost = switch_cost + sys.guards[spec.guard].switch_cost;
        crossings.push(crossing_states(sys, spec.guard, &coords[c]));
    }
    MultiPhaseSolution {
        segments,
        cost: total + switch_cost,
        switch_cost,
        converged,
        crossing_states: crossings,
    }
}

/// Solve a multi-phase problem. Pinned crossings decouple the chain into
/// independent segment solves; free crossings wrap those solves in a
/// monotone coordinate search over the guard-chart parameters.
pub fn solve_multiphase<T: Real>(
    sys: &HybridSystem<T>,
    prob: &MultiPhaseProblem<T>,
    settings: &SolverSettings<T>,
) -> Result<MultiPhaseSolution<T>, SolveError> {
    assert_eq!(
        prob.crossings.len() + 1,
        prob.phases.len(),
        "need exactly one crossing between consecutive phases"
    );

    // per-crossing chart parameters: pinned coords pass through the
    // chart's own parametrization only when free, so build a parameter
    // vector per crossing and track which entries may move
    let mut params: Vec<Vec<T>> = Vec::new();
    let mut free: Vec<FreeCoord<T>> = Vec::new();
    for (c, spec) in prob.crossings.iter().enumerate() {
        let chart = &*sys.guards[spec.guard].chart;
        match &spec.kind {
            CrossingKind::Pinned { .. } => params.push(Vec::new()),
            CrossingKind::Free { q_init } => {
                assert_eq!(q_init.len(), chart.param_dim(), "chart parameter count");
                let mut q = q_init.clone();
                for (j, p) in chart.params().iter().enumerate() {
                    match p {
                        ParamSpec::Fixed(v) => q[j] = *v,
                        ParamSpec::Range(b) => {
                            q[j] = q[j].max(b[0]).min(b[1]);
                            free.push(FreeCoord {
                                crossing: c,
                                param: j,
                                lo: b[0],
                                hi: b[1],
                            });
                        }
                        // grids cannot move continuously: snap to nearest
                        ParamSpec::Grid(vals) => {
                            q[j] = vals
                                .iter()
                                .copied()
                                .min_by(|a, b| {
                                    let da = (*a - q[j]).abs();
                                    let db = (*b - q[j]).abs();
                                    da.partial_cmp(&db).expect("finite grid values")
                                })
                                .expect("non-empty grid");
                        }
                    }
                }
                params.push(q);
            }
        }
    }

    let coords_at = |params: &[Vec<T>]| -> Vec<Vec<T>> {
        prob.crossings
            .iter()
            .zip(params)
            .map(|(spec, q)| match &spec.kind {
                CrossingKind::Pinned { coords } => coords.clone(),
                CrossingKind::Free { .. } => {
                    let chart = &*sys.guards[spec.guard].chart;
                    let mut out = vec![T::zero(); chart.out_dim()];
                    chart.point(q, &mut out);
                    out
                }
            })
            .collect()
    };

    let mut solver = ChainSolver {
        sys,
        prob,
        settings,
        cache: HashMap::new(),
    };

    let mut best_params = params;
    let mut best_coords = coords_at(&best_params);
    // the search only ever accepts converged chains, so a non-converged
    // or infeasible start is returned as-is (the caller sees the honest
    // converged flag or the solve error)
    let start_segments = solver.solve_chain(&best_coords)?;
    if free.is_empty() || !start_segments.iter().all(|s| s.converged) {
        return Ok(assemble(sys, prob, start_segments, &best_coords));
    }
    let mut best_cost: T = start_segments.iter().map(|s| s.cost).sum();

    // quadratic-fit coordinate descent with a shrinking probe radius
    let max_sweeps = 8;
    for sweep in 0..max_sweeps {
        let mut improved = false;
        for fc in &free {
            let width = fc.hi - fc.lo;
            if !(width > T::zero()) {
                continue;
            }
            let delta = width * T::of(0.2) * T::of(0.5).powi(sweep);
            let q0 = best_params[fc.crossing][fc.param];
            let mut candidates: Vec<(T, T)> = Vec::new(); // (q value, chain cost)
            for q in [(q0 - delta).max(fc.lo), (q0 + delta).min(fc.hi)] {
                if q == q0 {
                    continue;
                }
                let mut trial = best_params.clone();
                trial[fc.crossing][fc.param] = q;
                if let Some(j) = solver.chain_cost(&coords_at(&trial)) {
                    candidates.push((q, j));
                }
            }
            // parabola through (q0, best) and both probes, when available
            if let [(ql, jl), (qr, jr)] = candidates[..] {
                let (x1, x2, x3) = (ql, q0, qr);
                let (y1, y2, y3) = (jl, best_cost, jr);
                let d21 = (y2 - y1) / (x2 - x1);
                let d32 = (y3 - y2) / (x3 - x2);
                let curv = (d32 - d21) / (x3 - x1);
                if curv > T::zero() {
                    let vx = (x1 + x2) / T::of(2.0) - d21 / (T::of(2.0) * curv);
                    let vx = vx.max(fc.lo).min(fc.hi);
                    if vx != q0 && candidates.iter().all(|&(q, _)| q != vx) {
                        let mut trial = best_params.clone();
                        trial[fc.crossing][fc.param] = vx;
                        if let Some(j) = solver.chain_cost(&coords_at(&trial)) {
                            candidates.push((vx, j));
                        }
                    }
                }
            }
            if let Some(&(q, j)) = candidates
                .iter()
                .filter(|&&(_, j)| j < best_cost)
                .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite costs"))
            {
                best_params[fc.crossing][fc.param] = q;
                best_cost = j;
                improved = true;
            }
        }
        if !improved && sweep >= 2 {
            break;
        }
    }

    best_coords = coords_at(&best_params);
    let segments = solver.solve_chain(&best_coords)?;
    Ok(assemble(sys, prob, segments, &best_coords))
}
