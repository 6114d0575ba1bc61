//! Turning a roadmap plan into a smooth multi-phase trajectory.
//!
//! A graph plan fixes the mode sequence and rough geometry; the final
//! trajectory should not be tied to the sampled vertices. This module
//! rebuilds the plan as a multi-phase problem — one phase per mode leg,
//! one free crossing per switch — seeded at the crossings the search
//! chose, and hands it to the multi-phase solver. Because each crossing
//! starts from the searched guard point and is then optimized along its
//! chart, the smoothed trajectory can only improve on re-solving the
//! same sequence pinned at the sampled crossings.

use crate::error::SolveError;
use crate::graph::{GraphPlan, VertexKind};
use crate::hybrid::HybridSystem;
use crate::real::Real;
use crate::trajopt::multiphase::{
    solve_multiphase, CrossingKind, CrossingSpec, MultiPhaseProblem, MultiPhaseSolution,
    PhaseSpec,
};
use crate::trajopt::{nominal_duration, Horizon, SolverSettings};

/// Controls for rebuilding a graph plan as a multi-phase problem.
#[derive(Debug, Clone)]
pub struct SmoothSettings<T> {
    pub solver: SolverSettings<T>,
    /// Collocation nodes for a one-edge leg.
    pub base_nodes: usize,
    /// Extra nodes per additional edge in a leg.
    pub nodes_per_edge: usize,
    /// Ceiling on nodes per phase, whatever the leg length.
    pub max_nodes: usize,
}

impl<T: Real> Default for SmoothSettings<T> {
    fn default() -> Self {
        SmoothSettings {
            solver: SolverSettings::default(),
            base_nodes: 40,
            nodes_per_edge: 15,
            max_nodes: 120,
        }
    }
}

/// Rebuild a graph plan as a multi-phase problem: one phase per mode
/// leg, one free crossing per switch edge.
///
/// Each phase's free-time window is `[0.2, 5]` times the summed nominal
/// durations of its leg's edges, and its node count grows with the leg
/// length up to `max_nodes`. Crossings start from the guard parameters
/// of the vertex the search crossed at.
pub fn plan_to_problem<T: Real>(
    sys: &HybridSystem<T>,
    plan: &GraphPlan<T>,
    settings: &SmoothSettings<T>,
) -> MultiPhaseProblem<T> {
    let mut phases = Vec::with_capacity(plan.partition.legs.len());
    for leg in &plan.partition.legs {
        let m = sys.mode(leg.mode);
        let lifted: Vec<Vec<T>> = leg
            .vertices
            .iter()
            .map(|&v| m.vc.lift(&plan.graph.vertices[v].coords))
            .collect();
        let mut t_leg = T::zero();
        for pair in lifted.windows(2) {
            t_leg = t_leg + nominal_duration(sys, leg.mode, &pair[0], &pair[1]);
        }
        // A one-vertex leg (land on a guard, cross straight back out)
        // still needs a positive window; the self-pair duration is the
        // per-mode floor.
        if lifted.len() < 2 {
            t_leg = nominal_duration(sys, leg.mode, &lifted[0], &lifted[0]);
        }
        let edges = leg.vertices.len().saturating_sub(1);
        let n_nodes = (settings.base_nodes + settings.nodes_per_edge * edges.saturating_sub(1))
            .min(settings.max_nodes);
        phases.push(PhaseSpec {
            mode: leg.mode,
            n_nodes,
            horizon: Horizon::Free {
                min: T::of(0.2) * t_leg,
                max: T::of(5.0) * t_leg,
            },
        });
    }

    let crossings = plan
        .partition
        .crossings
        .iter()
        .map(|c| {
            match &plan.graph.vertices[c.from_vertex].kind {
                VertexKind::GuardSide { params, .. } => CrossingSpec {
                    guard: c.guard,
                    kind: CrossingKind::Free {
                        q_init: params.clone(),
                    },
                },
                // Partitioning guarantees switch edges leave from guard
                // vertices; keep a sane fallback anyway.
                VertexKind::Interior => CrossingSpec::free_neutral(sys, c.guard),
            }
        })
        .collect();

    MultiPhaseProblem {
        phases,
        crossings,
        start: plan.start.clone(),
        goal: plan.goal.clone(),
    }
}

/// Smooth a graph plan into one dynamically consistent multi-phase
/// trajectory with optimized switching states and per-phase durations.
pub fn smooth_plan<T: Real>(
    sys: &HybridSystem<T>,
    plan: &GraphPlan<T>,
    settings: &SmoothSettings<T>,
) -> Result<MultiPhaseSolution<T>, SolveError> {
    let prob = plan_to_problem(sys, plan, settings);
    solve_multiphase(sys, &prob, &settings.solver)
}
