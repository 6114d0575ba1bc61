//! Mode-constrained roadmap: vertices are sampled states tagged with
//! their mode, intra-mode edges are priced by a cost provider, and mode
//! changes happen only across switch edges between guard twin vertices.
//!
//! Guard samples spawn a pair of twins: a from-side vertex in the source
//! mode and a to-side vertex in the target mode, joined by one directed
//! switch edge carrying the constant switch cost. Both twins inherit the
//! guard sample's coordinates (the to-side via the reset, which moves
//! shared coordinates at most `eps_guard`), so any path changes mode
//! through exactly one switch edge.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rayon::prelude::*;

use crate::error::GraphError;
use crate::hybrid::{HybridSystem, ModeId};
use crate::real::Real;
use crate::sampling::{normalized_distance, SampleSet};

/// Prices travel between two sampled-coordinate states of one mode.
/// Non-finite results mean "not connectable" and drop the edge.
pub trait EdgeCostProvider<T: Real>: Sync {
    fn edge_cost(&self, mode: ModeId, from: &[T], to: &[T]) -> T;
}

#[derive(Debug, Clone, PartialEq)]
pub enum VertexKind<T> {
    Interior,
    /// One side of a guard crossing; `twin` is the opposite side's
    /// vertex id and `params` the guard chart parameters of the sample.
    GuardSide {
        guard: usize,
        twin: usize,
        params: Vec<T>,
    },
}

#[derive(Debug, Clone)]
pub struct PlanVertex<T> {
    pub mode: ModeId,
    pub coords: Vec<T>,
    pub kind: VertexKind<T>,
}

#[derive(Debug, Clone)]
pub struct PlanEdge<T> {
    pub from: usize,
    pub to: usize,
    pub weight: T,
    /// True for guard-crossing edges between twins.
    pub switch: bool,
}

#[derive(Debug, Clone)]
pub struct PlanGraph<T> {
    pub vertices: Vec<PlanVertex<T>>,
    pub edges: Vec<PlanEdge<T>>,
    /// Outgoing edge ids per vertex.
    pub out: Vec<Vec<usize>>,
    /// Candidate edges discarded for non-finite weight.
    pub dropped: usize,
}

impl<T> Default for PlanGraph<T> {
    fn default() -> Self {
        PlanGraph {
            vertices: Vec::new(),
            edges: Vec::new(),
            out: Vec::new(),
            dropped: 0,
        }
    }
}

impl<T: Real> PlanGraph<T> {
    fn push_vertex(&mut self, v: PlanVertex<T>) -> usize {
        self.vertices.push(v);
        self.out.push(Vec::new());
        self.vertices.len() - 1
    }

    fn push_edge(&mut self, e: PlanEdge<T>) {
        self.out[e.from].push(self.edges.len());
        self.edges.push(e);
    }
}

/// `k` nearest same-mode vertices to `coords` (excluding `skip`), by
/// normalized distance with deterministic (distance, id) tie-breaking.
fn k_nearest<T: Real>(
    sys: &HybridSystem<T>,
    vertices: &[PlanVertex<T>],
    ids: &[usize],
    mode: ModeId,
    coords: &[T],
    skip: Option<usize>,
    k: usize,
) -> Vec<usize> {
    let m = sys.mode(mode);
    let bounds = m.sampled_bounds();
    let angular = m.sampled_angular_dims();
    let mut scored: Vec<(T, usize)> = ids
        .iter()
        .filter(|&&id| Some(id) != skip)
        .map(|&id| {
            (
                normalized_distance(coords, &vertices[id].coords, &bounds, &angular),
                id,
            )
        })
        .collect();
    scored.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    scored.into_iter().take(k).map(|(_, id)| id).collect()
}

/// Build the roadmap from per-mode domain samples and per-guard surface
/// samples. Each vertex gets directed edges to and from its `k_conn`
/// nearest same-mode neighbors, priced independently per direction.
pub fn build_graph<T: Real>(
    sys: &HybridSystem<T>,
    domain_samples: &[(ModeId, SampleSet<T>)],
    guard_samples: &[(usize, SampleSet<T>)],
    provider: &dyn EdgeCostProvider<T>,
    k_conn: usize,
) -> PlanGraph<T> {
    let mut g = PlanGraph::default();

    for (mode, set) in domain_samples {
        for coords in &set.coords {
            g.push_vertex(PlanVertex {
                mode: *mode,
                coords: coords.clone(),
                kind: VertexKind::Interior,
            });
        }
    }

    // twin pairs per guard sample, joined by one switch edge
    let mut switch_edges = Vec::new();
    for (guard_idx, set) in guard_samples {
        let guard = &sys.guards[*guard_idx];
        let from_mode = sys.mode(guard.from);
        let to_mode = sys.mode(guard.to);
        for q in &set.coords {
            let mut from_coords = vec![T::zero(); guard.chart.out_dim()];
            guard.chart.point(q, &mut from_coords);
            let full = from_mode.vc.lift(&from_coords);
            let mut landed = vec![T::zero(); guard.reset.out_dim()];
            guard.reset.apply(&full, &mut landed);
            let to_coords = to_mode.vc.project(&landed);

            let a = g.push_vertex(PlanVertex {
                mode: guard.from,
                coords: from_coords,
                kind: VertexKind::GuardSide {
                    guard: *guard_idx,
                    twin: 0, // patched below once `b` exists
                    params: q.clone(),
                },
            });
            let b = g.push_vertex(PlanVertex {
                mode: guard.to,
                coords: to_coords,
                kind: VertexKind::GuardSide {
                    guard: *guard_idx,
                    twin: a,
                    params: q.clone(),
                },
            });
            if let VertexKind::GuardSide { twin, .. } = &mut g.vertices[a].kind {
                *twin = b;
            }
            switch_edges.push((a, b, guard.switch_cost));
        }
    }

    // same-mode k-nearest candidate pairs, connected both directions
    let mut by_mode: Vec<Vec<usize>> = vec![Vec::new(); sys.modes.len()];
    for (id, v) in g.vertices.iter().enumerate() {
        by_mode[v.mode.0].push(id);
    }
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for (mode_idx, ids) in by_mode.iter().enumerate() {
        let mode = ModeId(mode_idx);
        for &id in ids {
            for nb in k_nearest(
                sys,
                &g.vertices,
                ids,
                mode,
                &g.vertices[id].coords,
                Some(id),
                k_conn,
            ) {
                pairs.insert((id, nb));
                pairs.insert((nb, id));
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    pairs.sort_unstable();

    let weights: Vec<T> = pairs
        .par_iter()
        .map(|&(a, b)| {
            provider.edge_cost(
                g.vertices[a].mode,
                &g.vertices[a].coords,
                &g.vertices[b].coords,
            )
        })
        .collect();
    for (&(a, b), &w) in pairs.iter().zip(&weights) {
        if w.is_finite() {
            g.push_edge(PlanEdge {
                from: a,
                to: b,
                weight: w,
                switch: false,
            });
        } else {
            g.dropped += 1;
        }
    }

    for (a, b, w) in switch_edges {
        g.push_edge(PlanEdge {
            from: a,
            to: b,
            weight: w,
            switch: true,
        });
    }
    g
}

struct HeapItem<T> {
    cost: T,
    vertex: usize,
}

impl<T: Real> PartialEq for HeapItem<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.vertex == other.vertex
    }
}
impl<T: Real> Eq for HeapItem<T> {}

impl<T: Real> Ord for HeapItem<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap; ties broken on vertex id for
        // deterministic expansion order
        other
            .cost
            .partial_cmp(&self.cost)
            .expect("finite costs")
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}
impl<T: Real> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct GraphPath<T> {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub cost: T,
}

/// Non-negative-weight shortest path.
pub fn dijkstra<T: Real>(
    g: &PlanGraph<T>,
    start: usize,
    goal: usize,
) -> Result<GraphPath<T>, GraphError> {
    let n = g.vertices.len();
    if start >= n {
        return Err(GraphError::BadVertex(start));
    }
    if goal >= n {
        return Err(GraphError::BadVertex(goal));
    }
    let mut dist = vec![T::infinity(); n];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n]; // (vertex, edge)
    let mut heap = BinaryHeap::new();
    dist[start] = T::zero();
    heap.push(HeapItem {
        cost: T::zero(),
        vertex: start,
    });
    while let Some(HeapItem { cost, vertex }) = heap.pop() {
        if cost > dist[vertex] {
            continue;
        }
        if vertex == goal {
            break;
        }
        for &eid in &g.out[vertex] {
            let e = &g.edges[eid];
            let next = cost + e.weight;
            if next < dist[e.to] {
                dist[e.to] = next;
                prev[e.to] = Some((vertex, eid));
                heap.push(HeapItem {
                    cost: next,
                    vertex: e.to,
                });
            }
        }
    }
    if !dist[goal].is_finite() {
        return Err(GraphError::NoPath);
    }
    let mut vertices = vec![goal];
    let mut edges = Vec::new();
    let mut cur = goal;
    while let Some((v, e)) = prev[cur] {
        vertices.push(v);
        edges.push(e);
        cur = v;
    }
    vertices.reverse();
    edges.reverse();
    Ok(GraphPath {
        vertices,
        edges,
        cost: dist[goal],
    })
}

/// Contiguous single-mode stretch of a path.
#[derive(Debug, Clone)]
pub struct Leg {
    pub mode: ModeId,
    /// Vertex ids, in path order; at least one.
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Crossing {
    pub guard: usize,
    pub from_vertex: usize,
    pub to_vertex: usize,
}

#[derive(Debug, Clone)]
pub struct ModePartition {
    pub legs: Vec<Leg>,
    pub crossings: Vec<Crossing>,
}

/// Split a path at its switch edges. Every mode change must happen
/// across a switch edge between guard twins; anything else indicates a
/// malformed graph.
pub fn partition_path<T: Real>(g: &PlanGraph<T>, path: &GraphPath<T>) -> ModePartition {
    let mut legs: Vec<Leg> = Vec::new();
    let mut crossings = Vec::new();
    let first = path.vertices[0];
    legs.push(Leg {
        mode: g.vertices[first].mode,
        vertices: vec![first],
    });
    for (i, &eid) in path.edges.iter().enumerate() {
        let e = &g.edges[eid];
        let to_v = path.vertices[i + 1];
        debug_assert_eq!(e.to, to_v);
        if e.switch {
            let guard = match &g.vertices[e.from].kind {
                VertexKind::GuardSide { guard, .. } => *guard,
                VertexKind::Interior => unreachable!("switch edge from interior vertex"),
            };
            crossings.push(Crossing {
                guard,
                from_vertex: e.from,
                to_vertex: to_v,
            });
            legs.push(Leg {
                mode: g.vertices[to_v].mode,
                vertices: vec![to_v],
            });
        } else {
            debug_assert_eq!(
                g.vertices[e.from].mode,
                g.vertices[to_v].mode,
                "non-switch edge changed mode"
            );
            legs.last_mut().expect("legs non-empty").vertices.push(to_v);
        }
    }
    ModePartition { legs, crossings }
}

/// Graph-level plan: the searched path split into mode legs.
#[derive(Debug, Clone)]
pub struct GraphPlan<T> {
    /// The augmented graph including start/goal attachment.
    pub graph: PlanGraph<T>,
    pub path: GraphPath<T>,
    pub partition: ModePartition,
    pub cost: T,
    pub start: Vec<T>,
    pub goal: Vec<T>,
}

impl<T: Real> GraphPlan<T> {
    pub fn mode_sequence(&self) -> Vec<ModeId> {
        self.partition.legs.iter().map(|l| l.mode).collect()
    }
}

/// Attach full start/goal states to a roadmap (with exact attachment
/// costs from `attach`) and search it.
pub fn plan<T: Real>(
    sys: &HybridSystem<T>,
    roadmap: &PlanGraph<T>,
    start: &[T],
    goal: &[T],
    attach: &dyn EdgeCostProvider<T>,
    k_conn: usize,
) -> Result<GraphPlan<T>, GraphError> {
    let start_mode = sys.mode_of(start).map_err(GraphError::Attach)?;
    let goal_mode = sys.mode_of(goal).map_err(GraphError::Attach)?;
    let start_coords = sys.mode(start_mode).vc.project(start);
    let goal_coords = sys.mode(goal_mode).vc.project(goal);

    let mut g = roadmap.clone();
    let s = g.push_vertex(PlanVertex {
        mode: start_mode,
        coords: start_coords.clone(),
        kind: VertexKind::Interior,
    });
    let t = g.push_vertex(PlanVertex {
        mode: goal_mode,
        coords: goal_coords.clone(),
        kind: VertexKind::Interior,
    });

    let ids_of = |g: &PlanGraph<T>, mode: ModeId| -> Vec<usize> {
        g.vertices
            .iter()
            .enumerate()
            .filter(|(id, v)| v.mode == mode && *id != s && *id != t)
            .map(|(id, _)| id)
            .collect()
    };

    let mut attach_list: Vec<(usize, usize)> = Vec::new();
    for nb in k_nearest(
        sys,
        &g.vertices,
        &ids_of(&g, start_mode),
        start_mode,
        &start_coords,
        None,
        k_conn,
    ) {
        attach_list.push((s, nb));
    }
    for nb in k_nearest(
        sys,
        &g.vertices,
        &ids_of(&g, goal_mode),
        goal_mode,
        &goal_coords,
        None,
        k_conn,
    ) {
        attach_list.push((nb, t));
    }
    if start_mode == goal_mode {
        attach_list.push((s, t));
    }
    let weights: Vec<T> = attach_list
        .par_iter()
        .map(|&(a, b)| {
            attach.edge_cost(
                g.vertices[a].mode,
                &g.vertices[a].coords,
                &g.vertices[b].coords,
            )
        })
        .collect();
    for (&(a, b), &w) in attach_list.iter().zip(&weights) {
        if w.is_finite() {
            g.push_edge(PlanEdge {
                from: a,
                to: b,
                weight: w,
                switch: false,
            });
        } else {
            g.dropped += 1;
        }
    }

    let path = dijkstra(&g, s, t)?;
    let partition = partition_path(&g, &path);
    let cost = path.cost;
    Ok(GraphPlan {
        graph: g,
        path,
        partition,
        cost,
        start: start.to_vec(),
        goal: goal.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::models::double_integrator::{double_integrator, DoubleIntegratorParams};
    use crate::sampling::{sample_guard, sample_mode, SampleSpec};
    use proptest::prelude::*;

    /// Straight-line distance stand-in for edge costs.
    struct Geometric;

    impl EdgeCostProvider<f64> for Geometric {
        fn edge_cost(&self, _mode: ModeId, from: &[f64], to: &[f64]) -> f64 {
            linalg::dist(from, to)
        }
    }

    fn di_graph(seed: u64) -> (crate::System, PlanGraph<f64>) {
        let sys = double_integrator(&DoubleIntegratorParams::default());
        let domain: Vec<_> = (0..2)
            .map(|m| {
                (
                    ModeId(m),
                    sample_mode(&sys, ModeId(m), &SampleSpec::new(0.18, seed + m as u64)).unwrap(),
                )
            })
            .collect();
        let guards: Vec<_> = (0..2)
            .map(|gi| {
                (
                    gi,
                    sample_guard(&sys, gi, &SampleSpec::new(0.25, seed + 10 + gi as u64)).unwrap(),
                )
            })
            .collect();
        let g = build_graph(&sys, &domain, &guards, &Geometric, 6);
        (sys, g)
    }

    #[test]
    fn twins_share_coordinates_and_one_switch_edge() {
        let (sys, g) = di_graph(1);
        let mut switch_count = 0;
        for e in &g.edges {
            if !e.switch {
                assert_eq!(g.vertices[e.from].mode, g.vertices[e.to].mode);
                continue;
            }
            switch_count += 1;
            let (a, b) = (&g.vertices[e.from], &g.vertices[e.to]);
            assert_ne!(a.mode, b.mode);
            match (&a.kind, &b.kind) {
                (
                    VertexKind::GuardSide { twin: ta, params: pa, .. },
                    VertexKind::GuardSide { twin: tb, params: pb, .. },
                ) => {
                    assert_eq!(pa, pb);
                    assert_eq!(g.vertices[*ta].coords.len(), b.coords.len());
                    assert_eq!(*tb, e.from);
                }
                _ => panic!("switch edge between non-twin vertices"),
            }
            // shared coordinates agree to within the guard tolerance
            for (x, y) in a.coords.iter().zip(&b.coords) {
                assert!((x - y).abs() <= sys.eps_guard, "twin coords differ");
            }
        }
        assert!(switch_count > 0, "no guard crossings in the graph");
    }

    #[test]
    fn every_mode_change_crosses_exactly_one_switch_edge() {
        let (_sys, g) = di_graph(2);
        // search several vertex pairs across the two modes
        let free: Vec<usize> = (0..g.vertices.len())
            .filter(|&i| g.vertices[i].mode == ModeId(0))
            .collect();
        let drag: Vec<usize> = (0..g.vertices.len())
            .filter(|&i| g.vertices[i].mode == ModeId(1))
            .collect();
        let mut checked = 0;
        for (&a, &b) in free.iter().take(4).zip(drag.iter().take(4)) {
            let Ok(path) = dijkstra(&g, a, b) else {
                continue;
            };
            let part = partition_path(&g, &path);
            assert_eq!(part.legs.len(), part.crossings.len() + 1);
            let switches = path.edges.iter().filter(|&&e| g.edges[e].switch).count();
            assert_eq!(switches, part.crossings.len());
            checked += 1;
        }
        assert!(checked > 0, "no cross-mode path found to check");
    }

    #[test]
    fn equal_cost_ties_break_toward_lower_vertex_ids() {
        // diamond: 0 -> {1, 2} -> 3 with identical weights
        let mut g = PlanGraph::default();
        for _ in 0..4 {
            g.push_vertex(PlanVertex {
                mode: ModeId(0),
                coords: vec![0.0],
                kind: VertexKind::Interior,
            });
        }
        for (a, b) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            g.push_edge(PlanEdge {
                from: a,
                to: b,
                weight: 1.0,
                switch: false,
            });
        }
        let p = dijkstra(&g, 0, 3).unwrap();
        assert_eq!(p.cost, 2.0);
        assert_eq!(p.vertices, vec![0, 1, 3]);
    }

    #[test]
    fn unreachable_goal_reports_no_path() {
        let mut g = PlanGraph::default();
        for _ in 0..2 {
            g.push_vertex(PlanVertex {
                mode: ModeId(0),
                coords: vec![0.0],
                kind: VertexKind::Interior,
            });
        }
        assert!(matches!(dijkstra(&g, 0, 1), Err(GraphError::NoPath)));
    }

    /// Exhaustive simple-path enumeration for the shortest-path oracle.
    fn brute_force(g: &PlanGraph<f64>, start: usize, goal: usize) -> Option<f64> {
        fn rec(
            g: &PlanGraph<f64>,
            cur: usize,
            goal: usize,
            seen: &mut Vec<bool>,
            acc: f64,
            best: &mut Option<f64>,
        ) {
            if cur == goal {
                *best = Some(best.map_or(acc, |b: f64| b.min(acc)));
                return;
            }
            for &eid in &g.out[cur] {
                let e = &g.edges[eid];
                if !seen[e.to] {
                    seen[e.to] = true;
                    rec(g, e.to, goal, seen, acc + e.weight, best);
                    seen[e.to] = false;
                }
            }
        }
        let mut seen = vec![false; g.vertices.len()];
        seen[start] = true;
        let mut best = None;
        rec(g, start, goal, &mut seen, 0.0, &mut best);
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dijkstra_matches_exhaustive_enumeration(
            n in 2usize..8,
            edges in prop::collection::vec((0usize..8, 0usize..8, 0.0f64..10.0), 0..24),
        ) {
            let mut g = PlanGraph::default();
            for _ in 0..n {
                g.push_vertex(PlanVertex {
                    mode: ModeId(0),
                    coords: vec![0.0],
                    kind: VertexKind::Interior,
                });
            }
            for (a, b, w) in edges {
                let (a, b) = (a % n, b % n);
                if a != b {
                    g.push_edge(PlanEdge { from: a, to: b, weight: w, switch: false });
                }
            }
            let goal = n - 1;
            match (dijkstra(&g, 0, goal), brute_force(&g, 0, goal)) {
                (Ok(p), Some(b)) => prop_assert!((p.cost - b).abs() <= 1e-9 * (1.0 + b)),
                (Err(GraphError::NoPath), None) => {}
                (got, want) => prop_assert!(false, "mismatch: {got:?} vs {want:?}"),
            }
        }
    }
}
