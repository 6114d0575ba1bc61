//! Hybrid locomotion system description.
//!
//! A system is a set of modes, each with control-affine dynamics
//! `xdot = f(x) + g(x) u`, a domain (bounding box plus membership
//! predicate), an input box, and a running/terminal cost. Directed guards
//! connect modes: each guard carries a parametrized chart of switching
//! states, a reset map into the target mode, and a constant switch cost.
//!
//! Mode state spaces may have different dimensions (e.g. a surface vehicle
//! gaining motor-speed states when entering water), so everything is
//! dimension-checked at the boundaries rather than typed by dimension.

pub mod charts;
pub mod region;

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::HybridError;
use crate::linalg;
use crate::real::Real;

/// Index of a mode within its [`HybridSystem`].
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    serde::Serialize,
    serde::Deserialize,
)]
pub struct ModeId(pub usize);

impl std::fmt::Display for ModeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "mode#{}", self.0)
    }
}

/// Control-affine vector field `xdot = f(x) + g(x) u`.
pub trait ModeDynamics<T: Real>: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;

    /// Drift term `f(x)`.
    fn drift(&self, x: &[T], out: &mut [T]);

    /// Input matrix `g(x)`, row-major `state_dim x input_dim`.
    fn input_matrix(&self, x: &[T], out: &mut [T]);

    /// `d xdot / d x` at `(x, u)`, row-major `state_dim x state_dim`.
    fn jac_state(&self, x: &[T], u: &[T], out: &mut [T]);

    fn derivative(&self, x: &[T], u: &[T], out: &mut [T]) {
        let n = self.state_dim();
        let m = self.input_dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(u.len(), m);
        self.drift(x, out);
        let mut g = vec![T::zero(); n * m];
        self.input_matrix(x, &mut g);
        for r in 0..n {
            out[r] = out[r] + linalg::dot(&g[r * m..(r + 1) * m], u);
        }
    }

    /// `d xdot / d u = g(x)`, row-major `state_dim x input_dim`.
    fn jac_input(&self, x: &[T], _u: &[T], out: &mut [T]) {
        self.input_matrix(x, out);
    }
}

/// Running cost integrand `L(x, u)` plus optional terminal cost.
pub trait RunningCost<T: Real>: Send + Sync {
    fn evaluate(&self, x: &[T], u: &[T]) -> T;
    fn grad_state(&self, x: &[T], u: &[T], out: &mut [T]);
    fn grad_input(&self, x: &[T], u: &[T], out: &mut [T]);

    fn terminal(&self, _x: &[T]) -> T {
        T::zero()
    }
    fn terminal_grad(&self, _x: &[T], out: &mut [T]) {
        out.fill(T::zero());
    }
}

/// Membership test for a mode domain.
pub trait StatePredicate<T: Real>: Send + Sync {
    fn accepts(&self, x: &[T]) -> bool;
}

/// Accept everything inside the bounding box.
#[derive(Debug, Clone)]
pub struct AcceptAll;

impl<T: Real> StatePredicate<T> for AcceptAll {
    fn accepts(&self, _x: &[T]) -> bool {
        true
    }
}

/// `n . x + b > 0` (strict) or `>= 0` (closed) over the full state vector.
/// Pair a strict and a closed half-space to split a state space so that
/// boundary states belong to exactly one side.
#[derive(Debug, Clone)]
pub struct HalfSpace<T> {
    pub normal: Vec<T>,
    pub offset: T,
    pub strict: bool,
}

impl<T: Real> StatePredicate<T> for HalfSpace<T> {
    fn accepts(&self, x: &[T]) -> bool {
        let s = linalg::dot(&self.normal, &x[..self.normal.len()]) + self.offset;
        if self.strict {
            s > T::zero()
        } else {
            s >= T::zero()
        }
    }
}

/// Planar-region membership on two designated state coordinates.
#[derive(Debug, Clone)]
pub struct PlanarRegion {
    pub region: region::Region,
    pub x_dim: usize,
    pub y_dim: usize,
}

impl<T: Real> StatePredicate<T> for PlanarRegion {
    fn accepts(&self, x: &[T]) -> bool {
        self.region.contains([x[self.x_dim], x[self.y_dim]])
    }
}

/// Relation between full states and the sampled planning coordinates.
///
/// Planning happens on a subset of state coordinates; the remaining
/// coordinates are held at constants (straight-line travel and equilibrium
/// actuator states). `lift` rebuilds a full state from sampled
/// coordinates, `project` extracts them.
#[derive(Debug, Clone)]
pub struct VirtualConstraint<T> {
    pub state_dim: usize,
    pub sampled_dims: Vec<usize>,
    /// `(full-state dim, held value)` for every non-sampled coordinate.
    pub held: Vec<(usize, T)>,
}

impl<T: Real> VirtualConstraint<T> {
    pub fn identity(state_dim: usize) -> Self {
        VirtualConstraint {
            state_dim,
            sampled_dims: (0..state_dim).collect(),
            held: Vec::new(),
        }
    }

    pub fn new(state_dim: usize, sampled_dims: Vec<usize>, held: Vec<(usize, T)>) -> Self {
        let vc = VirtualConstraint {
            state_dim,
            sampled_dims,
            held,
        };
        debug_assert!(vc.covers_all_dims(), "sampled + held must cover the state");
        vc
    }

    fn covers_all_dims(&self) -> bool {
        let mut seen = vec![false; self.state_dim];
        for &d in &self.sampled_dims {
            if d >= self.state_dim || seen[d] {
                return false;
            }
            seen[d] = true;
        }
        for &(d, _) in &self.held {
            if d >= self.state_dim || seen[d] {
                return false;
            }
            seen[d] = true;
        }
        seen.iter().all(|&s| s)
    }

    pub fn sampled_dim(&self) -> usize {
        self.sampled_dims.len()
    }

    pub fn lift(&self, coords: &[T]) -> Vec<T> {
        debug_assert_eq!(coords.len(), self.sampled_dims.len());
        let mut x = vec![T::zero(); self.state_dim];
        for (&d, &c) in self.sampled_dims.iter().zip(coords) {
            x[d] = c;
        }
        for &(d, v) in &self.held {
            x[d] = v;
        }
        x
    }

    pub fn project(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.state_dim);
        self.sampled_dims.iter().map(|&d| x[d]).collect()
    }
}

/// Planner-facing metadata about a mode's sampled coordinate space.
#[derive(Debug, Clone)]
pub struct PlanningMeta<T> {
    /// Indices into the sampled coordinates that are world position.
    pub position_dims: Vec<usize>,
    /// Indices into the sampled coordinates that are velocities.
    pub velocity_dims: Vec<usize>,
    /// Speed used to convert travel distance into a nominal duration.
    pub nominal_speed: T,
    /// Acceleration bound for the reachability pre-filter, if known.
    pub accel_limit: Option<T>,
    /// Heading rate used to convert sampled angular-coordinate changes
    /// into a nominal duration; `None` when no sampled coordinate is
    /// angular or reorientation is negligible.
    pub turn_rate: Option<T>,
}

/// Bounding box plus membership predicate for one mode's state space.
pub struct Domain<T: Real> {
    pub predicate: Arc<dyn StatePredicate<T>>,
    /// Closed bounding box, one `[lo, hi]` per state coordinate. Doubles
    /// as the sampling box.
    pub bounds: Vec<[T; 2]>,
    /// Full-state coordinates that wrap with period `2 pi`.
    pub angular_dims: Vec<usize>,
}

impl<T: Real> Domain<T> {
    pub fn state_dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn in_box(&self, x: &[T]) -> bool {
        x.len() == self.bounds.len()
            && x.iter()
                .zip(&self.bounds)
                .all(|(&v, b)| v >= b[0] && v <= b[1])
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.in_box(x) && self.predicate.accepts(x)
    }
}

pub struct Mode<T: Real> {
    pub name: String,
    pub dynamics: Arc<dyn ModeDynamics<T>>,
    pub domain: Domain<T>,
    /// Input box, one `[lo, hi]` per input channel.
    pub input_bounds: Vec<[T; 2]>,
    pub cost: Arc<dyn RunningCost<T>>,
    pub vc: VirtualConstraint<T>,
    pub planning: PlanningMeta<T>,
}

impl<T: Real> Mode<T> {
    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.dynamics.input_dim()
    }

    /// Sampling box over the sampled coordinates (domain box projected).
    pub fn sampled_bounds(&self) -> Vec<[T; 2]> {
        self.vc
            .sampled_dims
            .iter()
            .map(|&d| self.domain.bounds[d])
            .collect()
    }

    /// Which sampled coordinates are angular, as indices into the sampled
    /// coordinate vector.
    pub fn sampled_angular_dims(&self) -> Vec<usize> {
        self.vc
            .sampled_dims
            .iter()
            .enumerate()
            .filter(|(_, &d)| self.domain.angular_dims.contains(&d))
            .map(|(i, _)| i)
            .collect()
    }
}

/// How one continuous guard parameter is sampled.
#[derive(Debug, Clone)]
pub enum ParamSpec<T> {
    Fixed(T),
    Range([T; 2]),
    /// Finite set of values; every combination is enumerated.
    Grid(Vec<T>),
}

/// Parametrized chart of a guard surface, in the from-mode's sampled
/// coordinates. `point` maps a parameter vector (one entry per
/// `params()` element, including fixed and gridded ones) to sampled
/// coordinates of the from mode.
pub trait GuardChart<T: Real>: Send + Sync {
    fn param_dim(&self) -> usize;
    /// Sampled-coordinate dimension of the from mode.
    fn out_dim(&self) -> usize;
    fn params(&self) -> Vec<ParamSpec<T>>;
    fn point(&self, q: &[T], out: &mut [T]);
    /// `d point / d q`, row-major `out_dim x param_dim`.
    fn jacobian(&self, q: &[T], out: &mut [T]);
    /// Distance from sampled coordinates to the surface, in state units.
    fn distance(&self, coords: &[T]) -> T;

    /// Project sampled coordinates onto the surface. `apply_reset` snaps
    /// near-guard states (within `eps_guard`) before resetting so that
    /// crossings compose cleanly.
    fn snap(&self, _coords: &mut [T]) {}
    /// A full-state step crossing the surface transversally, for guards
    /// separating two regions of a shared state space. `None` when the
    /// two sides live in different state spaces.
    fn transversal(&self) -> Option<Vec<T>>;
}

/// State map applied when crossing a guard.
pub trait ResetFn<T: Real>: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: &[T], out: &mut [T]);
    /// `d out / d x`, row-major `out_dim x in_dim`.
    fn jacobian(&self, x: &[T], out: &mut [T]);
}

/// Identity on the leading shared coordinates, with optional constant
/// tail and offset. Covers same-dimension switches (`take == in_dim`),
/// dimension-gaining switches (append equilibrium actuator states), and
/// dimension-dropping switches (truncate). When the target domain is open
/// at the guard, `offset` carries the sub-`eps_guard` step across the
/// boundary so landings satisfy the target predicate.
pub struct SharedCoordReset<T> {
    pub in_dim: usize,
    pub take: usize,
    pub append: Vec<T>,
    /// Added to the output; empty means zero.
    pub offset: Vec<T>,
}

impl<T: Real> SharedCoordReset<T> {
    pub fn identity(dim: usize) -> Self {
        SharedCoordReset {
            in_dim: dim,
            take: dim,
            append: Vec::new(),
            offset: Vec::new(),
        }
    }
}

impl<T: Real> ResetFn<T> for SharedCoordReset<T> {
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
        if !self.offset.is_empty() {
            linalg::axpy(T::one(), &self.offset, out);
        }
    }

    fn jacobian(&self, _x: &[T], out: &mut [T]) {
        out.fill(T::zero());
        for i in 0..self.take {
            out[i * self.in_dim + i] = T::one();
        }
    }
}

/// Directed switching surface with its reset and constant switch cost.
pub struct Guard<T: Real> {
    pub from: ModeId,
    pub to: ModeId,
    pub chart: Arc<dyn GuardChart<T>>,
    pub reset: Arc<dyn ResetFn<T>>,
    pub switch_cost: T,
}

pub struct HybridSystem<T: Real> {
    pub modes: Vec<Mode<T>>,
    pub guards: Vec<Guard<T>>,
    /// Tolerance for "on the guard" checks and boundary probing.
    pub eps_guard: T,
}

impl<T: Real> HybridSystem<T> {
    pub fn mode(&self, id: ModeId) -> &Mode<T> {
        &self.modes[id.0]
    }

    pub fn mode_by_name(&self, name: &str) -> Option<ModeId> {
        self.modes.iter().position(|m| m.name == name).map(ModeId)
    }

    /// Unique mode owning `x`. Only modes whose state dimension matches
    /// are candidates; domains of equal dimension must be disjoint.
    pub fn mode_of(&self, x: &[T]) -> Result<ModeId, HybridError> {
        let mut owner = None;
        for (i, m) in self.modes.iter().enumerate() {
            if m.state_dim() == x.len() && m.domain.contains(x) {
                match owner {
                    None => owner = Some(i),
                    Some(first) => return Err(HybridError::AmbiguousMode(first, i)),
                }
            }
        }
        owner.map(ModeId).ok_or(HybridError::NoMode)
    }

    pub fn guard_between(&self, from: ModeId, to: ModeId) -> Option<usize> {
        self.guards
            .iter()
            .position(|g| g.from == from && g.to == to)
    }

    /// Apply the reset from `x`'s mode into `target`. `x` must lie within
    /// `eps_guard` (in sampled-coordinate units) of some guard surface
    /// into `target`; with several candidates (one guard per shoreline or
    /// landing patch) the nearest is taken. Returns the landed state and
    /// the switch cost.
    pub fn apply_reset(&self, x: &[T], target: ModeId) -> Result<(Vec<T>, T), HybridError> {
        let from = self.mode_of(x)?;
        let vc = &self.mode(from).vc;
        let mut coords = vc.project(x);
        let mut best: Option<(usize, T)> = None;
        for (gi, g) in self.guards.iter().enumerate() {
            if g.from != from || g.to != target {
                continue;
            }
            let dist = g.chart.distance(&coords);
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((gi, dist));
            }
        }
        let (gid, dist) = best.ok_or(HybridError::NoSuchGuard {
            from: from.0,
            to: target.0,
        })?;
        let guard = &self.guards[gid];
        if dist > self.eps_guard {
            return Err(HybridError::NotOnGuard {
                guard: gid,
                dist: dist.to_f64_lossy(),
                tol: self.eps_guard.to_f64_lossy(),
            });
        }
        // snap the sub-tolerance deviation onto the surface, keeping
        // non-sampled coordinates as they are
        guard.chart.snap(&mut coords);
        let mut snapped = x.to_vec();
        for (&d, &c) in vc.sampled_dims.iter().zip(&coords) {
            snapped[d] = c;
        }
        let mut out = vec![T::zero(); guard.reset.out_dim()];
        guard.reset.apply(&snapped, &mut out);
        if !self.mode(target).domain.contains(&out) {
            return Err(HybridError::BadLanding {
                guard: gid,
                to_mode: target.0,
            });
        }
        Ok((out, guard.switch_cost))
    }

    /// Trapezoidal quadrature of the mode's running cost over a sampled
    /// trajectory, plus the terminal cost at the last state.
    pub fn running_cost(
        &self,
        mode: ModeId,
        times: &[T],
        states: &[Vec<T>],
        inputs: &[Vec<T>],
    ) -> Result<T, HybridError> {
        let m = self.mode(mode);
        let n = times.len();
        if states.len() != n || inputs.len() != n || n < 2 {
            return Err(HybridError::DimensionMismatch {
                expected: n.max(2),
                got: states.len().min(inputs.len()),
            });
        }
        for x in states {
            if x.len() != m.state_dim() {
                return Err(HybridError::DimensionMismatch {
                    expected: m.state_dim(),
                    got: x.len(),
                });
            }
        }
        let mut total = T::zero();
        for k in 0..n - 1 {
            let dt = times[k + 1] - times[k];
            let lk = m.cost.evaluate(&states[k], &inputs[k]);
            let lk1 = m.cost.evaluate(&states[k + 1], &inputs[k + 1]);
            total = total + dt * (lk + lk1) / T::of(2.0);
        }
        Ok(total + m.cost.terminal(&states[n - 1]))
    }

    /// Structural consistency: guard endpoints exist, chart/reset
    /// dimensions line up, virtual constraints cover their state spaces.
    pub fn validate(&self) -> Result<(), HybridError> {
        if self.modes.is_empty() {
            return Err(HybridError::Invalid("system has no modes".into()));
        }
        for (i, m) in self.modes.iter().enumerate() {
            let n = m.state_dim();
            if m.domain.bounds.len() != n {
                return Err(HybridError::Invalid(format!(
                    "mode {i}: domain box has {} entries for state dim {n}",
                    m.domain.bounds.len()
                )));
            }
            if m.input_bounds.len() != m.input_dim() {
                return Err(HybridError::Invalid(format!(
                    "mode {i}: input box has {} entries for input dim {}",
                    m.input_bounds.len(),
                    m.input_dim()
                )));
            }
            if m.vc.state_dim != n || !m.vc.covers_all_dims() {
                return Err(HybridError::Invalid(format!(
                    "mode {i}: virtual constraint does not cover the state space"
                )));
            }
            for b in m.domain.bounds.iter().chain(&m.input_bounds) {
                if b[0] > b[1] {
                    return Err(HybridError::Invalid(format!("mode {i}: empty interval")));
                }
            }
            let sd = m.vc.sampled_dim();
            if m.planning.position_dims.iter().any(|&d| d >= sd)
                || m.planning.velocity_dims.iter().any(|&d| d >= sd)
            {
                return Err(HybridError::Invalid(format!(
                    "mode {i}: planning metadata indexes outside sampled coords"
                )));
            }
        }
        for (gi, g) in self.guards.iter().enumerate() {
            if g.from.0 >= self.modes.len() || g.to.0 >= self.modes.len() {
                return Err(HybridError::Invalid(format!(
                    "guard {gi}: references missing mode"
                )));
            }
            let from = self.mode(g.from);
            let to = self.mode(g.to);
            if g.chart.out_dim() != from.vc.sampled_dim() {
                return Err(HybridError::Invalid(format!(
                    "guard {gi}: chart output dim {} != from-mode sampled dim {}",
                    g.chart.out_dim(),
                    from.vc.sampled_dim()
                )));
            }
            if g.reset.in_dim() != from.state_dim() || g.reset.out_dim() != to.state_dim() {
                return Err(HybridError::Invalid(format!(
                    "guard {gi}: reset dims {}->{} don't match modes {}->{}",
                    g.reset.in_dim(),
                    g.reset.out_dim(),
                    from.state_dim(),
                    to.state_dim()
                )));
            }
            if g.chart.params().len() != g.chart.param_dim() {
                return Err(HybridError::Invalid(format!(
                    "guard {gi}: param spec length != param dim"
                )));
            }
            if g.switch_cost < T::zero() {
                return Err(HybridError::Invalid(format!(
                    "guard {gi}: negative switch cost"
                )));
            }
        }
        Ok(())
    }

    fn sample_params(chart: &dyn GuardChart<T>, rng: &mut ChaCha8Rng) -> Vec<T> {
        chart
            .params()
            .iter()
            .map(|p| match p {
                ParamSpec::Fixed(v) => *v,
                ParamSpec::Range([lo, hi]) => {
                    let a = lo.to_f64_lossy();
                    let b = hi.to_f64_lossy();
                    T::of(rng.gen_range(a..=b))
                }
                ParamSpec::Grid(vals) => vals[rng.gen_range(0..vals.len())],
            })
            .collect()
    }

    /// Monte-Carlo check that no state is claimed by two same-dimension
    /// modes: draws `n` states from each mode's box and asserts at most
    /// one equal-dimension domain accepts each.
    pub fn check_domain_disjointness(&self, n: usize, seed: u64) -> Result<(), HybridError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in &self.modes {
            for _ in 0..n {
                let x: Vec<T> = m
                    .domain
                    .bounds
                    .iter()
                    .map(|b| T::of(rng.gen_range(b[0].to_f64_lossy()..=b[1].to_f64_lossy())))
                    .collect();
                let mut owner: Option<usize> = None;
                for (j, other) in self.modes.iter().enumerate() {
                    if other.state_dim() == x.len() && other.domain.contains(&x) {
                        if let Some(first) = owner {
                            return Err(HybridError::AmbiguousMode(first, j));
                        }
                        owner = Some(j);
                    }
                }
            }
        }
        Ok(())
    }

    /// For guards separating two regions of a shared state space: probe
    /// `eps_guard`-sized transversal steps around sampled guard points and
    /// check the two sides land in the two adjacent modes.
    pub fn check_guard_consistency(&self, n: usize, seed: u64) -> Result<(), HybridError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (gi, g) in self.guards.iter().enumerate() {
            let Some(step) = g.chart.transversal() else {
                continue;
            };
            let from = self.mode(g.from);
            for _ in 0..n {
                let q = Self::sample_params(g.chart.as_ref(), &mut rng);
                let mut coords = vec![T::zero(); g.chart.out_dim()];
                g.chart.point(&q, &mut coords);
                let x = from.vc.lift(&coords);
                if g.chart.distance(&coords) > self.eps_guard {
                    return Err(HybridError::Invalid(format!(
                        "guard {gi}: chart point off its own surface"
                    )));
                }
                let mut hit_from = false;
                let mut hit_to = false;
                for sign in [T::one(), -T::one()] {
                    let mut probe = x.clone();
                    linalg::axpy(sign, &step, &mut probe);
                    match self.mode_of(&probe) {
                        Ok(m) if m == g.from => hit_from = true,
                        Ok(m) if m == g.to => hit_to = true,
                        _ => {}
                    }
                }
                if !(hit_from && hit_to) {
                    return Err(HybridError::Invalid(format!(
                        "guard {gi}: transversal probe does not separate modes {} and {}",
                        g.from, g.to
                    )));
                }
            }
        }
        Ok(())
    }

    /// Check resets land inside their target domain for sampled guard
    /// points.
    pub fn check_reset_landing(&self, n: usize, seed: u64) -> Result<(), HybridError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (gi, g) in self.guards.iter().enumerate() {
            let from = self.mode(g.from);
            for _ in 0..n {
                let q = Self::sample_params(g.chart.as_ref(), &mut rng);
                let mut coords = vec![T::zero(); g.chart.out_dim()];
                g.chart.point(&q, &mut coords);
                let x = from.vc.lift(&coords);
                let mut out = vec![T::zero(); g.reset.out_dim()];
                g.reset.apply(&x, &mut out);
                if !self.mode(g.to).domain.contains(&out) {
                    return Err(HybridError::BadLanding {
                        guard: gi,
                        to_mode: g.to.0,
                    });
                }
            }
        }
        Ok(())
    }
}
