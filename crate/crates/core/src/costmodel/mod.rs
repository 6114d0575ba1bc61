//! Edge-cost providers for roadmap pricing.
//!
//! Three interchangeable pricers implement [`EdgeCostProvider`]:
//!
//! * [`ExactCost`] solves the two-point boundary-value problem for every
//!   edge with the trajectory optimizer and returns the optimal cost.
//! * [`SurrogateCost`] evaluates a learned regression model
//!   ([`CostSurrogate`]) trained offline on optimizer output — orders of
//!   magnitude cheaper per edge, at some accuracy loss.
//! * [`GeometricCost`] returns straight-line position distance, a
//!   physics-blind baseline.
//!
//! The surrogate pipeline is: [`generate_batch`] samples endpoint pairs in
//! a mode's planning coordinates and prices them with the optimizer
//! (failures are recorded, not dropped silently), [`train_surrogate`] fits
//! a Gaussian-kernel support vector regression to the converged samples,
//! and [`save_model`]/[`load_model`] persist the result as versioned JSON.
//! Batches round-trip through CSV for inspection and reuse.
//!
//! Features are built from both endpoints' sampled coordinates with world
//! positions stored as differences (goal minus start), so predictions are
//! invariant to translating both endpoints together — matching the
//! translation invariance of the built-in dynamics. Angular coordinates
//! are embedded as cosine/sine pairs so the model never sees a wrap-around
//! discontinuity.

pub mod svr;

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, SampleError};
use crate::graph::EdgeCostProvider;
use crate::hybrid::{HybridSystem, ModeId};
use crate::real::Real;
use crate::sampling::{sample_mode, SampleSpec};
use crate::trajopt::{
    nominal_duration, solve_segment, velocity_change_time, SegmentProblem, SolverSettings,
};
use svr::{SvrModel, SvrParams};

/// One priced boundary-value pair in a mode's sampled coordinates.
/// The label is the optimizer's cost and is finite exactly when the solve
/// converged; failed pairs carry NaN.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostSample<T> {
    pub from: Vec<T>,
    pub to: Vec<T>,
    pub cost: T,
    /// Solved horizon length; NaN when not converged.
    pub duration: T,
    pub converged: bool,
}

/// Batch-generation recipe: how many pairs, from which endpoint pool,
/// priced with which solver settings.
#[derive(Debug, Clone)]
pub struct BatchSpec<T> {
    pub n_pairs: usize,
    pub seed: u64,
    /// Poisson-disk radius (normalized units) of the endpoint pool.
    pub radius: T,
    pub solver: SolverSettings<T>,
}

impl<T: Real> BatchSpec<T> {
    pub fn new(n_pairs: usize, seed: u64) -> Self {
        BatchSpec {
            n_pairs,
            seed,
            radius: T::of(0.12),
            solver: SolverSettings::default(),
        }
    }
}

/// Price explicit endpoint pairs (sampled coordinates) by trajectory
/// optimization, in parallel. Output order matches input order, and each
/// pair gets a seed derived from the base seed and its index, so the
/// batch is reproducible sample for sample.
pub fn price_pairs<T: Real>(
    sys: &HybridSystem<T>,
    mode: ModeId,
    pairs: &[(Vec<T>, Vec<T>)],
    solver: &SolverSettings<T>,
) -> Vec<CostSample<T>> {
    let vc = &sys.mode(mode).vc;
    pairs
        .par_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let prob = SegmentProblem::free_between(
                sys,
                mode,
                vc.lift(a),
                vc.lift(b),
                solver.n_nodes,
            );
            let mut settings = solver.clone();
            settings.seed = solver
                .seed
                .wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            match solve_segment(sys, &prob, &settings) {
                Ok(seg) if seg.converged => CostSample {
                    from: a.clone(),
                    to: b.clone(),
                    cost: seg.cost,
                    duration: *seg.times.last().expect("segment has nodes"),
                    converged: true,
                },
                _ => CostSample {
                    from: a.clone(),
                    to: b.clone(),
                    cost: T::nan(),
                    duration: T::nan(),
                    converged: false,
                },
            }
        })
        .collect()
}

/// Sample an endpoint pool in the mode's domain and price `n_pairs`
/// ordered pairs drawn from it. Pair draws are screened by
/// [`reachable`] (with a bounded number of redraws), matching the
/// distribution of pairs a cost provider will actually be asked about;
/// pairs that fail anyway are recorded with the converged flag cleared,
/// never dropped. Deterministic given the spec.
pub fn generate_batch<T: Real>(
    sys: &HybridSystem<T>,
    mode: ModeId,
    spec: &BatchSpec<T>,
) -> Result<Vec<CostSample<T>>, SampleError> {
    let pool = sample_mode(sys, mode, &SampleSpec::new(spec.radius, spec.seed))?;
    let n = pool.coords.len();
    debug_assert!(n > 0, "sampler returned an empty pool without erroring");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x00c0_57ba_7c11_e5d5);
    let draw = |rng: &mut ChaCha8Rng| loop {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j || n == 1 {
            return (i, j);
        }
    };
    let pairs: Vec<(Vec<T>, Vec<T>)> = (0..spec.n_pairs)
        .map(|_| {
            let mut pick = draw(&mut rng);
            for _ in 0..50 {
                if reachable(sys, mode, &pool.coords[pick.0], &pool.coords[pick.1]) {
                    break;
                }
                pick = draw(&mut rng);
            }
            (pool.coords[pick.0].clone(), pool.coords[pick.1].clone())
        })
        .collect();
    Ok(price_pairs(sys, mode, &pairs, &spec.solver))
}

fn csv_err(e: csv::Error) -> ModelError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => ModelError::Io(io),
            other => ModelError::FormatError(format!("{other:?}")),
        }
    } else {
        ModelError::FormatError(e.to_string())
    }
}

/// Write a batch as CSV: the two endpoint coordinate blocks, then cost,
/// duration, and the convergence flag. Numbers use the shortest
/// round-trippable representation, so reading the file back reproduces
/// the batch exactly (including NaN labels on failed rows).
pub fn write_batch<T: Real>(path: &Path, samples: &[CostSample<T>]) -> Result<(), ModelError> {
    let d = samples.first().map_or(0, |s| s.from.len());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<String> = (0..d).map(|i| format!("from_{i}")).collect();
    header.extend((0..d).map(|i| format!("to_{i}")));
    header.extend(["cost".to_string(), "duration".to_string(), "converged".to_string()]);
    w.write_record(&header).map_err(csv_err)?;
    for s in samples {
        let mut rec: Vec<String> = s.from.iter().map(|v| format!("{v:?}")).collect();
        rec.extend(s.to.iter().map(|v| format!("{v:?}")));
        rec.push(format!("{:?}", s.cost));
        rec.push(format!("{:?}", s.duration));
        rec.push(s.converged.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a batch written by [`write_batch`]. The coordinate dimension is
/// inferred from the header.
pub fn read_batch<T: Real>(path: &Path) -> Result<Vec<CostSample<T>>, ModelError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let d = headers.iter().filter(|h| h.starts_with("from_")).count();
    if headers.len() != 2 * d + 3 {
        return Err(ModelError::FormatError(format!(
            "expected {} columns for coordinate dimension {d}, found {}",
            2 * d + 3,
            headers.len()
        )));
    }
    let field = |rec: &csv::StringRecord, i: usize| -> Result<T, ModelError> {
        rec.get(i)
            .ok_or_else(|| ModelError::FormatError("short record".into()))?
            .parse::<f64>()
            .map(T::of)
            .map_err(|e| ModelError::FormatError(format!("bad number in column {i}: {e}")))
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let from = (0..d).map(|i| field(&rec, i)).collect::<Result<Vec<_>, _>>()?;
        let to = (d..2 * d).map(|i| field(&rec, i)).collect::<Result<Vec<_>, _>>()?;
        let cost = field(&rec, 2 * d)?;
        let duration = field(&rec, 2 * d + 1)?;
        let converged = rec
            .get(2 * d + 2)
            .ok_or_else(|| ModelError::FormatError("short record".into()))?
            .parse::<bool>()
            .map_err(|e| ModelError::FormatError(format!("bad flag: {e}")))?;
        out.push(CostSample {
            from,
            to,
            cost,
            duration,
            converged,
        });
    }
    Ok(out)
}

/// How endpoint pairs become regression features.
///
/// Layout: one difference entry per position dimension (`to - from`),
/// then, for every non-position dimension in index order, the value at
/// both endpoints — angular dimensions contributing a cosine/sine pair
/// per endpoint instead of the raw angle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub coord_dim: usize,
    /// Sampled-coordinate indices that are world position.
    pub position_dims: Vec<usize>,
    /// Sampled-coordinate indices that wrap.
    pub angular_dims: Vec<usize>,
}

impl FeatureMap {
    pub fn for_mode<T: Real>(sys: &HybridSystem<T>, mode: ModeId) -> Self {
        let m = sys.mode(mode);
        FeatureMap {
            coord_dim: m.vc.sampled_dim(),
            position_dims: m.planning.position_dims.clone(),
            angular_dims: m.sampled_angular_dims(),
        }
    }

    /// Feature vector length.
    pub fn dim(&self) -> usize {
        let mut n = self.position_dims.len();
        for d in 0..self.coord_dim {
            if self.position_dims.contains(&d) {
                continue;
            }
            n += if self.angular_dims.contains(&d) { 4 } else { 2 };
        }
        n
    }

    pub fn features<T: Real>(&self, from: &[T], to: &[T]) -> Vec<T> {
        debug_assert_eq!(from.len(), self.coord_dim);
        debug_assert_eq!(to.len(), self.coord_dim);
        let mut f = Vec::with_capacity(self.dim());
        for &d in &self.position_dims {
            f.push(to[d] - from[d]);
        }
        for d in 0..self.coord_dim {
            if self.position_dims.contains(&d) {
                continue;
            }
            if self.angular_dims.contains(&d) {
                f.push(from[d].cos());
                f.push(from[d].sin());
                f.push(to[d].cos());
                f.push(to[d].sin());
            } else {
                f.push(from[d]);
                f.push(to[d]);
            }
        }
        f
    }
}

/// Training knobs. `None` selects the data-driven default: kernel
/// bandwidth by the median heuristic on pairwise standardized-feature
/// distances, box constraint ten times the (standardized) label spread,
/// tube width one percent of the label range. Explicit values are in
/// standardized feature/label units.
#[derive(Debug, Clone)]
pub struct SurrogateParams<T> {
    pub c: Option<T>,
    pub epsilon: Option<T>,
    pub gamma: Option<T>,
    /// SMO termination tolerance on the KKT violation gap.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SurrogateParams<T> {
    fn default() -> Self {
        SurrogateParams {
            c: None,
            epsilon: None,
            gamma: None,
            tol: T::of(1e-3),
            max_iter: 200_000,
        }
    }
}

/// Learned edge-cost model for one mode: a support vector regression in
/// standardized feature space plus the normalization constants to get in
/// and out of it. Immutable after training; prediction is pure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostSurrogate<T> {
    pub mode_name: String,
    pub map: FeatureMap,
    pub feat_mean: Vec<T>,
    pub feat_scale: Vec<T>,
    pub label_mean: T,
    pub label_scale: T,
    /// Regression in standardized space.
    pub svr: SvrModel<T>,
    /// Box constraint the model was trained with.
    pub c: T,
    /// Tube width the model was trained with.
    pub epsilon: T,
    /// True when the training labels had no usable spread; the model is
    /// then a constant predictor at the label mean.
    pub degenerate: bool,
    pub n_train: usize,
}

impl<T: Real> CostSurrogate<T> {
    fn standardized(&self, from: &[T], to: &[T]) -> Vec<T> {
        let f = self.map.features(from, to);
        f.iter()
            .zip(self.feat_mean.iter().zip(&self.feat_scale))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    /// Predicted boundary-value cost between two sampled-coordinate
    /// endpoints, clamped below at zero (costs are non-negative). Finite
    /// for all finite inputs.
    pub fn predict(&self, from: &[T], to: &[T]) -> T {
        assert_eq!(from.len(), self.map.coord_dim, "endpoint dimension");
        assert_eq!(to.len(), self.map.coord_dim, "endpoint dimension");
        let z = self.standardized(from, to);
        let y = self.svr.predict(&z);
        (y * self.label_scale + self.label_mean).max(T::zero())
    }
}

fn column_stats<T: Real>(rows: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    let dim = rows[0].len();
    let n = T::of(rows.len() as f64);
    let mut mean = vec![T::zero(); dim];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m = *m + v;
        }
    }
    for m in &mut mean {
        *m = *m / n;
    }
    let mut var = vec![T::zero(); dim];
    for r in rows {
        for ((s, &v), &m) in var.iter_mut().zip(r).zip(&mean) {
            *s = *s + (v - m) * (v - m);
        }
    }
    let scale: Vec<T> = var
        .iter()
        .zip(&mean)
        .map(|(&s, &m)| {
            let sd = (s / n).sqrt();
            if sd > T::of(1e-12) * (T::one() + m.abs()) {
                sd
            } else {
                T::one() // constant column: center only
            }
        })
        .collect();
    (mean, scale)
}

/// Median-heuristic kernel bandwidth: `1 / median(pairwise squared
/// distance)` over (a deterministic subsample of) the standardized rows.
fn median_gamma<T: Real>(rows: &[Vec<T>]) -> T {
    let stride = rows.len().div_ceil(400);
    let sub: Vec<&Vec<T>> = rows.iter().step_by(stride).collect();
    let mut d2s = Vec::with_capacity(sub.len() * (sub.len() - 1) / 2);
    for i in 0..sub.len() {
        for j in 0..i {
            let d2: T = sub[i]
                .iter()
                .zip(sub[j])
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            d2s.push(d2);
        }
    }
    d2s.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    match d2s.get(d2s.len() / 2) {
        Some(&med) if med > T::zero() => T::one() / med,
        _ => T::one(),
    }
}

/// Fit a cost surrogate to the converged samples of a batch.
///
/// Features and labels are standardized per dimension; hyperparameters
/// default as described on [`SurrogateParams`]. Needs at least ten
/// converged samples. Constant labels are not an error: the result is a
/// constant predictor with the `degenerate` flag set.
pub fn train_surrogate<T: Real>(
    sys: &HybridSystem<T>,
    mode: ModeId,
    samples: &[CostSample<T>],
    params: &SurrogateParams<T>,
) -> Result<CostSurrogate<T>, ModelError> {
    let map = FeatureMap::for_mode(sys, mode);
    let conv: Vec<&CostSample<T>> = samples
        .iter()
        .filter(|s| s.converged && s.cost.is_finite())
        .collect();
    if conv.len() < 10 {
        return Err(ModelError::DegenerateBatch(format!(
            "{} converged samples; need at least 10",
            conv.len()
        )));
    }
    for s in &conv {
        if s.from.len() != map.coord_dim || s.to.len() != map.coord_dim {
            return Err(ModelError::FeatureDim {
                expected: map.coord_dim,
                got: s.from.len().max(s.to.len()),
            });
        }
    }

    let x_raw: Vec<Vec<T>> = conv.iter().map(|s| map.features(&s.from, &s.to)).collect();
    let y_raw: Vec<T> = conv.iter().map(|s| s.cost).collect();

    let (feat_mean, feat_scale) = column_stats(&x_raw);
    let x: Vec<Vec<T>> = x_raw
        .iter()
        .map(|r| {
            r.iter()
                .zip(feat_mean.iter().zip(&feat_scale))
                .map(|(&v, (&m, &s))| (v - m) / s)
                .collect()
        })
        .collect();

    let n = T::of(y_raw.len() as f64);
    let label_mean = y_raw.iter().copied().sum::<T>() / n;
    let label_sd = (y_raw
        .iter()
        .map(|&v| (v - label_mean) * (v - label_mean))
        .sum::<T>()
        / n)
        .sqrt();
    let degenerate = !(label_sd > T::of(1e-12) * (T::one() + label_mean.abs()));
    let label_scale = if degenerate { T::one() } else { label_sd };
    let y: Vec<T> = y_raw.iter().map(|&v| (v - label_mean) / label_scale).collect();
    let y_range = y.iter().copied().fold(T::neg_infinity(), T::max)
        - y.iter().copied().fold(T::infinity(), T::min);

    let gamma = params.gamma.unwrap_or_else(|| median_gamma(&x));
    let c = params.c.unwrap_or_else(|| T::of(10.0));
    let epsilon = params
        .epsilon
        .unwrap_or_else(|| (T::of(0.01) * y_range).max(T::of(1e-6)));

    let svr = svr::train(
        &x,
        &y,
        &SvrParams {
            c,
            epsilon,
            gamma,
            tol: params.tol,
            max_iter: params.max_iter,
        },
    );
    debug_assert!(svr.coeff.iter().all(|&a| a.abs() <= c + T::of(1e-9)));

    Ok(CostSurrogate {
        mode_name: sys.mode(mode).name.clone(),
        map,
        feat_mean,
        feat_scale,
        label_mean,
        label_scale,
        svr,
        c,
        epsilon,
        degenerate,
        n_train: conv.len(),
    })
}

const MODEL_KIND: &str = "locoplan-cost-surrogate";
const MODEL_SCHEMA: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    kind: String,
    schema: u32,
    model: CostSurrogate<T>,
}

/// Persist a surrogate as tagged, versioned JSON. Numbers are written in
/// shortest round-trippable form, so a load returns a model with
/// bit-identical predictions.
pub fn save_model<T: Real>(model: &CostSurrogate<T>, path: &Path) -> Result<(), ModelError> {
    let file = ModelFile {
        kind: MODEL_KIND.to_string(),
        schema: MODEL_SCHEMA,
        model: model.clone(),
    };
    let text =
        serde_json::to_string_pretty(&file).map_err(|e| ModelError::FormatError(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model<T: Real>(path: &Path) -> Result<CostSurrogate<T>, ModelError> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ModelError::FormatError(e.to_string()))?;
    match value.get("kind").and_then(|v| v.as_str()) {
        Some(MODEL_KIND) => {}
        Some(other) => {
            return Err(ModelError::FormatError(format!(
                "not a cost-surrogate file (kind {other:?})"
            )))
        }
        None => return Err(ModelError::FormatError("missing kind tag".into())),
    }
    let schema = value
        .get("schema")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| ModelError::FormatError("missing schema version".into()))?;
    if schema != u64::from(MODEL_SCHEMA) {
        return Err(ModelError::VersionMismatch {
            expected: MODEL_SCHEMA,
            found: schema as u32,
        });
    }
    let model = value
        .get("model")
        .cloned()
        .ok_or_else(|| ModelError::FormatError("missing model body".into()))?;
    serde_json::from_value(model).map_err(|e| ModelError::FormatError(e.to_string()))
}

/// Quick feasibility screen for an endpoint pair, run before pricing:
/// both lifted endpoints must sit in the mode's state box (boundary
/// included, so guard-surface vertices pass), and the velocity change
/// must fit in the free-time window the solver would get. Pairs failing
/// it are priced +infinity without running the optimizer or the
/// surrogate — the surrogate only ever saw feasible pairs, so its
/// answers on infeasible ones would be confidently wrong.
///
/// The velocity check relies on [`velocity_change_time`]: a pair is
/// rejected when no admissible input can push the velocity toward the
/// target somewhere along the corridor, or when the estimated sweep time
/// cannot fit the window. A coarse `|dv| <= a_max * t` bound from the
/// mode's declared acceleration limit is applied on top when available.
pub fn reachable<T: Real>(sys: &HybridSystem<T>, mode: ModeId, from: &[T], to: &[T]) -> bool {
    let m = sys.mode(mode);
    let xa = m.vc.lift(from);
    let xb = m.vc.lift(to);
    let eps = sys.eps_guard;
    let in_box = |x: &[T]| {
        x.iter()
            .zip(&m.domain.bounds)
            .all(|(&v, b)| v >= b[0] - eps && v <= b[1] + eps)
    };
    if !in_box(&xa) || !in_box(&xb) {
        return false;
    }
    if !corridor_clear(sys, mode, &xa, &xb) {
        return false;
    }
    if m.planning.velocity_dims.is_empty() {
        return true;
    }

    let t_vel = match velocity_change_time(sys, mode, &xa, &xb) {
        Some(t) => t,
        None => return false,
    };
    let t_hi = T::of(5.0) * nominal_duration(sys, mode, &xa, &xb);
    let slack = T::one() + T::of(1e-9);
    if t_vel > t_hi * slack {
        return false;
    }
    if let Some(acc) = m.planning.accel_limit {
        for &vd in &m.planning.velocity_dims {
            if (to[vd] - from[vd]).abs() > acc * t_hi * slack {
                return false;
            }
        }
    }
    true
}

/// Straight-line domain screen between two full states of a mode:
/// interior points of the segment must satisfy the mode's domain
/// predicate. Endpoints are excluded so boundary (guard-surface) states
/// don't trip strict predicates. This is the classic roadmap local-planner
/// validity check; it prunes edges whose direct corridor leaves the
/// domain — a ground edge spanning a water channel, a flight edge through
/// a cliff face — at predicate cost instead of a wasted solve. The probe
/// grid resolves any blocked stretch wider than ~1% of the segment;
/// predicate evaluations are cheap (a handful of comparisons), so a dense
/// grid costs little.
pub fn corridor_clear<T: Real>(sys: &HybridSystem<T>, mode: ModeId, xa: &[T], xb: &[T]) -> bool {
    const PROBES: usize = 128;
    let m = sys.mode(mode);
    let mut x = vec![T::zero(); xa.len()];
    for i in 1..=PROBES {
        let t = T::of(i as f64 / (PROBES + 1) as f64);
        for (k, xi) in x.iter_mut().enumerate() {
            *xi = xa[k] + t * (xb[k] - xa[k]);
        }
        if !m.domain.predicate.accepts(&x) {
            return false;
        }
    }
    true
}

/// Edge pricing by direct trajectory optimization. Unreachable pairs and
/// failed solves price +infinity, which the graph builder drops.
pub struct ExactCost<'a, T: Real> {
    pub sys: &'a HybridSystem<T>,
    pub settings: SolverSettings<T>,
}

impl<'a, T: Real> ExactCost<'a, T> {
    pub fn new(sys: &'a HybridSystem<T>) -> Self {
        ExactCost {
            sys,
            settings: SolverSettings::default(),
        }
    }
}

impl<T: Real> EdgeCostProvider<T> for ExactCost<'_, T> {
    fn edge_cost(&self, mode: ModeId, from: &[T], to: &[T]) -> T {
        if !reachable(self.sys, mode, from, to) {
            return T::infinity();
        }
        let vc = &self.sys.mode(mode).vc;
        let prob = SegmentProblem::free_between(
            self.sys,
            mode,
            vc.lift(from),
            vc.lift(to),
            self.settings.n_nodes,
        );
        match solve_segment(self.sys, &prob, &self.settings) {
            Ok(seg) if seg.converged => seg.cost,
            _ => T::infinity(),
        }
    }
}

/// Edge pricing by per-mode learned surrogates, behind the same
/// reachability screen as [`ExactCost`]. Modes without a model price
/// +infinity.
pub struct SurrogateCost<'a, T: Real> {
    sys: &'a HybridSystem<T>,
    models: Vec<Option<CostSurrogate<T>>>,
}

impl<'a, T: Real> SurrogateCost<'a, T> {
    pub fn new(
        sys: &'a HybridSystem<T>,
        pairs: Vec<(ModeId, CostSurrogate<T>)>,
    ) -> Result<Self, ModelError> {
        let mut models: Vec<Option<CostSurrogate<T>>> =
            (0..sys.modes.len()).map(|_| None).collect();
        for (mode, model) in pairs {
            let want = sys.mode(mode).vc.sampled_dim();
            if model.map.coord_dim != want {
                return Err(ModelError::FeatureDim {
                    expected: want,
                    got: model.map.coord_dim,
                });
            }
            models[mode.0] = Some(model);
        }
        Ok(SurrogateCost { sys, models })
    }
}

impl<T: Real> EdgeCostProvider<T> for SurrogateCost<'_, T> {
    fn edge_cost(&self, mode: ModeId, from: &[T], to: &[T]) -> T {
        if !reachable(self.sys, mode, from, to) {
            return T::infinity();
        }
        match &self.models[mode.0] {
            Some(m) => m.predict(from, to),
            None => T::infinity(),
        }
    }
}

/// Straight-line position distance, ignoring dynamics and energy but
/// still honoring domain geometry: edges whose corridor leaves the mode's
/// domain price +infinity, so shortest-geometric plans respect terrain.
pub struct GeometricCost<'a, T: Real> {
    pub sys: &'a HybridSystem<T>,
}

impl<T: Real> EdgeCostProvider<T> for GeometricCost<'_, T> {
    fn edge_cost(&self, mode: ModeId, from: &[T], to: &[T]) -> T {
        let m = self.sys.mode(mode);
        if !corridor_clear(self.sys, mode, &m.vc.lift(from), &m.vc.lift(to)) {
            return T::infinity();
        }
        m.planning
            .position_dims
            .iter()
            .map(|&d| (to[d] - from[d]) * (to[d] - from[d]))
            .sum::<T>()
            .sqrt()
    }
}
