//! Poisson-disc sampling of mode domains and guard surfaces.
//!
//! Distances are measured in box-normalized coordinates (each dimension
//! divided by its width, angular dimensions wrapping), so one radius
//! works across state spaces with mixed units. Continuous dimensions get
//! Bridson dart throwing; velocity/heading style dimensions can instead
//! be gridded, in which case the Poisson pattern is crossed with every
//! grid combination.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SampleError;
use crate::hybrid::{HybridSystem, ModeId, ParamSpec};
use crate::real::Real;

/// How one dimension of a sampling box is populated.
#[derive(Debug, Clone)]
pub enum DimSpec<T> {
    /// Poisson-disc dimension.
    Continuous,
    /// Finite set of values, crossed with the continuous pattern.
    Grid(Vec<T>),
    Fixed(T),
}

#[derive(Debug, Clone)]
pub struct SampleSpec<T> {
    /// Poisson radius in normalized units (box widths).
    pub radius: T,
    pub seed: u64,
    /// Dart throws per active point before it retires.
    pub attempts: usize,
    /// Per-dimension treatment; `None` means all continuous.
    pub dims: Option<Vec<DimSpec<T>>>,
}

impl<T: Real> SampleSpec<T> {
    pub fn new(radius: T, seed: u64) -> Self {
        SampleSpec {
            radius,
            seed,
            attempts: 30,
            dims: None,
        }
    }

    pub fn with_dims(mut self, dims: Vec<DimSpec<T>>) -> Self {
        self.dims = Some(dims);
        self
    }
}

/// Distance normalized by box widths, wrapping angular dimensions.
pub fn normalized_distance<T: Real>(
    a: &[T],
    b: &[T],
    bounds: &[[T; 2]],
    angular: &[usize],
) -> T {
    let mut d2 = T::zero();
    for i in 0..a.len() {
        let w = bounds[i][1] - bounds[i][0];
        if w <= T::zero() {
            continue;
        }
        let diff = if angular.contains(&i) {
            crate::linalg::angle_diff(a[i], b[i]) / w
        } else {
            (a[i] - b[i]) / w
        };
        d2 = d2 + diff * diff;
    }
    d2.sqrt()
}

/// Set of sampled coordinate vectors for one mode or guard.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SampleSet<T> {
    pub coords: Vec<Vec<T>>,
    pub radius: T,
    pub seed: u64,
}

struct NormalizedBox {
    /// Continuous dimension count.
    n: usize,
    /// Which continuous dimensions wrap (period 1 after normalization).
    wrap: Vec<bool>,
}

impl NormalizedBox {
    fn wrap_coord(&self, y: &mut [f64]) {
        for i in 0..self.n {
            if self.wrap[i] {
                y[i] = y[i].rem_euclid(1.0);
            }
        }
    }

    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut d2 = 0.0;
        for i in 0..self.n {
            let mut d = (a[i] - b[i]).abs();
            if self.wrap[i] {
                d = d.min(1.0 - d);
            }
            d2 += d * d;
        }
        d2.sqrt()
    }
}

/// Bridson dart throwing over the unit cube `[0, 1]^n`. The `accept`
/// callback screens candidates (domain predicates); sampling is
/// deterministic in `seed`.
fn bridson_unit(
    nbox: &NormalizedBox,
    r: f64,
    attempts: usize,
    accept: &dyn Fn(&[f64]) -> bool,
    seed: u64,
) -> Result<Vec<Vec<f64>>, SampleError> {
    let n = nbox.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n == 0 {
        // purely gridded box: single empty continuous point
        return Ok(vec![vec![]]);
    }
    let cell = r / (n as f64).sqrt();
    let cells_per_dim = (1.0 / cell).ceil() as i64;
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let key = |y: &[f64]| -> Vec<i64> {
        y.iter()
            .map(|&v| ((v / cell) as i64).min(cells_per_dim - 1))
            .collect()
    };

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut active: Vec<usize> = Vec::new();

    // seed point: rejection sample the predicate
    let max_init = 4000;
    let mut init = None;
    for _ in 0..max_init {
        let y: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        if accept(&y) {
            init = Some(y);
            break;
        }
    }
    let Some(y0) = init else {
        return Err(SampleError::EmptyDomain { attempts: max_init });
    };
    grid.entry(key(&y0)).or_default().push(0);
    points.push(y0);
    active.push(0);

    let gauss = |rng: &mut ChaCha8Rng| -> f64 {
        let u1: f64 = (1.0 - rng.gen::<f64>()).max(1e-300);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };

    while !active.is_empty() {
        let pick = rng.gen_range(0..active.len());
        let base_idx = active[pick];
        let base = points[base_idx].clone();
        let mut placed = false;
        'darts: for _ in 0..attempts {
            // uniform direction via normal deviates, radius in [r, 2r)
            let dir: Vec<f64> = (0..n).map(|_| gauss(&mut rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            let rad = r * (1.0 + rng.gen::<f64>());
            let mut y: Vec<f64> = (0..n).map(|i| base[i] + dir[i] / norm * rad).collect();
            nbox.wrap_coord(&mut y);
            if y.iter()
                .enumerate()
                .any(|(i, &v)| !nbox.wrap[i] && !(0.0..=1.0).contains(&v))
            {
                continue;
            }
            if !accept(&y) {
                continue;
            }
            // neighbor scan over +-2 cells per dimension
            let k0 = key(&y);
            let mut offsets = vec![-2i64; n];
            loop {
                let mut cell_key = Vec::with_capacity(n);
                for i in 0..n {
                    let mut c = k0[i] + offsets[i];
                    if nbox.wrap[i] {
                        c = c.rem_euclid(cells_per_dim);
                    }
                    cell_key.push(c);
                }
                if let Some(bucket) = grid.get(&cell_key) {
                    for &j in bucket {
                        if nbox.dist(&y, &points[j]) < r {
                            continue 'darts;
                        }
                    }
                }
                // odometer over the offset cube
                let mut dim = 0;
                loop {
                    if dim == n {
                        break;
                    }
                    offsets[dim] += 1;
                    if offsets[dim] <= 2 {
                        break;
                    }
                    offsets[dim] = -2;
                    dim += 1;
                }
                if dim == n {
                    break;
                }
            }
            let idx = points.len();
            grid.entry(key(&y)).or_default().push(idx);
            points.push(y);
            active.push(idx);
            placed = true;
            break;
        }
        if !placed {
            active.swap_remove(pick);
        }
    }
    Ok(points)
}

/// Poisson-disc sample a box with per-dimension treatment. `bounds` and
/// `angular` describe the full coordinate vector; `accept` screens
/// assembled samples. Gridded/fixed dimensions are crossed with the
/// Poisson pattern over the continuous ones.
pub fn sample_box<T: Real>(
    bounds: &[[T; 2]],
    angular: &[usize],
    spec: &SampleSpec<T>,
    accept: &dyn Fn(&[T]) -> bool,
) -> Result<SampleSet<T>, SampleError> {
    let nd = bounds.len();
    let dims = spec
        .dims
        .clone()
        .unwrap_or_else(|| vec![DimSpec::Continuous; nd]);
    assert_eq!(dims.len(), nd, "one DimSpec per dimension");
    for (i, b) in bounds.iter().enumerate() {
        if b[1] < b[0] {
            return Err(SampleError::DegenerateBox(i));
        }
    }

    let cont: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|(_, d)| matches!(d, DimSpec::Continuous))
        .map(|(i, _)| i)
        .collect();
    // grid combinations (cartesian product), preserving dim order
    let mut combos: Vec<Vec<(usize, T)>> = vec![vec![]];
    for (i, d) in dims.iter().enumerate() {
        match d {
            DimSpec::Continuous => {}
            DimSpec::Fixed(v) => {
                for c in &mut combos {
                    c.push((i, *v));
                }
            }
            DimSpec::Grid(vals) => {
                assert!(!vals.is_empty(), "empty grid for dimension {i}");
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        vals.iter().map(move |&v| {
                            let mut cc = c.clone();
                            cc.push((i, v));
                            cc
                        })
                    })
                    .collect();
            }
        }
    }

    let lo: Vec<f64> = cont.iter().map(|&i| bounds[i][0].to_f64_lossy()).collect();
    let w: Vec<f64> = cont
        .iter()
        .map(|&i| (bounds[i][1] - bounds[i][0]).to_f64_lossy().max(1e-300))
        .collect();
    let assemble = |y: &[f64], combo: &[(usize, T)]| -> Vec<T> {
        let mut x = vec![T::zero(); nd];
        for (k, &i) in cont.iter().enumerate() {
            x[i] = T::of(lo[k] + y[k] * w[k]);
        }
        for &(i, v) in combo {
            x[i] = v;
        }
        x
    };

    let nbox = NormalizedBox {
        n: cont.len(),
        wrap: cont.iter().map(|i| angular.contains(i)).collect(),
    };
    let first = combos[0].clone();
    let unit_accept = |y: &[f64]| accept(&assemble(y, &first));
    let unit_points = bridson_unit(
        &nbox,
        spec.radius.to_f64_lossy(),
        spec.attempts,
        &unit_accept,
        spec.seed,
    )?;

    let mut coords = Vec::with_capacity(unit_points.len() * combos.len());
    for y in &unit_points {
        for combo in &combos {
            let x = assemble(y, combo);
            if accept(&x) {
                coords.push(x);
            }
        }
    }
    if coords.is_empty() {
        return Err(SampleError::EmptyDomain { attempts: 0 });
    }
    Ok(SampleSet {
        coords,
        radius: spec.radius,
        seed: spec.seed,
    })
}

/// Sample a mode's domain over its sampled coordinates.
pub fn sample_mode<T: Real>(
    sys: &HybridSystem<T>,
    mode: ModeId,
    spec: &SampleSpec<T>,
) -> Result<SampleSet<T>, SampleError> {
    let m = sys.mode(mode);
    let bounds = m.sampled_bounds();
    let angular = m.sampled_angular_dims();
    let vc = m.vc.clone();
    let pred = m.domain.predicate.clone();
    let accept = move |coords: &[T]| pred.accepts(&vc.lift(coords));
    sample_box(&bounds, &angular, spec, &accept)
}

/// Sample guard parameter vectors: ranged parameters are Poisson
/// dimensions, fixed/gridded ones are crossed in.
pub fn sample_guard<T: Real>(
    sys: &HybridSystem<T>,
    guard: usize,
    spec: &SampleSpec<T>,
) -> Result<SampleSet<T>, SampleError> {
    let g = &sys.guards[guard];
    let params = g.chart.params();
    let mut bounds = Vec::with_capacity(params.len());
    let mut dims = Vec::with_capacity(params.len());
    for p in &params {
        match p {
            ParamSpec::Fixed(v) => {
                bounds.push([*v, *v]);
                dims.push(DimSpec::Fixed(*v));
            }
            ParamSpec::Range(b) => {
                bounds.push(*b);
                dims.push(DimSpec::Continuous);
            }
            ParamSpec::Grid(vals) => {
                let lo = vals.iter().copied().fold(T::infinity(), T::min);
                let hi = vals.iter().copied().fold(-T::infinity(), T::max);
                bounds.push([lo, hi]);
                dims.push(DimSpec::Grid(vals.clone()));
            }
        }
    }
    let spec = SampleSpec {
        dims: Some(dims),
        ..spec.clone()
    };
    sample_box(&bounds, &[], &spec, &|_| true)
}
