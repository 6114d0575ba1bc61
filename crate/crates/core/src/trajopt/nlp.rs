//! Equality-constrained NLP solver: augmented Lagrangian outer loop with
//! a projected L-BFGS inner solver for the box-constrained subproblems.
//!
//! Collocation transcriptions are smooth, moderately sized, and have only
//! equality constraints plus variable bounds, so a first-order multiplier
//! method with quasi-Newton inner steps is a good fit and keeps the crate
//! free of external NLP dependencies.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::real::Real;

/// Smooth problem: minimize `objective` subject to `equalities(z) = 0`
/// and `bounds[i][0] <= z[i] <= bounds[i][1]`. Pin a variable by setting
/// equal lower/upper bounds.
pub trait NlpProblem<T: Real>: Sync {
    fn num_vars(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn bounds(&self) -> Vec<[T; 2]>;
    fn objective(&self, z: &[T]) -> T;
    fn gradient(&self, z: &[T], grad: &mut [T]);
    fn equalities(&self, z: &[T], c: &mut [T]);
    /// `grad += J(z)^T w` where `J` is the equality Jacobian.
    fn accumulate_jt(&self, z: &[T], w: &[T], grad: &mut [T]);
}

#[derive(Debug, Clone)]
pub struct AugLagSettings<T> {
    pub outer_max: usize,
    pub inner_max: usize,
    /// Accept when the equality inf-norm drops below this.
    pub tol_constraint: T,
    /// Accept when the projected-gradient inf-norm of the augmented
    /// Lagrangian drops below `tol_grad * (1 + |objective|)`; the scaling
    /// keeps the target above the floating-point floor of the Armijo
    /// search on problems with large objective values.
    pub tol_grad: T,
    pub mu0: T,
    pub mu_factor: T,
    pub mu_max: T,
    pub lbfgs_mem: usize,
}

impl<T: Real> Default for AugLagSettings<T> {
    fn default() -> Self {
        AugLagSettings {
            outer_max: 40,
            inner_max: 2000,
            tol_constraint: T::of(1e-6),
            tol_grad: T::of(1e-6),
            mu0: T::of(10.0),
            mu_factor: T::of(10.0),
            mu_max: T::of(1e8),
            lbfgs_mem: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AugLagReport<T> {
    pub z: Vec<T>,
    pub objective: T,
    /// Inf-norm of the equality residual at `z`.
    pub violation: T,
    /// Projected-gradient inf-norm of the augmented Lagrangian at `z`.
    pub pg_norm: T,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Equality violation after each outer iteration.
    pub violation_history: Vec<T>,
    pub converged: bool,
    pub mu_final: T,
}

fn project<T: Real>(z: &mut [T], bounds: &[[T; 2]]) {
    for (zi, b) in z.iter_mut().zip(bounds) {
        *zi = (*zi).max(b[0]).min(b[1]);
    }
}

/// Inf-norm of `z - P(z - g)`, the box-projected gradient.
fn projected_gradient_norm<T: Real>(z: &[T], g: &[T], bounds: &[[T; 2]]) -> T {
    let mut n = T::zero();
    for i in 0..z.len() {
        let stepped = (z[i] - g[i]).max(bounds[i][0]).min(bounds[i][1]);
        n = n.max((z[i] - stepped).abs());
    }
    n
}

/// Projected L-BFGS with Armijo backtracking over the projection arc.
/// Variables sitting at an active bound (including pinned `lo == hi`
/// variables) are masked out of the quasi-Newton model so they don't
/// pollute the curvature estimate. `pre`, when given, is a per-variable
/// inverse-curvature estimate used as the initial Hessian approximation;
/// collocation subproblems are badly scaled (state columns carry a `1/h`
/// while input columns do not) and converge orders of magnitude faster
/// with it. Returns `(value, pg_norm, iters)`; `z` is updated in place.
fn minimize_box<T, F>(
    eval: &F,
    z: &mut Vec<T>,
    bounds: &[[T; 2]],
    max_iter: usize,
    tol_pg: T,
    mem: usize,
    pre: Option<&[T]>,
) -> (T, T, usize)
where
    T: Real,
    F: Fn(&[T], &mut [T]) -> T,
{
    let n = z.len();
    project(z, bounds);
    let mut g = vec![T::zero(); n];
    let mut f = eval(z, &mut g);
    let mut pairs: Vec<(Vec<T>, Vec<T>, T)> = Vec::new(); // (s, y, rho)
    let mut iters = 0;

    for _ in 0..max_iter {
        let pg = projected_gradient_norm(z, &g, bounds);
        if pg <= tol_pg {
            return (f, pg, iters);
        }
        iters += 1;

        // free set: projected iterates sit exactly on their bounds, so
        // exact comparisons identify active variables
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let at_lo = z[i] == bounds[i][0] && g[i] > T::zero();
                let at_hi = z[i] == bounds[i][1] && g[i] < T::zero();
                let pinned = bounds[i][0] == bounds[i][1];
                !(at_lo || at_hi || pinned)
            })
            .collect();
        let gm: Vec<T> = (0..n)
            .map(|i| if free[i] { g[i] } else { T::zero() })
            .collect();

        // two-loop recursion for d = -H gm on the free subspace
        let mut d: Vec<T> = gm.iter().map(|&gi| -gi).collect();
        let mut alphas = vec![T::zero(); pairs.len()];
        for (i, (s, y, rho)) in pairs.iter().enumerate().rev() {
            let a = *rho * linalg::dot(s, &d);
            alphas[i] = a;
            linalg::axpy(-a, y, &mut d);
        }
        match (pre, pairs.last()) {
            (Some(p), last) => {
                // diagonal initial Hessian, secant-corrected once pairs exist
                let gamma = match last {
                    Some((s, y, _)) => {
                        let sy = linalg::dot(s, y);
                        let ypy = (0..n).map(|i| y[i] * p[i] * y[i]).sum::<T>();
                        if ypy > T::zero() {
                            sy / ypy
                        } else {
                            T::one()
                        }
                    }
                    None => T::one(),
                };
                for i in 0..n {
                    d[i] = d[i] * gamma * p[i];
                }
            }
            (None, Some((s, y, _))) => {
                let sy = linalg::dot(s, y);
                let yy = linalg::dot(y, y);
                if yy > T::zero() {
                    linalg::scale(sy / yy, &mut d);
                }
            }
            (None, None) => {}
        }
        for (i, (s, y, rho)) in pairs.iter().enumerate() {
            let b = *rho * linalg::dot(y, &d);
            linalg::axpy(alphas[i] - b, s, &mut d);
        }
        for i in 0..n {
            if !free[i] {
                d[i] = T::zero();
            }
        }

        // fall back to (scaled) steepest descent if the direction degenerated
        if linalg::dot(&d, &gm) >= T::zero() {
            d = match pre {
                Some(p) => (0..n).map(|i| -p[i] * gm[i]).collect(),
                None => gm.iter().map(|&gi| -gi).collect(),
            };
            pairs.clear();
        }

        // Armijo backtracking along the projection arc
        let c1 = T::of(1e-4);
        let mut alpha = T::one();
        let mut accepted = false;
        let mut z_new = vec![T::zero(); n];
        let mut g_new = vec![T::zero(); n];
        let mut f_new = f;
        for _ in 0..60 {
            for i in 0..n {
                z_new[i] = z[i] + alpha * d[i];
            }
            project(&mut z_new, bounds);
            let step: Vec<T> = (0..n).map(|i| z_new[i] - z[i]).collect();
            if linalg::norm_inf(&step) == T::zero() {
                break;
            }
            f_new = eval(&z_new, &mut g_new);
            let decrease = linalg::dot(&g, &step);
            if f_new.is_finite() && f_new <= f + c1 * decrease.min(T::zero()) && f_new <= f {
                accepted = true;
                break;
            }
            alpha = alpha / T::of(2.0);
        }
        if !accepted {
            if pairs.is_empty() {
                // no descent even along -g: numerically stationary
                let pg = projected_gradient_norm(z, &g, bounds);
                return (f, pg, iters);
            }
            pairs.clear();
            continue;
        }

        let s: Vec<T> = (0..n).map(|i| z_new[i] - z[i]).collect();
        let y: Vec<T> = (0..n)
            .map(|i| if free[i] { g_new[i] - g[i] } else { T::zero() })
            .collect();
        let sy = linalg::dot(&s, &y);
        if sy > T::of(1e-10) * linalg::norm2(&s) * linalg::norm2(&y) {
            if pairs.len() == mem {
                pairs.remove(0);
            }
            let rho = T::one() / sy;
            pairs.push((s, y, rho));
        }
        *z = z_new.clone();
        g.copy_from_slice(&g_new);
        f = f_new;
    }
    let pg = projected_gradient_norm(z, &g, bounds);
    (f, pg, iters)
}

/// Per-variable inverse-curvature estimate `1 / (mu * ||J column||^2)`
/// for the penalty term of the augmented Lagrangian. Column norms come
/// from Gaussian probes of the only Jacobian access the problem trait
/// offers, transpose products: for `w ~ N(0, I)` the expectation of
/// `(J^T w)_i^2` is the squared norm of column `i`. Estimates are
/// clamped to a relative window so noisy probes cannot produce wild
/// scalings, and probe directions are seeded deterministically.
fn penalty_scaling<T: Real, P: NlpProblem<T>>(
    problem: &P,
    z: &[T],
    mu: T,
    seed: u64,
) -> Option<Vec<T>> {
    let n = problem.num_vars();
    let m = problem.num_eq();
    if m == 0 {
        return None;
    }
    let probes = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = vec![T::zero(); n];
    let mut jt = vec![T::zero(); n];
    for _ in 0..probes {
        let w: Vec<T> = (0..m).map(|_| T::of(gaussian(&mut rng))).collect();
        jt.fill(T::zero());
        problem.accumulate_jt(z, &w, &mut jt);
        for i in 0..n {
            acc[i] = acc[i] + jt[i] * jt[i];
        }
    }
    let inv_probes = T::one() / T::of(probes as f64);
    let mut h: Vec<T> = acc.iter().map(|&a| mu * a * inv_probes).collect();
    let hmax = h.iter().fold(T::zero(), |m, &v| m.max(v));
    if !(hmax > T::zero()) || !hmax.is_finite() {
        return None;
    }
    let floor = hmax * T::of(1e-8);
    for v in &mut h {
        *v = (*v).max(floor);
    }
    Some(h.iter().map(|&v| T::one() / v).collect())
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Minimize an [`NlpProblem`] starting from `z0`.
pub fn solve_auglag<T: Real, P: NlpProblem<T>>(
    problem: &P,
    z0: &[T],
    settings: &AugLagSettings<T>,
) -> AugLagReport<T> {
    let n = problem.num_vars();
    let m = problem.num_eq();
    debug_assert_eq!(z0.len(), n);
    let bounds = problem.bounds();
    let mut z = z0.to_vec();
    project(&mut z, &bounds);

    let mut lambda = vec![T::zero(); m];
    let mut mu = settings.mu0;
    let mut history = Vec::new();
    let mut inner_total = 0;
    let mut pg_norm = T::infinity();
    let mut best_v = T::infinity();
    // consecutive outers with the penalty maxed out and the violation no
    // longer shrinking — the signature of an infeasible subproblem
    let mut stalled = 0;

    let mut c = vec![T::zero(); m];
    for outer in 1..=settings.outer_max {
        let eval = |zz: &[T], grad: &mut [T]| -> T {
            let mut cc = vec![T::zero(); m];
            problem.equalities(zz, &mut cc);
            let f = problem.objective(zz);
            problem.gradient(zz, grad);
            let mut val = f;
            let mut w = vec![T::zero(); m];
            for j in 0..m {
                val = val + lambda[j] * cc[j] + mu / T::of(2.0) * cc[j] * cc[j];
                w[j] = lambda[j] + mu * cc[j];
            }
            problem.accumulate_jt(zz, &w, grad);
            val
        };

        // loose subproblem tolerance early, tightening toward tol_grad;
        // both scale with the objective magnitude
        let fscale = T::one() + problem.objective(&z).abs();
        let sched = T::of(1e-3) * T::of(0.2).powi(outer as i32 - 1);
        let tol_inner = settings.tol_grad.max(sched) * fscale;
        let pre = penalty_scaling(problem, &z, mu, 0x5eed ^ outer as u64);
        let (_, pg, it) = minimize_box(
            &eval,
            &mut z,
            &bounds,
            settings.inner_max,
            tol_inner,
            settings.lbfgs_mem,
            pre.as_deref(),
        );
        pg_norm = pg;
        inner_total += it;

        problem.equalities(&z, &mut c);
        let v = linalg::norm_inf(&c);
        if std::env::var_os("LOCOPLAN_NLP_TRACE").is_some() {
            eprintln!(
                "outer={outer} v={:.3e} pg={:.3e} it={it} mu={:.1e}",
                v.to_f64_lossy(),
                pg.to_f64_lossy(),
                mu.to_f64_lossy()
            );
        }
        history.push(v);

        if v <= settings.tol_constraint && pg <= settings.tol_grad * fscale {
            return AugLagReport {
                objective: problem.objective(&z),
                z,
                violation: v,
                pg_norm,
                outer_iters: outer,
                inner_iters: inner_total,
                violation_history: history,
                converged: true,
                mu_final: mu,
            };
        }

        // first-order multiplier update; escalate the penalty only while
        // the violation is both above tolerance and not shrinking fast
        for j in 0..m {
            lambda[j] = lambda[j] + mu * c[j];
        }
        if v > settings.tol_constraint && v > T::of(0.25) * best_v {
            mu = (mu * settings.mu_factor).min(settings.mu_max);
        }

        // give up early once the penalty is saturated and the violation
        // has stopped improving: more outers cannot change anything, and
        // infeasible boundary-value pairs are common in batch pricing
        if v > settings.tol_constraint && mu >= settings.mu_max && v > T::of(0.9) * best_v {
            stalled += 1;
            if stalled >= 2 {
                break;
            }
        } else {
            stalled = 0;
        }
        best_v = best_v.min(v);
    }

    AugLagReport {
        objective: problem.objective(&z),
        violation: linalg::norm_inf(&c),
        z,
        pg_norm,
        outer_iters: settings.outer_max,
        inner_iters: inner_total,
        violation_history: history,
        converged: false,
        mu_final: mu,
    }
}
