//! Gaussian-kernel epsilon-insensitive support vector regression,
//! trained by sequential minimal optimization (SMO).
//!
//! The dual is the standard box-constrained QP over paired multipliers
//! `(alpha_i, alpha_i*)`, handled as one vector of length `2n` with sign
//! labels `+1` for the first half and `-1` for the second. Working pairs
//! are chosen by maximal KKT violation with a second-order gain rule,
//! each pair subproblem is solved in closed form, and the bias comes
//! from the midpoint of the final violation bracket.

use serde::{Deserialize, Serialize};

use crate::real::Real;

/// Squared Euclidean distance.
fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}

/// Gaussian radial basis kernel `exp(-gamma ||a-b||^2)`.
pub fn rbf<T: Real>(a: &[T], b: &[T], gamma: T) -> T {
    (-gamma * dist2(a, b)).exp()
}

#[derive(Debug, Clone)]
pub struct SvrParams<T> {
    /// Box constraint on each dual multiplier.
    pub c: T,
    /// Half-width of the insensitive tube around the targets.
    pub epsilon: T,
    /// Kernel bandwidth.
    pub gamma: T,
    /// KKT violation tolerance for SMO termination.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> SvrParams<T> {
    pub fn new(c: T, epsilon: T, gamma: T) -> Self {
        SvrParams {
            c,
            epsilon,
            gamma,
            tol: T::of(1e-3),
            max_iter: 200_000,
        }
    }
}

/// Trained model: support vectors with net dual coefficients
/// `alpha_i - alpha_i*` and the bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvrModel<T> {
    pub gamma: T,
    pub bias: T,
    pub support: Vec<Vec<T>>,
    pub coeff: Vec<T>,
    /// KKT gap at termination (diagnostic).
    pub kkt_gap: T,
    pub iterations: usize,
}

impl<T: Real> SvrModel<T> {
    pub fn predict(&self, x: &[T]) -> T {
        let mut f = self.bias;
        for (sv, &c) in self.support.iter().zip(&self.coeff) {
            f = f + c * rbf(sv, x, self.gamma);
        }
        f
    }
}

/// Extended-index sign: `+1` for the alpha half, `-1` for the alpha* half.
#[inline]
fn sign<T: Real>(t: usize, n: usize) -> T {
    if t < n {
        T::one()
    } else {
        -T::one()
    }
}

/// Train on feature rows `x` and targets `y`.
pub fn train<T: Real>(x: &[Vec<T>], y: &[T], p: &SvrParams<T>) -> SvrModel<T> {
    let n = x.len();
    assert_eq!(n, y.len());
    assert!(n > 0, "empty training set");

    // dense Gram matrix
    let mut k = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = rbf(&x[i], &x[j], p.gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }

    // beta = [alpha; alpha*], gradient of 1/2 b^T Q b + p^T b
    let m2 = 2 * n;
    let mut beta = vec![T::zero(); m2];
    let mut g: Vec<T> = (0..m2)
        .map(|t| {
            if t < n {
                p.epsilon - y[t]
            } else {
                p.epsilon + y[t - n]
            }
        })
        .collect();

    let mut iterations = 0;
    let mut gap = T::infinity();
    while iterations < p.max_iter {
        // most violating "up" index
        let mut m_val = T::neg_infinity();
        let mut i_sel = usize::MAX;
        for t in 0..m2 {
            let a: T = sign(t, n);
            let in_up = if a > T::zero() {
                beta[t] < p.c
            } else {
                beta[t] > T::zero()
            };
            if in_up {
                let v = -a * g[t];
                if v > m_val {
                    m_val = v;
                    i_sel = t;
                }
            }
        }
        // "low" bracket for the stopping test
        let mut big_m = T::infinity();
        for t in 0..m2 {
            let a: T = sign(t, n);
            let in_low = if a > T::zero() {
                beta[t] > T::zero()
            } else {
                beta[t] < p.c
            };
            if in_low {
                big_m = big_m.min(-a * g[t]);
            }
        }
        gap = m_val - big_m;
        if !(gap > p.tol) || i_sel == usize::MAX {
            break;
        }

        // second-order pair selection among sufficiently violating lows
        let ai: T = sign(i_sel, n);
        let ki = i_sel % n;
        let tau = T::of(1e-12);
        let mut best_gain = T::neg_infinity();
        let mut j_sel = usize::MAX;
        for t in 0..m2 {
            let a: T = sign(t, n);
            let in_low = if a > T::zero() {
                beta[t] > T::zero()
            } else {
                beta[t] < p.c
            };
            if !in_low {
                continue;
            }
            let bt = m_val + a * g[t];
            if bt > T::zero() {
                let kt = t % n;
                let eta = (k[ki * n + ki] + k[kt * n + kt]
                    - T::of(2.0) * k[ki * n + kt])
                    .max(tau);
                let gain = bt * bt / eta;
                if gain > best_gain {
                    best_gain = gain;
                    j_sel = t;
                }
            }
        }
        if j_sel == usize::MAX {
            break;
        }

        // closed-form pair step: beta_i += a_i d, beta_j -= a_j d
        let aj: T = sign(j_sel, n);
        let kj = j_sel % n;
        let eta = (k[ki * n + ki] + k[kj * n + kj] - T::of(2.0) * k[ki * n + kj]).max(tau);
        let d_unc = -(ai * g[i_sel] - aj * g[j_sel]) / eta;
        let (lo_i, hi_i) = if ai > T::zero() {
            (-beta[i_sel], p.c - beta[i_sel])
        } else {
            (beta[i_sel] - p.c, beta[i_sel])
        };
        let (lo_j, hi_j) = if aj > T::zero() {
            (beta[j_sel] - p.c, beta[j_sel])
        } else {
            (-beta[j_sel], p.c - beta[j_sel])
        };
        let d = d_unc.max(lo_i.max(lo_j)).min(hi_i.min(hi_j));
        if d == T::zero() {
            break;
        }
        beta[i_sel] = beta[i_sel] + ai * d;
        beta[j_sel] = beta[j_sel] - aj * d;
        for t in 0..m2 {
            let a: T = sign(t, n);
            g[t] = g[t] + a * d * (k[(t % n) * n + ki] - k[(t % n) * n + kj]);
        }
        iterations += 1;
    }

    // bias from the final violation bracket
    let mut gmax = T::neg_infinity();
    let mut gmin = T::infinity();
    for t in 0..m2 {
        let a: T = sign(t, n);
        let in_up = if a > T::zero() {
            beta[t] < p.c
        } else {
            beta[t] > T::zero()
        };
        let in_low = if a > T::zero() {
            beta[t] > T::zero()
        } else {
            beta[t] < p.c
        };
        if in_up {
            gmax = gmax.max(-a * g[t]);
        }
        if in_low {
            gmin = gmin.min(-a * g[t]);
        }
    }
    let bias = (gmax + gmin) / T::of(2.0);

    let mut support = Vec::new();
    let mut coeff = Vec::new();
    for i in 0..n {
        let net = beta[i] - beta[n + i];
        if net.abs() > T::of(1e-12) {
            support.push(x[i].clone());
            coeff.push(net);
        }
    }
    SvrModel {
        gamma: p.gamma,
        bias,
        support,
        coeff,
        kkt_gap: gap,
        iterations,
    }
}

/// Dual objective (maximization form) of a multiplier vector
/// `beta = [alpha; alpha*]`; shared by training diagnostics and the
/// reference solver used in tests.
pub fn dual_objective<T: Real>(x: &[Vec<T>], y: &[T], beta: &[T], p: &SvrParams<T>) -> T {
    let n = x.len();
    let net: Vec<T> = (0..n).map(|i| beta[i] - beta[n + i]).collect();
    let mut quad = T::zero();
    for i in 0..n {
        for j in 0..n {
            quad = quad + net[i] * net[j] * rbf(&x[i], &x[j], p.gamma);
        }
    }
    let tube: T = (0..n).map(|i| beta[i] + beta[n + i]).sum();
    let fit: T = (0..n).map(|i| y[i] * net[i]).sum();
    -quad / T::of(2.0) - p.epsilon * tube + fit
}
