//! One-class support vector machine with an RBF kernel, built from
//! scratch.
//!
//! Training solves the nu-parameterized dual
//!
//! ```text
//!   minimize   (1/2) a' K a
//!   subject to 0 <= a_i <= 1/(nu n),   sum_i a_i = 1
//! ```
//!
//! with sequential two-coordinate updates: each step picks the pair with
//! maximal Karush-Kuhn-Tucker violation (the most negative and most
//! positive gradient among coordinates free to move) and shifts mass
//! between them, which preserves the simplex constraint exactly. The
//! offset `rho` is the mean gradient over margin support vectors, falling
//! back to the largest gradient among bound support vectors when none are
//! strictly inside the box. The decision function is
//! `f(x) = sum_i a_i K(x_i, x) - rho`; `f(x) >= 0` marks an inlier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default KKT tolerance for training.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Default cap on two-coordinate pair updates.
pub const DEFAULT_MAX_PAIRS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub gamma: f64,
}

impl KernelParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::ParamRange {
                name: "gamma",
                value: gamma,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        Ok(Self { gamma })
    }
}

/// Radial-basis-function kernel `exp(-gamma ||x - y||^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], params: &KernelParams) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let sq: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    Ok((-params.gamma * sq).exp())
}

fn rbf2(x: [f64; 2], y: [f64; 2], gamma: f64) -> f64 {
    let d0 = x[0] - y[0];
    let d1 = x[1] - y[1];
    (-gamma * (d0 * d0 + d1 * d1)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Novelty {
    Inlier,
    Outlier,
}

/// Trained one-class SVM over 2-dimensional points. Only points with
/// nonzero dual coefficient are stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OcSvmModel {
    pub support: Vec<[f64; 2]>,
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub nu: f64,
    pub gamma: f64,
}

impl OcSvmModel {
    /// Decision value `sum_i a_i K(x_i, x) - rho`.
    pub fn decision(&self, x: [f64; 2]) -> f64 {
        let s: f64 = self
            .support
            .iter()
            .zip(&self.alpha)
            .map(|(sv, &a)| a * rbf2(*sv, x, self.gamma))
            .sum();
        s - self.rho
    }

    pub fn predict(&self, x: [f64; 2]) -> Novelty {
        if self.decision(x) >= 0.0 {
            Novelty::Inlier
        } else {
            Novelty::Outlier
        }
    }

    /// Dual objective `(1/2) a' K a` over the stored support vectors.
    pub fn dual_objective(&self) -> f64 {
        let n = self.support.len();
        let mut obj = 0.0;
        for i in 0..n {
            for j in 0..n {
                obj += self.alpha[i]
                    * self.alpha[j]
                    * rbf2(self.support[i], self.support[j], self.gamma);
            }
        }
        0.5 * obj
    }

    /// Decision values over a regular grid, row-major with `x` varying
    /// fastest, for external boundary plotting.
    pub fn decision_grid(
        &self,
        x_bounds: (f64, f64),
        y_bounds: (f64, f64),
        resolution: usize,
    ) -> Result<Vec<(f64, f64, f64)>> {
        if resolution == 0 {
            return Err(Error::ZeroResolution);
        }
        let step = |lo: f64, hi: f64, i: usize| {
            if resolution == 1 {
                (lo + hi) / 2.0
            } else {
                lo + (hi - lo) * i as f64 / (resolution - 1) as f64
            }
        };
        let mut rows = Vec::with_capacity(resolution * resolution);
        for yi in 0..resolution {
            let y = step(y_bounds.0, y_bounds.1, yi);
            for xi in 0..resolution {
                let x = step(x_bounds.0, x_bounds.1, xi);
                rows.push((x, y, self.decision([x, y])));
            }
        }
        Ok(rows)
    }
}

/// Train a one-class SVM on 2-dimensional points.
pub fn fit_ocsvm(points: &[[f64; 2]], nu: f64, params: &KernelParams) -> Result<OcSvmModel> {
    fit_ocsvm_with(points, nu, params, DEFAULT_TOLERANCE, DEFAULT_MAX_PAIRS)
}

/// Training with explicit tolerance and iteration budget.
pub fn fit_ocsvm_with(
    points: &[[f64; 2]],
    nu: f64,
    params: &KernelParams,
    tolerance: f64,
    max_pairs: usize,
) -> Result<OcSvmModel> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::ParamRange {
            name: "nu",
            value: nu,
            min: 0.0,
            max: 1.0,
        });
    }
    KernelParams::new(params.gamma)?;
    let gamma = params.gamma;
    let c = 1.0 / (nu * n as f64);

    // Dense Gram matrix; training sets here are per-cluster and small.
    let mut k = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = rbf2(points[i], points[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }

    // Feasible start: fill the box from the front, as many coordinates at
    // the upper bound as fit, one fractional remainder.
    let mut alpha = vec![0.0f64; n];
    let full = (nu * n as f64).floor() as usize;
    let mut remaining = 1.0;
    for a in alpha.iter_mut().take(full.min(n)) {
        *a = c.min(remaining);
        remaining -= *a;
    }
    if remaining > 0.0 {
        if full < n {
            alpha[full] = remaining;
        } else {
            alpha[n - 1] += remaining; // nu = 1 rounding dust
        }
    }

    // Gradient of the objective: g = K alpha.
    let mut grad = vec![0.0f64; n];
    for i in 0..n {
        let mut g = 0.0;
        for j in 0..n {
            if alpha[j] > 0.0 {
                g += k[i * n + j] * alpha[j];
            }
        }
        grad[i] = g;
    }

    let at_upper = |a: f64| a >= c * (1.0 - 1e-12);
    let at_lower = |a: f64| a <= c * 1e-12;

    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _pair in 0..max_pairs {
        // i: smallest gradient among coordinates that can grow;
        // j: largest gradient among coordinates that can shrink.
        let mut i_up: Option<usize> = None;
        let mut j_lo: Option<usize> = None;
        for idx in 0..n {
            if !at_upper(alpha[idx]) && i_up.is_none_or(|b| grad[idx] < grad[b]) {
                i_up = Some(idx);
            }
            if !at_lower(alpha[idx]) && j_lo.is_none_or(|b| grad[idx] > grad[b]) {
                j_lo = Some(idx);
            }
        }
        let (i, j) = match (i_up, j_lo) {
            (Some(i), Some(j)) => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        residual = grad[j] - grad[i];
        if residual <= tolerance {
            converged = true;
            break;
        }

        let eta = k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j];
        let unconstrained = if eta > 1e-12 { residual / eta } else { f64::MAX };
        let delta = unconstrained.min(c - alpha[i]).min(alpha[j]);
        if delta <= 0.0 {
            converged = true;
            break;
        }

        alpha[i] = (alpha[i] + delta).min(c);
        alpha[j] = (alpha[j] - delta).max(0.0);
        for idx in 0..n {
            grad[idx] += delta * (k[idx * n + i] - k[idx * n + j]);
        }
    }

    if !converged {
        return Err(Error::SvmNoConvergence {
            residual,
            pairs: max_pairs,
        });
    }

    // Offset: mean gradient over margin support vectors, else the largest
    // gradient among bound support vectors.
    let margin: Vec<usize> = (0..n)
        .filter(|&i| !at_lower(alpha[i]) && !at_upper(alpha[i]))
        .collect();
    let rho = if !margin.is_empty() {
        margin.iter().map(|&i| grad[i]).sum::<f64>() / margin.len() as f64
    } else {
        (0..n)
            .filter(|&i| !at_lower(alpha[i]))
            .map(|i| grad[i])
            .fold(f64::NEG_INFINITY, f64::max)
    };

    let mut support = Vec::new();
    let mut kept_alpha = Vec::new();
    for i in 0..n {
        if alpha[i] > 1e-12 {
            support.push(points[i]);
            kept_alpha.push(alpha[i]);
        }
    }

    Ok(OcSvmModel {
        support,
        alpha: kept_alpha,
        rho,
        nu,
        gamma,
    })
}
