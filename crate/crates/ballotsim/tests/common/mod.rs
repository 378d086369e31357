//! Shared test oracles. Everything here is deliberately independent of
//! the library's implementation paths: a different RNG family, direct
//! brute-force algorithms, and no reuse of solver internals.

#![allow(dead_code)]

/// SplitMix64 — a different generator family from the library's ChaCha
/// streams, for independent Monte-Carlo oracles.
pub struct OracleRng {
    state: u64,
}

impl OracleRng {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(f64::MIN_POSITIVE);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Categorical draw from probabilities summing to 1.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }
}

// --- one-class SVM dual oracle -------------------------------------------

fn rbf(a: [f64; 2], b: [f64; 2], gamma: f64) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    (-gamma * (d0 * d0 + d1 * d1)).exp()
}

/// Euclidean projection of `v` onto `{0 <= a_i <= c, sum a_i = 1}` by
/// bisection on the shift multiplier.
pub fn project_capped_simplex(v: &[f64], c: f64) -> Vec<f64> {
    let sum_at = |tau: f64| -> f64 {
        v.iter().map(|&x| (x - tau).clamp(0.0, c)).sum()
    };
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - c - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|&x| (x - tau).clamp(0.0, c)).collect()
}

pub struct QpOracle {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    points: Vec<[f64; 2]>,
    gamma: f64,
}

impl QpOracle {
    pub fn decision(&self, x: [f64; 2]) -> f64 {
        let s: f64 = self
            .points
            .iter()
            .zip(&self.alpha)
            .map(|(&p, &a)| a * rbf(p, x, self.gamma))
            .sum();
        s - self.rho
    }
}

/// Solve the one-class dual by projected gradient descent to tight
/// tolerance. Small instances only.
pub fn qp_oracle(points: &[[f64; 2]], nu: f64, gamma: f64) -> QpOracle {
    let n = points.len();
    let c = 1.0 / (nu * n as f64);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = rbf(points[i], points[j], gamma);
        }
    }
    // Lipschitz constant of the gradient is at most the trace.
    let step = 1.0 / n as f64;
    let mut alpha = project_capped_simplex(&vec![1.0 / n as f64; n], c);
    for _ in 0..200_000 {
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut g = 0.0;
            for j in 0..n {
                g += k[i * n + j] * alpha[j];
            }
            grad[i] = g;
        }
        let trial: Vec<f64> = alpha
            .iter()
            .zip(&grad)
            .map(|(&a, &g)| a - step * g)
            .collect();
        let next = project_capped_simplex(&trial, c);
        let delta: f64 = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b).abs())
            .sum();
        alpha = next;
        if delta < 1e-14 {
            break;
        }
    }

    let mut grad = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            grad[i] += k[i * n + j] * alpha[j];
        }
    }
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();

    let lower = |a: f64| a <= c * 1e-9;
    let upper = |a: f64| a >= c * (1.0 - 1e-9);
    let margin: Vec<usize> = (0..n)
        .filter(|&i| !lower(alpha[i]) && !upper(alpha[i]))
        .collect();
    let rho = if !margin.is_empty() {
        margin.iter().map(|&i| grad[i]).sum::<f64>() / margin.len() as f64
    } else {
        (0..n)
            .filter(|&i| !lower(alpha[i]))
            .map(|i| grad[i])
            .fold(f64::NEG_INFINITY, f64::max)
    };

    QpOracle {
        alpha,
        rho,
        objective,
        points: points.to_vec(),
        gamma,
    }
}

// --- symmetric eigenvalues (Jacobi) ---------------------------------------

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = cos * akp - sin * akq;
                    a[k][q] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = cos * apk - sin * aqk;
                    a[q][k] = sin * apk + cos * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

// --- ordinary least squares via explicit inverse ---------------------------

/// OLS coefficients by Gauss-Jordan inversion of the normal equations.
/// `x` row-major n x p (without intercept); intercept prepended.
pub fn pinv_ols(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let p = x[0].len() + 1;
    let design: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let mut row = vec![1.0];
            row.extend(&x[r]);
            row
        })
        .collect();
    // XtX and Xty
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for r in 0..n {
        for i in 0..p {
            xty[i] += design[r][i] * y[r];
            for j in 0..p {
                xtx[i][j] += design[r][i] * design[r][j];
            }
        }
    }
    // Gauss-Jordan inverse
    let mut aug: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut row = xtx[i].clone();
            row.extend((0..p).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let d = aug[col][col];
        assert!(d.abs() > 1e-12, "oracle: singular normal equations");
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != col {
                let f = aug[r][col];
                for c2 in 0..2 * p {
                    aug[r][c2] -= f * aug[col][c2];
                }
            }
        }
    }
    (0..p)
        .map(|i| (0..p).map(|j| aug[i][p + j] * xty[j]).sum())
        .collect()
}

// --- exhaustive searches ----------------------------------------------------

/// RSS of an OLS fit on the selected columns (via the pinv oracle).
pub fn oracle_rss(x: &[Vec<f64>], selected: &[usize], y: &[f64]) -> f64 {
    let n = x.len();
    let sub: Vec<Vec<f64>> = (0..n)
        .map(|r| selected.iter().map(|&c| x[r][c]).collect())
        .collect();
    let beta = pinv_ols(&sub, y);
    let mut rss = 0.0;
    for r in 0..n {
        let mut fit = beta[0];
        for (j, &c) in selected.iter().enumerate() {
            fit += beta[1 + j] * x[r][c];
        }
        rss += (y[r] - fit) * (y[r] - fit);
    }
    rss
}

/// Minimum AIC over all 2^m subsets; returns (aic, subset).
pub fn exhaustive_subset_aic(x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<usize>) {
    let n = x.len();
    let m = x[0].len();
    let aic = |rss: f64, p: usize| (n as f64) * (rss.max(1e-300) / n as f64).ln() + 2.0 * (p as f64 + 1.0);
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << m) {
        let selected: Vec<usize> = (0..m).filter(|&c| mask & (1 << c) != 0).collect();
        if n < selected.len() + 2 {
            continue;
        }
        let rss = oracle_rss(x, &selected, y);
        let a = aic(rss, selected.len());
        if a < best.0 {
            best = (a, selected);
        }
    }
    best
}

/// Exhaustive 2-cluster partition optimum of the k-means objective.
pub fn exhaustive_kmeans_2(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let dim = points[0].len();
    let mut best = f64::INFINITY;
    // fix point 0 in cluster 0 to halve the search
    for mask in 0u32..(1 << (n - 1)) {
        let assign: Vec<usize> = (0..n)
            .map(|i| {
                if i == 0 {
                    0
                } else {
                    ((mask >> (i - 1)) & 1) as usize
                }
            })
            .collect();
        let mut sums = vec![vec![0.0; dim]; 2];
        let mut counts = [0usize; 2];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        if counts[0] == 0 || counts[1] == 0 {
            continue;
        }
        let centroids: Vec<Vec<f64>> = (0..2)
            .map(|c| sums[c].iter().map(|s| s / counts[c] as f64).collect())
            .collect();
        let mut obj = 0.0;
        for (i, p) in points.iter().enumerate() {
            obj += p
                .iter()
                .zip(&centroids[assign[i]])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        if obj < best {
            best = obj;
        }
    }
    best
}

/// DBSCAN noise set from the explicit neighborhood graph.
pub fn dbscan_noise_oracle(values: &[f64], eps: f64, min_pts: usize) -> Vec<bool> {
    let n = values.len();
    let mut adjacency = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            adjacency[i][j] = (values[i] - values[j]).abs() <= eps;
        }
    }
    let core: Vec<bool> = (0..n)
        .map(|i| adjacency[i].iter().filter(|&&v| v).count() >= min_pts)
        .collect();
    (0..n)
        .map(|i| !core[i] && !(0..n).any(|j| core[j] && adjacency[i][j]))
        .collect()
}

// --- normal distribution helpers -------------------------------------------

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 erf polynomial.
pub fn normal_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * z.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-z * z).exp();
    let erf = if z >= 0.0 { erf } else { -erf };
    0.5 * (1.0 + erf)
}

/// Chi-square critical values at significance 0.01 for small df.
pub fn chi2_crit_01(df: usize) -> f64 {
    match df {
        1 => 6.6349,
        2 => 9.2103,
        3 => 11.3449,
        4 => 13.2767,
        5 => 15.0863,
        9 => 21.6660,
        _ => panic!("unsupported df {df}"),
    }
}

/// Mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
