//! Linear regression of region results on demographics, with stepwise
//! variable selection by AIC.
//!
//! The criterion is `AIC = n ln(RSS / n) + 2 (p + 1)` for `p` selected
//! variables plus an intercept. Selection is greedy forward-backward:
//! at each step the single addition or removal that lowers AIC the most
//! is applied, until no move improves it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Region-by-variable design matrix, row-major. One row per region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemographicMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub labels: Vec<String>,
}

impl DemographicMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, labels: Vec<String>) -> Self {
        assert_eq!(data.len(), rows * cols);
        assert_eq!(labels.len(), cols);
        Self {
            rows,
            cols,
            data,
            labels,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// Indices of columns with non-zero variance.
    pub fn varying_columns(&self) -> Vec<usize> {
        (0..self.cols)
            .filter(|&c| {
                let col = self.column(c);
                let first = col[0];
                col.iter().any(|&v| v != first)
            })
            .collect()
    }

    /// Rows restricted to `selected` columns, as points.
    pub fn select_rows(&self, selected: &[usize]) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| selected.iter().map(|&c| self.get(r, c)).collect())
            .collect()
    }
}

/// Fitted ordinary-least-squares model. `beta[0]` is the intercept,
/// `beta[1 + i]` pairs with `selected[i]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionModel {
    pub selected: Vec<usize>,
    pub beta: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
}

/// Solve least squares `min ||A b - y||` by Householder QR.
/// `a` is row-major `rows x cols`, `rows >= cols` required.
fn householder_lsq(a: &mut [f64], y: &mut [f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    if rows < cols {
        return Err(Error::SingularSystem);
    }
    for k in 0..cols {
        let mut norm = 0.0;
        for i in k..rows {
            norm += a[i * cols + k] * a[i * cols + k];
        }
        let norm = norm.sqrt();
        if norm < 1e-12 {
            return Err(Error::SingularSystem);
        }
        let mut alpha = -norm;
        if a[k * cols + k] < 0.0 {
            alpha = norm;
        }
        // Householder vector v for column k, stored implicitly.
        let mut v = vec![0.0; rows - k];
        v[0] = a[k * cols + k] - alpha;
        for i in k + 1..rows {
            v[i - k] = a[i * cols + k];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv < 1e-300 {
            continue;
        }
        for j in k..cols {
            let mut dot = 0.0;
            for i in k..rows {
                dot += v[i - k] * a[i * cols + j];
            }
            let scale = 2.0 * dot / vtv;
            for i in k..rows {
                a[i * cols + j] -= scale * v[i - k];
            }
        }
        let mut dot = 0.0;
        for i in k..rows {
            dot += v[i - k] * y[i];
        }
        let scale = 2.0 * dot / vtv;
        for i in k..rows {
            y[i] -= scale * v[i - k];
        }
    }
    // Back-substitute R b = Q' y.
    let mut beta = vec![0.0; cols];
    for k in (0..cols).rev() {
        let mut acc = y[k];
        for j in k + 1..cols {
            acc -= a[k * cols + j] * beta[j];
        }
        let diag = a[k * cols + k];
        if diag.abs() < 1e-12 {
            return Err(Error::SingularSystem);
        }
        beta[k] = acc / diag;
    }
    Ok(beta)
}

fn ols(x: &DemographicMatrix, selected: &[usize], y: &[f64]) -> Result<RegressionModel> {
    let n = x.rows;
    let p = selected.len();
    if n < p + 2 {
        return Err(Error::SingularSystem);
    }
    let cols = p + 1;
    let mut design = vec![0.0; n * cols];
    for r in 0..n {
        design[r * cols] = 1.0;
        for (j, &c) in selected.iter().enumerate() {
            design[r * cols + 1 + j] = x.get(r, c);
        }
    }
    let mut rhs = y.to_vec();
    let design_copy = design.clone();
    let beta = householder_lsq(&mut design, &mut rhs, n, cols)?;

    let mut fitted = vec![0.0; n];
    let mut rss = 0.0;
    for r in 0..n {
        let mut f = 0.0;
        for j in 0..cols {
            f += design_copy[r * cols + j] * beta[j];
        }
        fitted[r] = f;
        let e = y[r] - f;
        rss += e * e;
    }
    Ok(RegressionModel {
        selected: selected.to_vec(),
        beta,
        fitted,
        rss,
    })
}

/// AIC of an OLS fit: `n ln(RSS / n) + 2 (p + 1)`.
pub fn aic(n: usize, rss: f64, p: usize) -> f64 {
    (n as f64) * (rss.max(1e-300) / n as f64).ln() + 2.0 * (p as f64 + 1.0)
}

/// Greedy forward-backward stepwise selection minimizing AIC. Constant
/// columns are excluded up front. Deterministic: candidate moves are
/// evaluated in index order, additions before removals, strict
/// improvement required.
pub fn select_variables(x: &DemographicMatrix, y: &[f64]) -> Result<Vec<usize>> {
    if y.len() != x.rows {
        return Err(Error::DimensionMismatch {
            expected: x.rows,
            got: y.len(),
        });
    }
    let candidates = x.varying_columns();
    let mut selected: Vec<usize> = Vec::new();
    let mut current = aic(x.rows, ols(x, &selected, y)?.rss, 0);

    loop {
        let mut best: Option<(f64, Vec<usize>)> = None;

        for &c in &candidates {
            if selected.contains(&c) {
                continue;
            }
            if selected.len() + 3 > x.rows {
                break; // keep n > p + 2
            }
            let mut trial = selected.clone();
            trial.push(c);
            trial.sort_unstable();
            if let Ok(model) = ols(x, &trial, y) {
                let a = aic(x.rows, model.rss, trial.len());
                if best.as_ref().is_none_or(|(b, _)| a < *b) {
                    best = Some((a, trial));
                }
            }
        }
        for &c in selected.clone().iter() {
            let trial: Vec<usize> = selected.iter().copied().filter(|&s| s != c).collect();
            if let Ok(model) = ols(x, &trial, y) {
                let a = aic(x.rows, model.rss, trial.len());
                if best.as_ref().is_none_or(|(b, _)| a < *b) {
                    best = Some((a, trial));
                }
            }
        }

        match best {
            Some((a, trial)) if a < current - 1e-10 => {
                current = a;
                selected = trial;
            }
            _ => break,
        }
    }
    Ok(selected)
}

/// Ordinary least squares on the selected columns (plus intercept),
/// fitted over all regions.
pub fn fit_regression(
    x: &DemographicMatrix,
    selected: &[usize],
    y: &[f64],
) -> Result<RegressionModel> {
    if y.len() != x.rows {
        return Err(Error::DimensionMismatch {
            expected: x.rows,
            got: y.len(),
        });
    }
    ols(x, selected, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> DemographicMatrix {
        let labels = (0..cols).map(|c| format!("x{c}")).collect();
        DemographicMatrix::new(rows, cols, data, labels)
    }

    #[test]
    fn exact_linear_fit_recovers_coefficients() {
        // y = 3 + 2x
        let x = matrix(6, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let y: Vec<f64> = (0..6).map(|i| 3.0 + 2.0 * i as f64).collect();
        let model = fit_regression(&x, &[0], &y).unwrap();
        assert!((model.beta[0] - 3.0).abs() < 1e-10);
        assert!((model.beta[1] - 2.0).abs() < 1e-10);
        assert!(model.rss < 1e-18);
    }

    #[test]
    fn constant_response_gives_zero_slope() {
        let x = matrix(5, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = vec![7.0; 5];
        let model = fit_regression(&x, &[0], &y).unwrap();
        assert!((model.beta[0] - 7.0).abs() < 1e-10);
        assert!(model.beta[1].abs() < 1e-10);
    }

    #[test]
    fn singular_design_rejected() {
        // Two identical columns selected together.
        let x = matrix(5, 2, vec![
            1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 5.0, 5.0,
        ]);
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(matches!(
            fit_regression(&x, &[0, 1], &y),
            Err(Error::SingularSystem)
        ));
    }

    #[test]
    fn stepwise_selects_exact_signal() {
        // y depends on column 0 exactly; columns 1..6 vary but are ignored.
        let n = 24;
        let mut data = vec![0.0; n * 6];
        let mut y = vec![0.0; n];
        let mut s = 1u64;
        let mut next = || {
            // small deterministic LCG for filler columns
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for r in 0..n {
            let x0 = r as f64 / n as f64;
            data[r * 6] = x0;
            for c in 1..6 {
                data[r * 6 + c] = next();
            }
            y[r] = 2.0 * x0;
        }
        let x = matrix(n, 6, data);
        let selected = select_variables(&x, &y).unwrap();
        assert_eq!(selected, vec![0]);
    }

    #[test]
    fn stepwise_on_orthogonal_noise_selects_nothing() {
        // Columns constructed orthogonal to y (and centered), so no single
        // move can reduce RSS.
        let n = 8;
        let y = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        // Each column constant: zero variance, excluded. Add one column
        // orthogonal to y with variance.
        let col: Vec<f64> = vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let mut data = vec![0.0; n * 2];
        for r in 0..n {
            data[r * 2] = 5.0; // constant -> dropped
            data[r * 2 + 1] = col[r]; // orthogonal to y
        }
        let x = matrix(n, 2, data);
        let selected = select_variables(&x, &y).unwrap();
        assert!(selected.is_empty());
    }

    #[test]
    fn varying_columns_flags_constants() {
        let x = matrix(3, 2, vec![1.0, 0.1, 1.0, 0.2, 1.0, 0.3]);
        assert_eq!(x.varying_columns(), vec![1]);
    }

    #[test]
    fn aic_penalizes_parameters() {
        let base = aic(100, 1.0, 0);
        let more = aic(100, 1.0, 3);
        assert!((more - base - 6.0).abs() < 1e-12);
    }
}
