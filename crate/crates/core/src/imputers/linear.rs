//! Least-squares machinery shared by the norm-family imputers and PMM.
//!
//! Fits are ordinary least squares via the normal equations. Coefficient
//! uncertainty is the classical σ̂²(XᵀX)⁻¹; proper draws perturb β with a
//! triangular solve against the Cholesky factor of XᵀX.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ImputeError;
use crate::data::{Cell, ColumnKind, Dataset};

/// Fixed mapping from predictor columns to design-matrix features:
/// intercept, then numeric columns as-is, then c−1 dummies per categorical
/// column (level 0 is the baseline).
#[derive(Debug, Clone)]
pub(super) struct DesignMap {
    features: usize,
    predictors: Vec<usize>,
}

impl DesignMap {
    pub fn new(data: &Dataset, target: usize) -> Self {
        let predictors: Vec<usize> = (0..data.n_cols()).filter(|&j| j != target).collect();
        let mut features = 1;
        for &j in &predictors {
            features += match data.column(j).kind {
                ColumnKind::Numeric => 1,
                ColumnKind::Categorical => data.column(j).n_levels().saturating_sub(1),
            };
        }
        DesignMap { features, predictors }
    }

    pub fn n_features(&self) -> usize {
        self.features
    }

    /// Design row for one data row; the data must be complete on predictors.
    pub fn fill_row(&self, data: &Dataset, row: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[0] = 1.0;
        let mut f = 1;
        for &j in &self.predictors {
            match data.get(row, j) {
                Cell::Num(v) => {
                    out[f] = v;
                    f += 1;
                }
                Cell::Cat(k) => {
                    let levels = data.column(j).n_levels();
                    if k > 0 {
                        out[f + (k as usize - 1)] = 1.0;
                    }
                    f += levels - 1;
                }
                Cell::Missing => {
                    unreachable!("column {} missing at row {row} inside a model fit", j)
                }
            }
        }
        debug_assert_eq!(f, self.features);
    }

    pub fn matrix(&self, data: &Dataset, rows: &[usize]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows.len(), self.features);
        let mut buf = vec![0.0; self.features];
        for (i, &r) in rows.iter().enumerate() {
            self.fill_row(data, r, &mut buf);
            for (f, &v) in buf.iter().enumerate() {
                m[(i, f)] = v;
            }
        }
        m
    }
}

pub(super) struct OlsFit {
    pub beta: DVector<f64>,
    pub sigma: f64,
    /// Lower Cholesky factor of XᵀX (after any ridge bump).
    chol_l: DMatrix<f64>,
}

const RIDGE: f64 = 1e-6;

/// OLS through the normal equations; a failed Cholesky gets one retry with
/// a small ridge on the diagonal before giving up as rank deficient.
pub(super) fn fit_ols(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    col_name: &str,
) -> Result<OlsFit, ImputeError> {
    let n = x.nrows();
    let q = x.ncols();
    if n < q + 2 {
        return Err(ImputeError::TooFewRows {
            col: col_name.to_string(),
            have: n,
            need: q + 2,
        });
    }
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let chol = match nalgebra::Cholesky::new(xtx.clone()) {
        Some(c) => c,
        None => {
            let scale = xtx.diagonal().mean().max(1.0);
            let ridged = &xtx + DMatrix::identity(q, q) * (RIDGE * scale);
            nalgebra::Cholesky::new(ridged).ok_or_else(|| ImputeError::FitFailed {
                col: col_name.to_string(),
                reason: "design matrix is rank deficient".to_string(),
            })?
        }
    };
    let beta = chol.solve(&xty);
    let residuals = y - x * &beta;
    let dof = (n - q) as f64;
    let sigma = (residuals.norm_squared() / dof).sqrt();
    if !sigma.is_finite() || beta.iter().any(|b| !b.is_finite()) {
        return Err(ImputeError::FitFailed {
            col: col_name.to_string(),
            reason: "non-finite coefficients".to_string(),
        });
    }
    Ok(OlsFit { beta, sigma, chol_l: chol.l() })
}

impl OlsFit {
    /// β* = β̂ + σ̂·L⁻ᵀz, a draw from the estimated coefficient distribution
    /// (L⁻ᵀ L⁻¹ = (XᵀX)⁻¹).
    pub fn draw_beta(&self, rng: &mut ChaCha8Rng) -> Result<DVector<f64>, ImputeError> {
        let q = self.beta.len();
        let z = DVector::from_fn(q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let spread = self
            .chol_l
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| ImputeError::FitFailed {
                col: String::new(),
                reason: "singular Cholesky factor".to_string(),
            })?;
        Ok(&self.beta + spread * self.sigma)
    }

    pub fn predict_row(&self, design_row: &[f64]) -> f64 {
        design_row.iter().zip(self.beta.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Predicts with an explicit coefficient vector.
pub(super) fn predict_with(beta: &DVector<f64>, design_row: &[f64]) -> f64 {
    design_row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum()
}
