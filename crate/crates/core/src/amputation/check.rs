//! Post-hoc check that a generated mask has the dependence structure its
//! plan promised: MAR masks should hit high-score rows more often, MCAR
//! masks should ignore the scores entirely.

use crate::stattest;

use super::{
    standardized_columns, weighted_score, AmputationPlan, AmputeError, MaskReplicate, Mechanism,
};
use crate::data::Dataset;

#[derive(Debug, Clone)]
pub struct PatternDependence {
    pub pattern: usize,
    pub n_rows: usize,
    pub n_amputed_rows: usize,
    /// Spearman correlation between row score and the row-was-amputated
    /// indicator.
    pub rho: f64,
    /// One-sided p-value for rho > 0.
    pub p_value: f64,
}

#[derive(Debug, Clone)]
pub struct MarDependenceReport {
    /// Empty for MCAR plans.
    pub per_pattern: Vec<PatternDependence>,
    pub pooled_rho: f64,
    pub pooled_p: f64,
    /// Amputation rate by score quartile, lowest quartile first.
    pub quartile_rates: [f64; 4],
}

/// Correlates each row's plan score with whether the realized mask removed
/// cells from it. For MCAR the score is the unweighted sum of all column
/// z-scores, which the mechanism ignores by construction, so `pooled_p`
/// should stay large.
pub fn mar_dependence_check(
    complete: &Dataset,
    replicate: &MaskReplicate,
    plan: &AmputationPlan,
) -> Result<MarDependenceReport, AmputeError> {
    let n = complete.n_rows();
    let p = complete.n_cols();
    if replicate.n_rows != n || replicate.n_cols != p {
        return Err(AmputeError::Mismatch(format!(
            "replicate is {}x{}, dataset is {n}x{p}",
            replicate.n_rows, replicate.n_cols
        )));
    }
    let z = standardized_columns(complete);
    let row_amputed = |r: usize| (0..p).any(|j| replicate.is_masked(r, j));

    let mut per_pattern = Vec::new();
    let mut pooled: Vec<(f64, f64)> = Vec::with_capacity(n);

    match plan.mechanism {
        Mechanism::Mcar => {
            for r in 0..n {
                let score: f64 = (0..p).map(|j| z[r * p + j]).sum();
                pooled.push((score, f64::from(u8::from(row_amputed(r)))));
            }
        }
        Mechanism::Mar => {
            if replicate.pattern_assignment.len() != n {
                return Err(AmputeError::Mismatch(
                    "MAR replicate lacks a pattern assignment".into(),
                ));
            }
            for (k, pat) in plan.patterns.iter().enumerate() {
                let rows: Vec<usize> = (0..n)
                    .filter(|&r| replicate.pattern_assignment[r] == k)
                    .collect();
                if rows.is_empty() {
                    continue;
                }
                let scores: Vec<f64> =
                    rows.iter().map(|&r| weighted_score(&z, p, r, &pat.weights)).collect();
                let flags: Vec<f64> = rows
                    .iter()
                    .map(|&r| f64::from(u8::from(row_amputed(r))))
                    .collect();
                let n_amputed_rows = flags.iter().filter(|&&f| f > 0.0).count();
                let (rho, p_value) = if rows.len() >= 4 {
                    let rho = stattest::spearman(&scores, &flags);
                    (rho, stattest::spearman_p_positive(rho, rows.len()))
                } else {
                    (f64::NAN, 1.0)
                };
                per_pattern.push(PatternDependence {
                    pattern: k,
                    n_rows: rows.len(),
                    n_amputed_rows,
                    rho,
                    p_value,
                });
                // Pool on the within-pattern standardized scale so patterns
                // with different weight norms mix fairly.
                let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
                    / (scores.len() as f64 - 1.0).max(1.0);
                let sd = var.sqrt();
                for (s, f) in scores.iter().zip(&flags) {
                    let zs = if sd > 0.0 { (s - mean) / sd } else { 0.0 };
                    pooled.push((zs, *f));
                }
            }
        }
    }

    let (xs, ys): (Vec<f64>, Vec<f64>) = pooled.iter().copied().unzip();
    let (pooled_rho, pooled_p) = if xs.len() >= 4 {
        let rho = stattest::spearman(&xs, &ys);
        (rho, stattest::spearman_p_positive(rho, xs.len()))
    } else {
        (f64::NAN, 1.0)
    };

    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].0.total_cmp(&pooled[b].0));
    let mut quartile_rates = [0.0; 4];
    for (q, rate) in quartile_rates.iter_mut().enumerate() {
        let lo = q * pooled.len() / 4;
        let hi = (q + 1) * pooled.len() / 4;
        if hi > lo {
            *rate = order[lo..hi].iter().map(|&i| pooled[i].1).sum::<f64>() / (hi - lo) as f64;
        }
    }

    Ok(MarDependenceReport { per_pattern, pooled_rho, pooled_p, quartile_rates })
}
