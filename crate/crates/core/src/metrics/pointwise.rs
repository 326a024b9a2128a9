//! Pointwise accuracy scores over the masked cells: NRMSE on the
//! standardized scale and mean percentage error on the raw scale.

use super::{Metric, MetricError, Score};
use crate::data::{compute_stats, standardize, Cell, Dataset};

/// Pairs of (true value, imputed value) over masked numeric cells.
fn masked_numeric_pairs(
    complete: &Dataset,
    imputed: &Dataset,
    mask: &[bool],
) -> Result<Vec<(f64, f64)>, MetricError> {
    let p = complete.n_cols();
    if imputed.n_rows() != complete.n_rows() || imputed.n_cols() != p {
        return Err(MetricError::ShapeMismatch(format!(
            "complete is {}x{}, imputed is {}x{}",
            complete.n_rows(),
            p,
            imputed.n_rows(),
            imputed.n_cols()
        )));
    }
    if mask.len() != complete.n_rows() * p {
        return Err(MetricError::ShapeMismatch(format!(
            "mask has {} entries for {} cells",
            mask.len(),
            complete.n_rows() * p
        )));
    }
    let mut pairs = Vec::new();
    for r in 0..complete.n_rows() {
        for c in 0..p {
            if !mask[r * p + c] {
                continue;
            }
            let (truth, guess) = (complete.get(r, c), imputed.get(r, c));
            match (truth, guess) {
                (Cell::Num(t), Cell::Num(g)) => pairs.push((t, g)),
                (Cell::Cat(_), _) => {}
                (_, Cell::Missing) => {
                    return Err(MetricError::ShapeMismatch(format!(
                        "imputed cell ({r}, {c}) is still missing"
                    )));
                }
                _ => {
                    return Err(MetricError::ShapeMismatch(format!(
                        "cell ({r}, {c}) changed type between complete and imputed"
                    )));
                }
            }
        }
    }
    Ok(pairs)
}

/// Root mean squared error over masked numeric cells after standardizing
/// both datasets with the complete data's statistics.
pub fn nrmse(complete: &Dataset, imputed: &Dataset, mask: &[bool]) -> Result<Score, MetricError> {
    let stats = compute_stats(complete)?;
    let z_complete = standardize(complete, &stats)?;
    let z_imputed = standardize(imputed, &stats)?;
    let pairs = masked_numeric_pairs(&z_complete, &z_imputed, mask)?;
    if pairs.is_empty() {
        return Err(MetricError::NothingMasked);
    }
    let k = pairs.len() as f64;
    let sse: f64 = pairs.iter().map(|(t, g)| (t - g) * (t - g)).sum();
    Ok(Score::new(Metric::Nrmse, (sse / k).sqrt()))
}

/// Mean percentage error (100/k)·Σ (x−y)/x over masked numeric cells on the
/// raw scale. Returns None when any true value is zero: the quantity is
/// undefined there. Reported for completeness, never used for ranking.
pub fn mpe(
    complete: &Dataset,
    imputed: &Dataset,
    mask: &[bool],
) -> Result<Option<Score>, MetricError> {
    let pairs = masked_numeric_pairs(complete, imputed, mask)?;
    if pairs.is_empty() {
        return Err(MetricError::NothingMasked);
    }
    if pairs.iter().any(|(t, _)| *t == 0.0) {
        return Ok(None);
    }
    let k = pairs.len() as f64;
    let total: f64 = pairs.iter().map(|(t, g)| (t - g) / t).sum();
    Ok(Some(Score::new(Metric::Mpe, 100.0 * total / k)))
}
