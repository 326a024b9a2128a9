//! Energy distance between two equally sized samples.
//!
//! Estimator: e² = (2·Σᵢⱼ‖xᵢ−yⱼ‖ − Σᵢⱼ‖xᵢ−xⱼ‖ − Σᵢⱼ‖yᵢ−yⱼ‖) / n², all three
//! double sums over the full n×n grid including diagonals. The kernel is
//! tiled and the tile partials are reduced in a fixed order, so results are
//! bit-identical no matter how many rayon threads run.

use rayon::prelude::*;

use super::{Metric, MetricError, Score};
use crate::data::{compute_stats, one_hot_encode, standardize, Dataset, EncodedMatrix};

const TILE: usize = 128;

#[inline]
fn row_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

/// Sum of all pairwise distances between rows of `x` and rows of `y`.
fn pair_sum(x: &EncodedMatrix, y: &EncodedMatrix) -> f64 {
    let n_x = x.n_rows();
    let n_y = y.n_rows();
    let tiles_x = n_x.div_ceil(TILE);
    let tiles_y = n_y.div_ceil(TILE);
    let partials: Vec<f64> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|t| {
            let ti = t / tiles_y;
            let tj = t % tiles_y;
            let rows_i = ti * TILE..((ti + 1) * TILE).min(n_x);
            let rows_j = tj * TILE..((tj + 1) * TILE).min(n_y);
            let mut acc = 0.0;
            for i in rows_i {
                let xi = x.row(i);
                for j in rows_j.clone() {
                    acc += row_distance(xi, y.row(j));
                }
            }
            acc
        })
        .collect();
    // Serial reduction in tile order keeps the result thread-count independent.
    partials.iter().sum()
}

/// Lexicographic order on the raw buffers; used only to canonicalize the
/// argument order so that e(x, y) and e(y, x) run the identical computation.
fn canonical_first(x: &EncodedMatrix, y: &EncodedMatrix) -> bool {
    for i in 0..x.n_rows() {
        for (a, b) in x.row(i).iter().zip(y.row(i)) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Less => return true,
                std::cmp::Ordering::Greater => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
    }
    true
}

/// Squared energy distance between two samples of equal size and width.
pub fn energy_distance(x: &EncodedMatrix, y: &EncodedMatrix) -> Result<f64, MetricError> {
    if x.width() != y.width() {
        return Err(MetricError::ShapeMismatch(format!(
            "widths {} vs {}",
            x.width(),
            y.width()
        )));
    }
    if x.n_rows() != y.n_rows() {
        return Err(MetricError::ShapeMismatch(format!(
            "row counts {} vs {}",
            x.n_rows(),
            y.n_rows()
        )));
    }
    if x.n_rows() == 0 {
        return Err(MetricError::ShapeMismatch("empty samples".into()));
    }
    let (a, b) = if canonical_first(x, y) { (x, y) } else { (y, x) };
    let s_ab = pair_sum(a, b);
    let s_aa = pair_sum(a, a);
    let s_bb = pair_sum(b, b);
    let n = x.n_rows() as f64;
    Ok((2.0 * s_ab - s_aa - s_bb) / (n * n))
}

/// Ground-truth score: standardize the imputed dataset with the complete
/// data's statistics, one-hot encode both, and take the energy distance.
pub fn standardized_energy_pipeline(
    complete: &Dataset,
    imputed: &Dataset,
) -> Result<Score, MetricError> {
    if complete.schema() != imputed.schema() {
        return Err(MetricError::ShapeMismatch("schemas differ".into()));
    }
    let stats = compute_stats(complete)?;
    let z_complete = standardize(complete, &stats)?;
    let z_imputed = standardize(imputed, &stats)?;
    let enc_complete = one_hot_encode(&z_complete)?;
    let enc_imputed = one_hot_encode(&z_imputed)?;
    let e = energy_distance(&enc_complete, &enc_imputed)?;
    Ok(Score::new(Metric::EnergyDistance, e))
}
