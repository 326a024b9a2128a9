//! Column-marginal imputers: mean, median (mode for categorical), zero,
//! and random draws from the observed values.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ImputeError;
use crate::data::{Cell, ColumnKind, Dataset};

fn missing_rows(data: &Dataset, col: usize) -> Vec<usize> {
    (0..data.n_rows()).filter(|&r| data.is_missing(r, col)).collect()
}

fn require_observed<T>(values: &[T], data: &Dataset, col: usize) -> Result<(), ImputeError> {
    if values.is_empty() {
        Err(ImputeError::EmptyColumn(data.column(col).name.clone()))
    } else {
        Ok(())
    }
}

/// Most frequent level; ties resolve to the smallest level index.
pub(super) fn mode(levels: &[u32], n_levels: usize) -> u32 {
    let mut counts = vec![0usize; n_levels];
    for &l in levels {
        counts[l as usize] += 1;
    }
    let mut best = 0u32;
    for (l, &c) in counts.iter().enumerate() {
        if c > counts[best as usize] {
            best = l as u32;
        }
    }
    best
}

pub(super) fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn impute_mean(data: &Dataset) -> Result<Dataset, ImputeError> {
    let mut out = data.clone();
    for j in 0..data.n_cols() {
        let rows = missing_rows(data, j);
        if rows.is_empty() {
            continue;
        }
        let values = data.observed_numeric(j);
        require_observed(&values, data, j)?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        for r in rows {
            out.set(r, j, Cell::Num(mean));
        }
    }
    Ok(out)
}

pub fn impute_median(data: &Dataset) -> Result<Dataset, ImputeError> {
    let mut out = data.clone();
    for j in 0..data.n_cols() {
        let rows = missing_rows(data, j);
        if rows.is_empty() {
            continue;
        }
        match data.column(j).kind {
            ColumnKind::Numeric => {
                let values = data.observed_numeric(j);
                require_observed(&values, data, j)?;
                let med = median(&values);
                for r in rows {
                    out.set(r, j, Cell::Num(med));
                }
            }
            ColumnKind::Categorical => {
                let levels = data.observed_levels(j);
                require_observed(&levels, data, j)?;
                let m = mode(&levels, data.column(j).n_levels());
                for r in rows {
                    out.set(r, j, Cell::Cat(m));
                }
            }
        }
    }
    Ok(out)
}

pub fn impute_zero(data: &Dataset) -> Result<Dataset, ImputeError> {
    let mut out = data.clone();
    for j in 0..data.n_cols() {
        for r in missing_rows(data, j) {
            out.set(r, j, Cell::Num(0.0));
        }
    }
    Ok(out)
}

/// Independent uniform draws from each column's observed values.
pub fn impute_random(data: &Dataset, rng: &mut ChaCha8Rng) -> Result<Dataset, ImputeError> {
    let mut out = data.clone();
    for j in 0..data.n_cols() {
        let rows = missing_rows(data, j);
        if rows.is_empty() {
            continue;
        }
        let observed: Vec<Cell> = (0..data.n_rows())
            .map(|r| data.get(r, j))
            .filter(|c| !c.is_missing())
            .collect();
        require_observed(&observed, data, j)?;
        for r in rows {
            let pick = observed[rng.gen_range(0..observed.len())];
            out.set(r, j, pick);
        }
    }
    Ok(out)
}
