//! K-nearest-neighbour imputation with a missingness-aware distance.
//!
//! Distance between two rows is computed over their mutually observed
//! dimensions and rescaled by p/m (m = mutually observed count) so rows with
//! few shared dimensions are not artificially close. Numeric dimensions are
//! standardized by observed-data statistics; categorical ones contribute a
//! 0/1 mismatch.

use rayon::prelude::*;

use super::{simple, ImputeError};
use crate::data::{Cell, ColumnKind, Dataset};

pub fn impute_knn(data: &Dataset, k: usize) -> Result<Dataset, ImputeError> {
    assert!(k >= 1, "k must be positive");
    let n = data.n_rows();
    let p = data.n_cols();

    // Standardization from observed values only; a constant or near-empty
    // column carries no distance signal and scales to zero.
    let mut scale: Vec<Option<(f64, f64)>> = vec![None; p];
    for j in 0..p {
        if data.column(j).kind != ColumnKind::Numeric {
            continue;
        }
        let values = data.observed_numeric(j);
        if values.len() < 2 {
            continue;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var =
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
        if var > 0.0 {
            scale[j] = Some((mean, var.sqrt()));
        }
    }

    let z = |row: usize, col: usize| -> Option<f64> {
        let v = data.get(row, col).as_num()?;
        Some(match scale[col] {
            Some((m, s)) => (v - m) / s,
            None => 0.0,
        })
    };

    let rows_with_missing: Vec<usize> = (0..n).filter(|&r| data.row(r).iter().any(|c| c.is_missing())).collect();

    // dist(r, d): None when the rows share no observed dimension.
    let distance = |r: usize, d: usize| -> Option<f64> {
        let mut acc = 0.0;
        let mut m = 0usize;
        for j in 0..p {
            let (a, b) = (data.get(r, j), data.get(d, j));
            if a.is_missing() || b.is_missing() {
                continue;
            }
            m += 1;
            match data.column(j).kind {
                ColumnKind::Numeric => {
                    let diff = z(r, j).unwrap() - z(d, j).unwrap();
                    acc += diff * diff;
                }
                ColumnKind::Categorical => {
                    if a != b {
                        acc += 1.0;
                    }
                }
            }
        }
        (m > 0).then(|| (acc * p as f64 / m as f64).sqrt())
    };

    let filled: Result<Vec<(usize, Vec<(usize, Cell)>)>, ImputeError> = rows_with_missing
        .par_iter()
        .map(|&r| {
            let dists: Vec<Option<f64>> =
                (0..n).map(|d| if d == r { None } else { distance(r, d) }).collect();
            let mut cells = Vec::new();
            for t in 0..p {
                if !data.is_missing(r, t) {
                    continue;
                }
                let mut donors: Vec<(f64, usize)> = (0..n)
                    .filter(|&d| !data.is_missing(d, t))
                    .filter_map(|d| dists[d].map(|dist| (dist, d)))
                    .collect();
                if donors.is_empty() {
                    return Err(ImputeError::NoDonor(r));
                }
                donors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                donors.truncate(k);
                let cell = match data.column(t).kind {
                    ColumnKind::Numeric => {
                        let sum: f64 = donors
                            .iter()
                            .map(|&(_, d)| data.get(d, t).as_num().unwrap())
                            .sum();
                        Cell::Num(sum / donors.len() as f64)
                    }
                    ColumnKind::Categorical => {
                        let levels: Vec<u32> = donors
                            .iter()
                            .map(|&(_, d)| data.get(d, t).as_cat().unwrap())
                            .collect();
                        Cell::Cat(simple::mode(&levels, data.column(t).n_levels()))
                    }
                };
                cells.push((t, cell));
            }
            Ok((r, cells))
        })
        .collect();

    let mut out = data.clone();
    for (r, cells) in filled? {
        for (t, cell) in cells {
            out.set(r, t, cell);
        }
    }
    Ok(out)
}
