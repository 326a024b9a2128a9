//! Predictive mean matching: predict the missing entry, then impute the
//! actual observed value of a donor whose prediction lies closest.
//!
//! Observed rows are predicted with the least-squares fit, missing rows with
//! a perturbed coefficient draw, so repeated calls explore the donor
//! neighbourhood instead of collapsing onto one donor.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::linear::{fit_ols, predict_with, DesignMap};
use super::ImputeError;
use crate::data::{Cell, ColumnKind, Dataset};

pub(super) fn impute_column(
    work: &Dataset,
    target: usize,
    rows_obs: &[usize],
    rows_mis: &[usize],
    donors: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Cell>, ImputeError> {
    match work.column(target).kind {
        ColumnKind::Numeric => numeric_pmm(work, target, rows_obs, rows_mis, donors, rng),
        ColumnKind::Categorical => categorical_pmm(work, target, rows_obs, rows_mis, donors, rng),
    }
}

fn numeric_pmm(
    work: &Dataset,
    target: usize,
    rows_obs: &[usize],
    rows_mis: &[usize],
    donors: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Cell>, ImputeError> {
    let map = DesignMap::new(work, target);
    let x_obs = map.matrix(work, rows_obs);
    let y_obs = DVector::from_fn(rows_obs.len(), |i, _| {
        work.get(rows_obs[i], target).as_num().expect("numeric target")
    });
    let name = &work.column(target).name;
    let fit = fit_ols(&x_obs, &y_obs, name)?;
    let beta_star = fit.draw_beta(rng)?;

    // Donor predictions under the point estimate, sorted for window search.
    let mut pred_obs: Vec<(f64, usize)> = rows_obs
        .iter()
        .map(|&r| {
            let mut buf = vec![0.0; map.n_features()];
            map.fill_row(work, r, &mut buf);
            (fit.predict_row(&buf), r)
        })
        .collect();
    pred_obs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let k = donors.min(rows_obs.len()).max(1);
    let mut out = Vec::with_capacity(rows_mis.len());
    let mut buf = vec![0.0; map.n_features()];
    for &r in rows_mis {
        map.fill_row(work, r, &mut buf);
        let yhat = predict_with(&beta_star, &buf);
        let picks = nearest_window(&pred_obs, yhat, k);
        let donor = picks[rng.gen_range(0..picks.len())];
        out.push(work.get(donor, target));
    }
    Ok(out)
}

/// The k donors with predictions closest to `t` in a sorted prediction list.
fn nearest_window(sorted: &[(f64, usize)], t: f64, k: usize) -> Vec<usize> {
    let start = sorted.partition_point(|&(v, _)| v < t);
    let mut left = start;
    let mut right = start;
    let mut picks = Vec::with_capacity(k);
    for _ in 0..k {
        let take_left = match (left > 0, right < sorted.len()) {
            (true, true) => (t - sorted[left - 1].0) <= (sorted[right].0 - t),
            (true, false) => true,
            (false, true) => false,
            (false, false) => break,
        };
        if take_left {
            left -= 1;
            picks.push(sorted[left].1);
        } else {
            picks.push(sorted[right].1);
            right += 1;
        }
    }
    picks
}

/// Categorical targets: one indicator regression per level; rows are
/// matched on the Euclidean distance between their level-score vectors.
fn categorical_pmm(
    work: &Dataset,
    target: usize,
    rows_obs: &[usize],
    rows_mis: &[usize],
    donors: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Cell>, ImputeError> {
    let map = DesignMap::new(work, target);
    let x_obs = map.matrix(work, rows_obs);
    let name = &work.column(target).name;
    let n_levels = work.column(target).n_levels();

    let mut beta_hat = Vec::with_capacity(n_levels);
    let mut beta_star = Vec::with_capacity(n_levels);
    for level in 0..n_levels {
        let y = DVector::from_fn(rows_obs.len(), |i, _| {
            f64::from(work.get(rows_obs[i], target).as_cat() == Some(level as u32))
        });
        let fit = fit_ols(&x_obs, &y, name)?;
        beta_star.push(fit.draw_beta(rng)?);
        beta_hat.push(fit.beta);
    }

    let score = |row: usize, betas: &[DVector<f64>], buf: &mut [f64]| -> Vec<f64> {
        map.fill_row(work, row, buf);
        betas.iter().map(|b| predict_with(b, buf)).collect()
    };

    let mut buf = vec![0.0; map.n_features()];
    let obs_scores: Vec<Vec<f64>> =
        rows_obs.iter().map(|&r| score(r, &beta_hat, &mut buf)).collect();

    let k = donors.min(rows_obs.len()).max(1);
    let mut out = Vec::with_capacity(rows_mis.len());
    for &r in rows_mis {
        let s = score(r, &beta_star, &mut buf);
        let mut dist: Vec<(f64, usize)> = obs_scores
            .iter()
            .zip(rows_obs)
            .map(|(os, &d)| {
                let sq: f64 = os.iter().zip(&s).map(|(a, b)| (a - b) * (a - b)).sum();
                (sq, d)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dist.truncate(k);
        let donor = dist[rng.gen_range(0..dist.len())].1;
        out.push(work.get(donor, target));
    }
    Ok(out)
}
