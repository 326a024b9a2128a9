//! Fully conditional specification: initialize holes with marginal draws,
//! then cycle through the incomplete columns left to right, refitting the
//! column's conditional model on the rows where it was genuinely observed
//! and redrawing the rest. With a single incomplete column this collapses to
//! one model fit per sweep.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::cart::Tree;
use super::linear::{fit_ols, predict_with, DesignMap};
use super::pmm;
use super::{Hyperparams, ImputeError};
use crate::data::{Cell, ColumnKind, Dataset};

/// Conditional model applied to each incomplete column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionalModel {
    /// Proper draw: perturbed coefficients plus residual noise.
    Norm,
    /// Point-estimate coefficients plus residual noise.
    NormNob,
    /// Point prediction, no noise.
    NormPredict,
    /// Predictive mean matching against observed donors.
    Pmm,
    /// Tree leaves, drawing one training value per hole.
    Cart,
}

struct ColumnPlan {
    col: usize,
    rows_obs: Vec<usize>,
    rows_mis: Vec<usize>,
}

pub(super) fn run(
    data: &Dataset,
    model: ConditionalModel,
    params: &Hyperparams,
    rng: &mut ChaCha8Rng,
) -> Result<Dataset, ImputeError> {
    let plans: Vec<ColumnPlan> = (0..data.n_cols())
        .filter_map(|col| {
            let rows_mis: Vec<usize> =
                (0..data.n_rows()).filter(|&r| data.is_missing(r, col)).collect();
            if rows_mis.is_empty() {
                return None;
            }
            let rows_obs: Vec<usize> =
                (0..data.n_rows()).filter(|&r| !data.is_missing(r, col)).collect();
            Some(ColumnPlan { col, rows_obs, rows_mis })
        })
        .collect();

    let mut work = data.clone();
    for plan in &plans {
        if plan.rows_obs.is_empty() {
            return Err(ImputeError::EmptyColumn(data.column(plan.col).name.clone()));
        }
        for &r in &plan.rows_mis {
            let pick = plan.rows_obs[rng.gen_range(0..plan.rows_obs.len())];
            work.set(r, plan.col, data.get(pick, plan.col));
        }
    }

    for _ in 0..params.iterations {
        for plan in &plans {
            step_column(&mut work, model, plan, params, rng)?;
        }
    }
    Ok(work)
}

fn step_column(
    work: &mut Dataset,
    model: ConditionalModel,
    plan: &ColumnPlan,
    params: &Hyperparams,
    rng: &mut ChaCha8Rng,
) -> Result<(), ImputeError> {
    let values: Vec<Cell> = match model {
        ConditionalModel::Norm | ConditionalModel::NormNob | ConditionalModel::NormPredict => {
            linear_column(work, model, plan, rng)?
        }
        ConditionalModel::Pmm => {
            pmm::impute_column(work, plan.col, &plan.rows_obs, &plan.rows_mis, params.donors, rng)?
        }
        ConditionalModel::Cart => {
            let tree = Tree::fit(work, plan.col, plan.rows_obs.clone(), params.min_leaf);
            plan.rows_mis.iter().map(|&r| tree.draw(work, r, rng)).collect()
        }
    };
    for (&r, &v) in plan.rows_mis.iter().zip(&values) {
        if let Cell::Num(x) = v {
            if !x.is_finite() {
                return Err(ImputeError::FitFailed {
                    col: work.column(plan.col).name.clone(),
                    reason: "draw produced a non-finite value".to_string(),
                });
            }
        }
        work.set(r, plan.col, v);
    }
    Ok(())
}

fn linear_column(
    work: &Dataset,
    model: ConditionalModel,
    plan: &ColumnPlan,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Cell>, ImputeError> {
    debug_assert_eq!(work.column(plan.col).kind, ColumnKind::Numeric);
    let map = DesignMap::new(work, plan.col);
    let x = map.matrix(work, &plan.rows_obs);
    let y = DVector::from_fn(plan.rows_obs.len(), |i, _| {
        work.get(plan.rows_obs[i], plan.col).as_num().expect("numeric target")
    });
    let fit = fit_ols(&x, &y, &work.column(plan.col).name)?;
    let beta = match model {
        ConditionalModel::Norm => fit.draw_beta(rng)?,
        _ => fit.beta.clone(),
    };
    let mut buf = vec![0.0; map.n_features()];
    let mut out = Vec::with_capacity(plan.rows_mis.len());
    for &r in &plan.rows_mis {
        map.fill_row(work, r, &mut buf);
        let mut v = predict_with(&beta, &buf);
        if model != ConditionalModel::NormPredict {
            let z: f64 = rng.sample(StandardNormal);
            v += fit.sigma * z;
        }
        out.push(Cell::Num(v));
    }
    Ok(out)
}
