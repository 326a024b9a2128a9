//! Energy-based I-Score: judges an imputer on data with genuine
//! missingness, no ground truth required.
//!
//! For each column with missing cells, half of the rows where that column
//! IS observed are masked on top of the real holes. The imputer fills the
//! projected dataset N times, and each held-out cell is scored by how the
//! draw cloud relates to the hidden value:
//!
//!   s = mean pairwise draw distance / 2  −  mean draw-to-truth distance
//!
//! A perfect point mass on the truth scores 0; anything else is negative
//! in expectation, and overconfident point masses away from the truth are
//! punished hardest. Higher is better.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::data::{Cell, ColumnKind, ColumnSchema, Dataset};
use crate::imputers::{self, ImputeError, ImputerSpec};
use crate::seed;

use super::{Metric, MetricError, Score};

/// Distance between two one-hot encoded category levels.
const CAT_DISTANCE: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone)]
pub struct IScoreConfig {
    /// Draws per projected column.
    pub n_imputations: usize,
    /// Seed for the observed-row half-splits. Keep it fixed across methods
    /// so every method is tested on the same hidden cells.
    pub split_seed: u64,
}

impl Default for IScoreConfig {
    fn default() -> Self {
        IScoreConfig { n_imputations: 20, split_seed: 0 }
    }
}

/// The evaluation set for one column with missingness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub col: usize,
    /// Columns observed on every row where `col` is observed.
    pub observed_context: Vec<usize>,
    /// Rows whose `col` value is hidden and scored.
    pub test_rows: Vec<usize>,
}

/// Supplies the multiple-imputation draws; implemented by `ImputerSpec`
/// and by test fixtures with known draw distributions.
pub trait DrawSampler {
    fn draw_all(&self, data: &Dataset, m: usize, seed: u64) -> Result<Vec<Dataset>, ImputeError>;
}

impl DrawSampler for ImputerSpec {
    fn draw_all(&self, data: &Dataset, m: usize, seed: u64) -> Result<Vec<Dataset>, ImputeError> {
        let result = imputers::impute_multiple(&self.reseeded(seed), data, m)?;
        if !result.category_violations.is_empty() {
            return Err(ImputeError::External(format!(
                "{} cells outside the declared category sets",
                result.category_violations.len()
            )));
        }
        Ok(result.draws)
    }
}

#[derive(Debug, Clone)]
pub struct ColumnIScore {
    pub col: usize,
    pub score: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone)]
pub struct IScoreBreakdown {
    /// Unweighted mean of the per-column scores.
    pub overall: Score,
    pub per_column: Vec<ColumnIScore>,
    /// Columns with missingness that had too few observed rows to split.
    pub skipped: Vec<usize>,
}

/// Builds the per-column evaluation sets. Columns with fewer than two
/// observed rows cannot donate a test half and are skipped.
pub fn projections(data: &Dataset, cfg: &IScoreConfig) -> (Vec<Projection>, Vec<usize>) {
    let n = data.n_rows();
    let p = data.n_cols();
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for j in 0..p {
        let rows_obs: Vec<usize> = (0..n).filter(|&r| !data.is_missing(r, j)).collect();
        if rows_obs.len() == n {
            continue;
        }
        if rows_obs.len() < 2 {
            skipped.push(j);
            continue;
        }
        let mut shuffled = rows_obs.clone();
        let mut rng: ChaCha8Rng =
            rand::SeedableRng::seed_from_u64(seed::derive(cfg.split_seed, &format!("split/{j}")));
        shuffled.shuffle(&mut rng);
        let mut test_rows: Vec<usize> = shuffled[..rows_obs.len() / 2].to_vec();
        test_rows.sort_unstable();
        let observed_context: Vec<usize> = (0..p)
            .filter(|&k| k != j && rows_obs.iter().all(|&r| !data.is_missing(r, k)))
            .collect();
        out.push(Projection { col: j, observed_context, test_rows });
    }
    (out, skipped)
}

/// Scores an imputer spec on its own seed.
pub fn energy_iscore(
    incomplete: &Dataset,
    spec: &ImputerSpec,
    cfg: &IScoreConfig,
) -> Result<IScoreBreakdown, MetricError> {
    energy_iscore_with(incomplete, spec, spec.seed, cfg)
}

/// Scores any draw source. `seed` feeds the draws; the split pattern comes
/// from `cfg.split_seed` alone.
pub fn energy_iscore_with<S: DrawSampler>(
    incomplete: &Dataset,
    sampler: &S,
    seed: u64,
    cfg: &IScoreConfig,
) -> Result<IScoreBreakdown, MetricError> {
    assert!(cfg.n_imputations >= 2, "draw spread needs at least two draws");
    if incomplete.missing_count() == 0 {
        return Err(MetricError::NoMissingness);
    }
    let (projs, skipped) = projections(incomplete, cfg);
    let mut per_column = Vec::new();
    for proj in &projs {
        let (projected, col_pos) = project(incomplete, proj);
        let draws = sampler.draw_all(
            &projected,
            cfg.n_imputations,
            seed::derive(seed, &format!("iscore/{}", proj.col)),
        )?;
        let score = score_column(incomplete, proj, &projected, col_pos, &draws)?;
        per_column.push(ColumnIScore { col: proj.col, score, n_test: proj.test_rows.len() });
    }
    if per_column.is_empty() {
        return Err(MetricError::EmptyProjection);
    }
    let overall =
        per_column.iter().map(|c| c.score).sum::<f64>() / per_column.len() as f64;
    Ok(IScoreBreakdown {
        overall: Score::new(Metric::EnergyIscore, overall),
        per_column,
        skipped,
    })
}

/// Sub-dataset holding the scored column and its fully-observed context,
/// with the test rows hidden. Returns the scored column's position inside
/// the projection.
fn project(data: &Dataset, proj: &Projection) -> (Dataset, usize) {
    let mut cols = proj.observed_context.clone();
    cols.push(proj.col);
    cols.sort_unstable();
    let col_pos = cols.iter().position(|&c| c == proj.col).expect("scored column present");
    let schema: Vec<ColumnSchema> = cols.iter().map(|&c| data.column(c).clone()).collect();
    let mut cells = Vec::with_capacity(data.n_rows() * cols.len());
    for r in 0..data.n_rows() {
        for &c in &cols {
            cells.push(data.get(r, c));
        }
    }
    let mut projected = Dataset::new(schema, cells).expect("projection of a valid dataset");
    for &r in &proj.test_rows {
        projected.set(r, col_pos, Cell::Missing);
    }
    (projected, col_pos)
}

fn cell_distance(kind: ColumnKind, a: Cell, b: Cell) -> f64 {
    match kind {
        ColumnKind::Numeric => {
            (a.as_num().expect("numeric draw") - b.as_num().expect("numeric draw")).abs()
        }
        ColumnKind::Categorical => {
            if a == b {
                0.0
            } else {
                CAT_DISTANCE
            }
        }
    }
}

fn score_column(
    data: &Dataset,
    proj: &Projection,
    projected: &Dataset,
    col_pos: usize,
    draws: &[Dataset],
) -> Result<f64, MetricError> {
    let m = draws.len();
    for draw in draws {
        if draw.n_rows() != projected.n_rows() || draw.n_cols() != projected.n_cols() {
            return Err(MetricError::ShapeMismatch(format!(
                "draw is {}x{}, projection is {}x{}",
                draw.n_rows(),
                draw.n_cols(),
                projected.n_rows(),
                projected.n_cols()
            )));
        }
    }
    let kind = data.column(proj.col).kind;
    let mut total = 0.0;
    for &r in &proj.test_rows {
        let truth = data.get(r, proj.col);
        let mut values = Vec::with_capacity(m);
        for draw in draws {
            let v = draw.get(r, col_pos);
            if v.is_missing() {
                return Err(MetricError::IncompleteDraw { col: proj.col });
            }
            values.push(v);
        }
        let mut spread = 0.0;
        for &a in &values {
            for &b in &values {
                spread += cell_distance(kind, a, b);
            }
        }
        spread /= 2.0 * (m * m) as f64;
        let err = values.iter().map(|&v| cell_distance(kind, v, truth)).sum::<f64>() / m as f64;
        total += spread - err;
    }
    Ok(total / proj.test_rows.len() as f64)
}
