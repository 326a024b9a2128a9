//! Controlled removal of cells from complete datasets.
//!
//! MCAR masks a fixed number of cells uniformly at random. MAR assigns rows
//! to missingness patterns, scores each row from its to-remain-observed
//! columns, and selects rows through a shifted logistic so higher scores are
//! more likely to lose their cells. Both mechanisms finish with a repair
//! pass that keeps every category level observed at least once.

mod check;

pub use check::{mar_dependence_check, MarDependenceReport, PatternDependence};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Cell, ColumnKind, DataError, Dataset};
use crate::seed;

#[derive(Debug, Error)]
pub enum AmputeError {
    #[error("amputation needs a complete dataset; {0} cells are already missing")]
    NotComplete(usize),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("proportion must lie strictly between 0 and 1, got {0}")]
    BadProportion(f64),
    #[error("MAR plan has no patterns")]
    NoPatterns,
    #[error("pattern {index}: {reason}")]
    BadPattern { index: usize, reason: String },
    #[error("pattern frequencies must sum to 1, got {0}")]
    BadFrequencies(f64),
    #[error("plan is infeasible: {0}")]
    Infeasible(String),
    #[error("replicate does not match the plan or dataset: {0}")]
    Mismatch(String),
    #[error("data error: {0}")]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Mcar,
    Mar,
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mechanism::Mcar => "mcar",
            Mechanism::Mar => "mar",
        })
    }
}

/// One missingness pattern: which columns a selected row loses, how often
/// the pattern occurs, and the score weights over the remaining columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub amputed: Vec<bool>,
    pub freq: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmputationPlan {
    pub mechanism: Mechanism,
    pub proportion: f64,
    /// Ignored for MCAR.
    #[serde(default)]
    pub patterns: Vec<Pattern>,
    pub seed: u64,
}

impl AmputationPlan {
    pub fn mcar(proportion: f64, seed: u64) -> Self {
        AmputationPlan { mechanism: Mechanism::Mcar, proportion, patterns: Vec::new(), seed }
    }

    /// Default MAR plan: p rotating band patterns, each amputating ⌈p/2⌉
    /// consecutive columns (wrapping), uniform frequency, unit weights on
    /// the columns that stay observed. The band width keeps cell
    /// proportions up to one half reachable.
    pub fn mar_default(n_cols: usize, proportion: f64, seed: u64) -> Result<Self, AmputeError> {
        if n_cols < 2 {
            return Err(AmputeError::Infeasible(
                "MAR needs at least 2 columns so every pattern observes something".into(),
            ));
        }
        let band = n_cols.div_ceil(2);
        let patterns = (0..n_cols)
            .map(|k| {
                let mut amputed = vec![false; n_cols];
                for t in 0..band {
                    amputed[(k + t) % n_cols] = true;
                }
                let weights = amputed.iter().map(|&a| if a { 0.0 } else { 1.0 }).collect();
                Pattern { amputed, freq: 1.0 / n_cols as f64, weights }
            })
            .collect();
        Ok(AmputationPlan { mechanism: Mechanism::Mar, proportion, patterns, seed })
    }

    pub fn validate(&self, n_cols: usize) -> Result<(), AmputeError> {
        if !(self.proportion > 0.0 && self.proportion < 1.0) {
            return Err(AmputeError::BadProportion(self.proportion));
        }
        if self.mechanism == Mechanism::Mcar {
            return Ok(());
        }
        if self.patterns.is_empty() {
            return Err(AmputeError::NoPatterns);
        }
        let mut freq_sum = 0.0;
        for (index, pat) in self.patterns.iter().enumerate() {
            let bad = |reason: &str| AmputeError::BadPattern {
                index,
                reason: reason.to_string(),
            };
            if pat.amputed.len() != n_cols || pat.weights.len() != n_cols {
                return Err(bad(&format!("vectors must have length {n_cols}")));
            }
            let n_amp = pat.amputed.iter().filter(|&&a| a).count();
            if n_amp == 0 {
                return Err(bad("amputes no column"));
            }
            if n_amp == n_cols {
                return Err(bad("observes no column"));
            }
            if !(pat.freq > 0.0) {
                return Err(bad("frequency must be positive"));
            }
            for j in 0..n_cols {
                if pat.amputed[j] && pat.weights[j] != 0.0 {
                    return Err(bad(&format!(
                        "weight on amputed column {j} would make missingness depend on unobserved values"
                    )));
                }
            }
            freq_sum += pat.freq;
        }
        if (freq_sum - 1.0).abs() > 1e-9 {
            return Err(AmputeError::BadFrequencies(freq_sum));
        }
        Ok(())
    }
}

/// One generated mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskReplicate {
    pub replicate_id: u32,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major; true = cell removed.
    pub mask: Vec<bool>,
    /// MAR only: pattern index per row; empty for MCAR.
    pub pattern_assignment: Vec<usize>,
}

impl MaskReplicate {
    pub fn is_masked(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.n_cols + col]
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn masked_fraction(&self) -> f64 {
        self.masked_count() as f64 / (self.n_rows * self.n_cols) as f64
    }

    pub fn apply(&self, complete: &Dataset) -> Result<Dataset, DataError> {
        complete.with_masked(&self.mask)
    }
}

/// Generates one mask replicate. Replicates with different ids draw from
/// different streams of the plan seed.
pub fn amputate(
    complete: &Dataset,
    plan: &AmputationPlan,
    replicate_id: u32,
) -> Result<MaskReplicate, AmputeError> {
    let missing = complete.missing_count();
    if missing > 0 {
        return Err(AmputeError::NotComplete(missing));
    }
    if complete.n_rows() < 2 {
        return Err(AmputeError::TooFewRows(complete.n_rows()));
    }
    plan.validate(complete.n_cols())?;
    let mut rng: ChaCha8Rng =
        rand::SeedableRng::seed_from_u64(seed::mix(plan.seed, u64::from(replicate_id)));
    let (mask, pattern_assignment) = match plan.mechanism {
        Mechanism::Mcar => (mcar_mask(complete, plan.proportion, &mut rng), Vec::new()),
        Mechanism::Mar => mar_mask(complete, plan, &mut rng)?,
    };
    let mut replicate = MaskReplicate {
        replicate_id,
        n_rows: complete.n_rows(),
        n_cols: complete.n_cols(),
        mask,
        pattern_assignment,
    };
    repair_category_preservation(complete, &mut replicate, &mut rng)?;
    Ok(replicate)
}

/// Exactly round(proportion·n·p) cells, uniformly without replacement.
fn mcar_mask(complete: &Dataset, proportion: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let total = complete.n_rows() * complete.n_cols();
    let count = ((proportion * total as f64).round() as usize).clamp(1, total - 1);
    let mut indices: Vec<usize> = (0..total).collect();
    for i in 0..count {
        let j = rng.gen_range(i..total);
        indices.swap(i, j);
    }
    let mut mask = vec![false; total];
    for &idx in &indices[..count] {
        mask[idx] = true;
    }
    mask
}

/// Column z-scores of the complete data; categorical cells enter through
/// their level code. A constant column scores zero everywhere.
pub(crate) fn standardized_columns(complete: &Dataset) -> Vec<f64> {
    let n = complete.n_rows();
    let p = complete.n_cols();
    let mut z = vec![0.0; n * p];
    for j in 0..p {
        let raw: Vec<f64> = (0..n)
            .map(|r| match complete.get(r, j) {
                Cell::Num(v) => v,
                Cell::Cat(k) => f64::from(k),
                Cell::Missing => unreachable!("amputation requires complete data"),
            })
            .collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        let var = raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if var > 0.0 {
            let sd = var.sqrt();
            for r in 0..n {
                z[r * p + j] = (raw[r] - mean) / sd;
            }
        }
    }
    z
}

pub(crate) fn weighted_score(z: &[f64], n_cols: usize, row: usize, weights: &[f64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(j, &w)| w * z[row * n_cols + j])
        .sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Intercept b such that mean sigmoid(score + b) hits the target fraction.
fn solve_intercept(scores: &[f64], target: f64) -> f64 {
    let mean_prob = |b: f64| scores.iter().map(|&s| sigmoid(s + b)).sum::<f64>() / scores.len() as f64;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..100 {
        let mid = (lo + hi) / 2.0;
        if mean_prob(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

fn mar_mask(
    complete: &Dataset,
    plan: &AmputationPlan,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<bool>, Vec<usize>), AmputeError> {
    let n = complete.n_rows();
    let p = complete.n_cols();
    let k_patterns = plan.patterns.len();

    let mut cumulative = Vec::with_capacity(k_patterns);
    let mut acc = 0.0;
    for pat in &plan.patterns {
        acc += pat.freq;
        cumulative.push(acc);
    }
    let assignment: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * acc;
            cumulative.partition_point(|&c| c < u).min(k_patterns - 1)
        })
        .collect();

    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); k_patterns];
    for (r, &k) in assignment.iter().enumerate() {
        rows_of[k].push(r);
    }

    let band_cells: f64 = plan
        .patterns
        .iter()
        .enumerate()
        .map(|(k, pat)| {
            let m = pat.amputed.iter().filter(|&&a| a).count();
            (rows_of[k].len() * m) as f64
        })
        .sum();
    let target_cells = plan.proportion * (n * p) as f64;
    let q = target_cells / band_cells;
    if q > 1.0 + 1e-9 {
        return Err(AmputeError::Infeasible(format!(
            "proportion {} requires amputating {:.0}% of the rows each pattern covers",
            plan.proportion,
            q * 100.0
        )));
    }
    let q = q.min(1.0);

    let z = standardized_columns(complete);
    let mut mask = vec![false; n * p];
    let mut carry = 0.0;
    for (k, pat) in plan.patterns.iter().enumerate() {
        let rows = &rows_of[k];
        if rows.is_empty() {
            continue;
        }
        let m = pat.amputed.iter().filter(|&&a| a).count() as f64;
        let want_cells = q * rows.len() as f64 * m + carry;
        let t = ((want_cells / m).round() as usize).min(rows.len());
        carry = want_cells - t as f64 * m;
        if t == 0 {
            continue;
        }

        let raw_scores: Vec<f64> =
            rows.iter().map(|&r| weighted_score(&z, p, r, &pat.weights)).collect();
        let mean = raw_scores.iter().sum::<f64>() / raw_scores.len() as f64;
        let var = raw_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
            / (raw_scores.len() as f64 - 1.0).max(1.0);
        let scores: Vec<f64> = if var > 0.0 {
            let sd = var.sqrt();
            raw_scores.iter().map(|s| (s - mean) / sd).collect()
        } else {
            vec![0.0; raw_scores.len()]
        };

        let target_frac = t as f64 / rows.len() as f64;
        let b = solve_intercept(&scores, target_frac);
        // Weighted sampling without replacement: top-t of ln(u)/p keys.
        let mut keyed: Vec<(f64, usize)> = rows
            .iter()
            .zip(&scores)
            .map(|(&r, &s)| {
                let prob = sigmoid(s + b).max(1e-12);
                let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                (u.ln() / prob, r)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, r) in keyed.iter().take(t) {
            for (j, &amp) in pat.amputed.iter().enumerate() {
                if amp {
                    mask[r * p + j] = true;
                }
            }
        }
    }
    Ok((mask, assignment))
}

/// Ensures every category level that exists in the complete data keeps at
/// least one observed occurrence. Each fix frees one masked cell of the
/// starved level and, when possible, re-masks a cell whose level can spare
/// one, preserving the masked-cell count.
fn repair_category_preservation(
    complete: &Dataset,
    replicate: &mut MaskReplicate,
    rng: &mut ChaCha8Rng,
) -> Result<(), AmputeError> {
    let p = complete.n_cols();
    let total_levels: usize =
        complete.schema().iter().map(|c| c.categories.len()).sum();
    for _ in 0..=2 * total_levels {
        let Some((col, level)) = find_starved_level(complete, replicate) else {
            return Ok(());
        };
        let starved: Vec<usize> = (0..complete.n_rows())
            .filter(|&r| {
                replicate.mask[r * p + col] && complete.get(r, col) == Cell::Cat(level)
            })
            .collect();
        debug_assert!(!starved.is_empty(), "a starved level must have masked cells");
        let free = starved[rng.gen_range(0..starved.len())];
        replicate.mask[free * p + col] = false;

        let mut observed_counts = vec![0usize; complete.column(col).n_levels()];
        for r in 0..complete.n_rows() {
            if !replicate.mask[r * p + col] {
                if let Some(k) = complete.get(r, col).as_cat() {
                    observed_counts[k as usize] += 1;
                }
            }
        }
        let candidates: Vec<usize> = (0..complete.n_rows())
            .filter(|&r| {
                if replicate.mask[r * p + col] {
                    return false;
                }
                let k = complete.get(r, col).as_cat().expect("categorical column");
                observed_counts[k as usize] >= 2 && k != level
            })
            .collect();
        if !candidates.is_empty() {
            let remask = candidates[rng.gen_range(0..candidates.len())];
            replicate.mask[remask * p + col] = true;
        }
    }
    Err(AmputeError::Infeasible(
        "category preservation repair did not converge".into(),
    ))
}

fn find_starved_level(complete: &Dataset, replicate: &MaskReplicate) -> Option<(usize, u32)> {
    let p = complete.n_cols();
    for col in 0..p {
        if complete.column(col).kind != ColumnKind::Categorical {
            continue;
        }
        let n_levels = complete.column(col).n_levels();
        let mut total = vec![0usize; n_levels];
        let mut observed = vec![0usize; n_levels];
        for r in 0..complete.n_rows() {
            let k = complete.get(r, col).as_cat().expect("categorical column") as usize;
            total[k] += 1;
            if !replicate.mask[r * p + col] {
                observed[k] += 1;
            }
        }
        for level in 0..n_levels {
            if total[level] > 0 && observed[level] == 0 {
                return Some((col, level as u32));
            }
        }
    }
    None
}
