//! Seeded generators for the bundled benchmark datasets.
//!
//! Three complete datasets with different difficulty profiles:
//! factor-correlated Gaussians (linear methods suffice), a two-cluster
//! dataset whose cluster column no other column predicts (marginal draws
//! beat any conditional mean), and a mixed dataset whose categories shift
//! the numeric columns (cross-type structure to exploit). All columns sit
//! far from zero so constant-zero filling is visibly wrong after
//! standardization.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Cell, ColumnSchema, DataError, Dataset, SchemaConfig};

fn rng_for(seed: u64, stream: &str) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(crate::seed::derive(seed, stream))
}

/// Six numeric columns sharing one latent factor, distinct large means.
pub fn gaussian_factors(n: usize, seed: u64) -> Dataset {
    let mut rng = rng_for(seed, "gauss");
    let std_norm = Normal::new(0.0, 1.0).unwrap();
    let means = [20.0, 35.0, 12.0, 28.0, 16.0, 40.0];
    let loadings = [2.0, 1.5, 1.0, 2.5, 1.2, 1.8];
    let noise_sd = [1.0, 1.5, 0.8, 1.2, 1.0, 1.4];
    let schema: Vec<ColumnSchema> =
        (1..=6).map(|j| ColumnSchema::numeric(format!("x{j}"))).collect();
    let mut cells = Vec::with_capacity(n * 6);
    for _ in 0..n {
        let factor = std_norm.sample(&mut rng);
        for j in 0..6 {
            let value = means[j] + loadings[j] * factor + noise_sd[j] * std_norm.sample(&mut rng);
            cells.push(Cell::Num(value));
        }
    }
    Dataset::new(schema, cells).expect("generated cells are finite")
}

/// Five numeric columns. `mode` is an even two-cluster mixture at 5 and 15
/// that the remaining columns carry no information about; `s1..s4` are
/// right-skewed and correlated through a shared factor.
pub fn two_cluster(n: usize, seed: u64) -> Dataset {
    let mut rng = rng_for(seed, "clusters");
    let std_norm = Normal::new(0.0, 1.0).unwrap();
    let loadings = [0.9, 0.7, 0.8, 0.6];
    let mut schema = vec![ColumnSchema::numeric("mode")];
    schema.extend((1..=4).map(|j| ColumnSchema::numeric(format!("s{j}"))));
    let mut cells = Vec::with_capacity(n * 5);
    for _ in 0..n {
        let center = if rng.gen::<f64>() < 0.5 { 5.0 } else { 15.0 };
        cells.push(Cell::Num(center + 0.5 * std_norm.sample(&mut rng)));
        let factor = std_norm.sample(&mut rng);
        for &loading in &loadings {
            let shape = loading * factor
                + (1.0 - loading * loading).sqrt() * std_norm.sample(&mut rng);
            cells.push(Cell::Num(8.0 + 1.8 * (0.75 * shape).exp()));
        }
    }
    Dataset::new(schema, cells).expect("generated cells are finite")
}

/// Four numeric columns plus a three-level and a two-level categorical.
/// The three-level group shifts every numeric column by several standard
/// deviations, so types predict each other in both directions.
pub fn mixed_categorical(n: usize, seed: u64) -> Dataset {
    let mut rng = rng_for(seed, "mixedcat");
    let std_norm = Normal::new(0.0, 1.0).unwrap();
    let base = [14.0, 22.0, 9.0, 30.0];
    let group_shift = [[0.0, 3.0, 6.5], [0.0, -4.0, 4.0], [0.0, 2.5, -3.0], [0.0, 5.0, 10.0]];
    let flag_shift = [0.8, -0.6, 0.5, -1.0];
    let mut schema: Vec<ColumnSchema> =
        (1..=4).map(|j| ColumnSchema::numeric(format!("m{j}"))).collect();
    schema.push(ColumnSchema::categorical("grp", vec!["a".into(), "b".into(), "c".into()]));
    schema.push(ColumnSchema::categorical("flag", vec!["no".into(), "yes".into()]));
    let mut cells = Vec::with_capacity(n * 6);
    for _ in 0..n {
        let u: f64 = rng.gen();
        let group = if u < 0.4 {
            0
        } else if u < 0.75 {
            1
        } else {
            2
        };
        let flag = usize::from(rng.gen::<f64>() < 0.5);
        let factor = std_norm.sample(&mut rng);
        for j in 0..4 {
            let value = base[j]
                + group_shift[j][group]
                + flag_shift[j] * flag as f64
                + 0.8 * factor
                + std_norm.sample(&mut rng);
            cells.push(Cell::Num(value));
        }
        cells.push(Cell::Cat(group as u32));
        cells.push(Cell::Cat(flag as u32));
    }
    Dataset::new(schema, cells).expect("generated cells are finite")
}

/// Bivariate pair with a known conditional law: x1 ~ N(0,1) and
/// x2 = x1 + N(0, 0.75²), so sd(x1 | x2) = 0.6 and E[x1 | x2] = 0.64·x2.
pub fn conditional_pair(n: usize, seed: u64) -> Dataset {
    let mut rng = rng_for(seed, "pair");
    let std_norm = Normal::new(0.0, 1.0).unwrap();
    let schema = vec![ColumnSchema::numeric("x1"), ColumnSchema::numeric("x2")];
    let mut cells = Vec::with_capacity(n * 2);
    for _ in 0..n {
        let x1 = std_norm.sample(&mut rng);
        let x2 = x1 + 0.75 * std_norm.sample(&mut rng);
        cells.push(Cell::Num(x1));
        cells.push(Cell::Num(x2));
    }
    Dataset::new(schema, cells).expect("generated cells are finite")
}

/// One bundled dataset written to disk.
#[derive(Debug, Clone)]
pub struct BundledDataset {
    pub id: String,
    pub csv: PathBuf,
    pub schema: PathBuf,
}

/// Writes the three bundled datasets as CSV plus schema TOML.
pub fn write_bundle(dir: &Path, seed: u64) -> Result<Vec<BundledDataset>, DataError> {
    let sets: [(&str, Dataset); 3] = [
        ("gauss", gaussian_factors(400, seed)),
        ("clusters", two_cluster(400, seed)),
        ("mixedcat", mixed_categorical(300, seed)),
    ];
    let mut out = Vec::new();
    for (id, data) in sets {
        let csv = dir.join(format!("{id}.csv"));
        let schema = dir.join(format!("{id}.schema.toml"));
        let config = SchemaConfig::for_dataset(&data);
        crate::data::write_csv(&data, &csv, &config.missing_token)?;
        std::fs::write(&schema, config.to_toml_string())?;
        out.push(BundledDataset { id: id.to_string(), csv, schema });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnKind;

    #[test]
    fn generators_are_seeded_and_complete() {
        for (a, b, other) in [
            (gaussian_factors(50, 1), gaussian_factors(50, 1), gaussian_factors(50, 2)),
            (two_cluster(50, 1), two_cluster(50, 1), two_cluster(50, 2)),
            (mixed_categorical(50, 1), mixed_categorical(50, 1), mixed_categorical(50, 2)),
        ] {
            assert_eq!(a, b);
            assert_ne!(a, other);
            assert!(a.is_complete());
        }
    }

    #[test]
    fn cluster_column_is_bimodal_and_unpredicted() {
        let ds = two_cluster(400, 7);
        let values = ds.observed_numeric(0);
        let low = values.iter().filter(|&&v| v < 10.0).count();
        assert!(low > 120 && low < 280, "cluster split {low}/400");
        assert!(values.iter().all(|&v| (v - 5.0).abs() < 2.5 || (v - 15.0).abs() < 2.5));
        // The skewed columns should not separate the clusters.
        let s1: Vec<f64> = ds.observed_numeric(1);
        let flags: Vec<f64> =
            values.iter().map(|&v| if v < 10.0 { 0.0 } else { 1.0 }).collect();
        let rho = crate::stattest::pearson(&s1, &flags);
        assert!(rho.abs() < 0.15, "cluster leaks into s1: rho = {rho}");
    }

    #[test]
    fn skewed_columns_have_mean_above_median() {
        let ds = two_cluster(400, 7);
        for j in 1..5 {
            let mut v = ds.observed_numeric(j);
            v.sort_by(f64::total_cmp);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let median = (v[199] + v[200]) / 2.0;
            assert!(mean > median + 0.1, "column {j}: mean {mean}, median {median}");
        }
    }

    #[test]
    fn mixed_dataset_has_the_declared_shape() {
        let ds = mixed_categorical(300, 3);
        assert_eq!(ds.n_rows(), 300);
        assert_eq!(ds.n_cols(), 6);
        assert_eq!(ds.column(4).kind, ColumnKind::Categorical);
        assert_eq!(ds.column(4).n_levels(), 3);
        assert_eq!(ds.column(5).n_levels(), 2);
        for level in 0..3 {
            assert!(ds.observed_levels(4).contains(&level));
        }
    }

    #[test]
    fn conditional_pair_matches_its_law() {
        let ds = conditional_pair(20000, 5);
        let x1 = ds.observed_numeric(0);
        let x2 = ds.observed_numeric(1);
        let mean1 = x1.iter().sum::<f64>() / x1.len() as f64;
        let var1 = x1.iter().map(|v| (v - mean1).powi(2)).sum::<f64>() / x1.len() as f64;
        assert!(mean1.abs() < 0.05);
        assert!((var1 - 1.0).abs() < 0.05);
        let diff_var = x1
            .iter()
            .zip(&x2)
            .map(|(a, b)| (b - a).powi(2))
            .sum::<f64>()
            / x1.len() as f64;
        assert!((diff_var.sqrt() - 0.75).abs() < 0.02);
    }

    #[test]
    fn bundle_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = write_bundle(dir.path(), 42).unwrap();
        assert_eq!(bundle.len(), 3);
        for entry in &bundle {
            let config = SchemaConfig::from_path(&entry.schema).unwrap();
            let reloaded = crate::data::load_csv(&entry.csv, &config).unwrap();
            assert!(reloaded.is_complete());
        }
        let gauss = crate::data::load_csv(
            &bundle[0].csv,
            &SchemaConfig::from_path(&bundle[0].schema).unwrap(),
        )
        .unwrap();
        assert_eq!(gauss, gaussian_factors(400, 42));
    }
}
