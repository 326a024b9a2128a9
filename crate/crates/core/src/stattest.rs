//! Small statistical helpers: fractional ranks, Spearman correlation with a
//! t-approximation p-value, χ² uniformity, and a paired one-sided t-test.

use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

/// Ranks 1..n with ties sharing the mean of their positions.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the mean rank.
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    pearson(&fractional_ranks(x), &fractional_ranks(y))
}

/// One-sided p-value for H1: positive association, via the t approximation
/// t = ρ·√((n−2)/(1−ρ²)).
pub fn spearman_p_positive(rho: f64, n: usize) -> f64 {
    if n < 4 {
        return 1.0;
    }
    let denom = 1.0 - rho * rho;
    if denom <= f64::EPSILON {
        return if rho > 0.0 { 0.0 } else { 1.0 };
    }
    let df = (n - 2) as f64;
    let t = rho * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    1.0 - dist.cdf(t)
}

/// χ² goodness-of-fit p-value against equal expected counts.
pub fn chi2_uniform_p(counts: &[usize]) -> f64 {
    let k = counts.len();
    assert!(k >= 2, "need at least two bins");
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let expected = total as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("valid dof");
    1.0 - dist.cdf(stat)
}

/// One-sample one-sided t-test p-value for H1: mean > 0.
pub fn t_test_p_greater(samples: &[f64]) -> f64 {
    let n = samples.len();
    assert!(n >= 2, "need at least two samples");
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var =
        samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return if mean > 0.0 { 0.0 } else { 1.0 };
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid dof");
    1.0 - dist.cdf(t)
}

/// Simple regression y = a + b·x: returns (slope, intercept, slope standard
/// error).
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(x.len() >= 3, "need at least three points");
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let resid = b - intercept - slope * a;
            resid * resid
        })
        .sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    (slope, intercept, se)
}
