//! Regression/classification trees for imputation-by-drawing.
//!
//! Splits minimize residual sum of squares for numeric targets and Gini
//! impurity for categorical ones. Leaves keep their training rows; imputing
//! draws uniformly from the leaf a row routes to. Growth stops at the
//! minimum leaf size or when no split clears a small fraction of the root
//! impurity, with no depth cap.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Cell, ColumnKind, Dataset};

/// A split has to remove at least this fraction of the root impurity.
const IMPROVEMENT_FLOOR_RATIO: f64 = 1e-4;

/// Exhaustive category-subset search up to this many present levels;
/// beyond it, levels are ordered and only contiguous splits are tried.
const EXHAUSTIVE_LEVEL_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy)]
enum SplitRule {
    /// value ≤ threshold goes left.
    NumLe { col: usize, threshold: f64 },
    /// level bit set goes left.
    CatIn { col: usize, levels: u64 },
}

#[derive(Debug)]
enum Node {
    Leaf { rows: Vec<usize> },
    Split { rule: SplitRule, left: usize, right: usize },
}

#[derive(Debug)]
pub struct Tree {
    nodes: Vec<Node>,
    target: usize,
}

struct FitCtx<'a> {
    data: &'a Dataset,
    target: usize,
    min_leaf: usize,
    improvement_floor: f64,
}

#[derive(Clone, Copy)]
struct Candidate {
    rule: SplitRule,
    gain: f64,
}

impl Tree {
    /// Grows a tree predicting `target` from all other columns, using the
    /// given training rows (which must have the target observed and all
    /// predictors filled).
    pub fn fit(data: &Dataset, target: usize, rows: Vec<usize>, min_leaf: usize) -> Tree {
        assert!(!rows.is_empty(), "cannot fit a tree on zero rows");
        assert!(min_leaf >= 1);
        let root_impurity = node_impurity(data, target, &rows);
        let ctx = FitCtx {
            data,
            target,
            min_leaf,
            improvement_floor: IMPROVEMENT_FLOOR_RATIO * root_impurity.max(f64::MIN_POSITIVE),
        };
        let mut tree = Tree { nodes: Vec::new(), target };
        tree.build(&ctx, rows);
        tree
    }

    fn build(&mut self, ctx: &FitCtx, rows: Vec<usize>) -> usize {
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { rows: Vec::new() });
        if rows.len() < 2 * ctx.min_leaf || node_impurity(ctx.data, ctx.target, &rows) == 0.0 {
            self.nodes[idx] = Node::Leaf { rows };
            return idx;
        }
        match best_split(ctx, &rows) {
            Some(cand) if cand.gain >= ctx.improvement_floor => {
                let (left_rows, right_rows) = partition(ctx.data, &rows, cand.rule);
                let left = self.build(ctx, left_rows);
                let right = self.build(ctx, right_rows);
                self.nodes[idx] = Node::Split { rule: cand.rule, left, right };
            }
            _ => {
                self.nodes[idx] = Node::Leaf { rows };
            }
        }
        idx
    }

    /// Training rows of the leaf this data row routes to.
    pub fn leaf_rows(&self, data: &Dataset, row: usize) -> &[usize] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { rows } => return rows,
                Node::Split { rule, left, right } => {
                    at = if goes_left(data, row, *rule) { *left } else { *right };
                }
            }
        }
    }

    /// Imputes by drawing one training target value from the routed leaf.
    pub fn draw(&self, data: &Dataset, row: usize, rng: &mut ChaCha8Rng) -> Cell {
        let rows = self.leaf_rows(data, row);
        let pick = rows[rng.gen_range(0..rows.len())];
        data.get(pick, self.target)
    }

    #[cfg(test)]
    fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

fn goes_left(data: &Dataset, row: usize, rule: SplitRule) -> bool {
    match rule {
        SplitRule::NumLe { col, threshold } => {
            data.get(row, col).as_num().expect("numeric predictor") <= threshold
        }
        SplitRule::CatIn { col, levels } => {
            let k = data.get(row, col).as_cat().expect("categorical predictor");
            levels & (1u64 << k) != 0
        }
    }
}

fn partition(data: &Dataset, rows: &[usize], rule: SplitRule) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &r in rows {
        if goes_left(data, r, rule) {
            left.push(r);
        } else {
            right.push(r);
        }
    }
    (left, right)
}

/// SSE for numeric targets, count-weighted Gini for categorical ones.
fn node_impurity(data: &Dataset, target: usize, rows: &[usize]) -> f64 {
    match data.column(target).kind {
        ColumnKind::Numeric => {
            let n = rows.len() as f64;
            let sum: f64 = rows.iter().map(|&r| num(data, r, target)).sum();
            let sumsq: f64 = rows.iter().map(|&r| num(data, r, target).powi(2)).sum();
            (sumsq - sum * sum / n).max(0.0)
        }
        ColumnKind::Categorical => {
            let mut counts = vec![0.0f64; data.column(target).n_levels()];
            for &r in rows {
                counts[cat(data, r, target)] += 1.0;
            }
            let n = rows.len() as f64;
            (n - counts.iter().map(|c| c * c).sum::<f64>() / n).max(0.0)
        }
    }
}

#[inline]
fn num(data: &Dataset, row: usize, col: usize) -> f64 {
    data.get(row, col).as_num().expect("numeric cell")
}

#[inline]
fn cat(data: &Dataset, row: usize, col: usize) -> usize {
    data.get(row, col).as_cat().expect("categorical cell") as usize
}

fn best_split(ctx: &FitCtx, rows: &[usize]) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    let parent = node_impurity(ctx.data, ctx.target, rows);
    for col in 0..ctx.data.n_cols() {
        if col == ctx.target {
            continue;
        }
        let cand = match ctx.data.column(col).kind {
            ColumnKind::Numeric => best_numeric_split(ctx, rows, col, parent),
            ColumnKind::Categorical => best_categorical_split(ctx, rows, col, parent),
        };
        if let Some(c) = cand {
            // Strict improvement keeps the first (lowest column) on ties.
            if best.map_or(true, |b| c.gain > b.gain) {
                best = Some(c);
            }
        }
    }
    best
}

/// Children impurity after a two-way partition of target stats.
enum TargetAgg {
    Num { n: f64, sum: f64, sumsq: f64 },
    Cat { n: f64, counts: Vec<f64> },
}

impl TargetAgg {
    fn new(ctx: &FitCtx) -> Self {
        match ctx.data.column(ctx.target).kind {
            ColumnKind::Numeric => TargetAgg::Num { n: 0.0, sum: 0.0, sumsq: 0.0 },
            ColumnKind::Categorical => TargetAgg::Cat {
                n: 0.0,
                counts: vec![0.0; ctx.data.column(ctx.target).n_levels()],
            },
        }
    }

    fn add_row(&mut self, ctx: &FitCtx, row: usize) {
        match self {
            TargetAgg::Num { n, sum, sumsq } => {
                let y = num(ctx.data, row, ctx.target);
                *n += 1.0;
                *sum += y;
                *sumsq += y * y;
            }
            TargetAgg::Cat { n, counts } => {
                *n += 1.0;
                counts[cat(ctx.data, row, ctx.target)] += 1.0;
            }
        }
    }

    fn merge(&mut self, other: &TargetAgg) {
        match (self, other) {
            (TargetAgg::Num { n, sum, sumsq }, TargetAgg::Num { n: n2, sum: s2, sumsq: q2 }) => {
                *n += n2;
                *sum += s2;
                *sumsq += q2;
            }
            (TargetAgg::Cat { n, counts }, TargetAgg::Cat { n: n2, counts: c2 }) => {
                *n += n2;
                for (a, b) in counts.iter_mut().zip(c2) {
                    *a += b;
                }
            }
            _ => unreachable!("mixed aggregate kinds"),
        }
    }

    fn count(&self) -> f64 {
        match self {
            TargetAgg::Num { n, .. } | TargetAgg::Cat { n, .. } => *n,
        }
    }

    fn impurity(&self) -> f64 {
        match self {
            TargetAgg::Num { n, sum, sumsq } => {
                if *n == 0.0 {
                    0.0
                } else {
                    (sumsq - sum * sum / n).max(0.0)
                }
            }
            TargetAgg::Cat { n, counts } => {
                if *n == 0.0 {
                    0.0
                } else {
                    (n - counts.iter().map(|c| c * c).sum::<f64>() / n).max(0.0)
                }
            }
        }
    }

    fn mean(&self) -> f64 {
        match self {
            TargetAgg::Num { n, sum, .. } => sum / n.max(1.0),
            TargetAgg::Cat { .. } => unreachable!("mean of a categorical aggregate"),
        }
    }
}

fn best_numeric_split(ctx: &FitCtx, rows: &[usize], col: usize, parent: f64) -> Option<Candidate> {
    let mut order: Vec<usize> = rows.to_vec();
    order.sort_by(|&a, &b| num(ctx.data, a, col).total_cmp(&num(ctx.data, b, col)).then(a.cmp(&b)));
    let mut left = TargetAgg::new(ctx);
    let mut right = TargetAgg::new(ctx);
    for &r in &order {
        right.add_row(ctx, r);
    }
    let mut best: Option<Candidate> = None;
    for i in 0..order.len() - 1 {
        let r = order[i];
        left.add_row(ctx, r);
        right_remove(&mut right, ctx, r);
        let v_here = num(ctx.data, r, col);
        let v_next = num(ctx.data, order[i + 1], col);
        if v_here == v_next {
            continue;
        }
        let nl = left.count() as usize;
        let nr = order.len() - nl;
        if nl < ctx.min_leaf || nr < ctx.min_leaf {
            continue;
        }
        let gain = parent - left.impurity() - right.impurity();
        let threshold = v_here + (v_next - v_here) / 2.0;
        if best.map_or(true, |b| gain > b.gain) {
            best = Some(Candidate { rule: SplitRule::NumLe { col, threshold }, gain });
        }
    }
    best
}

fn right_remove(agg: &mut TargetAgg, ctx: &FitCtx, row: usize) {
    match agg {
        TargetAgg::Num { n, sum, sumsq } => {
            let y = num(ctx.data, row, ctx.target);
            *n -= 1.0;
            *sum -= y;
            *sumsq -= y * y;
        }
        TargetAgg::Cat { n, counts } => {
            *n -= 1.0;
            counts[cat(ctx.data, row, ctx.target)] -= 1.0;
        }
    }
}

fn best_categorical_split(
    ctx: &FitCtx,
    rows: &[usize],
    col: usize,
    parent: f64,
) -> Option<Candidate> {
    let n_levels = ctx.data.column(col).n_levels();
    if n_levels > 64 {
        return None;
    }
    // Per-level target aggregates.
    let mut per_level: Vec<TargetAgg> = (0..n_levels).map(|_| TargetAgg::new(ctx)).collect();
    for &r in rows {
        per_level[cat(ctx.data, r, col)].add_row(ctx, r);
    }
    let present: Vec<usize> =
        (0..n_levels).filter(|&l| per_level[l].count() > 0.0).collect();
    if present.len() < 2 {
        return None;
    }

    let evaluate = |left_levels: &[usize]| -> Option<Candidate> {
        let mut left = TargetAgg::new(ctx);
        let mut mask = 0u64;
        for &l in left_levels {
            left.merge(&per_level[l]);
            mask |= 1u64 << l;
        }
        let mut right = TargetAgg::new(ctx);
        for &l in &present {
            if mask & (1u64 << l) == 0 {
                right.merge(&per_level[l]);
            }
        }
        let (nl, nr) = (left.count() as usize, right.count() as usize);
        if nl < ctx.min_leaf || nr < ctx.min_leaf {
            return None;
        }
        let gain = parent - left.impurity() - right.impurity();
        Some(Candidate { rule: SplitRule::CatIn { col, levels: mask }, gain })
    };

    let mut best: Option<Candidate> = None;
    let mut consider = |cand: Option<Candidate>| {
        if let Some(c) = cand {
            if best.map_or(true, |b| c.gain > b.gain) {
                best = Some(c);
            }
        }
    };

    if present.len() <= EXHAUSTIVE_LEVEL_LIMIT {
        // Fix the first present level on the left to enumerate each
        // partition exactly once.
        let rest = &present[1..];
        for bits in 0..(1u64 << rest.len()) {
            let mut left_levels = vec![present[0]];
            for (i, &l) in rest.iter().enumerate() {
                if bits & (1 << i) != 0 {
                    left_levels.push(l);
                }
            }
            if left_levels.len() == present.len() {
                continue;
            }
            consider(evaluate(&left_levels));
        }
    } else {
        // Order levels and try contiguous prefixes. Numeric targets order
        // by mean response, categorical by level count.
        let mut ordered = present.clone();
        match ctx.data.column(ctx.target).kind {
            ColumnKind::Numeric => {
                ordered.sort_by(|&a, &b| {
                    per_level[a].mean().total_cmp(&per_level[b].mean()).then(a.cmp(&b))
                });
            }
            ColumnKind::Categorical => {
                ordered.sort_by(|&a, &b| {
                    per_level[a].count().total_cmp(&per_level[b].count()).then(a.cmp(&b))
                });
            }
        }
        for cut in 1..ordered.len() {
            consider(evaluate(&ordered[..cut]));
        }
    }
    best
}
