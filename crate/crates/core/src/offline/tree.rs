//! CART regression trees with exhaustive or randomized splits and
//! cost-complexity pruning.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::FitError;
use crate::rng::{seeded, StreamRng};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Best threshold over every distinct cut point.
    Exhaustive,
    /// One uniform cut point per candidate feature.
    Random,
}

impl SplitMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exhaustive => "exhaustive",
            Self::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub ccp_alpha: f64,
    pub split_mode: SplitMode,
    /// Features sampled per split; `None` uses all of them.
    pub features_per_split: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            ccp_alpha: 0.0,
            split_mode: SplitMode::Exhaustive,
            features_per_split: None,
        }
    }
}

impl TreeParams {
    pub fn shallow(max_depth: usize) -> Self {
        Self { max_depth: Some(max_depth), ..Self::default() }
    }

    fn validate(&self) -> Result<(), FitError> {
        if self.min_samples_leaf == 0 {
            return Err(FitError::InvalidParameter("min_samples_leaf must be >= 1".into()));
        }
        if !(self.ccp_alpha >= 0.0 && self.ccp_alpha.is_finite()) {
            return Err(FitError::InvalidParameter("ccp_alpha must be >= 0".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(FitError::InvalidParameter("features_per_split must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Mean training target of the node.
    pub value: f64,
    pub n_samples: usize,
    /// Training residual sum of squares about `value`.
    pub rss: f64,
    pub split: Option<Split>,
}

/// A fitted tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Index of the leaf reached by `row`.
    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut i = 0;
        while let Some(s) = &self.nodes[i].split {
            i = if row[s.feature] <= s.threshold { s.left } else { s.right };
        }
        i
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf_of(row)].value
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i].split {
                None => 0,
                Some(s) => 1 + go(t, s.left).max(go(t, s.right)),
            }
        }
        go(self, 0)
    }

    pub fn root_split(&self) -> Option<Split> {
        self.nodes[0].split
    }

    /// Summed leaf RSS on the training sample.
    pub fn training_rss(&self) -> f64 {
        self.nodes.iter().filter(|n| n.split.is_none()).map(|n| n.rss).sum()
    }

    /// RSS of the two children of the root, if it is split.
    pub fn root_split_rss(&self) -> Option<f64> {
        self.root_split().map(|s| self.nodes[s.left].rss + self.nodes[s.right].rss)
    }
}

/// Fits a tree on every row of `x`.
pub fn fit_tree(x: &Matrix, y: &[f64], params: &TreeParams, seed: u64) -> Result<Tree, FitError> {
    let idx: Vec<usize> = (0..x.nrows()).collect();
    fit_tree_on(x, y, idx, params, &mut seeded(seed))
}

/// Fits a tree on the (possibly repeated) rows `idx`.
pub(crate) fn fit_tree_on(
    x: &Matrix,
    y: &[f64],
    idx: Vec<usize>,
    params: &TreeParams,
    rng: &mut StreamRng,
) -> Result<Tree, FitError> {
    params.validate()?;
    if idx.is_empty() {
        return Err(FitError::EmptyTrainingSet);
    }
    let mut b = Builder { x, y, params, rng, nodes: Vec::new(), order: Vec::new() };
    b.grow(idx, 0);
    let mut tree = Tree { nodes: b.nodes };
    if params.ccp_alpha > 0.0 {
        tree = prune(&tree, params.ccp_alpha);
    }
    Ok(tree)
}

fn mean_rss(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    let rss = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    (mean, rss)
}

struct Candidate {
    feature: usize,
    threshold: f64,
    rss: f64,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut StreamRng,
    nodes: Vec<Node>,
    order: Vec<(f64, f64)>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let (value, rss) = mean_rss(self.y, &idx);
        let id = self.nodes.len();
        self.nodes.push(Node { value, n_samples: idx.len(), rss, split: None });

        let first = self.y[idx[0]];
        let pure = idx.iter().all(|&i| self.y[i] == first);
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_ok || idx.len() < 2 * self.params.min_samples_leaf {
            return id;
        }
        let Some(best) = self.best_split(&idx, value) else { return id };

        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x.get(i, best.feature) <= best.threshold);
        drop(idx);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id].split = Some(Split { feature: best.feature, threshold: best.threshold, left: l, right: r });
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x.ncols();
        match self.params.features_per_split {
            Some(f) if f < p => {
                let mut v = sample(self.rng, p, f).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], mean: f64) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        for j in self.candidate_features() {
            let c = match self.params.split_mode {
                SplitMode::Exhaustive => self.exhaustive(idx, j, mean),
                SplitMode::Random => self.random(idx, j, mean),
            };
            if let Some(c) = c {
                // Strict improvement keeps the lower feature / threshold on ties.
                if best.as_ref().is_none_or(|b| c.rss < b.rss) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn exhaustive(&mut self, idx: &[usize], j: usize, mean: f64) -> Option<Candidate> {
        let min_leaf = self.params.min_samples_leaf;
        self.order.clear();
        self.order.extend(idx.iter().map(|&i| (self.x.get(i, j), self.y[i] - mean)));
        self.order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.order.len();
        let (total1, total2) = self.order.iter().fold((0.0, 0.0), |(s1, s2), &(_, r)| (s1 + r, s2 + r * r));
        let mut best: Option<Candidate> = None;
        let (mut s1, mut s2) = (0.0, 0.0);
        for k in 0..n - 1 {
            let (xk, rk) = self.order[k];
            s1 += rk;
            s2 += rk * rk;
            let nl = k + 1;
            let next = self.order[k + 1].0;
            if xk == next || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let nr = (n - nl) as f64;
            let rss_l = (s2 - s1 * s1 / nl as f64).max(0.0);
            let (r1, r2) = (total1 - s1, total2 - s2);
            let rss_r = (r2 - r1 * r1 / nr).max(0.0);
            let rss = rss_l + rss_r;
            if best.as_ref().is_none_or(|b| rss < b.rss) {
                let mut t = xk + (next - xk) / 2.0;
                if t >= next {
                    t = xk;
                }
                best = Some(Candidate { feature: j, threshold: t, rss });
            }
        }
        best
    }

    fn random(&mut self, idx: &[usize], j: usize, mean: f64) -> Option<Candidate> {
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = self.x.get(i, j);
            (lo.min(v), hi.max(v))
        });
        if lo == hi {
            return None;
        }
        let u: f64 = self.rng.random();
        let t = lo + u * (hi - lo);
        if t >= hi {
            return None;
        }
        let (mut nl, mut s1l, mut s2l, mut s1r, mut s2r) = (0usize, 0.0, 0.0, 0.0, 0.0);
        for &i in idx {
            let r = self.y[i] - mean;
            if self.x.get(i, j) <= t {
                nl += 1;
                s1l += r;
                s2l += r * r;
            } else {
                s1r += r;
                s2r += r * r;
            }
        }
        let nr = idx.len() - nl;
        let min_leaf = self.params.min_samples_leaf;
        if nl < min_leaf || nr < min_leaf {
            return None;
        }
        let rss = (s2l - s1l * s1l / nl as f64).max(0.0) + (s2r - s1r * s1r / nr as f64).max(0.0);
        Some(Candidate { feature: j, threshold: t, rss })
    }
}

/// Smallest subtree minimizing `RSS + alpha · leaves`, found bottom-up: a
/// node is collapsed whenever its own cost does not exceed its subtree's.
fn prune(tree: &Tree, alpha: f64) -> Tree {
    fn cost(t: &Tree, i: usize, alpha: f64, keep: &mut [bool]) -> f64 {
        let node = &t.nodes[i];
        let leaf_cost = node.rss + alpha;
        match &node.split {
            None => leaf_cost,
            Some(s) => {
                let sub = cost(t, s.left, alpha, keep) + cost(t, s.right, alpha, keep);
                if leaf_cost <= sub {
                    keep[i] = false;
                    leaf_cost
                } else {
                    sub
                }
            }
        }
    }
    let mut keep = vec![true; tree.nodes.len()];
    cost(tree, 0, alpha, &mut keep);

    fn copy(t: &Tree, i: usize, keep: &[bool], out: &mut Vec<Node>) -> usize {
        let id = out.len();
        let mut node = t.nodes[i].clone();
        node.split = None;
        out.push(node);
        if let (true, Some(s)) = (keep[i], t.nodes[i].split) {
            let l = copy(t, s.left, keep, out);
            let r = copy(t, s.right, keep, out);
            out[id].split = Some(Split { left: l, right: r, ..s });
        }
        id
    }
    let mut nodes = Vec::new();
    copy(tree, 0, &keep, &mut nodes);
    Tree { nodes }
}
