//! CART decision tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values, scored in one prefix-count sweep per feature. Ties between equally
//! good splits go to the lower feature index, then the lower threshold, so
//! the tree does not depend on the order features are examined in.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, check_training, ClassifierError};
use crate::corpus::Polarity;

/// Smallest impurity decrease that justifies a split.
const MIN_GAIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { max_depth: 10, min_samples_split: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Majority class and the fraction of leaf samples carrying it.
    Leaf { class: Polarity, probability: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    /// Arena; node 0 is the root.
    pub nodes: Vec<Node>,
    pub max_depth: usize,
    pub dim: usize,
}

pub fn gini(positives: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = positives as f64 / total as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// How many features to examine at each node.
pub(crate) enum FeatureChoice<'a> {
    All,
    /// Random order; stop after `count` non-constant features.
    Sample {
        count: usize,
        rng: &'a mut ChaCha8Rng,
    },
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    weighted_gini: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.weighted_gini < o.weighted_gini
                    || (self.weighted_gini == o.weighted_gini
                        && (self.feature, self.threshold) < (o.feature, o.threshold))
            }
        }
    }
}

pub fn train_tree(x: &[Vec<f64>], y: &[Polarity], config: &TreeConfig) -> Result<TreeModel, ClassifierError> {
    check_training(x, y, 1)?;
    let indices: Vec<usize> = (0..x.len()).collect();
    Ok(grow_tree(x, y, indices, config, FeatureChoice::All))
}

/// Grows a tree over `indices` (repeats allowed, as in bootstrap resamples).
pub(crate) fn grow_tree(
    x: &[Vec<f64>],
    y: &[Polarity],
    indices: Vec<usize>,
    config: &TreeConfig,
    features: FeatureChoice<'_>,
) -> TreeModel {
    let dim = x[0].len();
    let mut builder = Builder { x, y, config, features, nodes: Vec::new(), dim };
    builder.grow(indices, 0);
    TreeModel { nodes: builder.nodes, max_depth: config.max_depth, dim }
}

struct Builder<'a, 'r> {
    x: &'a [Vec<f64>],
    y: &'a [Polarity],
    config: &'a TreeConfig,
    features: FeatureChoice<'r>,
    nodes: Vec<Node>,
    dim: usize,
}

impl Builder<'_, '_> {
    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let total = indices.len();
        let positives = indices.iter().filter(|&&i| self.y[i].is_positive()).count();
        let id = self.nodes.len();
        self.nodes.push(leaf(positives, total));

        if positives == 0
            || positives == total
            || depth >= self.config.max_depth
            || total < self.config.min_samples_split.max(2)
        {
            return id;
        }
        let Some(best) = self.best_split(&indices, positives) else {
            return id;
        };
        if gini(positives, total) - best.weighted_gini <= MIN_GAIN {
            return id;
        }
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            indices.into_iter().partition(|&i| self.x[i][best.feature] <= best.threshold);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        id
    }

    fn best_split(&mut self, indices: &[usize], positives: usize) -> Option<Candidate> {
        let mut best = None;
        match &mut self.features {
            FeatureChoice::All => {
                for f in 0..self.dim {
                    if let Some(c) = scan_feature(self.x, self.y, indices, positives, f) {
                        if c.beats(&best) {
                            best = Some(c);
                        }
                    }
                }
            }
            FeatureChoice::Sample { count, rng } => {
                let mut order: Vec<usize> = (0..self.dim).collect();
                order.shuffle(*rng);
                let mut examined = 0;
                for f in order {
                    if examined >= *count {
                        break;
                    }
                    if is_constant(self.x, indices, f) {
                        continue;
                    }
                    examined += 1;
                    if let Some(c) = scan_feature(self.x, self.y, indices, positives, f) {
                        if c.beats(&best) {
                            best = Some(c);
                        }
                    }
                }
            }
        }
        best
    }
}

fn leaf(positives: usize, total: usize) -> Node {
    let negatives = total - positives;
    // ties go to class 0
    let class = Polarity::from_positive(positives > negatives);
    let count = if class.is_positive() { positives } else { negatives };
    let probability = if total == 0 { 0.0 } else { count as f64 / total as f64 };
    Node::Leaf { class, probability }
}

fn is_constant(x: &[Vec<f64>], indices: &[usize], feature: usize) -> bool {
    let first = x[indices[0]][feature];
    indices.iter().all(|&i| x[i][feature] == first)
}

/// Best threshold on one feature via a sorted prefix-count sweep.
fn scan_feature(
    x: &[Vec<f64>],
    y: &[Polarity],
    indices: &[usize],
    positives: usize,
    feature: usize,
) -> Option<Candidate> {
    let mut pairs: Vec<(f64, bool)> = indices.iter().map(|&i| (x[i][feature], y[i].is_positive())).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = pairs.len();
    let mut best: Option<Candidate> = None;
    let mut left_pos = 0usize;
    for k in 0..total - 1 {
        if pairs[k].1 {
            left_pos += 1;
        }
        let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
        if lo == hi {
            continue;
        }
        let left_n = k + 1;
        let right_n = total - left_n;
        let weighted = (left_n as f64 * gini(left_pos, left_n) + right_n as f64 * gini(positives - left_pos, right_n))
            / total as f64;
        let mut threshold = lo + (hi - lo) / 2.0;
        if threshold >= hi {
            threshold = lo;
        }
        let cand = Candidate { weighted_gini: weighted, feature, threshold };
        // thresholds rise along the sweep, so strict improvement keeps the lowest
        if best.is_none_or(|b| weighted < b.weighted_gini) {
            best = Some(cand);
        }
    }
    best
}

impl TreeModel {
    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// The leaf reached by `x`: `(class, probability)`.
    pub fn leaf(&self, x: &[f64]) -> Result<(Polarity, f64), ClassifierError> {
        check_dim(self.dim, x)?;
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { class, probability } => return Ok((class, probability)),
                Node::Split { feature, threshold, left, right } => {
                    id = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Polarity, ClassifierError> {
        self.leaf(x).map(|(c, _)| c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(bits: &[u8]) -> Vec<Polarity> {
        bits.iter().map(|&b| Polarity::try_from(b).unwrap()).collect()
    }

    #[test]
    fn pure_input_is_a_single_leaf() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let t = train_tree(&x, &labels(&[1, 1, 1]), &TreeConfig::default()).unwrap();
        assert_eq!(t.nodes, vec![Node::Leaf { class: Polarity::Positive, probability: 1.0 }]);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn split_by_enumeration() {
        // candidates 1.5, 2.5, 3.5; weighted Gini 1/3, 0, 1/3 -> 2.5 is the unique zero
        let x = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let y = labels(&[0, 0, 1, 1]);
        let oracle: Vec<(f64, f64)> = [1.5, 2.5, 3.5]
            .iter()
            .map(|&t| {
                let (l, r): (Vec<_>, Vec<_>) = x.iter().zip(&y).partition(|(v, _)| v[0] <= t);
                let g = |side: &[(&Vec<f64>, &Polarity)]| {
                    let p = side.iter().filter(|(_, c)| c.is_positive()).count();
                    gini(p, side.len()) * side.len() as f64 / 4.0
                };
                (t, g(&l) + g(&r))
            })
            .collect();
        assert_eq!(oracle.iter().filter(|(_, g)| *g == 0.0).count(), 1);
        assert_eq!(oracle[1], (2.5, 0.0));

        let t = train_tree(&x, &y, &TreeConfig::default()).unwrap();
        match &t.nodes[0] {
            Node::Split { feature: 0, threshold, left, right } => {
                assert_eq!(*threshold, 2.5);
                assert_eq!(t.nodes[*left], Node::Leaf { class: Polarity::Negative, probability: 1.0 });
                assert_eq!(t.nodes[*right], Node::Leaf { class: Polarity::Positive, probability: 1.0 });
            }
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn alternating_labels_hit_depth_cap_exactly() {
        let x: Vec<Vec<f64>> = (0..4096).map(|i| vec![i as f64]).collect();
        let y: Vec<Polarity> = (0..4096).map(|i| Polarity::from_positive(i % 2 == 1)).collect();
        let t = train_tree(&x, &y, &TreeConfig::default()).unwrap();
        assert_eq!(t.depth(), 10);
    }

    #[test]
    fn leaf_tie_goes_to_negative() {
        let x = vec![vec![1.0], vec![1.0]];
        let t = train_tree(&x, &labels(&[1, 0]), &TreeConfig::default()).unwrap();
        assert_eq!(t.leaf(&[1.0]).unwrap(), (Polarity::Negative, 0.5));
    }

    #[test]
    fn min_samples_split_stops_growth() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let cfg = TreeConfig { max_depth: 10, min_samples_split: 5 };
        let t = train_tree(&x, &labels(&[0, 0, 1, 1]), &cfg).unwrap();
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn prediction_dimension_checked() {
        let t = train_tree(&[vec![1.0, 2.0]], &labels(&[1]), &TreeConfig::default()).unwrap();
        assert!(matches!(t.predict(&[1.0]), Err(ClassifierError::DimensionMismatch { .. })));
    }

    fn child_gini_never_exceeds_parent(t: &TreeModel, x: &[Vec<f64>], y: &[Polarity]) -> bool {
        fn visit(t: &TreeModel, id: usize, idx: Vec<usize>, x: &[Vec<f64>], y: &[Polarity]) -> bool {
            match t.nodes[id] {
                Node::Leaf { .. } => true,
                Node::Split { feature, threshold, left, right } => {
                    let pos = |v: &[usize]| v.iter().filter(|&&i| y[i].is_positive()).count();
                    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] <= threshold);
                    let n = idx.len() as f64;
                    let weighted =
                        (l.len() as f64 * gini(pos(&l), l.len()) + r.len() as f64 * gini(pos(&r), r.len())) / n;
                    weighted <= gini(pos(&idx), idx.len()) + 1e-12
                        && visit(t, left, l, x, y)
                        && visit(t, right, r, x, y)
                }
            }
        }
        visit(t, 0, (0..x.len()).collect(), x, y)
    }

    proptest! {
        #[test]
        fn depth_and_gini_invariants(
            rows in proptest::collection::vec((0u8..6, 0u8..6, 0u8..2), 1..120),
            max_depth in 0usize..7,
        ) {
            let x: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0 as f64, r.1 as f64]).collect();
            let y: Vec<Polarity> = rows.iter().map(|r| Polarity::try_from(r.2).unwrap()).collect();
            let t = train_tree(&x, &y, &TreeConfig { max_depth, min_samples_split: 2 }).unwrap();
            prop_assert!(t.depth() <= max_depth);
            prop_assert!(child_gini_never_exceeds_parent(&t, &x, &y));
            for node in &t.nodes {
                if let Node::Leaf { probability, .. } = node {
                    prop_assert!((0.0..=1.0).contains(probability));
                }
            }
            for row in &x {
                prop_assert_eq!(t.predict(row).unwrap(), t.predict(row).unwrap());
            }
        }
    }
}
