//! Bagged random forest over [`tree`](super::tree) learners.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, FeatureChoice, TreeConfig, TreeModel};
use super::{check_dim, check_training, ClassifierError};
use crate::corpus::Polarity;
use crate::util::rng_for;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means `floor(sqrt(dim))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, max_depth: 10, min_samples_split: 2, max_features: None, bootstrap: true, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub n_trees: usize,
    pub feature_subsample: usize,
    pub seed: u64,
}

pub fn default_feature_subsample(dim: usize) -> usize {
    ((dim as f64).sqrt().floor() as usize).max(1)
}

pub fn train_forest(x: &[Vec<f64>], y: &[Polarity], config: &ForestConfig) -> Result<ForestModel, ClassifierError> {
    let dim = check_training(x, y, 1)?;
    if config.n_trees == 0 {
        return Err(ClassifierError::InvalidParameter("n_trees must be >= 1".into()));
    }
    let feature_subsample = match config.max_features {
        Some(0) => return Err(ClassifierError::InvalidParameter("max_features must be >= 1".into())),
        Some(m) => m.min(dim),
        None => default_feature_subsample(dim),
    };
    let tree_config = TreeConfig { max_depth: config.max_depth, min_samples_split: config.min_samples_split };
    let n = x.len();
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(config.seed, t as u64);
            let indices: Vec<usize> =
                if config.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
            let features = if feature_subsample >= dim {
                FeatureChoice::All
            } else {
                FeatureChoice::Sample { count: feature_subsample, rng: &mut rng }
            };
            grow_tree(x, y, indices, &tree_config, features)
        })
        .collect();
    Ok(ForestModel { trees, n_trees: config.n_trees, feature_subsample, seed: config.seed })
}

/// Combines per-tree `(class, leaf probability)` votes: majority, then the
/// larger summed leaf probability, then class 0.
pub fn vote(votes: &[(Polarity, f64)]) -> Polarity {
    let (mut n_pos, mut n_neg, mut p_pos, mut p_neg) = (0usize, 0usize, 0.0, 0.0);
    for &(class, p) in votes {
        if class.is_positive() {
            n_pos += 1;
            p_pos += p;
        } else {
            n_neg += 1;
            p_neg += p;
        }
    }
    if n_pos != n_neg {
        Polarity::from_positive(n_pos > n_neg)
    } else {
        Polarity::from_positive(p_pos > p_neg)
    }
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<Polarity, ClassifierError> {
        if let Some(first) = self.trees.first() {
            check_dim(first.dim, x)?;
        }
        let votes = self.trees.iter().map(|t| t.leaf(x)).collect::<Result<Vec<_>, _>>()?;
        Ok(vote(&votes))
    }
}

pub fn predict_forest(model: &ForestModel, x: &[f64]) -> Result<Polarity, ClassifierError> {
    model.predict(x)
}
