use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Polarity, ReviewText};
use crate::util::rng_for;

/// Draws a domain corpus of `domain_n` items and a disjoint experimental set of
/// `experimental_n` items. Both subsets keep input order.
pub fn sample_split<T: Clone>(
    items: &[T],
    domain_n: usize,
    experimental_n: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), CorpusError> {
    sample_split_where(items, domain_n, experimental_n, seed, |_| true)
}

/// As [`sample_split`], but the experimental set draws only from items not
/// chosen for the domain corpus that also satisfy `eligible` (e.g. reviews
/// whose label survives standardization).
pub fn sample_split_where<T: Clone>(
    items: &[T],
    domain_n: usize,
    experimental_n: usize,
    seed: u64,
    eligible: impl Fn(&T) -> bool,
) -> Result<(Vec<T>, Vec<T>), CorpusError> {
    let requested = domain_n + experimental_n;
    if requested > items.len() {
        return Err(CorpusError::InsufficientData { requested, available: items.len() });
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng_for(seed, 0));

    let mut domain: Vec<usize> = order[..domain_n].to_vec();
    let mut experimental: Vec<usize> =
        order[domain_n..].iter().copied().filter(|&i| eligible(&items[i])).take(experimental_n).collect();
    if experimental.len() < experimental_n {
        return Err(CorpusError::InsufficientData { requested, available: domain_n + experimental.len() });
    }
    domain.sort_unstable();
    experimental.sort_unstable();
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| items[i].clone()).collect();
    Ok((pick(domain), pick(experimental)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldMode {
    /// Plain shuffled k-fold.
    #[default]
    Shuffled,
    /// Per-class shuffles dealt round-robin; needs labels on every review.
    Stratified,
}

/// Assignment of review ids to `k` folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub mode: FoldMode,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignments.get(id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignments.values() {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// True when the plan assigns exactly the ids of `reviews`.
    pub fn covers<T: ReviewText>(&self, reviews: &[T]) -> bool {
        reviews.len() == self.assignments.len() && reviews.iter().all(|r| self.assignments.contains_key(r.id()))
    }
}

/// Shuffled partition of `reviews` into `k` folds whose sizes differ by at most one.
pub fn make_folds<T: ReviewText>(reviews: &[T], k: usize, seed: u64, mode: FoldMode) -> Result<FoldPlan, CorpusError> {
    let n = reviews.len();
    if k < 2 || k > n {
        return Err(CorpusError::InvalidFoldCount { k, n });
    }
    let mut seen = HashSet::with_capacity(n);
    for r in reviews {
        if !seen.insert(r.id()) {
            return Err(CorpusError::DuplicateId(r.id().to_owned()));
        }
    }
    let mut rng = rng_for(seed, 1);
    let order: Vec<usize> = match mode {
        FoldMode::Shuffled => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            order
        }
        FoldMode::Stratified => {
            let mut by_class: [Vec<usize>; 3] = Default::default();
            for (i, r) in reviews.iter().enumerate() {
                let slot = match r.polarity() {
                    Some(Polarity::Negative) => 0,
                    Some(Polarity::Positive) => 1,
                    None => 2,
                };
                by_class[slot].push(i);
            }
            by_class
                .iter_mut()
                .flat_map(|class| {
                    class.shuffle(&mut rng);
                    class.drain(..)
                })
                .collect()
        }
    };
    let assignments = order.into_iter().enumerate().map(|(pos, i)| (reviews[i].id().to_owned(), pos % k)).collect();
    Ok(FoldPlan { k, seed, mode, assignments })
}
