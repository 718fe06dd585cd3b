use rayon::prelude::*;

use super::tree::{RegressionTree, TreeParams};
use crate::rng::{derive_seed, SplitMix64};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Defaults to `ceil(p / 3)`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: Some(12),
            min_leaf: 3,
            mtry: None,
            bootstrap: true,
        }
    }
}

/// Bagged regression trees.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest<T> {
    trees: Vec<RegressionTree<T>>,
}

impl<T: Scalar> RandomForest<T> {
    /// Trees are fitted in parallel; tree `k` draws from `derive_seed(seed, k)`,
    /// so the result does not depend on scheduling.
    pub fn fit(rows: &[Vec<T>], target: &[T], params: ForestParams, seed: u64) -> Self {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            mtry: Some(params.mtry.unwrap_or(p.div_ceil(3)).max(1)),
        };
        let trees = (0..params.n_trees.max(1))
            .into_par_iter()
            .map(|k| {
                let tree_seed = derive_seed(seed, k as u64);
                let mut rng = SplitMix64::new(tree_seed);
                let sample: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.below(n)).collect()
                } else {
                    (0..n).collect()
                };
                RegressionTree::fit(rows, target, &sample, tree_params, rng.next_u64())
            })
            .collect();
        Self { trees }
    }

    pub fn trees(&self) -> &[RegressionTree<T>] {
        &self.trees
    }

    pub fn predict_row(&self, row: &[T]) -> T {
        let sum: T = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / T::from_usize_lossy(self.trees.len())
    }
}
