//! CART regression trees with variance-reduction splits.

use crate::rng::SplitMix64;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node<T> {
    Leaf(T),
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features considered per split; all when `None` or ≥ the column count.
    pub mtry: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree<T> {
    nodes: Vec<Node<T>>,
}

struct Builder<'a, T> {
    rows: &'a [Vec<T>],
    target: &'a [T],
    params: TreeParams,
    rng: SplitMix64,
    nodes: Vec<Node<T>>,
    features: Vec<usize>,
}

fn leaf_value<T: Scalar>(target: &[T], sample: &[usize]) -> T {
    let first = target[sample[0]];
    if sample.iter().all(|&i| target[i] == first) {
        return first;
    }
    sample.iter().map(|&i| target[i]).sum::<T>() / T::from_usize_lossy(sample.len())
}

impl<T: Scalar> Builder<'_, T> {
    fn grow(&mut self, sample: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(leaf_value(self.target, sample)));
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        let min_leaf = self.params.min_leaf.max(1);
        if !depth_ok || sample.len() < 2 * min_leaf {
            return id;
        }
        let first = self.target[sample[0]];
        if sample.iter().all(|&i| self.target[i] == first) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(sample, min_leaf) else {
            return id;
        };
        let mut split = 0;
        for k in 0..sample.len() {
            if self.rows[sample[k]][feature] <= threshold {
                sample.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = sample.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, sample: &[usize], min_leaf: usize) -> Option<(usize, T)> {
        let p = self.features.len();
        let m = self.params.mtry.map_or(p, |m| m.clamp(1, p));
        // Random feature order; the first m are the candidates, and the rest are
        // only inspected when none of those admits a valid split.
        for k in 0..p.saturating_sub(1) {
            let j = k + self.rng.below(p - k);
            self.features.swap(k, j);
        }
        let n = sample.len();
        let total: T = sample.iter().map(|&i| self.target[i]).sum();
        let nt = T::from_usize_lossy(n);
        let parent = total * total / nt;
        let mut best: Option<(T, usize, T)> = None;
        let mut order: Vec<(T, T)> = Vec::with_capacity(n);
        for fi in 0..p {
            if fi >= m && best.is_some_and(|(g, _, _)| g > T::zero()) {
                break;
            }
            let f = self.features[fi];
            order.clear();
            order.extend(sample.iter().map(|&i| (self.rows[i][f], self.target[i])));
            order.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("features are finite"));
            let mut left_sum = T::zero();
            for k in 0..n - 1 {
                left_sum = left_sum + order[k].1;
                let nl = k + 1;
                if nl < min_leaf || n - nl < min_leaf || order[k].0 == order[k + 1].0 {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / T::from_usize_lossy(nl)
                    + right_sum * right_sum / T::from_usize_lossy(n - nl)
                    - parent;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    let (a, b) = (order[k].0, order[k + 1].0);
                    let mut thr = a + (b - a) / T::lit(2.0);
                    if thr >= b {
                        thr = a;
                    }
                    best = Some((gain, f, thr));
                }
            }
        }
        best.filter(|(g, _, _)| *g >= T::zero()).map(|(_, f, t)| (f, t))
    }
}

impl<T: Scalar> RegressionTree<T> {
    /// Fit on the rows listed in `sample` (repeats allowed, as in a bootstrap).
    pub fn fit(rows: &[Vec<T>], target: &[T], sample: &[usize], params: TreeParams, seed: u64) -> Self {
        assert!(!sample.is_empty(), "tree needs at least one sample");
        let p = rows.first().map_or(0, Vec::len);
        let mut b = Builder {
            rows,
            target,
            params,
            rng: SplitMix64::new(seed),
            nodes: Vec::new(),
            features: (0..p).collect(),
        };
        let mut sample = sample.to_vec();
        b.grow(&mut sample, 0);
        Self { nodes: b.nodes }
    }

    pub fn predict_row(&self, row: &[T]) -> T {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: TreeParams = TreeParams {
        max_depth: None,
        min_leaf: 1,
        mtry: None,
    };

    #[test]
    fn memorises_unique_rows() {
        let mut rng = SplitMix64::new(5);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.next_f64(), rng.next_f64()]).collect();
        let y: Vec<f64> = (0..200).map(|_| rng.next_gaussian()).collect();
        let all: Vec<usize> = (0..200).collect();
        let t = RegressionTree::fit(&rows, &y, &all, FULL, 1);
        for (r, v) in rows.iter().zip(&y) {
            assert_eq!(t.predict_row(r), *v);
        }
    }

    #[test]
    fn depth_limit_is_respected() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..64).map(|i| (i * i) as f64).collect();
        let all: Vec<usize> = (0..64).collect();
        let params = TreeParams {
            max_depth: Some(3),
            ..FULL
        };
        let t = RegressionTree::fit(&rows, &y, &all, params, 0);
        assert!(t.depth() <= 3);
        assert!(t.node_count() <= 15);
    }

    #[test]
    fn min_leaf_blocks_small_splits() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let y = vec![0.0, 0.0, 9.0, 0.0, 0.0];
        let all: Vec<usize> = (0..5).collect();
        let params = TreeParams { min_leaf: 3, ..FULL };
        let t = RegressionTree::fit(&rows, &y, &all, params, 0);
        assert_eq!(t.node_count(), 1);
        assert!((t.predict_row(&[2.0]) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn threshold_between_adjacent_floats() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let rows = vec![vec![a], vec![b]];
        let y = vec![0.0, 1.0];
        let t = RegressionTree::fit(&rows, &y, &[0, 1], FULL, 0);
        assert_eq!(t.predict_row(&[a]), 0.0);
        assert_eq!(t.predict_row(&[b]), 1.0);
    }
}
