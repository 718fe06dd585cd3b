//! Gradient-boosted regression trees on quantile-binned features, grown
//! leaf-wise under squared-error loss.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbdtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    /// Histogram bins per feature, at most 256.
    pub bins: usize,
    pub l2: f64,
    pub min_leaf: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            rounds: 200,
            learning_rate: 0.1,
            max_leaves: 31,
            bins: 64,
            l2: 1.0,
            min_leaf: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum GNode<T> {
    Leaf(T),
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedTree<T> {
    nodes: Vec<GNode<T>>,
}

impl<T: Scalar> BoostedTree<T> {
    pub fn predict_row(&self, row: &[T]) -> T {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                GNode::Leaf(v) => return *v,
                GNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, GNode::Leaf(_))).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gbdt<T> {
    base: T,
    trees: Vec<BoostedTree<T>>,
    train_rmse: Vec<T>,
}

/// Upper bin edges: a value `x` falls in bin `b` when `edges[b-1] < x ≤ edges[b]`.
fn bin_edges<T: Scalar>(column: &mut [T], bins: usize) -> Vec<T> {
    column.sort_by(|a, b| a.partial_cmp(b).expect("features are finite"));
    let n = column.len();
    let mut uniq: Vec<T> = column.to_vec();
    uniq.dedup();
    let mut edges = Vec::new();
    if uniq.len() <= bins {
        for w in uniq.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = a + (b - a) / T::lit(2.0);
            edges.push(if mid >= b { a } else { mid });
        }
    } else {
        for k in 1..bins {
            let v = column[(k * n / bins).max(1) - 1];
            if edges.last().is_none_or(|&e| v > e) && v < column[n - 1] {
                edges.push(v);
            }
        }
    }
    edges
}

struct Binned {
    /// Column-major bin codes.
    codes: Vec<Vec<u8>>,
    offsets: Vec<usize>,
}

#[derive(Clone, Copy, Default)]
struct Cell<T> {
    g: T,
    n: u32,
}

struct Candidate<T> {
    gain: T,
    feature: usize,
    bin: usize,
}

struct Leaf<T> {
    node: usize,
    rows: Vec<u32>,
    hist: Vec<Cell<T>>,
    g: T,
    best: Option<Candidate<T>>,
}

struct Grower<'a, T> {
    binned: &'a Binned,
    edges: &'a [Vec<T>],
    grad: &'a [T],
    l2: T,
    min_leaf: usize,
}

impl<T: Scalar> Grower<'_, T> {
    fn histogram(&self, rows: &[u32]) -> Vec<Cell<T>> {
        let mut hist = vec![Cell::default(); *self.binned.offsets.last().unwrap_or(&0)];
        for (f, codes) in self.binned.codes.iter().enumerate() {
            let off = self.binned.offsets[f];
            for &r in rows {
                let c = &mut hist[off + codes[r as usize] as usize];
                c.g = c.g + self.grad[r as usize];
                c.n += 1;
            }
        }
        hist
    }

    fn best_split(&self, hist: &[Cell<T>], g: T, n: usize) -> Option<Candidate<T>> {
        let parent = g * g / (T::from_usize_lossy(n) + self.l2);
        let mut best: Option<Candidate<T>> = None;
        for f in 0..self.binned.codes.len() {
            let cells = &hist[self.binned.offsets[f]..self.binned.offsets[f + 1]];
            let (mut gl, mut nl) = (T::zero(), 0usize);
            for (b, c) in cells.iter().enumerate().take(cells.len().saturating_sub(1)) {
                gl = gl + c.g;
                nl += c.n as usize;
                let nr = n - nl;
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let gr = g - gl;
                let gain = gl * gl / (T::from_usize_lossy(nl) + self.l2)
                    + gr * gr / (T::from_usize_lossy(nr) + self.l2)
                    - parent;
                if gain > T::zero() && best.as_ref().is_none_or(|c| gain > c.gain) {
                    best = Some(Candidate {
                        gain,
                        feature: f,
                        bin: b,
                    });
                }
            }
        }
        best
    }

    fn leaf(&self, node: usize, rows: Vec<u32>, hist: Vec<Cell<T>>) -> Leaf<T> {
        let g: T = rows.iter().map(|&r| self.grad[r as usize]).sum();
        let best = self.best_split(&hist, g, rows.len());
        Leaf {
            node,
            rows,
            hist,
            g,
            best,
        }
    }

    /// Grow one tree; returns it with per-leaf row sets and gradient sums.
    fn grow(&self, n_rows: usize, max_leaves: usize) -> (Vec<GNode<T>>, Vec<Leaf<T>>) {
        let rows: Vec<u32> = (0..n_rows as u32).collect();
        let hist = self.histogram(&rows);
        let mut nodes = vec![GNode::Leaf(T::zero())];
        let mut leaves = vec![self.leaf(0, rows, hist)];
        while leaves.len() < max_leaves.max(1) {
            let pick = leaves
                .iter()
                .enumerate()
                .filter_map(|(i, l)| l.best.as_ref().map(|c| (i, c.gain)))
                .fold(None::<(usize, T)>, |acc, (i, g)| match acc {
                    Some((_, bg)) if bg >= g => acc,
                    _ => Some((i, g)),
                });
            let Some((i, _)) = pick else { break };
            let parent = leaves.swap_remove(i);
            let cand = parent.best.as_ref().expect("picked leaf has a split");
            let codes = &self.binned.codes[cand.feature];
            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = parent
                .rows
                .iter()
                .partition(|&&r| codes[r as usize] as usize <= cand.bin);
            let left_small = left_rows.len() <= right_rows.len();
            let small_hist = self.histogram(if left_small { &left_rows } else { &right_rows });
            let large_hist: Vec<Cell<T>> = parent
                .hist
                .iter()
                .zip(&small_hist)
                .map(|(p, s)| Cell {
                    g: p.g - s.g,
                    n: p.n - s.n,
                })
                .collect();
            let (left_hist, right_hist) = if left_small {
                (small_hist, large_hist)
            } else {
                (large_hist, small_hist)
            };
            let (l, r) = (nodes.len(), nodes.len() + 1);
            nodes.push(GNode::Leaf(T::zero()));
            nodes.push(GNode::Leaf(T::zero()));
            nodes[parent.node] = GNode::Split {
                feature: cand.feature,
                threshold: self.edges[cand.feature][cand.bin],
                left: l,
                right: r,
            };
            leaves.push(self.leaf(l, left_rows, left_hist));
            leaves.push(self.leaf(r, right_rows, right_hist));
        }
        (nodes, leaves)
    }
}

fn sse<T: Scalar>(pred: &[T], y: &[T]) -> T {
    pred.iter().zip(y).map(|(&p, &t)| (p - t) * (p - t)).sum()
}

impl<T: Scalar> Gbdt<T> {
    /// Boost from the target mean. A round whose tree would raise the training
    /// loss (possible only through rounding) ends boosting instead.
    pub fn fit(rows: &[Vec<T>], target: &[T], params: GbdtParams) -> Self {
        let n = rows.len();
        assert!(n > 0 && n == target.len(), "non-empty aligned training data");
        let p = rows[0].len();
        let bins = params.bins.clamp(2, 256);
        let mut edges = Vec::with_capacity(p);
        let mut codes = Vec::with_capacity(p);
        let mut offsets = vec![0];
        for f in 0..p {
            let mut col: Vec<T> = rows.iter().map(|r| r[f]).collect();
            let e = bin_edges(&mut col, bins);
            codes.push(
                rows.iter()
                    .map(|r| e.partition_point(|&t| t < r[f]) as u8)
                    .collect::<Vec<u8>>(),
            );
            offsets.push(offsets[f] + e.len() + 1);
            edges.push(e);
        }
        let binned = Binned { codes, offsets };

        let first = target[0];
        let base = if target.iter().all(|&v| v == first) {
            first
        } else {
            target.iter().copied().sum::<T>() / T::from_usize_lossy(n)
        };
        let mut pred = vec![base; n];
        let mut loss = sse(&pred, target);
        let nt = T::from_usize_lossy(n);
        let mut train_rmse = vec![(loss / nt).sqrt()];
        let mut trees = Vec::new();
        let lr = T::lit(params.learning_rate);
        let l2 = T::lit(params.l2);
        let mut grad = vec![T::zero(); n];
        for _ in 0..params.rounds {
            for i in 0..n {
                grad[i] = pred[i] - target[i];
            }
            let grower = Grower {
                binned: &binned,
                edges: &edges,
                grad: &grad,
                l2,
                min_leaf: params.min_leaf.max(1),
            };
            let (mut nodes, leaves) = grower.grow(n, params.max_leaves);
            let mut next = pred.clone();
            for leaf in &leaves {
                let value = -lr * leaf.g / (T::from_usize_lossy(leaf.rows.len()) + l2);
                nodes[leaf.node] = GNode::Leaf(value);
                for &r in &leaf.rows {
                    next[r as usize] = next[r as usize] + value;
                }
            }
            let next_loss = sse(&next, target);
            if next_loss > loss {
                break;
            }
            pred = next;
            loss = next_loss;
            train_rmse.push((loss / nt).sqrt());
            trees.push(BoostedTree { nodes });
        }
        Self {
            base,
            trees,
            train_rmse,
        }
    }

    pub fn base(&self) -> T {
        self.base
    }

    pub fn trees(&self) -> &[BoostedTree<T>] {
        &self.trees
    }

    /// Training RMSE before the first round and after each kept round.
    pub fn train_rmse(&self) -> &[T] {
        &self.train_rmse
    }

    pub fn predict_row(&self, row: &[T]) -> T {
        self.trees.iter().fold(self.base, |acc, t| acc + t.predict_row(row))
    }
}
