use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelClass};
use crate::error::{Error, Result};
use crate::numeric::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        distribution: [f64; 3],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART tree stored as a flat node arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf_distribution(&self, x: &[f64]) -> &[f64; 3] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { distribution } => return distribution,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn predict_one(&self, x: &[f64]) -> LabelClass {
        LabelClass::ALL[LabelClass::argmax_worse_on_tie(self.leaf_distribution(x), 0.0)]
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
    pub bootstrap: bool,
    pub trees: Vec<DecisionTree>,
    n_features: usize,
}

fn gini(counts: &[usize; 3], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn class_counts(labels: &[LabelClass], idx: &[usize]) -> [usize; 3] {
    let mut c = [0; 3];
    for &i in idx {
        c[labels[i].index()] += 1;
    }
    c
}

struct Builder<'a> {
    data: &'a FeatureMatrix,
    max_depth: Option<usize>,
    n_candidates: usize,
    rng: RngStream,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    /// Lowest weighted child impurity for one feature, thresholds at
    /// midpoints between consecutive distinct values.
    fn best_for_feature(&self, idx: &[usize], feature: usize) -> Option<BestSplit> {
        let x = self.data.features();
        let labels = self.data.labels();
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| {
            x.get(a, feature)
                .total_cmp(&x.get(b, feature))
                .then(a.cmp(&b))
        });
        let n = order.len();
        let total = class_counts(labels, &order);
        let mut left = [0usize; 3];
        let mut best: Option<BestSplit> = None;
        for pos in 0..n - 1 {
            left[labels[order[pos]].index()] += 1;
            let a = x.get(order[pos], feature);
            let b = x.get(order[pos + 1], feature);
            if a == b {
                continue;
            }
            let nl = pos + 1;
            let nr = n - nl;
            let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
            let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
            if best.as_ref().is_none_or(|s| impurity < s.impurity) {
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(BestSplit {
                    impurity,
                    feature,
                    threshold,
                });
            }
        }
        best
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = class_counts(self.data.labels(), idx);
        let n = idx.len();
        let id = self.nodes.len();
        let leaf = TreeNode::Leaf {
            distribution: counts.map(|c| c as f64 / n as f64),
        };
        self.nodes.push(leaf.clone());
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || n < 2 || self.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }

        // Visit features in random order. The first `n_candidates` compete;
        // later ones are only consulted while no valid split has been found.
        let d = self.data.n_features();
        let mut features: Vec<usize> = (0..d).collect();
        self.rng.shuffle(&mut features);
        let mut best: Option<BestSplit> = None;
        for (visited, &f) in features.iter().enumerate() {
            if visited >= self.n_candidates && best.is_some() {
                break;
            }
            if let Some(s) = self.best_for_feature(idx, f) {
                if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else {
            return id;
        };

        let x = self.data.features();
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| x.get(i, split.feature) <= split.threshold);
        let left = self.build(&l, depth + 1);
        let right = self.build(&r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Random forest of Gini CART trees over `floor(sqrt(d))` candidate features
/// per node. Tree `t` draws its bootstrap sample and feature orderings from
/// substream `t` of `seed`.
pub fn rf_fit_with(
    train: &FeatureMatrix,
    n_trees: usize,
    max_depth: Option<usize>,
    seed: u64,
    bootstrap: bool,
) -> Result<RandomForest> {
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::domain("random forest needs at least 2 rows"));
    }
    if n_trees == 0 {
        return Err(Error::config("n_trees must be at least 1"));
    }
    if max_depth == Some(0) {
        return Err(Error::config("max_depth must be at least 1"));
    }
    let d = train.n_features();
    let n_candidates = ((d as f64).sqrt().floor() as usize).max(1);
    let root = RngStream::new(seed);
    let trees = (0..n_trees)
        .map(|t| {
            let mut rng = root.derive(t as u64);
            let idx: Vec<usize> = if bootstrap {
                (0..n).map(|_| rng.below(n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder {
                data: train,
                max_depth,
                n_candidates,
                rng,
                nodes: Vec::new(),
            };
            b.build(&idx, 0);
            DecisionTree { nodes: b.nodes }
        })
        .collect();
    Ok(RandomForest {
        n_trees,
        max_depth,
        seed,
        bootstrap,
        trees,
        n_features: d,
    })
}

pub fn rf_fit(
    train: &FeatureMatrix,
    n_trees: usize,
    max_depth: Option<usize>,
    seed: u64,
) -> Result<RandomForest> {
    rf_fit_with(train, n_trees, max_depth, seed, true)
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn predict_one(&self, x: &[f64]) -> LabelClass {
        let mut votes = [0usize; 3];
        for t in &self.trees {
            votes[t.predict_one(x).index()] += 1;
        }
        LabelClass::majority(&votes)
    }
}

pub fn rf_predict(model: &RandomForest, x: &[f64]) -> LabelClass {
    model.predict_one(x)
}
