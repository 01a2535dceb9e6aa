//! Greedy CART decision tree with Gini impurity and exhaustive midpoint
//! threshold search.

use ndarray::ArrayView1;

use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::{Dataset, MlError};
use crate::corpus::CreakLabel;
use crate::num::Real;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) enum TreeNode<F> {
    Leaf {
        label: CreakLabel,
    },
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel<F> {
    nodes: Vec<TreeNode<F>>,
    dim: usize,
}

impl<F: Real> TreeModel<F> {
    /// Walks `x ≤ threshold → left` from the root.
    pub fn predict(&self, x: ArrayView1<'_, F>) -> CreakLabel {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Longest root-to-leaf path counted in splits.
    pub fn depth(&self) -> usize {
        fn walk<F>(nodes: &[TreeNode<F>], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

pub(crate) struct GrowConfig {
    pub max_depth: Option<usize>,
    /// Candidate features sampled per split (random forests); `None`
    /// searches every feature.
    pub n_candidate_features: Option<usize>,
}

pub fn train_tree<F: Real>(data: &Dataset<F>, max_depth: usize) -> Result<TreeModel<F>, MlError> {
    let indices: Vec<usize> = (0..data.n()).collect();
    Ok(grow_tree(
        data,
        indices,
        &GrowConfig {
            max_depth: Some(max_depth),
            n_candidate_features: None,
        },
        &mut None,
    ))
}

/// Builds one tree over `indices` (which may repeat rows, as in a
/// bootstrap sample).
pub(crate) fn grow_tree<F: Real>(
    data: &Dataset<F>,
    indices: Vec<usize>,
    cfg: &GrowConfig,
    rng: &mut Option<&mut Xoshiro256PlusPlus>,
) -> TreeModel<F> {
    let mut nodes = Vec::new();
    grow_node(data, indices, 0, cfg, rng, &mut nodes);
    TreeModel {
        nodes,
        dim: data.dim(),
    }
}

fn majority(counts: (usize, usize)) -> CreakLabel {
    // Ties resolve to Low.
    if counts.1 > counts.0 {
        CreakLabel::High
    } else {
        CreakLabel::Low
    }
}

fn class_counts<F: Real>(data: &Dataset<F>, indices: &[usize]) -> (usize, usize) {
    let high = indices.iter().filter(|&&i| data.y[i] == CreakLabel::High).count();
    (indices.len() - high, high)
}

fn gini(low: f64, high: f64) -> f64 {
    let n = low + high;
    if n == 0.0 {
        return 0.0;
    }
    let pl = low / n;
    let ph = high / n;
    1.0 - pl * pl - ph * ph
}

fn grow_node<F: Real>(
    data: &Dataset<F>,
    indices: Vec<usize>,
    depth: usize,
    cfg: &GrowConfig,
    rng: &mut Option<&mut Xoshiro256PlusPlus>,
    nodes: &mut Vec<TreeNode<F>>,
) -> usize {
    let counts = class_counts(data, &indices);
    let leaf = |nodes: &mut Vec<TreeNode<F>>| {
        nodes.push(TreeNode::Leaf {
            label: majority(counts),
        });
        nodes.len() - 1
    };

    let depth_allows = cfg.max_depth.is_none_or(|m| depth < m);
    if counts.0 == 0 || counts.1 == 0 || !depth_allows || indices.len() < 2 {
        return leaf(nodes);
    }

    let candidates: Vec<usize> = match cfg.n_candidate_features {
        None => (0..data.dim()).collect(),
        Some(k) => {
            let rng = rng.as_mut().expect("feature subsampling needs an RNG");
            let mut sampled: Vec<usize> =
                rand::seq::index::sample(&mut **rng, data.dim(), k.min(data.dim())).into_vec();
            // Ascending order keeps the lowest-feature-index tie rule.
            sampled.sort_unstable();
            sampled
        }
    };

    let parent_gini = gini(counts.0 as f64, counts.1 as f64);
    let n = indices.len() as f64;
    let mut best: Option<(f64, usize, F)> = None;
    let mut pairs: Vec<(F, CreakLabel)> = Vec::with_capacity(indices.len());
    for &feature in &candidates {
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (data.x[(i, feature)], data.y[i])));
        pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));

        let mut left_low = 0usize;
        let mut left_high = 0usize;
        for k in 0..pairs.len() - 1 {
            match pairs[k].1 {
                CreakLabel::Low => left_low += 1,
                CreakLabel::High => left_high += 1,
            }
            let v = pairs[k].0;
            let v_next = pairs[k + 1].0;
            if v == v_next {
                continue;
            }
            let threshold = (v + v_next) / F::from_f64_const(2.0);
            // `x ≤ t` must reproduce the scan's partition.
            if threshold >= v_next {
                continue;
            }
            let right_low = counts.0 - left_low;
            let right_high = counts.1 - left_high;
            let n_left = (left_low + left_high) as f64;
            let n_right = (right_low + right_high) as f64;
            let weighted = (n_left * gini(left_low as f64, left_high as f64)
                + n_right * gini(right_low as f64, right_high as f64))
                / n;
            let gain = parent_gini - weighted;
            // Strict improvement keeps the first (lowest feature, lowest
            // threshold) candidate on ties.
            if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, feature, threshold));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return leaf(nodes);
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| data.x[(i, feature)] <= threshold);
    if left_idx.is_empty() || right_idx.is_empty() {
        return leaf(nodes);
    }

    let me = nodes.len();
    nodes.push(TreeNode::Split {
        feature,
        threshold,
        left: 0,
        right: 0,
    });
    let left = grow_node(data, left_idx, depth + 1, cfg, rng, nodes);
    let right = grow_node(data, right_idx, depth + 1, cfg, rng, nodes);
    if let TreeNode::Split {
        left: l, right: r, ..
    } = &mut nodes[me]
    {
        *l = left;
        *r = right;
    }
    me
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::SeedableRng;

    #[test]
    fn separable_pair_splits_at_midpoint() {
        let x = array![[0.0f64], [1.0]];
        let y = vec![CreakLabel::Low, CreakLabel::High];
        let data = Dataset::new(x, y).unwrap();
        let model = train_tree(&data, 5).unwrap();
        assert_eq!(model.predict(array![0.2].view()), CreakLabel::Low);
        assert_eq!(model.predict(array![0.8].view()), CreakLabel::High);
        assert_eq!(model.depth(), 1);
        match &model.nodes[0] {
            TreeNode::Split { threshold, .. } => assert!((threshold - 0.5).abs() < 1e-12),
            TreeNode::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn max_depth_is_respected() {
        // Alternating labels along one feature force deep splitting.
        let n = 64;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let y: Vec<CreakLabel> = (0..n)
            .map(|i| if i % 2 == 0 { CreakLabel::Low } else { CreakLabel::High })
            .collect();
        let data = Dataset::new(x, y).unwrap();
        for max_depth in [1, 3, 5] {
            let model = train_tree(&data, max_depth).unwrap();
            assert!(
                model.depth() <= max_depth,
                "depth {} exceeds {max_depth}",
                model.depth()
            );
        }
    }

    #[test]
    fn ties_prefer_lowest_feature_index() {
        // Both features separate the data identically; feature 0 must win.
        let x = array![[0.0f64, 0.0], [1.0, 1.0], [0.1, 0.1], [0.9, 0.9]];
        let y = vec![
            CreakLabel::Low,
            CreakLabel::High,
            CreakLabel::Low,
            CreakLabel::High,
        ];
        let data = Dataset::new(x, y).unwrap();
        let model = train_tree(&data, 5).unwrap();
        match &model.nodes[0] {
            TreeNode::Split { feature, .. } => assert_eq!(*feature, 0),
            TreeNode::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn training_points_classified_correctly_when_separable() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| {
            if i < 20 {
                (i * 3 + j) as f64 * 0.01
            } else {
                1.0 + (i * 3 + j) as f64 * 0.01
            }
        });
        let y: Vec<CreakLabel> = (0..40)
            .map(|i| if i < 20 { CreakLabel::Low } else { CreakLabel::High })
            .collect();
        let data = Dataset::new(x, y).unwrap();
        let model = train_tree(&data, 5).unwrap();
        for i in 0..data.n() {
            assert_eq!(model.predict(data.x.row(i)), data.y[i]);
        }
    }

    #[test]
    fn affine_feature_rescaling_preserves_predictions() {
        // Split-based models are monotone-transform invariant per column.
        let x = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 7 + j * 5) % 23) as f64 * 0.4);
        let y: Vec<CreakLabel> = (0..30)
            .map(|i| if (i * 7) % 23 < 11 { CreakLabel::Low } else { CreakLabel::High })
            .collect();
        let scales = [2.5, 0.1, 40.0];
        let shifts = [-3.0, 100.0, 0.25];
        let x2 = Array2::from_shape_fn((30, 3), |(i, j)| x[(i, j)] * scales[j] + shifts[j]);

        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let data2 = Dataset::new(x2, y).unwrap();
        let m1 = train_tree(&data, 5).unwrap();
        let m2 = train_tree(&data2, 5).unwrap();
        for i in 0..30 {
            let probe: Vec<f64> = (0..3).map(|j| x[(i, j)] + 0.17).collect();
            let mapped: Vec<f64> = probe
                .iter()
                .enumerate()
                .map(|(j, v)| v * scales[j] + shifts[j])
                .collect();
            assert_eq!(
                m1.predict(ndarray::ArrayView1::from(&probe)),
                m2.predict(ndarray::ArrayView1::from(&mapped))
            );
        }
    }

    #[test]
    fn feature_subsampling_is_deterministic_given_rng() {
        let x = Array2::from_shape_fn((20, 8), |(i, j)| ((i * 31 + j * 17) % 13) as f64);
        let y: Vec<CreakLabel> = (0..20)
            .map(|i| if i % 3 == 0 { CreakLabel::High } else { CreakLabel::Low })
            .collect();
        let data = Dataset::new(x, y).unwrap();
        let cfg = GrowConfig {
            max_depth: None,
            n_candidate_features: Some(2),
        };
        let mut rng1 = Xoshiro256PlusPlus::seed_from_u64(5);
        let mut rng2 = Xoshiro256PlusPlus::seed_from_u64(5);
        let t1 = grow_tree(&data, (0..20).collect(), &cfg, &mut Some(&mut rng1));
        let t2 = grow_tree(&data, (0..20).collect(), &cfg, &mut Some(&mut rng2));
        for i in 0..20 {
            assert_eq!(t1.predict(data.x.row(i)), t2.predict(data.x.row(i)));
        }
    }
}
