//! Random forest: bagged CART trees with √D candidate features per split
//! and majority voting.

use ndarray::ArrayView1;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, GrowConfig, TreeModel};
use super::{Dataset, MlError};
use crate::corpus::CreakLabel;
use crate::num::Real;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel<F> {
    trees: Vec<TreeModel<F>>,
}

impl<F: Real> ForestModel<F> {
    /// Majority vote; an exact tie resolves to Low.
    pub fn predict(&self, x: ArrayView1<'_, F>) -> CreakLabel {
        let high_votes = self
            .trees
            .iter()
            .filter(|t| t.predict(x) == CreakLabel::High)
            .count();
        if 2 * high_votes > self.trees.len() {
            CreakLabel::High
        } else {
            CreakLabel::Low
        }
    }

    pub fn dim(&self) -> usize {
        self.trees.first().map_or(0, TreeModel::dim)
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

pub fn train_forest<F: Real>(
    data: &Dataset<F>,
    n_estimators: usize,
    max_depth: Option<usize>,
    seed: u64,
) -> Result<ForestModel<F>, MlError> {
    if n_estimators == 0 {
        return Err(MlError::Degenerate("forest needs at least one tree".into()));
    }
    let n = data.n();
    let k = ((data.dim() as f64).sqrt().floor() as usize).max(1);
    let cfg = GrowConfig {
        max_depth,
        n_candidate_features: Some(k),
    };
    let trees = (0..n_estimators)
        .map(|t| {
            // One independent stream per tree, derived from the seed.
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed.wrapping_add(t as u64));
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow_tree(data, bootstrap, &cfg, &mut Some(&mut rng))
        })
        .collect();
    Ok(ForestModel { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn blob_data(n: usize) -> Dataset<f64> {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let base = if i < n / 2 { 0.0 } else { 4.0 };
            base + ((i * 31 + j * 17) % 100) as f64 / 100.0
        });
        let y = (0..n)
            .map(|i| if i < n / 2 { CreakLabel::Low } else { CreakLabel::High })
            .collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn identical_seeds_reproduce_predictions() {
        let data = blob_data(40);
        let a = train_forest(&data, 25, None, 0).unwrap();
        let b = train_forest(&data, 25, None, 0).unwrap();
        let probes = Array2::from_shape_fn((10, 2), |(i, j)| (i + j) as f64 * 0.37);
        for row in probes.rows() {
            assert_eq!(a.predict(row), b.predict(row));
        }
    }

    #[test]
    fn different_seeds_may_differ_but_stay_accurate() {
        let data = blob_data(60);
        for seed in [0, 1, 2] {
            let model = train_forest(&data, 50, None, seed).unwrap();
            let correct = (0..data.n())
                .filter(|&i| model.predict(data.x.row(i)) == data.y[i])
                .count();
            assert!(correct >= 57, "seed {seed}: {correct}/60");
        }
    }

    #[test]
    fn even_vote_ties_resolve_to_low() {
        // Two trees trained on opposite labelings disagree everywhere.
        let x = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        let y: Vec<CreakLabel> = (0..10)
            .map(|i| if i < 5 { CreakLabel::Low } else { CreakLabel::High })
            .collect();
        let y_flipped: Vec<CreakLabel> = y
            .iter()
            .map(|l| match l {
                CreakLabel::Low => CreakLabel::High,
                CreakLabel::High => CreakLabel::Low,
            })
            .collect();
        let t1 = crate::ml::tree::train_tree(&Dataset::new(x.clone(), y).unwrap(), 5).unwrap();
        let t2 = crate::ml::tree::train_tree(&Dataset::new(x.clone(), y_flipped).unwrap(), 5).unwrap();
        let forest = ForestModel { trees: vec![t1, t2] };
        for i in 0..10 {
            assert_eq!(forest.predict(x.row(i)), CreakLabel::Low, "tie must go Low");
        }
    }

    #[test]
    fn scale_and_shift_invariance() {
        // Split-based models are invariant to per-column positive affine
        // maps applied consistently to train and probe data.
        let data = blob_data(40);
        let scales = [3.0, 0.25];
        let shifts = [-7.0, 11.0];
        let x2 = Array2::from_shape_fn((40, 2), |(i, j)| data.x[(i, j)] * scales[j] + shifts[j]);
        let data2 = Dataset::new(x2, data.y.clone()).unwrap();

        let m1 = train_forest(&data, 30, None, 0).unwrap();
        let m2 = train_forest(&data2, 30, None, 0).unwrap();
        let probes = Array2::from_shape_fn((15, 2), |(i, j)| (i as f64) * 0.3 + j as f64);
        for row in probes.rows() {
            let mapped: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(j, &v)| v * scales[j] + shifts[j])
                .collect();
            let mapped = ndarray::Array1::from_vec(mapped);
            assert_eq!(m1.predict(row), m2.predict(mapped.view()));
        }
    }
}
