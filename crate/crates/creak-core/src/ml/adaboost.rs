//! Discrete SAMME AdaBoost over depth-1 decision stumps.
//!
//! Per round: fit the stump minimizing weighted error, compute
//! `α = lr·ln((1−err)/err)`, update `w_i ← w_i·exp(α·1[error_i])` and
//! renormalize. Boosting stops early on a perfect stump (`err = 0`) or
//! when no stump beats chance (`err ≥ 0.5`).

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::{sign_label, Dataset, MlError};
use crate::corpus::CreakLabel;
use crate::num::{real, Real};

/// Error floor that caps α when a stump classifies perfectly.
pub const ALPHA_ERROR_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stump<F> {
    pub feature: usize,
    pub threshold: F,
    /// Label predicted for `x ≤ threshold`; the other side gets the
    /// opposite label.
    pub left_label: CreakLabel,
}

impl<F: Real> Stump<F> {
    fn predict(&self, x: ArrayView1<'_, F>) -> CreakLabel {
        let left = x[self.feature] <= self.threshold;
        match (left, self.left_label) {
            (true, l) => l,
            (false, CreakLabel::Low) => CreakLabel::High,
            (false, CreakLabel::High) => CreakLabel::Low,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaModel<F> {
    stumps: Vec<(Stump<F>, F)>,
    dim: usize,
    pub converged: bool,
}

impl<F: Real> AdaModel<F> {
    /// Sign of the α-weighted vote; ties (or an empty ensemble) → Low.
    pub fn predict(&self, x: ArrayView1<'_, F>) -> CreakLabel {
        let mut score = F::zero();
        for (stump, alpha) in &self.stumps {
            let h = match stump.predict(x) {
                CreakLabel::High => F::one(),
                CreakLabel::Low => -F::one(),
            };
            score += *alpha * h;
        }
        sign_label(score)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rounds(&self) -> usize {
        self.stumps.len()
    }

    pub fn rounds(&self) -> impl Iterator<Item = (&Stump<F>, F)> {
        self.stumps.iter().map(|(s, a)| (s, *a))
    }
}

/// Per-round diagnostics, mostly for verification.
#[derive(Debug, Clone)]
pub struct AdaRound<F> {
    pub error: F,
    pub alpha: F,
    /// Σw after renormalization; 1 up to rounding.
    pub weight_sum: F,
    pub weights: Vec<F>,
}

#[derive(Debug, Clone, Default)]
pub struct AdaTrace<F> {
    pub rounds: Vec<AdaRound<F>>,
}

pub fn train_adaboost<F: Real>(
    data: &Dataset<F>,
    n_estimators: usize,
    learning_rate: f64,
) -> Result<(AdaModel<F>, AdaTrace<F>), MlError> {
    if n_estimators == 0 {
        return Err(MlError::Degenerate("AdaBoost needs at least one round".into()));
    }
    let n = data.n();
    let lr = real::<F>(learning_rate);
    let half = real::<F>(0.5);

    // Column orders are value-independent of the weights; sort once.
    let sorted_orders: Vec<Vec<usize>> = (0..data.dim())
        .map(|j| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_unstable_by(|&a, &b| {
                data.x[(a, j)]
                    .partial_cmp(&data.x[(b, j)])
                    .expect("finite features")
            });
            order
        })
        .collect();

    let mut weights = vec![F::one() / real::<F>(n as f64); n];
    let mut stumps = Vec::new();
    let mut trace = AdaTrace { rounds: Vec::new() };
    let mut converged = true;

    for _round in 0..n_estimators {
        let Some((stump, err)) = best_stump(data, &sorted_orders, &weights) else {
            // Every feature constant: no split exists.
            converged = false;
            break;
        };
        if err >= half {
            converged = !stumps.is_empty();
            break;
        }
        let err_floored = err.max(real::<F>(ALPHA_ERROR_FLOOR));
        let alpha = lr * ((F::one() - err_floored) / err_floored).ln();
        let perfect = err == F::zero();

        // w_i ← w_i·exp(α·1[misclassified]), then renormalize.
        if !perfect {
            let scale = alpha.exp();
            for i in 0..n {
                if stump.predict(data.x.row(i)) != data.y[i] {
                    weights[i] *= scale;
                }
            }
            let total: F = weights.iter().copied().sum();
            for w in &mut weights {
                *w /= total;
            }
        }
        stumps.push((stump, alpha));
        trace.rounds.push(AdaRound {
            error: err,
            alpha,
            weight_sum: weights.iter().copied().sum(),
            weights: weights.clone(),
        });
        if perfect {
            break;
        }
    }

    Ok((
        AdaModel {
            stumps,
            dim: data.dim(),
            converged,
        },
        trace,
    ))
}

/// Exhaustive weighted stump search: lowest weighted error wins, ties
/// resolve to the lowest feature index, then the lowest threshold, then
/// the Low-on-the-left polarity.
fn best_stump<F: Real>(
    data: &Dataset<F>,
    sorted_orders: &[Vec<usize>],
    weights: &[F],
) -> Option<(Stump<F>, F)> {
    let total_low: F = data
        .y
        .iter()
        .zip(weights)
        .filter(|(l, _)| **l == CreakLabel::Low)
        .map(|(_, &w)| w)
        .sum();
    let total: F = weights.iter().copied().sum();

    let mut best: Option<(F, Stump<F>)> = None;
    for (feature, order) in sorted_orders.iter().enumerate() {
        let mut left_low = F::zero();
        let mut left_high = F::zero();
        for k in 0..order.len() - 1 {
            let i = order[k];
            match data.y[i] {
                CreakLabel::Low => left_low += weights[i],
                CreakLabel::High => left_high += weights[i],
            }
            let v = data.x[(i, feature)];
            let v_next = data.x[(order[k + 1], feature)];
            if v == v_next {
                continue;
            }
            let threshold = (v + v_next) / real::<F>(2.0);
            if threshold >= v_next {
                continue;
            }
            // Polarity Low|High: wrong are High on the left, Low on the right.
            let err_low_left = left_high + (total_low - left_low);
            let err_high_left = total - err_low_left;
            let (err, left_label) = if err_low_left <= err_high_left {
                (err_low_left, CreakLabel::Low)
            } else {
                (err_high_left, CreakLabel::High)
            };
            if best.as_ref().is_none_or(|(b, _)| err < *b) {
                best = Some((
                    err,
                    Stump {
                        feature,
                        threshold,
                        left_label,
                    },
                ));
            }
        }
    }
    best.map(|(err, stump)| (stump, err.max(F::zero())))
}
