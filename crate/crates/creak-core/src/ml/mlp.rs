//! Single-hidden-layer perceptron: 100 ReLU units, sigmoid output,
//! cross-entropy with L2 penalty, trained by Adam.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::{Dataset, MlError};
use crate::corpus::CreakLabel;
use crate::num::{real, Real};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Absolute loss-improvement tolerance for early stopping.
const STOP_TOL: f64 = 1e-4;
/// Stagnant epochs allowed before stopping.
const STOP_PATIENCE: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct MlpHyper {
    pub hidden_units: usize,
    pub alpha: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel<F> {
    w1: Array2<F>,
    b1: Array1<F>,
    w2: Array1<F>,
    b2: F,
    pub converged: bool,
    pub epochs_run: usize,
    pub final_loss: F,
}

impl<F: Real> MlpModel<F> {
    pub fn probability(&self, x: ArrayView1<'_, F>) -> F {
        let hidden = x.dot(&self.w1) + &self.b1;
        let mut z = self.b2;
        for (h, &w) in hidden.iter().zip(self.w2.iter()) {
            if *h > F::zero() {
                z += *h * w;
            }
        }
        sigmoid(z)
    }

    /// p > 0.5 → High; the boundary itself resolves to Low.
    pub fn predict(&self, x: ArrayView1<'_, F>) -> CreakLabel {
        if self.probability(x) > real::<F>(0.5) {
            CreakLabel::High
        } else {
            CreakLabel::Low
        }
    }

    pub fn dim(&self) -> usize {
        self.w1.nrows()
    }
}

fn sigmoid<F: Real>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

fn softplus<F: Real>(z: F) -> F {
    z.max(F::zero()) + (-(z.abs())).exp().ln_1p()
}

struct Adam<F> {
    m: Vec<F>,
    v: Vec<F>,
}

impl<F: Real> Adam<F> {
    fn new(len: usize) -> Self {
        Self {
            m: vec![F::zero(); len],
            v: vec![F::zero(); len],
        }
    }

    fn step(&mut self, params: &mut [F], grads: &[F], lr: F, t: i32) {
        let b1 = real::<F>(BETA1);
        let b2 = real::<F>(BETA2);
        let eps = real::<F>(ADAM_EPS);
        let bc1 = F::one() - b1.powi(t);
        let bc2 = F::one() - b2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = b1 * *m + (F::one() - b1) * g;
            *v = b2 * *v + (F::one() - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

pub fn train_mlp<F: Real>(
    data: &Dataset<F>,
    hyper: MlpHyper,
    seed: u64,
) -> Result<MlpModel<F>, MlError> {
    if hyper.hidden_units == 0 || hyper.max_epochs == 0 || hyper.batch_size == 0 {
        return Err(MlError::Degenerate("MLP hyperparameters must be positive".into()));
    }
    let n = data.n();
    let d = data.dim();
    let h = hyper.hidden_units;
    let batch = hyper.batch_size.min(n);
    let lr = real::<F>(hyper.learning_rate);
    let alpha = real::<F>(hyper.alpha);

    let y01: Array1<F> = Array1::from_iter(data.y.iter().map(|&l| match l {
        CreakLabel::Low => F::zero(),
        CreakLabel::High => F::one(),
    }));

    // Glorot-uniform weights, zero biases; fixed draw order from the seed.
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let limit1 = (6.0 / (d + h) as f64).sqrt();
    let w1_init: Vec<F> = (0..d * h)
        .map(|_| real::<F>(rng.random_range(-limit1..limit1)))
        .collect();
    let mut w1 = Array2::from_shape_vec((d, h), w1_init).expect("shape");
    let mut b1: Array1<F> = Array1::zeros(h);
    let limit2 = (6.0 / (h + 1) as f64).sqrt();
    let mut w2: Array1<F> =
        Array1::from_iter((0..h).map(|_| real::<F>(rng.random_range(-limit2..limit2))));
    let mut b2 = F::zero();

    let mut adam_w1 = Adam::new(d * h);
    let mut adam_b1 = Adam::new(h);
    let mut adam_w2 = Adam::new(h);
    let mut adam_b2 = Adam::new(1);

    // Mean cross-entropy over all rows plus the scaled L2 penalty.
    let full_loss = |w1: &Array2<F>, b1: &Array1<F>, w2: &Array1<F>, b2: F| -> F {
        let hidden = (data.x.dot(w1) + b1).mapv(|a| a.max(F::zero()));
        let z = hidden.dot(w2) + b2;
        let ce = z
            .iter()
            .zip(y01.iter())
            .fold(F::zero(), |acc, (&zi, &yi)| acc + softplus(zi) - yi * zi)
            / real::<F>(n as f64);
        let l2 = w1.iter().fold(F::zero(), |a, &v| a + v * v)
            + w2.iter().fold(F::zero(), |a, &v| a + v * v);
        ce + real::<F>(0.5) * alpha * l2 / real::<F>(n as f64)
    };

    let mut best_loss = full_loss(&w1, &b1, &w2, b2);
    let mut best = (w1.clone(), b1.clone(), w2.clone(), b2);
    let mut stagnant = 0usize;
    let mut t = 0i32;
    let mut epochs_run = 0;
    let mut converged = false;

    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..hyper.max_epochs {
        epochs_run = epoch + 1;
        if batch < n {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let nb = real::<F>(chunk.len() as f64);
            let xb = data.x.select(Axis(0), chunk);
            let yb = Array1::from_iter(chunk.iter().map(|&i| y01[i]));

            let pre = xb.dot(&w1) + &b1;
            let act = pre.mapv(|a| a.max(F::zero()));
            let z = act.dot(&w2) + b2;
            let dz = Array1::from_iter(z.iter().zip(yb.iter()).map(|(&zi, &yi)| {
                (sigmoid(zi) - yi) / nb
            }));

            let mut gw2 = act.t().dot(&dz);
            gw2 += &w2.mapv(|v| v * alpha / nb);
            let gb2 = dz.sum();

            // Backprop through ReLU.
            let mut dact = Array2::zeros(pre.raw_dim());
            for ((i, j), v) in pre.indexed_iter() {
                if *v > F::zero() {
                    dact[(i, j)] = dz[i] * w2[j];
                }
            }
            let mut gw1 = xb.t().dot(&dact);
            gw1 += &w1.mapv(|v| v * alpha / nb);
            let gb1 = dact.sum_axis(Axis(0));

            t += 1;
            adam_w1.step(
                w1.as_slice_mut().expect("standard layout"),
                gw1.as_slice().expect("standard layout"),
                lr,
                t,
            );
            adam_b1.step(
                b1.as_slice_mut().expect("standard layout"),
                gb1.as_slice().expect("standard layout"),
                lr,
                t,
            );
            adam_w2.step(
                w2.as_slice_mut().expect("standard layout"),
                gw2.as_slice().expect("standard layout"),
                lr,
                t,
            );
            let mut b2_slice = [b2];
            adam_b2.step(&mut b2_slice, &[gb2], lr, t);
            b2 = b2_slice[0];
        }

        let loss = full_loss(&w1, &b1, &w2, b2);
        if loss < best_loss - real::<F>(STOP_TOL) {
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if loss < best_loss {
            best_loss = loss;
            best = (w1.clone(), b1.clone(), w2.clone(), b2);
        }
        if stagnant >= STOP_PATIENCE {
            converged = true;
            break;
        }
    }

    // Best iterate wins even when the epoch cap was hit.
    let (w1, b1, w2, b2) = best;
    Ok(MlpModel {
        w1,
        b1,
        w2,
        b2,
        converged,
        epochs_run,
        final_loss: best_loss,
    })
}
