//! L2-regularized logistic regression trained with Newton-CG and an
//! Armijo line search.
//!
//! The contract is the objective, not the solver: minimize
//! `Σ_i log(1+exp(−y_i z_i)) + (1/2C)·‖w‖²` (intercept unpenalized)
//! until the gradient norm is ≤ 1e−5.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{sign_label, Dataset, MlError};
use crate::corpus::CreakLabel;
use crate::num::{real, Real};

pub const GRAD_TOL: f64 = 1e-5;
const MAX_NEWTON_ITER: usize = 100;
const MAX_CG_ITER: usize = 250;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegModel<F> {
    pub w: Array1<F>,
    pub b: F,
    pub converged: bool,
    /// Objective value at the start and after every accepted Newton step;
    /// non-increasing by construction of the line search.
    pub loss_trace: Vec<F>,
}

impl<F: Real> LogRegModel<F> {
    pub fn decision(&self, x: ArrayView1<'_, F>) -> F {
        x.iter().zip(self.w.iter()).fold(self.b, |a, (&v, &w)| a + v * w)
    }

    /// Probability threshold 0.5 on the sigmoid, i.e. the sign of z.
    pub fn predict(&self, x: ArrayView1<'_, F>) -> CreakLabel {
        sign_label(self.decision(x))
    }

    pub fn dim(&self) -> usize {
        self.w.len()
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

/// `log(1 + e^z)` without overflow.
fn softplus<F: Real>(z: F) -> F {
    z.max(F::zero()) + (-(z.abs())).exp().ln_1p()
}

pub fn train_logreg<F: Real>(data: &Dataset<F>, c: f64) -> Result<LogRegModel<F>, MlError> {
    if c <= 0.0 {
        return Err(MlError::Degenerate(format!("C must be positive, got {c}")));
    }
    let d = data.dim();
    let lambda = real::<F>(1.0 / c);
    let y01: Array1<F> = Array1::from_iter(data.y.iter().map(|&l| match l {
        CreakLabel::Low => F::zero(),
        CreakLabel::High => F::one(),
    }));
    let x = &data.x;

    let mut w: Array1<F> = Array1::zeros(d);
    let mut b = F::zero();
    let half = real::<F>(0.5);

    let loss_of = |w: &Array1<F>, b: F| -> F {
        let z = x.dot(w) + b;
        let ce = z
            .iter()
            .zip(y01.iter())
            .fold(F::zero(), |acc, (&zi, &yi)| acc + softplus(zi) - yi * zi);
        ce + half * lambda * w.dot(w)
    };

    let mut loss = loss_of(&w, b);
    let mut loss_trace = vec![loss];
    let mut converged = false;

    for _ in 0..MAX_NEWTON_ITER {
        let z = x.dot(&w) + b;
        let p = z.mapv(sigmoid);
        let residual = &p - &y01;
        let grad_w = x.t().dot(&residual) + &(w.mapv(|v| v * lambda));
        let grad_b: F = residual.sum();
        let grad_norm = (grad_w.dot(&grad_w) + grad_b * grad_b).sqrt();
        if grad_norm <= real::<F>(GRAD_TOL) {
            converged = true;
            break;
        }

        // Newton direction via CG on (H d = −g); Hessian-vector products
        // avoid forming the D × D matrix.
        let weights = p.mapv(|pi| pi * (F::one() - pi));
        let hv = |vw: &Array1<F>, vb: F| -> (Array1<F>, F) {
            let s = x.dot(vw) + vb;
            let t = &s * &weights;
            let hw = x.t().dot(&t) + &vw.mapv(|v| v * lambda);
            let hb = t.sum();
            (hw, hb)
        };

        let mut dw: Array1<F> = Array1::zeros(d);
        let mut db = F::zero();
        let mut rw = grad_w.mapv(|v| -v);
        let mut rb = -grad_b;
        let mut pw = rw.clone();
        let mut pb = rb;
        let mut rs_old = rw.dot(&rw) + rb * rb;
        let cg_tol = rs_old * real::<F>(1e-10);
        for _ in 0..MAX_CG_ITER {
            if rs_old <= cg_tol {
                break;
            }
            let (hpw, hpb) = hv(&pw, pb);
            let denom = pw.dot(&hpw) + pb * hpb;
            if denom <= F::zero() {
                break;
            }
            let alpha = rs_old / denom;
            dw += &pw.mapv(|v| v * alpha);
            db += alpha * pb;
            rw -= &hpw.mapv(|v| v * alpha);
            rb -= alpha * hpb;
            let rs_new = rw.dot(&rw) + rb * rb;
            let beta = rs_new / rs_old;
            pw = &rw + &pw.mapv(|v| v * beta);
            pb = rb + beta * pb;
            rs_old = rs_new;
        }
        if dw.iter().all(|v| *v == F::zero()) && db == F::zero() {
            break;
        }

        // Armijo backtracking keeps the trace non-increasing.
        let slope = grad_w.dot(&dw) + grad_b * db;
        let c1 = real::<F>(1e-4);
        let mut step = F::one();
        let mut accepted = false;
        for _ in 0..50 {
            let w_try = &w + &dw.mapv(|v| v * step);
            let b_try = b + step * db;
            let loss_try = loss_of(&w_try, b_try);
            if loss_try <= loss + c1 * step * slope {
                w = w_try;
                b = b_try;
                loss = loss_try;
                accepted = true;
                break;
            }
            step *= half;
        }
        if !accepted {
            break;
        }
        loss_trace.push(loss);
    }

    Ok(LogRegModel {
        w,
        b,
        converged,
        loss_trace,
    })
}
