//! Soft-margin SVM trained with SMO (first-order working-set selection).

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{label_sign, sign_label, Dataset, MlError};
use crate::corpus::CreakLabel;
use crate::num::{real, Real};

/// Stopping tolerance on the maximal KKT violation.
pub const KKT_TOL: f64 = 1e-3;
const MAX_ITER: usize = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelKind {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelKind {
    fn eval<F: Real>(&self, u: ArrayView1<'_, F>, v: ArrayView1<'_, F>) -> F {
        match self {
            KernelKind::Linear => u.iter().zip(v.iter()).fold(F::zero(), |a, (&x, &y)| a + x * y),
            KernelKind::Rbf { gamma } => {
                let d2 = u
                    .iter()
                    .zip(v.iter())
                    .fold(F::zero(), |a, (&x, &y)| {
                        let d = x - y;
                        a + d * d
                    });
                (-real::<F>(*gamma) * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel<F> {
    kernel: KernelKind,
    support_x: Array2<F>,
    /// `α_i · y_i` per support vector.
    coef: Array1<F>,
    bias: F,
    /// Training-set indices of the support vectors.
    pub sv_indices: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
}

impl<F: Real> SvmModel<F> {
    pub fn decision(&self, x: ArrayView1<'_, F>) -> F {
        let mut f = self.bias;
        for (row, &c) in self.support_x.rows().into_iter().zip(self.coef.iter()) {
            f += c * self.kernel.eval(row, x);
        }
        f
    }

    pub fn predict(&self, x: ArrayView1<'_, F>) -> CreakLabel {
        sign_label(self.decision(x))
    }

    pub fn dim(&self) -> usize {
        self.support_x.ncols()
    }
}

/// Full dual solution, kept around for KKT diagnostics.
pub struct SvmTrainDiag<F> {
    pub model: SvmModel<F>,
    pub alpha: Vec<F>,
}

pub fn train_svm<F: Real>(
    data: &Dataset<F>,
    c: f64,
    kernel: KernelKind,
) -> Result<SvmModel<F>, MlError> {
    train_svm_diag(data, c, kernel).map(|d| d.model)
}

pub fn train_svm_diag<F: Real>(
    data: &Dataset<F>,
    c: f64,
    kernel: KernelKind,
) -> Result<SvmTrainDiag<F>, MlError> {
    let n = data.n();
    let c = real::<F>(c);
    let y: Vec<F> = data.y.iter().map(|&l| label_sign(l)).collect();

    // Dense kernel matrix; the training sets here are small.
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(data.x.row(i), data.x.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }

    // Dual objective 0.5·αᵀQα − Σα with Q_ij = y_i y_j K_ij;
    // G is its gradient, maintained incrementally.
    let mut alpha = vec![F::zero(); n];
    let mut grad = vec![-F::one(); n];
    let tol = real::<F>(KKT_TOL);
    let tau = real::<F>(1e-12);

    let mut iterations = 0;
    let mut converged = false;
    let (mut m_final, mut big_m_final) = (F::zero(), F::zero());
    while iterations < MAX_ITER {
        // i = worst violator in I_up, j = worst in I_low.
        let mut i_sel = None;
        let mut m_val = F::neg_infinity();
        let mut j_sel = None;
        let mut big_m_val = F::infinity();
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > F::zero() && alpha[t] < c) || (y[t] < F::zero() && alpha[t] > F::zero());
            let in_low = (y[t] < F::zero() && alpha[t] < c) || (y[t] > F::zero() && alpha[t] > F::zero());
            if in_up && v > m_val {
                m_val = v;
                i_sel = Some(t);
            }
            if in_low && v < big_m_val {
                big_m_val = v;
                j_sel = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break;
        };
        m_final = m_val;
        big_m_final = big_m_val;
        if m_val - big_m_val <= tol {
            converged = true;
            break;
        }

        // Two-variable analytic step with box clipping.
        let eta = (k[(i, i)] + k[(j, j)] - real::<F>(2.0) * k[(i, j)]).max(tau);
        // E_i − E_j = y_i·G_i − y_j·G_j.
        let delta = (y[i] * grad[i] - y[j] * grad[j]) / eta;
        let (lo, hi) = if y[i] != y[j] {
            ((alpha[j] - alpha[i]).max(F::zero()), (c + alpha[j] - alpha[i]).min(c))
        } else {
            ((alpha[i] + alpha[j] - c).max(F::zero()), (alpha[i] + alpha[j]).min(c))
        };
        let new_j = (alpha[j] + y[j] * delta).max(lo).min(hi);
        let new_i = alpha[i] + y[i] * y[j] * (alpha[j] - new_j);
        let d_i = new_i - alpha[i];
        let d_j = new_j - alpha[j];
        alpha[i] = new_i;
        alpha[j] = new_j;
        for t in 0..n {
            grad[t] += y[t] * y[i] * k[(t, i)] * d_i + y[t] * y[j] * k[(t, j)] * d_j;
        }
        iterations += 1;
    }

    // Bias from free support vectors, else the midpoint of the KKT bounds.
    let margin = real::<F>(1e-8);
    let f_no_bias = |t: usize| y[t] * (grad[t] + F::one()); // Σ_s α_s y_s K_st
    let free: Vec<usize> = (0..n)
        .filter(|&t| alpha[t] > margin && alpha[t] < c - margin)
        .collect();
    let bias = if free.is_empty() {
        (m_final + big_m_final) / real::<F>(2.0)
    } else {
        free.iter()
            .map(|&t| y[t] - f_no_bias(t))
            .fold(F::zero(), |a, b| a + b)
            / real::<F>(free.len() as f64)
    };

    let sv_indices: Vec<usize> = (0..n).filter(|&t| alpha[t] > tau).collect();
    let support_x = data.x.select(ndarray::Axis(0), &sv_indices);
    let coef = Array1::from_iter(sv_indices.iter().map(|&t| alpha[t] * y[t]));
    Ok(SvmTrainDiag {
        model: SvmModel {
            kernel,
            support_x,
            coef,
            bias,
            sv_indices,
            converged,
            iterations,
        },
        alpha,
    })
}

/// Largest KKT violation over the training set:
/// `α=0 ⟹ y·f ≥ 1`, `0<α<C ⟹ y·f = 1`, `α=C ⟹ y·f ≤ 1`.
pub fn kkt_max_violation<F: Real>(diag: &SvmTrainDiag<F>, data: &Dataset<F>, c: f64) -> F {
    let c = real::<F>(c);
    let margin = real::<F>(1e-8);
    let mut worst = F::zero();
    for i in 0..data.n() {
        let yf = label_sign::<F>(data.y[i]) * diag.model.decision(data.x.row(i));
        let slack = yf - F::one();
        let a = diag.alpha[i];
        let violation = if a <= margin {
            (-slack).max(F::zero())
        } else if a >= c - margin {
            slack.max(F::zero())
        } else {
            slack.abs()
        };
        worst = worst.max(violation);
    }
    worst
}
