//! The eight statistical functionals that collapse a frame matrix into
//! one per-recording vector.

use super::{FeatureConfig, FeatureError, FrameMatrix, SampleFeatureVector};
use crate::num::{real, Real};

/// Applies mean, standard deviation, median, skewness, kurtosis, minimum,
/// maximum and range to every column, concatenated in that order as eight
/// D-long blocks.
///
/// Moments are population moments (divide by T); skewness is
/// `m3 / m2^{3/2}` and kurtosis the excess `m4 / m2² − 3`, both defined as
/// 0 for zero-variance columns.
pub fn apply_functionals<F: Real>(
    m: &FrameMatrix<F>,
    cfg: &FeatureConfig,
) -> Result<SampleFeatureVector<F>, FeatureError> {
    let data = m.data();
    let d = data.ncols();
    let mut values = vec![F::zero(); 8 * d];
    let mut scratch = Vec::with_capacity(data.nrows());
    for (j, col) in data.columns().into_iter().enumerate() {
        scratch.clear();
        scratch.extend(col.iter().copied());
        let stats = column_stats(&scratch);
        for (block, &s) in stats.iter().enumerate() {
            values[block * d + j] = s;
        }
    }
    SampleFeatureVector::new(values, m.kind(), cfg)
}

/// `[mean, std, median, skewness, kurtosis, min, max, range]` of one column.
pub fn column_stats<F: Real>(col: &[F]) -> [F; 8] {
    let n = real::<F>(col.len() as f64);
    let mean = col.iter().copied().sum::<F>() / n;

    let mut m2 = F::zero();
    let mut m3 = F::zero();
    let mut m4 = F::zero();
    for &x in col {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let std = m2.sqrt();
    let skew_denom = m2 * std;
    let skewness = if skew_denom.is_normal() {
        m3 / skew_denom
    } else {
        F::zero()
    };
    let kurt_denom = m2 * m2;
    let kurtosis = if kurt_denom.is_normal() {
        m4 / kurt_denom - real::<F>(3.0)
    } else {
        F::zero()
    };

    let mut min = col[0];
    let mut max = col[0];
    for &x in col {
        if x < min {
            min = x;
        }
        if x > max {
            max = x;
        }
    }

    let mut sorted = col.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite column values"));
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        let hi = sorted.len() / 2;
        (sorted[hi - 1] + sorted[hi]) / real::<F>(2.0)
    };

    [mean, std, median, skewness, kurtosis, min, max, max - min]
}
