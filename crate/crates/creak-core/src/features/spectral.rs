//! Windowing, mel filterbank, DCT and delta-regression kernels.

use ndarray::Array2;

use crate::num::{real, Real};

/// Symmetric Hamming window `0.54 − 0.46·cos(2πn/(L−1))`.
///
/// Endpoints evaluate to 0.08 exactly; the center of an odd-length window
/// to 1.0.
pub fn hamming_window<F: Real>(len: usize) -> Vec<F> {
    if len == 1 {
        return vec![F::one()];
    }
    let a = real::<F>(0.54);
    let b = real::<F>(0.46);
    let denom = real::<F>((len - 1) as f64);
    (0..len)
        .map(|n| {
            let phase = real::<F>(2.0 * std::f64::consts::PI * n as f64) / denom;
            a - b * phase.cos()
        })
        .collect()
}

/// `mel(f) = 2595·log10(1 + f/700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `n_mels × (fft_size/2 + 1)`.
///
/// Filter centers are equally spaced on the mel scale between 0 Hz and
/// Nyquist; each triangle has unit peak and overlaps only its neighbors.
pub fn mel_filterbank<F: Real>(n_mels: usize, fft_size: usize, sample_rate: u32) -> Array2<F> {
    let n_bins = fft_size / 2 + 1;
    let nyquist = f64::from(sample_rate) / 2.0;
    let mel_max = hz_to_mel(nyquist);
    // n_mels + 2 edge points: filter i spans edges i-1 .. i+1.
    let edges_hz: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = f64::from(sample_rate) / fft_size as f64;

    let mut bank = Array2::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (left, center, right) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
        for k in 0..n_bins {
            let f = k as f64 * bin_hz;
            let w = if f < left || f > right {
                0.0
            } else if f <= center {
                (f - left) / (center - left)
            } else {
                (right - f) / (right - center)
            };
            if w > 0.0 {
                bank[(m, k)] = real::<F>(w);
            }
        }
    }
    bank
}

/// Orthonormal DCT-II matrix of size `n × n`:
/// `D[k][j] = s(k)·cos(π(2j+1)k / 2n)` with `s(0)=√(1/n)`, `s(k)=√(2/n)`.
pub fn dct_ii_matrix<F: Real>(n: usize) -> Array2<F> {
    let mut d = Array2::zeros((n, n));
    let s0 = (1.0 / n as f64).sqrt();
    let s = (2.0 / n as f64).sqrt();
    for k in 0..n {
        let scale = if k == 0 { s0 } else { s };
        for j in 0..n {
            let angle = std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64;
            d[(k, j)] = real::<F>(scale * angle.cos());
        }
    }
    d
}

/// Appends Δ and ΔΔ columns to a T × D coefficient track:
/// the least-squares slope over a `window`-frame neighborhood,
/// `Δ_t = Σ_{n=1..h} n·(c_{t+n} − c_{t−n}) / (2·Σ n²)` with edge
/// replication, and ΔΔ as the same operator applied to Δ.
pub fn append_deltas<F: Real>(coeffs: &Array2<F>, window: usize) -> Array2<F> {
    let delta = delta_track(coeffs, window);
    let delta2 = delta_track(&delta, window);
    let (t, d) = coeffs.dim();
    let mut out = Array2::zeros((t, 3 * d));
    for i in 0..t {
        for j in 0..d {
            out[(i, j)] = coeffs[(i, j)];
            out[(i, d + j)] = delta[(i, j)];
            out[(i, 2 * d + j)] = delta2[(i, j)];
        }
    }
    out
}

fn delta_track<F: Real>(coeffs: &Array2<F>, window: usize) -> Array2<F> {
    let half = (window - 1) / 2;
    let (t, d) = coeffs.dim();
    let denom: f64 = 2.0 * (1..=half).map(|n| (n * n) as f64).sum::<f64>();
    let denom = real::<F>(denom);
    let clamp = |i: isize| -> usize { i.clamp(0, t as isize - 1) as usize };
    let mut out = Array2::zeros((t, d));
    for i in 0..t {
        for j in 0..d {
            let mut acc = F::zero();
            for n in 1..=half {
                let ahead = coeffs[(clamp(i as isize + n as isize), j)];
                let behind = coeffs[(clamp(i as isize - n as isize), j)];
                acc += real::<F>(n as f64) * (ahead - behind);
            }
            out[(i, j)] = acc / denom;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn hamming_endpoints_and_center() {
        let w: Vec<f64> = hamming_window(801);
        assert_abs_diff_eq!(w[0], 0.08, epsilon = 1e-12);
        assert_abs_diff_eq!(w[800], 0.08, epsilon = 1e-12);
        assert_abs_diff_eq!(w[400], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mel_scale_anchors() {
        assert_eq!(hz_to_mel(0.0), 0.0);
        assert_abs_diff_eq!(hz_to_mel(1000.0), 1000.0, epsilon = 0.1);
    }

    #[test]
    fn filterbank_has_no_spectral_holes() {
        let bank: Array2<f64> = mel_filterbank(128, 1024, 8_000);
        // Bins between the first and the last filter center must receive
        // positive total weight.
        let nyquist = 4_000.0;
        let mel_max = hz_to_mel(nyquist);
        let first_center = mel_to_hz(mel_max / 129.0);
        let last_center = mel_to_hz(mel_max * 128.0 / 129.0);
        let bin_hz = 8_000.0 / 1024.0;
        for k in 0..513 {
            let f = k as f64 * bin_hz;
            if f >= first_center && f <= last_center {
                let total: f64 = bank.column(k).sum();
                assert!(total > 0.0, "spectral hole at bin {k} ({f} Hz)");
            }
        }
    }

    #[test]
    fn filterbank_filters_are_nonnegative_with_unit_peak_shape() {
        let bank: Array2<f64> = mel_filterbank(16, 512, 8_000);
        for w in bank.iter() {
            assert!((0.0..=1.0).contains(w));
        }
    }

    #[test]
    fn dct_matches_direct_cosine_sum() {
        let n = 128;
        let d: Array2<f64> = dct_ii_matrix(n);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = d.dot(&Array1::from_vec(x.clone()));
        for k in 0..n {
            let scale = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            let direct: f64 = (0..n)
                .map(|j| {
                    x[j] * (std::f64::consts::PI * (2 * j + 1) as f64 * k as f64
                        / (2 * n) as f64)
                        .cos()
                })
                .sum::<f64>()
                * scale;
            assert_abs_diff_eq!(y[k], direct, epsilon = 1e-9);
        }
    }

    #[test]
    fn dct_is_orthonormal() {
        let n = 128;
        let d: Array2<f64> = dct_ii_matrix(n);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        let x = Array1::from_vec((0..n).map(|_| rng.random_range(-5.0..5.0)).collect());
        let reconstructed = d.t().dot(&d.dot(&x));
        for (a, b) in x.iter().zip(reconstructed.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn deltas_of_constant_track_are_zero() {
        let coeffs = Array2::from_elem((20, 3), 2.5f64);
        let out = append_deltas(&coeffs, 9);
        assert_eq!(out.dim(), (20, 9));
        for i in 0..20 {
            for j in 3..9 {
                assert_eq!(out[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn deltas_of_ramp_are_one_then_zero() {
        let t = 30;
        let coeffs = Array2::from_shape_fn((t, 1), |(i, _)| i as f64);
        let out = append_deltas(&coeffs, 9);
        // Interior frames see the exact slope; ΔΔ of a ramp vanishes.
        for i in 4..t - 4 {
            assert_abs_diff_eq!(out[(i, 1)], 1.0, epsilon = 1e-12);
        }
        for i in 8..t - 8 {
            assert_abs_diff_eq!(out[(i, 2)], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn deltas_of_single_frame_are_zero() {
        let coeffs = Array2::from_elem((1, 13), 1.25f64);
        let out = append_deltas(&coeffs, 9);
        assert_eq!(out.dim(), (1, 39));
        for j in 13..39 {
            assert_eq!(out[(0, j)], 0.0);
        }
    }
}
