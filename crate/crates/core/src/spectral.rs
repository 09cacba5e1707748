//! FFT-based operations on uniformly sampled periodic functions.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub(crate) fn fft(data: &mut [C64]) {
    FftPlanner::new().plan_fft_forward(data.len()).process(data);
}

/// Unnormalized inverse transform (sign +i).
pub(crate) fn ifft(data: &mut [C64]) {
    FftPlanner::new().plan_fft_inverse(data.len()).process(data);
}

/// Signed frequency of FFT bin `k` for length `n`, Nyquist reported as `n/2`.
pub(crate) fn freq(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Derivative in the parameter `s` of periodic samples taken at `s_j = 2πj/N`.
/// The Nyquist mode is dropped.
pub fn spectral_derivative(samples: &[C64]) -> Result<Vec<C64>> {
    let n = samples.len();
    if n % 2 != 0 {
        return Err(Error::OddLength(n));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = samples.to_vec();
    fft(&mut c);
    let scale = 1.0 / n as f64;
    for (k, ck) in c.iter_mut().enumerate() {
        let m = freq(k, n);
        *ck = if 2 * m.unsigned_abs() as usize == n {
            C64::new(0.0, 0.0)
        } else {
            *ck * C64::new(0.0, m as f64 * scale)
        };
    }
    ifft(&mut c);
    Ok(c)
}

/// First and second derivatives of periodic samples, with Fourier
/// coefficients below `floor × max|c_k|` treated as roundoff and dropped
/// (otherwise the k² factor lifts them to ~1e-12 at a few hundred nodes).
pub(crate) fn derivatives_filtered(samples: &[C64], floor: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    let n = samples.len();
    if n % 2 != 0 {
        return Err(Error::OddLength(n));
    }
    let mut c = samples.to_vec();
    fft(&mut c);
    let cmax = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = 1.0 / n as f64;
    let mut d1 = vec![C64::new(0.0, 0.0); n];
    let mut d2 = d1.clone();
    for (k, ck) in c.iter().enumerate() {
        let m = freq(k, n);
        if 2 * m.unsigned_abs() as usize == n || ck.norm() < floor * cmax {
            continue;
        }
        let mf = m as f64;
        d1[k] = ck * C64::new(0.0, mf * scale);
        d2[k] = -ck * (mf * mf * scale);
    }
    ifft(&mut d1);
    ifft(&mut d2);
    Ok((d1, d2))
}

/// Real-valued version of [`spectral_derivative`].
pub fn spectral_derivative_real(samples: &[f64]) -> Result<Vec<f64>> {
    let c: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    Ok(spectral_derivative(&c)?.into_iter().map(|z| z.re).collect())
}

/// Length of the grid produced by [`resample`]: `round(βN)`, bumped to even.
pub fn resampled_len(n: usize, factor: f64) -> usize {
    let m = (factor * n as f64).round() as usize;
    m + m % 2
}

/// Trigonometric interpolation onto a uniform grid `factor` times finer.
pub fn resample(samples: &[C64], factor: f64) -> Result<Vec<C64>> {
    if !(factor > 1.0) {
        return Err(Error::BadFactor(factor));
    }
    resample_to(samples, resampled_len(samples.len(), factor))
}

/// Trigonometric interpolation (or band truncation) onto `m` uniform points.
/// Both lengths must be even. The Nyquist mode is split symmetrically so real
/// data stays real.
pub fn resample_to(samples: &[C64], m: usize) -> Result<Vec<C64>> {
    let n = samples.len();
    if n % 2 != 0 || n == 0 {
        return Err(Error::OddLength(n));
    }
    if m % 2 != 0 || m == 0 {
        return Err(Error::OddLength(m));
    }
    let mut c = samples.to_vec();
    fft(&mut c);
    let mut out = vec![C64::new(0.0, 0.0); m];
    let half = n.min(m) / 2;
    for k in 0..n {
        let f = freq(k, n);
        let a = f.unsigned_abs() as usize;
        if a < half {
            let idx = if f >= 0 { f as usize } else { (m as i64 + f) as usize };
            out[idx] += c[k];
        } else if a == half {
            if m > n {
                // split the input Nyquist mode between ±n/2
                out[half] += 0.5 * c[k];
                out[m - half] += 0.5 * c[k];
            } else {
                out[half] += c[k];
            }
        }
    }
    ifft(&mut out);
    let scale = 1.0 / n as f64;
    out.iter_mut().for_each(|z| *z *= scale);
    Ok(out)
}

/// Real-valued version of [`resample_to`].
pub fn resample_real_to(samples: &[f64], m: usize) -> Result<Vec<f64>> {
    let c: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    Ok(resample_to(&c, m)?.into_iter().map(|z| z.re).collect())
}
