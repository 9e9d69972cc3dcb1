//! DFT conventions shared by the link-level modules.
//!
//! Time/frequency vectors use the unitary transform `Q` with
//! `Q[k][n] = exp(-2πi kn/N) / √N`, so Parseval holds without scaling.
//! Channel frequency responses use the unnormalized transform, because those
//! are the eigenvalues of the circulant channel matrix: `H = Qᴴ Λ Q`.

use num_complex::Complex64;
use rustfft::FftPlanner;

fn transform(x: &[Complex64], inverse: bool, scale: f64) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    if buf.is_empty() {
        return buf;
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(&mut buf);
    if scale != 1.0 {
        for v in &mut buf {
            *v *= scale;
        }
    }
    buf
}

/// Unitary DFT, `Q x`.
pub fn unitary_dft(x: &[Complex64]) -> Vec<Complex64> {
    transform(x, false, 1.0 / (x.len() as f64).sqrt())
}

/// Unitary inverse DFT, `Qᴴ x`.
pub fn unitary_idft(x: &[Complex64]) -> Vec<Complex64> {
    transform(x, true, 1.0 / (x.len() as f64).sqrt())
}

/// Unnormalized `n`-point DFT of `h` zero-padded to length `n`.
///
/// Panics if `h` is longer than `n`.
pub fn frequency_response(h: &[Complex64], n: usize) -> Vec<Complex64> {
    assert!(h.len() <= n, "impulse response longer than block");
    let mut padded = vec![Complex64::new(0.0, 0.0); n];
    padded[..h.len()].copy_from_slice(h);
    transform(&padded, false, 1.0)
}

/// Circular convolution of `h` (length ≤ n) with `x` (length n).
pub fn circular_convolve(h: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for (i, yi) in y.iter_mut().enumerate() {
        for (l, hl) in h.iter().enumerate() {
            *yi += hl * x[(i + n - l % n) % n];
        }
    }
    y
}

/// Linear convolution of two sequences, length `a.len() + b.len() - 1`.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}
