use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::state::{Gate, Statevector};
use crate::error::{invalid, Result};

/// QFT on `len` qubits starting at `start` as Hadamards, controlled phases
/// and a final bit-reversal of swaps.
pub(crate) fn qft_gates(start: usize, len: usize) -> Vec<Gate> {
    let mut g = Vec::new();
    for j in (0..len).rev() {
        g.push(Gate::H(start + j));
        for k in (0..j).rev() {
            g.push(Gate::Crz {
                control: start + k,
                target: start + j,
                theta: PI / (1u64 << (j - k)) as f64,
            });
        }
    }
    for i in 0..len / 2 {
        g.push(Gate::Swap(start + i, start + len - 1 - i));
    }
    g
}

/// Applies the (inverse) QFT to every register slice via FFT.
pub(crate) fn transform_register(amps: &mut [Complex64], start: usize, len: usize, inverse_qft: bool) {
    let dim = 1usize << len;
    let mut planner = FftPlanner::new();
    // IQFT carries e^{−2πi vk/M}, which is the forward FFT kernel
    let fft = if inverse_qft {
        planner.plan_fft_forward(dim)
    } else {
        planner.plan_fft_inverse(dim)
    };
    let scale = 1.0 / (dim as f64).sqrt();
    let stride = 1usize << start;
    let total_bits = amps.len().trailing_zeros() as usize;
    let high = 1usize << (total_bits - start - len);
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for hi in 0..high {
        for lo in 0..stride {
            let base = (hi << (start + len)) | lo;
            for (k, b) in buf.iter_mut().enumerate() {
                *b = amps[base + k * stride];
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (k, b) in buf.iter().enumerate() {
                amps[base + k * stride] = b * scale;
            }
        }
    }
}

fn check_register(state: &Statevector, start: usize, len: usize) -> Result<()> {
    if len == 0 || start + len > state.n_qubits() {
        return invalid(format!(
            "register [{start}, {}) outside a {}-qubit state",
            start + len,
            state.n_qubits()
        ));
    }
    Ok(())
}

/// Inverse QFT on qubits `start..start + len`; the register then reads as
/// an unsigned integer with qubit `start` least significant.
pub fn iqft(state: &mut Statevector, start: usize, len: usize) -> Result<()> {
    check_register(state, start, len)?;
    transform_register(state.amplitudes_mut(), start, len, true);
    Ok(())
}

pub fn qft(state: &mut Statevector, start: usize, len: usize) -> Result<()> {
    check_register(state, start, len)?;
    transform_register(state.amplitudes_mut(), start, len, false);
    Ok(())
}

/// Outcome distribution of an `m`-qubit register holding the phase state
/// `2^{−m/2} Σ_k e^{ikθ}|k⟩` after an inverse QFT:
/// `|⟨g(θ), g(2πl/2^m)⟩|²` for `l = 0..2^m`.
pub fn fejer_profile(theta: f64, m: usize) -> Vec<f64> {
    let dim = 1usize << m;
    let scale = 1.0 / dim as f64;
    (0..dim)
        .map(|l| {
            let delta = 2.0 * PI * l as f64 / dim as f64 - theta;
            let s: Complex64 = (0..dim)
                .map(|k| Complex64::from_polar(1.0, k as f64 * delta))
                .sum();
            (s * scale).norm_sqr()
        })
        .collect()
}
