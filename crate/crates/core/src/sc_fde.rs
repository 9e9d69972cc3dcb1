//! Cyclic-prefix block transmission and classical detectors.
//!
//! With a prefix of at least `L − 1` samples the channel acts on each block
//! as a circular convolution, so `y = H̃x + w` with a circulant `H̃` that the
//! unitary DFT diagonalizes.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::ChannelRealization;
use crate::dft;
use crate::error::{invalid, Error, Result};
use crate::{bits_from_index, Bits};

/// Largest block length accepted by the exhaustive detector.
pub const MAX_EXHAUSTIVE_BITS: usize = 24;

/// BPSK block: bit `b` maps to symbol `2b − 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BpskBlock {
    bits: Bits,
}

impl BpskBlock {
    pub fn from_bits(bits: Bits) -> Self {
        Self { bits }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::from_bits((0..n).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Bits {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn symbols(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| symbol(b)).collect()
    }

    pub fn complex_symbols(&self) -> Vec<Complex64> {
        self.bits
            .iter()
            .map(|&b| Complex64::new(symbol(b), 0.0))
            .collect()
    }

    /// Number of positions where `self` and `other` disagree.
    pub fn bit_errors(&self, other: &BpskBlock) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

fn symbol(b: bool) -> f64 {
    if b {
        1.0
    } else {
        -1.0
    }
}

/// Received block after prefix removal.
#[derive(Debug, Clone, PartialEq)]
pub struct RxBlock {
    pub y: Vec<Complex64>,
    pub y_f: Vec<Complex64>,
    pub snr_linear: f64,
    /// `σ_w² = 1 / snr_linear`.
    pub noise_var: f64,
}

impl RxBlock {
    pub fn new(y: Vec<Complex64>, snr_db: f64) -> Self {
        let snr_linear = 10f64.powf(snr_db / 10.0);
        let y_f = dft::unitary_dft(&y);
        Self {
            y,
            y_f,
            snr_linear,
            noise_var: 1.0 / snr_linear,
        }
    }

    /// 64-bit digest of the received samples; equal blocks have equal digests.
    pub fn digest(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for v in &self.y {
            v.re.to_bits().hash(&mut h);
            v.im.to_bits().hash(&mut h);
        }
        self.noise_var.to_bits().hash(&mut h);
        h.finish()
    }
}

/// Prepends the last `lcp` samples of `x`.
pub fn add_cp<T: Copy>(x: &[T], lcp: usize) -> Result<Vec<T>> {
    if lcp > x.len() {
        return invalid(format!(
            "prefix length {lcp} exceeds block length {}",
            x.len()
        ));
    }
    let mut out = Vec::with_capacity(x.len() + lcp);
    out.extend_from_slice(&x[x.len() - lcp..]);
    out.extend_from_slice(x);
    Ok(out)
}

/// Drops the first `lcp` samples and keeps the next `n`.
pub fn remove_cp<T: Copy>(x: &[T], lcp: usize, n: usize) -> Result<Vec<T>> {
    if x.len() < lcp + n {
        return invalid("received sequence shorter than prefix plus block");
    }
    Ok(x[lcp..lcp + n].to_vec())
}

/// Unit-variance circularly-symmetric complex Gaussian samples.
pub fn unit_noise<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

/// Transmits with the default prefix length `L − 1`.
pub fn transmit<R: Rng + ?Sized>(
    x: &BpskBlock,
    ch: &ChannelRealization,
    snr_db: f64,
    rng: &mut R,
) -> Result<RxBlock> {
    let noise = unit_noise(x.len(), rng);
    transmit_with_noise(x, ch, snr_db, ch.taps() - 1, &noise)
}

/// Transmits using a caller-supplied unit-variance noise vector, scaled to
/// `σ_w = 10^(−snr_db/20)`. Sharing the vector across SNR points gives
/// common-random-number sweeps.
pub fn transmit_with_noise(
    x: &BpskBlock,
    ch: &ChannelRealization,
    snr_db: f64,
    lcp: usize,
    unit_noise: &[Complex64],
) -> Result<RxBlock> {
    let n = ch.block_len();
    if x.len() != n {
        return invalid(format!("block has {} symbols, channel expects {n}", x.len()));
    }
    if unit_noise.len() != n {
        return invalid("noise vector length differs from block length");
    }
    if lcp + 1 < ch.taps() {
        return invalid(format!(
            "prefix length {lcp} too short for a {}-tap channel",
            ch.taps()
        ));
    }
    let tx = add_cp(&x.complex_symbols(), lcp)?;
    let rx_full = dft::convolve(ch.h_tilde(), &tx);
    let mut y = remove_cp(&rx_full, lcp, n)?;
    let sigma = 10f64.powf(-snr_db / 20.0);
    for (yi, wi) in y.iter_mut().zip(unit_noise) {
        *yi += wi * sigma;
    }
    Ok(RxBlock::new(y, snr_db))
}

/// Frequency-domain MMSE equalizer output `d = Qᴴ Φ y_f`.
pub fn mmse_equalize(rx: &RxBlock, ch: &ChannelRealization, sigma_x2: f64) -> Vec<Complex64> {
    let reg = rx.noise_var / sigma_x2;
    let filtered: Vec<Complex64> = ch
        .lambda()
        .iter()
        .zip(&rx.y_f)
        .map(|(lam, yf)| {
            let den = lam.norm_sqr() + reg;
            if den == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                lam.conj() / den * yf
            }
        })
        .collect();
    dft::unitary_idft(&filtered)
}

/// Nearest BPSK point per sample; `Re(d) = 0` decides `+1`.
pub fn hard_decision(d: &[Complex64]) -> BpskBlock {
    BpskBlock::from_bits(d.iter().map(|v| v.re >= 0.0).collect())
}

/// MMSE equalization followed by hard decision.
pub fn mmse_detect(rx: &RxBlock, ch: &ChannelRealization) -> BpskBlock {
    hard_decision(&mmse_equalize(rx, ch, 1.0))
}

/// `‖y − H̃x‖²` evaluated in the time domain.
pub fn ml_metric(rx: &RxBlock, ch: &ChannelRealization, x: &BpskBlock) -> f64 {
    let hx = dft::circular_convolve(ch.h_tilde(), &x.complex_symbols());
    rx.y.iter().zip(&hx).map(|(a, b)| (a - b).norm_sqr()).sum()
}

/// `‖y_f − Λ Qx‖²` evaluated in the frequency domain.
pub fn ml_metric_freq(rx: &RxBlock, ch: &ChannelRealization, x: &BpskBlock) -> f64 {
    let xf = dft::unitary_dft(&x.complex_symbols());
    rx.y_f
        .iter()
        .zip(ch.lambda().iter().zip(&xf))
        .map(|(yf, (lam, xk))| (yf - lam * xk).norm_sqr())
        .sum()
}

/// Exhaustive maximum-likelihood detection over all `2^N` BPSK blocks.
///
/// Ties resolve to the smallest bit vector in lexicographic order
/// (`b₀` most significant).
pub fn mld_exhaustive(rx: &RxBlock, ch: &ChannelRealization) -> Result<BpskBlock> {
    let n = ch.block_len();
    if n > MAX_EXHAUSTIVE_BITS {
        return Err(Error::ResourceLimit(format!(
            "exhaustive detection over 2^{n} candidates (limit 2^{MAX_EXHAUSTIVE_BITS})"
        )));
    }
    if rx.y.len() != n {
        return invalid("received block length differs from channel block length");
    }
    let mut best: Option<(f64, Bits)> = None;
    for idx in 0..1usize << n {
        let cand = BpskBlock::from_bits(bits_from_index(idx, n));
        let metric = ml_metric(rx, ch, &cand);
        let better = match &best {
            None => true,
            Some((m, bits)) => metric < *m || (metric == *m && cand.bits() < bits.as_slice()),
        };
        if better {
            best = Some((metric, cand.into_bits()));
        }
    }
    Ok(BpskBlock::from_bits(best.expect("at least one candidate").1))
}
