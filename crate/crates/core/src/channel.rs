//! Frequency-selective Rayleigh links and RIS tap compensation.
//!
//! Each RIS element `r` sees a user→RIS link and a RIS→base-station link.
//! Their convolution `g_r` is the element's pre-phase path; the end-to-end
//! impulse response is `h̃ = Σ_r g_r · e^{jθ_r}`.
//!
//! Tap indices are zero-based throughout.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dft;
use crate::error::{invalid, Result};

/// Channel impulse response of a single link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCir {
    taps: Vec<Complex64>,
}

impl LinkCir {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return invalid("link must have at least one tap");
        }
        if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return invalid("link taps must be finite");
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// Draws a link with i.i.d. `CN(0, 1/num_taps)` taps (uniform power delay
/// profile, unit average energy).
pub fn gen_link<R: Rng + ?Sized>(num_taps: usize, rng: &mut R) -> Result<LinkCir> {
    if num_taps == 0 {
        return invalid("num_taps must be at least 1");
    }
    let sigma = (0.5 / num_taps as f64).sqrt();
    let taps = (0..num_taps)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    LinkCir::new(taps)
}

/// Cascaded (pre-phase) per-element paths `g_r = h_UI^(r) * h_IB^(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPaths {
    per_element: Vec<Vec<Complex64>>,
    len: usize,
}

impl RisPaths {
    pub fn new(per_element: Vec<Vec<Complex64>>) -> Result<Self> {
        let Some(first) = per_element.first() else {
            return invalid("RIS must have at least one element");
        };
        let len = first.len();
        if len == 0 {
            return invalid("cascaded paths must have at least one tap");
        }
        if per_element.iter().any(|g| g.len() != len) {
            return invalid("all cascaded paths must share the same length");
        }
        Ok(Self { per_element, len })
    }

    /// Convolves matching user→RIS and RIS→BS links element by element.
    pub fn from_links(ui: &[LinkCir], ib: &[LinkCir]) -> Result<Self> {
        if ui.len() != ib.len() {
            return invalid(format!(
                "link count mismatch: {} user-side vs {} BS-side",
                ui.len(),
                ib.len()
            ));
        }
        let paths = ui
            .iter()
            .zip(ib)
            .map(|(a, b)| dft::convolve(a.taps(), b.taps()))
            .collect();
        Self::new(paths)
    }

    /// Draws `elements` independent link pairs with `l_ui` and `l_ib` taps.
    pub fn generate<R: Rng + ?Sized>(
        elements: usize,
        l_ui: usize,
        l_ib: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if elements == 0 {
            return invalid("RIS must have at least one element");
        }
        let mut ui = Vec::with_capacity(elements);
        let mut ib = Vec::with_capacity(elements);
        for _ in 0..elements {
            ui.push(gen_link(l_ui, rng)?);
            ib.push(gen_link(l_ib, rng)?);
        }
        Self::from_links(&ui, &ib)
    }

    pub fn elements(&self) -> usize {
        self.per_element.len()
    }

    /// Cascaded length `L = L_UI + L_IB − 1`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn path(&self, r: usize) -> &[Complex64] {
        &self.per_element[r]
    }

    pub fn paths(&self) -> &[Vec<Complex64>] {
        &self.per_element
    }
}

/// RIS reflection configuration, `φ_r = a_r e^{jθ_r}` with `a_r = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    phases: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl RisConfig {
    /// Unit-amplitude configuration; phases are wrapped into `[0, 2π)`.
    pub fn from_phases(phases: Vec<f64>) -> Self {
        let phases: Vec<f64> = phases.into_iter().map(wrap_phase).collect();
        let amplitudes = vec![1.0; phases.len()];
        Self { phases, amplitudes }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .zip(&self.amplitudes)
            .map(|(&th, &a)| Complex64::from_polar(a, th))
            .collect()
    }

    /// Rounds every phase to the nearest multiple of `2π / 2^bits`.
    pub fn quantized(&self, bits: u32) -> Self {
        let step = TAU / f64::from(1u32 << bits);
        Self::from_phases(
            self.phases
                .iter()
                .map(|p| (p / step).round() * step)
                .collect(),
        )
    }
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// End-to-end impulse response `h̃ = Σ_r g_r e^{jθ_r}`.
pub fn cascade(paths: &RisPaths, cfg: &RisConfig) -> Result<Vec<Complex64>> {
    if cfg.phases.len() != paths.elements() {
        return invalid(format!(
            "{} phases for {} RIS elements",
            cfg.phases.len(),
            paths.elements()
        ));
    }
    Ok(combine(paths, &cfg.coefficients()))
}

/// `Σ_r g_r w_r` for arbitrary complex weights.
pub(crate) fn combine(paths: &RisPaths, weights: &[Complex64]) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); paths.len()];
    for (g, w) in paths.paths().iter().zip(weights) {
        for (hl, gl) in h.iter_mut().zip(g) {
            *hl += gl * w;
        }
    }
    h
}

/// Phases that co-phase every element's contribution at tap `ell`.
///
/// The angle of an exactly zero tap is taken as 0.
pub fn align_tap(paths: &RisPaths, ell: usize) -> Result<RisConfig> {
    if ell >= paths.len() {
        return invalid(format!(
            "tap index {ell} out of range for cascaded length {}",
            paths.len()
        ));
    }
    let phases = paths
        .paths()
        .iter()
        .map(|g| {
            let t = g[ell];
            if t.norm_sqr() == 0.0 {
                0.0
            } else {
                -t.arg()
            }
        })
        .collect();
    Ok(RisConfig::from_phases(phases))
}

/// Tap whose own alignment yields the largest power; ties go to the
/// smallest index.
pub fn best_tap(paths: &RisPaths) -> usize {
    let mut best = 0;
    let mut best_power = f64::NEG_INFINITY;
    for ell in 0..paths.len() {
        // coherent combining: aligned tap magnitude is Σ_r |g_r(ℓ)|
        let power = paths
            .paths()
            .iter()
            .map(|g| g[ell].norm())
            .sum::<f64>()
            .powi(2);
        if power > best_power {
            best_power = power;
            best = ell;
        }
    }
    best
}

/// Tap-compensation strategy used to configure the RIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TapStrategy {
    First,
    /// Middle tap, `(L − 1) / 2` (lower middle for even `L`).
    Central,
    Max,
}

impl TapStrategy {
    pub fn select(self, paths: &RisPaths) -> usize {
        match self {
            TapStrategy::First => 0,
            TapStrategy::Central => (paths.len() - 1) / 2,
            TapStrategy::Max => best_tap(paths),
        }
    }

    pub fn configure(self, paths: &RisPaths) -> RisConfig {
        align_tap(paths, self.select(paths)).expect("selected tap is in range")
    }

    pub fn name(self) -> &'static str {
        match self {
            TapStrategy::First => "first",
            TapStrategy::Central => "central",
            TapStrategy::Max => "max",
        }
    }
}

impl std::str::FromStr for TapStrategy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(TapStrategy::First),
            "central" | "middle" => Ok(TapStrategy::Central),
            "max" | "maximum" => Ok(TapStrategy::Max),
            other => Err(crate::Error::Parse(format!("unknown tap strategy `{other}`"))),
        }
    }
}

/// Cascaded impulse response together with its block-length DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h_tilde: Vec<Complex64>,
    lambda: Vec<Complex64>,
    n: usize,
}

impl ChannelRealization {
    pub fn new(h_tilde: Vec<Complex64>, n: usize) -> Result<Self> {
        if h_tilde.is_empty() {
            return invalid("impulse response is empty");
        }
        if h_tilde.len() > n {
            return invalid(format!(
                "channel length {} exceeds block length {n}; circular model invalid",
                h_tilde.len()
            ));
        }
        let lambda = dft::frequency_response(&h_tilde, n);
        Ok(Self { h_tilde, lambda, n })
    }

    /// Draws links, configures the RIS with `strategy` and cascades.
    pub fn generate<R: Rng + ?Sized>(
        n: usize,
        elements: usize,
        l_ui: usize,
        l_ib: usize,
        strategy: TapStrategy,
        rng: &mut R,
    ) -> Result<Self> {
        let paths = RisPaths::generate(elements, l_ui, l_ib, rng)?;
        let cfg = strategy.configure(&paths);
        Self::new(cascade(&paths, &cfg)?, n)
    }

    pub fn h_tilde(&self) -> &[Complex64] {
        &self.h_tilde
    }

    /// Eigenvalues of the circulant channel matrix (unnormalized DFT).
    pub fn lambda(&self) -> &[Complex64] {
        &self.lambda
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn taps(&self) -> usize {
        self.h_tilde.len()
    }

    /// Dense circulant matrix, `H[i][j] = h̃[(i − j) mod N]`.
    pub fn circulant(&self) -> Vec<Vec<Complex64>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = (i + n - j) % n;
                        self.h_tilde.get(d).copied().unwrap_or_default()
                    })
                    .collect()
            })
            .collect()
    }
}
