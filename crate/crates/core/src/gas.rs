//! Grover adaptive search over a QUBO.
//!
//! Register layout: key qubits `0..n` hold the candidate bits, value qubits
//! `n..n+m` hold `E(b) − γ` in two's complement after state preparation.
//!
//! - `A_γ`: Hadamards on every qubit, phase encoding of each monomial on the
//!   value register, then an inverse QFT on the value register.
//! - `F_γ`: `A_γ` without the key Hadamards (the compute-only encoder).
//! - Oracle: `Z` on the value MSB, applied in the computed frame.
//! - Diffusion `D`: reflection about `|+⟩^n ⊗ |0⟩^m`.
//!
//! One Grover step applies the oracle, then `F†`, `D`, `F`, which equals
//! `A S₀ A† O` with `S₀` the reflection about `|0⟩^{n+m}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::channel::ChannelRealization;
use crate::error::{invalid, Error, Result};
use crate::qsim::{self, Circuit, Gate, NoiseSpec, Statevector};
use crate::qubo::{self, BoundsMode, EnergyBounds, QuboProblem};
use crate::sc_fde::{self, BpskBlock, RxBlock};
use crate::{bits_from_index, Bits};

/// Problems up to this size use exhaustive energy bounds.
const EXACT_BOUNDS_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Threshold from the MMSE hard decision.
    Mmse,
    /// Uniformly random initial bitstring.
    Random,
}

impl InitStrategy {
    pub fn name(self) -> &'static str {
        match self {
            InitStrategy::Mmse => "mmse",
            InitStrategy::Random => "random",
        }
    }
}

impl std::str::FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmse" => Ok(InitStrategy::Mmse),
            "random" => Ok(InitStrategy::Random),
            _ => Err(Error::Parse(format!("unknown initialization `{s}`"))),
        }
    }
}

/// How Grover iterations are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// `Fused` unless depolarizing noise is active.
    Auto,
    /// Prepares `A_γ|0⟩` once per threshold with block kernels and applies
    /// each step as an MSB sign flip plus a rank-one reflection. Ideal only.
    Fused,
    /// Executes the gate lists, expanding blocks when noise is injected.
    Circuit,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "fused" => Ok(Engine::Fused),
            "circuit" => Ok(Engine::Circuit),
            _ => Err(Error::Parse(format!("unknown engine `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasConfig {
    /// Growth factor of the iteration bound on failure.
    pub lambda_growth: f64,
    pub max_iterations: usize,
    /// Consecutive non-improving iterations before stopping.
    pub patience: usize,
    pub init: InitStrategy,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Extra value-register qubits beyond the minimum width.
    pub margin: usize,
    pub engine: Engine,
}

impl Default for GasConfig {
    fn default() -> Self {
        Self {
            lambda_growth: 8.0 / 7.0,
            max_iterations: 50,
            patience: 12,
            init: InitStrategy::Mmse,
            noise: NoiseSpec::ideal(),
            seed: 0,
            margin: 0,
            engine: Engine::Auto,
        }
    }
}

impl GasConfig {
    /// Upper bound `√(2^n)` on the iteration control `k`.
    pub fn k_cap(n: usize) -> f64 {
        2f64.powf(n as f64 / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_growth > 1.0) || !self.lambda_growth.is_finite() {
            return Err(Error::Config(format!(
                "lambda_growth must exceed 1, got {}",
                self.lambda_growth
            )));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        self.noise
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    fn resolved_engine(&self) -> Result<Engine> {
        match self.engine {
            Engine::Auto if self.noise.depolarizing_active() => Ok(Engine::Circuit),
            Engine::Auto => Ok(Engine::Fused),
            Engine::Fused if self.noise.depolarizing_active() => Err(Error::Config(
                "the fused engine cannot inject depolarizing noise".into(),
            )),
            e => Ok(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iter: usize,
    pub gamma: f64,
    pub k: f64,
    pub l: usize,
    pub measured: Bits,
    pub energy: f64,
    pub improved: bool,
}

/// Block-level operation counts accumulated during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockCounters {
    pub state_prep: usize,
    pub oracle_z: usize,
    pub diffusion: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasTrace {
    pub records: Vec<IterationRecord>,
    pub initial_bits: Bits,
    pub initial_energy: f64,
    /// Classical energy evaluations, initial one included.
    pub classical_queries: usize,
    /// Total Grover operator applications.
    pub grover_calls: usize,
    pub blocks: BlockCounters,
    pub value_width: usize,
}

impl GasTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Best bitstring known after `i` iterations (`i = 0` is the initial point).
    pub fn best_after(&self, i: usize) -> &[bool] {
        let mut best: &[bool] = &self.initial_bits;
        for r in self.records.iter().take(i) {
            if r.improved {
                best = &r.measured;
            }
        }
        best
    }

    /// CSV rows `trial,iter,gamma,k,L,measured_bits,energy,improved`.
    pub fn csv_rows(&self, trial: usize) -> Vec<String> {
        self.records
            .iter()
            .map(|r| {
                let bits: String = r.measured.iter().map(|&b| if b { '1' } else { '0' }).collect();
                format!(
                    "{trial},{},{},{},{},{bits},{},{}",
                    r.iter, r.gamma, r.k, r.l, r.energy, r.improved
                )
            })
            .collect()
    }
}

pub const TRACE_CSV_HEADER: &str = "trial,iter,gamma,k,L,measured_bits,energy,improved";

#[derive(Debug, Clone, PartialEq)]
pub struct GasResult {
    pub best_bits: Bits,
    pub best_energy: f64,
    pub trace: GasTrace,
}

/// Angle on value qubit `j` for coefficient `coeff`, wrapped to `(−π, π]`,
/// or `None` when it is a multiple of 2π.
fn encoding_angle(coeff: f64, j: usize, m: usize) -> Option<f64> {
    let unit = 2.0 * PI * 2f64.powi(j as i32 - m as i32);
    let mut a = (coeff * unit).rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a.abs() < 1e-12 || (a.abs() - 2.0 * PI).abs() < 1e-12 {
        None
    } else {
        Some(a)
    }
}

fn bounds_for(p: &QuboProblem) -> Result<EnergyBounds> {
    let mode = if p.n() <= EXACT_BOUNDS_LIMIT {
        BoundsMode::Exact
    } else {
        BoundsMode::Interval
    };
    qubo::energy_bounds(p, mode)
}

/// Errors unless every `E(b) − γ` is representable in `m`-bit two's complement.
fn check_width(p: &QuboProblem, gamma: f64, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Width("value register needs at least one qubit".into()));
    }
    if p.n() == 0 {
        return invalid("problem has no variables");
    }
    if p.n() + m > qsim::MAX_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "{} key + {m} value qubits exceed {}",
            p.n(),
            qsim::MAX_QUBITS
        )));
    }
    let b = bounds_for(p)?;
    let half = 2f64.powi(m as i32 - 1);
    let (lo, hi) = (b.e_min - gamma, b.e_max - gamma);
    if lo < -half || hi > half - 1.0 {
        return Err(Error::Width(format!(
            "shifted costs [{lo}, {hi}] exceed {m}-bit range [{}, {}]",
            -half,
            half - 1.0
        )));
    }
    Ok(())
}

/// Value-register width for `p` with `margin` spare qubits.
pub fn value_width(p: &QuboProblem, margin: usize) -> Result<usize> {
    Ok(qubo::register_width(&bounds_for(p)?, margin))
}

/// `F_γ`: value Hadamards, phase encoding of `E(b) − γ`, inverse QFT.
pub fn build_compute(p: &QuboProblem, gamma: f64, m: usize) -> Result<Circuit> {
    check_width(p, gamma, m)?;
    encode(p, gamma, m)
}

fn encode(p: &QuboProblem, gamma: f64, m: usize) -> Result<Circuit> {
    if m == 0 {
        return Err(Error::Width("value register needs at least one qubit".into()));
    }
    let n = p.n();
    let mut c = Circuit::new(n + m);
    for j in 0..m {
        c.push(Gate::H(n + j))?;
    }
    for mono in qubo::to_monomials(p) {
        let coeff = if mono.support.is_empty() {
            mono.coeff - gamma
        } else {
            mono.coeff
        };
        for j in 0..m {
            let Some(theta) = encoding_angle(coeff, j, m) else {
                continue;
            };
            let target = n + j;
            let g = match mono.support.as_slice() {
                [] => Gate::Rz { target, theta },
                [i] => Gate::Crz {
                    control: *i,
                    target,
                    theta,
                },
                s => Gate::Mcrz {
                    controls: s.to_vec(),
                    target,
                    theta,
                },
            };
            c.push(g)?;
        }
    }
    c.push(Gate::Iqft { start: n, len: m })?;
    Ok(c)
}

/// `A_γ`: key Hadamards followed by [`build_compute`].
pub fn build_state_prep(p: &QuboProblem, gamma: f64, m: usize) -> Result<Circuit> {
    check_width(p, gamma, m)?;
    build_state_prep_modular(p, gamma, m)
}

/// [`build_state_prep`] without the range check: the value register then
/// holds `(E(b) − γ) mod 2^m`, and out-of-range costs alias.
pub fn build_state_prep_modular(p: &QuboProblem, gamma: f64, m: usize) -> Result<Circuit> {
    let f = encode(p, gamma, m)?;
    let mut a = Circuit::new(p.n() + m);
    for i in 0..p.n() {
        a.push(Gate::H(i))?;
    }
    a.append(&f)?;
    Ok(a)
}

/// Oracle in the computed frame: `Z` on the value-register MSB, which flips
/// the sign of every branch with a negative shifted cost.
pub fn build_oracle(p: &QuboProblem, gamma: f64, m: usize) -> Result<Circuit> {
    check_width(p, gamma, m)?;
    Circuit::from_gates(p.n() + m, vec![Gate::Z(p.n() + m - 1)])
}

/// Compute–mark–uncompute oracle for states whose value register is `|0⟩`:
/// `F`, then `Z` on the MSB, then `F†`.
pub fn build_marking_oracle(p: &QuboProblem, gamma: f64, m: usize) -> Result<Circuit> {
    let f = build_compute(p, gamma, m)?;
    let mut c = f.clone();
    c.append(&build_oracle(p, gamma, m)?)?;
    c.append(&f.inverse())?;
    Ok(c)
}

/// `2|ψ₀⟩⟨ψ₀| − I` with `ψ₀ = |+⟩^n ⊗ |0⟩^m`; with `m = 0` this is the
/// textbook inversion about the mean on the key register.
pub fn build_diffusion(n: usize, m: usize) -> Result<Circuit> {
    if n == 0 {
        return invalid("diffusion needs at least one key qubit");
    }
    Circuit::from_gates(n + m, vec![Gate::Diffusion { key: n, anchor: m }])
}

/// Circuits for one threshold.
#[derive(Debug, Clone)]
struct ThresholdCircuits {
    state_prep: Circuit,
    /// Oracle, `F†`, `D`, `F` in application order.
    step: Circuit,
}

impl ThresholdCircuits {
    fn new(p: &QuboProblem, gamma: f64, m: usize) -> Result<Self> {
        let f = build_compute(p, gamma, m)?;
        let state_prep = build_state_prep(p, gamma, m)?;
        let mut step = build_oracle(p, gamma, m)?;
        step.append(&f.inverse())?;
        step.append(&build_diffusion(p.n(), m)?)?;
        step.append(&f)?;
        Ok(Self { state_prep, step })
    }
}

/// One Grover step (oracle, `F†`, `D`, `F`) executed gate by gate.
pub fn grover_step(state: &Statevector, p: &QuboProblem, gamma: f64, m: usize) -> Result<Statevector> {
    let circuits = ThresholdCircuits::new(p, gamma, m)?;
    let mut s = state.clone();
    s.apply_circuit(&circuits.step)?;
    Ok(s)
}

/// `A_γ|0⟩` from the energy table: each key branch carries the inverse QFT
/// of its phase state, computed with one FFT per branch.
pub fn prepared_state(table: &[f64], gamma: f64, m: usize) -> Result<Statevector> {
    let keys = table.len();
    if keys == 0 || !keys.is_power_of_two() {
        return invalid("energy table length must be a power of two");
    }
    let n = keys.trailing_zeros() as usize;
    if n + m > qsim::MAX_QUBITS {
        return Err(Error::ResourceLimit(format!("{} qubits", n + m)));
    }
    let dim = 1usize << m;
    let fft = FftPlanner::new().plan_fft_forward(dim);
    let amp_scale = 1.0 / ((keys * dim) as f64).sqrt() / (dim as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); keys * dim];
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    for (b, &e) in table.iter().enumerate() {
        let theta = 2.0 * PI * (e - gamma) / dim as f64;
        for (k, v) in buf.iter_mut().enumerate() {
            *v = Complex64::from_polar(amp_scale, k as f64 * theta);
        }
        fft.process(&mut buf);
        for (l, v) in buf.iter().enumerate() {
            amps[b | (l << n)] = *v;
        }
    }
    Statevector::from_amplitudes(amps)
}

/// Fused Grover step: MSB sign flip then `φ ↦ 2⟨ψ|φ⟩ψ − φ`.
fn fused_step(state: &mut Statevector, psi: &Statevector) {
    let msb = 1usize << (state.n_qubits() - 1);
    let amps = state.amplitudes_mut();
    for (i, a) in amps.iter_mut().enumerate() {
        if i & msb != 0 {
            *a = -*a;
        }
    }
    let overlap: Complex64 = psi
        .amplitudes()
        .iter()
        .zip(amps.iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    let two = overlap * 2.0;
    for (a, x) in amps.iter_mut().zip(psi.amplitudes()) {
        *a = two * x - *a;
    }
}

enum Runner<'a> {
    Fused {
        table: &'a [f64],
        cached: Option<(f64, Statevector)>,
    },
    Circuit {
        p: &'a QuboProblem,
        cached: Option<(f64, ThresholdCircuits)>,
    },
}

impl Runner<'_> {
    fn state_after<R: Rng + ?Sized>(
        &mut self,
        gamma: f64,
        m: usize,
        steps: usize,
        noise: &NoiseSpec,
        rng: &mut R,
    ) -> Result<Statevector> {
        match self {
            Runner::Fused { table, cached } => {
                if cached.as_ref().is_none_or(|(g, _)| *g != gamma) {
                    *cached = Some((gamma, prepared_state(table, gamma, m)?));
                }
                let psi = &cached.as_ref().expect("cached above").1;
                let mut s = psi.clone();
                for _ in 0..steps {
                    fused_step(&mut s, psi);
                }
                Ok(s)
            }
            Runner::Circuit { p, cached } => {
                if cached.as_ref().is_none_or(|(g, _)| *g != gamma) {
                    *cached = Some((gamma, ThresholdCircuits::new(p, gamma, m)?));
                }
                let c = &cached.as_ref().expect("cached above").1;
                let mut s = Statevector::zero(p.n() + m)?;
                qsim::apply_noisy(&mut s, &c.state_prep, noise, rng)?;
                for _ in 0..steps {
                    qsim::apply_noisy(&mut s, &c.step, noise, rng)?;
                }
                Ok(s)
            }
        }
    }
}

/// Draws `L` uniformly from `{0, …, ⌈k − 1⌉}`.
pub fn sample_grover_iterations<R: Rng + ?Sized>(k: f64, rng: &mut R) -> usize {
    let l_max = (k - 1.0).ceil().max(0.0) as usize;
    rng.gen_range(0..=l_max)
}

/// Runs the adaptive loop from a random initial bitstring.
///
/// MMSE initialization needs the received block; use [`detect`] or
/// [`run_gas_from`] for it.
pub fn run_gas<R: Rng + ?Sized>(p: &QuboProblem, cfg: &GasConfig, rng: &mut R) -> Result<GasResult> {
    match cfg.init {
        InitStrategy::Random => {
            let b0: Bits = (0..p.n()).map(|_| rng.gen::<bool>()).collect();
            run_gas_from(p, cfg, b0, rng)
        }
        InitStrategy::Mmse => invalid("MMSE initialization requires the received block"),
    }
}

/// Runs the adaptive loop from `initial`.
///
/// Each iteration samples `L` uniformly from `{0, …, ⌈k − 1⌉}`, simulates
/// `G^L A_γ|0⟩`, measures the key register once and re-evaluates the
/// measured bitstring classically. A strictly lower energy becomes the new
/// threshold and resets `k` to 1; otherwise `k ← min(λk, √(2^n))`.
pub fn run_gas_from<R: Rng + ?Sized>(
    p: &QuboProblem,
    cfg: &GasConfig,
    initial: Bits,
    rng: &mut R,
) -> Result<GasResult> {
    cfg.validate()?;
    let n = p.n();
    if initial.len() != n {
        return invalid("initial bitstring length differs from problem size");
    }
    let engine = cfg.resolved_engine()?;
    let table = qubo::energy_table(p)?;
    let m = qubo::register_width(&bounds_for(p)?, cfg.margin);
    let mut runner = match engine {
        Engine::Circuit => Runner::Circuit { p, cached: None },
        _ => Runner::Fused {
            table: &table,
            cached: None,
        },
    };

    let mut classical = 0usize;
    let mut evaluate = |b: &[bool]| {
        classical += 1;
        qubo::energy(p, b)
    };
    let initial_energy = evaluate(&initial)?;
    let mut best_bits = initial.clone();
    let mut best = initial_energy;
    let k_cap = GasConfig::k_cap(n);
    let mut k = 1.0f64;
    let mut stale = 0usize;
    let mut records = Vec::new();
    let mut grover_calls = 0usize;
    let mut blocks = BlockCounters::default();

    for iter in 1..=cfg.max_iterations {
        if stale >= cfg.patience {
            break;
        }
        let gamma = best;
        let l = sample_grover_iterations(k, rng);
        let state = runner.state_after(gamma, m, l, &cfg.noise, rng)?;
        grover_calls += l;
        blocks.state_prep += 2 * l + 1;
        blocks.oracle_z += l;
        blocks.diffusion += l;
        let key = qsim::measure_register(&state, 0, n, 1, rng, &cfg.noise)?[0];
        let measured = bits_from_index(key, n);
        let e = evaluate(&measured)?;
        let improved = e < best;
        records.push(IterationRecord {
            iter,
            gamma,
            k,
            l,
            measured: measured.clone(),
            energy: e,
            improved,
        });
        if improved {
            best = e;
            best_bits = measured;
            k = 1.0;
            stale = 0;
        } else {
            k = (cfg.lambda_growth * k).min(k_cap);
            stale += 1;
        }
    }
    Ok(GasResult {
        best_bits,
        best_energy: best,
        trace: GasTrace {
            records,
            initial_bits: initial,
            initial_energy,
            classical_queries: classical,
            grover_calls,
            blocks,
            value_width: m,
        },
    })
}

/// MMSE hard decision and its ML metric, the initial threshold.
pub fn mmse_threshold(rx: &RxBlock, ch: &ChannelRealization) -> (Bits, f64) {
    let b0 = sc_fde::mmse_detect(rx, ch);
    let y0 = sc_fde::ml_metric(rx, ch, &b0);
    (b0.into_bits(), y0)
}

/// Builds the QUBO for `rx`, initializes per `cfg.init` and runs the search.
pub fn detect_traced<R: Rng + ?Sized>(
    rx: &RxBlock,
    ch: &ChannelRealization,
    cfg: &GasConfig,
    rng: &mut R,
) -> Result<GasResult> {
    let p = qubo::build_qubo(ch.lambda(), &rx.y_f)?;
    let b0 = match cfg.init {
        InitStrategy::Mmse => mmse_threshold(rx, ch).0,
        InitStrategy::Random => (0..p.n()).map(|_| rng.gen::<bool>()).collect(),
    };
    run_gas_from(&p, cfg, b0, rng)
}

pub fn detect<R: Rng + ?Sized>(
    rx: &RxBlock,
    ch: &ChannelRealization,
    cfg: &GasConfig,
    rng: &mut R,
) -> Result<BpskBlock> {
    Ok(BpskBlock::from_bits(detect_traced(rx, ch, cfg, rng)?.best_bits))
}

/// Key index of the lowest-energy bitstring, ties to the smallest index.
pub fn argmin_index(table: &[f64]) -> usize {
    let mut best = 0;
    for (i, e) in table.iter().enumerate() {
        if *e < table[best] {
            best = i;
        }
    }
    best
}
