//! Monte-Carlo experiment harness behind the command-line tool.
//!
//! Every trial draws links, RIS configuration, a BPSK block and a unit
//! noise vector from a generator seeded by [`seed_plan`]. The noise vector
//! is scaled per SNR point, so all SNR points and all detectors of a trial
//! see the same channel, bits and noise direction.
//!
//! Configuration files are flat `key = value` text; `#` starts a comment
//! and unknown keys are rejected. See [`ExperimentConfig::set`] for keys.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{cascade, ChannelRealization, RisPaths, TapStrategy};
use crate::error::{Error, Result};
use crate::gas::{self, Engine, GasConfig, InitStrategy};
use crate::qsim::{NoiseSpec, ReadoutMatrix};
use crate::resources;
use crate::sc_fde::{self, BpskBlock, RxBlock};
use crate::{qubo, Bits};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// BER versus SNR for several RIS sizes.
    RisGain,
    /// BER versus SNR for several cascaded channel lengths.
    Taps,
    /// BER versus SNR for each RIS tap-compensation strategy.
    TapCompensation,
    /// BER as a function of the search iteration.
    Convergence,
    /// GAS under ideal, depolarizing and readout-noise simulation.
    Noise,
    /// Gate budgets, register widths and query counts.
    Resources,
    /// QUBO of one received block in text form.
    DumpQubo,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::RisGain => "ris-gain",
            Scenario::Taps => "taps",
            Scenario::TapCompensation => "tap-compensation",
            Scenario::Convergence => "convergence",
            Scenario::Noise => "noise",
            Scenario::Resources => "resources",
            Scenario::DumpQubo => "dump-qubo",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ris-gain" => Scenario::RisGain,
            "taps" => Scenario::Taps,
            "tap-compensation" => Scenario::TapCompensation,
            "convergence" => Scenario::Convergence,
            "noise" => Scenario::Noise,
            "resources" => Scenario::Resources,
            "dump-qubo" => Scenario::DumpQubo,
            _ => return Err(Error::Config(format!("unknown scenario `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    Mmse,
    Mld,
    Gas,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::Mmse => "mmse",
            Detector::Mld => "mld",
            Detector::Gas => "gas",
        }
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmse" => Ok(Detector::Mmse),
            "mld" => Ok(Detector::Mld),
            "gas" => Ok(Detector::Gas),
            _ => Err(Error::Config(format!("unknown detector `{s}`"))),
        }
    }
}

/// Simulation mode for a GAS detector in the noise scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseVariant {
    Ideal,
    Depolarizing,
    Readout,
}

impl NoiseVariant {
    pub fn name(self) -> &'static str {
        match self {
            NoiseVariant::Ideal => "ideal",
            NoiseVariant::Depolarizing => "depolarizing",
            NoiseVariant::Readout => "readout",
        }
    }

    /// Noise settings for this variant, taking probabilities from `base`.
    pub fn spec(self, base: &NoiseSpec) -> NoiseSpec {
        match self {
            NoiseVariant::Ideal => NoiseSpec {
                depolarizing: false,
                readout_enabled: false,
                ..*base
            },
            NoiseVariant::Depolarizing => NoiseSpec {
                depolarizing: true,
                readout_enabled: false,
                ..*base
            },
            NoiseVariant::Readout => NoiseSpec {
                depolarizing: false,
                readout_enabled: true,
                ..*base
            },
        }
    }
}

impl FromStr for NoiseVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(NoiseVariant::Ideal),
            "depolarizing" => Ok(NoiseVariant::Depolarizing),
            "readout" => Ok(NoiseVariant::Readout),
            _ => Err(Error::Config(format!("unknown noise variant `{s}`"))),
        }
    }
}

/// Splits a cascaded length `L` into user- and BS-side link lengths with
/// `L_UI + L_IB − 1 = L`: equal halves for odd `L`, one extra user-side tap
/// for even `L`.
pub fn split_taps(l: usize) -> (usize, usize) {
    if l % 2 == 1 {
        (l.div_ceil(2), l.div_ceil(2))
    } else {
        (l / 2 + 1, l / 2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub l_ui: usize,
    pub l_ib: usize,
    pub elements: usize,
    pub snr_db: Vec<f64>,
    pub blocks: usize,
    pub strategy: TapStrategy,
    pub detectors: Vec<Detector>,
    pub gas: GasConfig,
    /// Noise applied to GAS detectors outside the noise scenario, and the
    /// probabilities used by its variants.
    pub noise: NoiseSpec,
    pub base_seed: u64,
    /// Cyclic-prefix length; `None` uses `L − 1`.
    pub lcp: Option<usize>,
    /// RIS sizes swept by `ris-gain`.
    pub elements_grid: Vec<usize>,
    /// Cascaded lengths swept by `taps`, split with [`split_taps`].
    pub taps_grid: Vec<usize>,
    /// Strategies compared by `tap-compensation`.
    pub strategies: Vec<TapStrategy>,
    /// Block lengths used by `convergence` and `resources`.
    pub n_grid: Vec<usize>,
    /// Fixed iteration count for `convergence`.
    pub iterations: usize,
    /// GAS variants run by `noise`.
    pub noise_variants: Vec<NoiseVariant>,
    /// Trial index whose block `dump-qubo` writes.
    pub trial: usize,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `scenario`.
    pub fn defaults(scenario: Scenario) -> Self {
        let mut cfg = Self {
            scenario,
            n: 3,
            l_ui: 2,
            l_ib: 2,
            elements: 4,
            snr_db: vec![-10.0, -5.0, 0.0, 5.0],
            blocks: 10_000,
            strategy: TapStrategy::Central,
            detectors: vec![Detector::Mmse, Detector::Mld, Detector::Gas],
            gas: GasConfig::default(),
            noise: NoiseSpec::ideal(),
            base_seed: 1,
            lcp: None,
            elements_grid: vec![2, 4, 8],
            taps_grid: vec![2, 4, 6],
            strategies: vec![TapStrategy::First, TapStrategy::Central, TapStrategy::Max],
            n_grid: vec![4, 6],
            iterations: 40,
            noise_variants: vec![
                NoiseVariant::Ideal,
                NoiseVariant::Depolarizing,
                NoiseVariant::Readout,
            ],
            trial: 0,
        };
        match scenario {
            Scenario::Taps => {
                cfg.n = 6;
                cfg.snr_db = vec![-10.0, -5.0, 0.0, 5.0, 10.0];
            }
            Scenario::Convergence => {
                cfg.snr_db = vec![-5.0];
                cfg.blocks = 1_000;
            }
            Scenario::Noise => {
                cfg.blocks = 2_000;
                cfg.detectors = vec![Detector::Mmse, Detector::Gas];
            }
            Scenario::Resources => {
                cfg.snr_db = vec![0.0];
                cfg.blocks = 100;
                cfg.n_grid = vec![3, 4, 6];
                cfg.taps_grid = vec![2, 3];
            }
            Scenario::DumpQubo => cfg.snr_db = vec![0.0],
            _ => {}
        }
        cfg
    }

    /// Parses a configuration file on top of the defaults of the scenario it
    /// names (or `fallback` when it names none).
    pub fn parse(text: &str, fallback: Scenario) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let scenario = match pairs.iter().find(|(k, _, _)| k == "scenario") {
            Some((_, v, _)) => v.parse()?,
            None => fallback,
        };
        let mut cfg = Self::defaults(scenario);
        for (k, v, line) in pairs {
            cfg.set(&k, &v)
                .map_err(|e| Error::Config(format!("line {line}: {}", strip_prefix(e))))?;
        }
        Ok(cfg)
    }

    /// Sets one key. Lists are comma-separated.
    ///
    /// Keys: `scenario`, `n`, `l_ui`, `l_ib`, `taps` (cascaded length, split
    /// automatically), `elements`, `snr_db`, `blocks`, `strategy`,
    /// `detectors`, `seed`, `lcp`, `elements_grid`, `taps_grid`,
    /// `strategies`, `n_grid`, `iterations`, `noise_variants`, `trial`,
    /// `gas.lambda`, `gas.max_iterations`, `gas.patience`, `gas.init`,
    /// `gas.margin`, `gas.engine`, `noise.p1`, `noise.p2`,
    /// `noise.depolarizing`, `noise.readout`, `noise.readout_matrix`
    /// (`P(0|0),P(1|0),P(0|1),P(1|1)`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "scenario" => self.scenario = v.parse()?,
            "n" => self.n = num(key, v)?,
            "l_ui" => self.l_ui = num(key, v)?,
            "l_ib" => self.l_ib = num(key, v)?,
            "taps" => {
                let l: usize = num(key, v)?;
                if l == 0 {
                    return Err(Error::Config("taps must be at least 1".into()));
                }
                (self.l_ui, self.l_ib) = split_taps(l);
            }
            "elements" => self.elements = num(key, v)?,
            "snr_db" => self.snr_db = list(key, v)?,
            "blocks" => self.blocks = num(key, v)?,
            "strategy" => self.strategy = v.parse().map_err(config_err)?,
            "detectors" => self.detectors = list(key, v)?,
            "seed" => self.base_seed = num(key, v)?,
            "lcp" => self.lcp = if v == "auto" { None } else { Some(num(key, v)?) },
            "elements_grid" => self.elements_grid = list(key, v)?,
            "taps_grid" => self.taps_grid = list(key, v)?,
            "strategies" => {
                self.strategies = list::<TapStrategy>(key, v).map_err(config_err)?;
            }
            "n_grid" => self.n_grid = list(key, v)?,
            "iterations" => self.iterations = num(key, v)?,
            "noise_variants" => self.noise_variants = list(key, v)?,
            "trial" => self.trial = num(key, v)?,
            "gas.lambda" => self.gas.lambda_growth = num(key, v)?,
            "gas.max_iterations" => self.gas.max_iterations = num(key, v)?,
            "gas.patience" => self.gas.patience = num(key, v)?,
            "gas.init" => self.gas.init = v.parse::<InitStrategy>().map_err(config_err)?,
            "gas.margin" => self.gas.margin = num(key, v)?,
            "gas.engine" => self.gas.engine = v.parse::<Engine>().map_err(config_err)?,
            "noise.p1" => self.noise.p1 = num(key, v)?,
            "noise.p2" => self.noise.p2 = num(key, v)?,
            "noise.depolarizing" => self.noise.depolarizing = num(key, v)?,
            "noise.readout" => self.noise.readout_enabled = num(key, v)?,
            "noise.readout_matrix" => {
                let p: Vec<f64> = list(key, v)?;
                let [a, b, c, d] = p[..] else {
                    return Err(Error::Config("noise.readout_matrix needs four entries".into()));
                };
                self.noise.readout = ReadoutMatrix::from_rows([[a, b], [c, d]]).map_err(config_err)?;
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Sweep points of the BER scenarios, in output order.
    pub fn points(&self) -> Vec<Point> {
        let base = Point {
            n: self.n,
            l_ui: self.l_ui,
            l_ib: self.l_ib,
            elements: self.elements,
            strategy: self.strategy,
        };
        match self.scenario {
            Scenario::RisGain => self
                .elements_grid
                .iter()
                .map(|&r| Point { elements: r, ..base })
                .collect(),
            Scenario::Taps => self
                .taps_grid
                .iter()
                .map(|&l| {
                    let (l_ui, l_ib) = split_taps(l);
                    Point { l_ui, l_ib, ..base }
                })
                .collect(),
            Scenario::TapCompensation => self
                .strategies
                .iter()
                .map(|&s| Point { strategy: s, ..base })
                .collect(),
            Scenario::Convergence | Scenario::Resources => {
                let taps: Vec<(usize, usize)> = if self.scenario == Scenario::Resources {
                    self.taps_grid.iter().map(|&l| split_taps(l)).collect()
                } else {
                    vec![(self.l_ui, self.l_ib)]
                };
                self.n_grid
                    .iter()
                    .flat_map(|&n| {
                        taps.iter()
                            .map(move |&(l_ui, l_ib)| Point { n, l_ui, l_ib, ..base })
                    })
                    .collect()
            }
            Scenario::Noise | Scenario::DumpQubo => vec![base],
        }
    }

    /// GAS detector variants with their noise settings.
    fn gas_variants(&self) -> Vec<(String, GasConfig)> {
        let with = |noise: NoiseSpec| GasConfig { noise, ..self.gas.clone() };
        if self.scenario == Scenario::Noise {
            self.noise_variants
                .iter()
                .map(|v| (v.name().to_string(), with(v.spec(&self.noise))))
                .collect()
        } else {
            let label = match (self.noise.depolarizing, self.noise.readout_enabled) {
                (false, false) => "ideal",
                (true, false) => "depolarizing",
                (false, true) => "readout",
                (true, true) => "depolarizing+readout",
            };
            vec![(label.to_string(), with(self.noise))]
        }
    }

    /// Checks every constraint, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.blocks == 0 {
            return fail("blocks must be at least 1".into());
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return fail("snr_db must list at least one finite value".into());
        }
        let points = self.points();
        if points.is_empty() {
            return fail(format!("the {} sweep grid is empty", self.scenario.name()));
        }
        for p in &points {
            if p.n == 0 || p.l_ui == 0 || p.l_ib == 0 || p.elements == 0 {
                return fail("n, l_ui, l_ib and elements must be at least 1".into());
            }
            let l = p.taps();
            if p.n < l {
                return fail(format!(
                    "N = {} must be at least L_UI + L_IB - 1 = {l}",
                    p.n
                ));
            }
            if p.n > 16 {
                return fail(format!("N = {} exceeds the simulator limit of 16", p.n));
            }
            if let Some(lcp) = self.lcp {
                if lcp + 1 < l || lcp > p.n {
                    return fail(format!("lcp = {lcp} must lie in [L - 1, N] = [{}, {}]", l - 1, p.n));
                }
            }
        }
        let ber = matches!(
            self.scenario,
            Scenario::RisGain | Scenario::Taps | Scenario::TapCompensation | Scenario::Noise
        );
        if ber && self.detectors.is_empty() {
            return fail("at least one detector is required".into());
        }
        if self.scenario == Scenario::Noise && self.noise_variants.is_empty() {
            return fail("noise_variants must not be empty".into());
        }
        if self.scenario == Scenario::Convergence && self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        self.gas.validate()?;
        self.noise.validate().map_err(config_err)?;
        Ok(())
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(s) | Error::Parse(s) | Error::InvalidArgument(s) => s,
        e => e.to_string(),
    }
}

fn config_err(e: Error) -> Error {
    Error::Config(strip_prefix(e))
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

/// `(key, value, line)` triples of a `key = value` file.
fn parse_pairs(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
        };
        out.push((k.trim().to_string(), v.trim().to_string(), i + 1));
    }
    Ok(out)
}

/// One link geometry and RIS setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Point {
    pub n: usize,
    pub l_ui: usize,
    pub l_ib: usize,
    pub elements: usize,
    pub strategy: TapStrategy,
}

impl Point {
    /// Cascaded channel length.
    pub fn taps(&self) -> usize {
        self.l_ui + self.l_ib - 1
    }
}

/// Per-trial seed: SplitMix64 finalizer applied to
/// `base_seed + (trial + 1)·0x9E3779B97F4A7C15` (wrapping).
pub fn seed_plan(base_seed: u64, trial: u64) -> u64 {
    let mut z = base_seed.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Channel, block and unit noise of one trial.
#[derive(Debug, Clone)]
pub struct TrialDraw {
    pub seed: u64,
    pub channel: ChannelRealization,
    pub block: BpskBlock,
    pub unit_noise: Vec<num_complex::Complex64>,
}

/// Draws trial `trial` of `point`; the same `(base_seed, trial)` always
/// yields the same draw.
pub fn draw_trial(point: &Point, base_seed: u64, trial: usize) -> Result<TrialDraw> {
    let seed = seed_plan(base_seed, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = RisPaths::generate(point.elements, point.l_ui, point.l_ib, &mut rng)?;
    let h = cascade(&paths, &point.strategy.configure(&paths))?;
    let channel = ChannelRealization::new(h, point.n)?;
    let block = BpskBlock::random(point.n, &mut rng);
    let unit_noise = sc_fde::unit_noise(point.n, &mut rng);
    Ok(TrialDraw {
        seed,
        channel,
        block,
        unit_noise,
    })
}

impl TrialDraw {
    pub fn receive(&self, snr_db: f64, lcp: Option<usize>) -> Result<RxBlock> {
        let lcp = lcp.unwrap_or(self.channel.taps() - 1);
        sc_fde::transmit_with_noise(&self.block, &self.channel, snr_db, lcp, &self.unit_noise)
    }
}

/// Generator for a GAS run, salted by detector variant and SNR index.
fn gas_rng(trial_seed: u64, variant: usize, snr_index: usize) -> ChaCha8Rng {
    let salt = ((variant as u64 + 1) << 32) | snr_index as u64;
    ChaCha8Rng::seed_from_u64(seed_plan(trial_seed, salt))
}

/// What one detector saw and decided in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutcome {
    pub detector: Detector,
    pub variant: String,
    pub snr_index: usize,
    pub rx_digest: u64,
    pub bit_errors: usize,
}

/// Runs every configured detector on trial `trial` of `point`.
pub fn run_trial(cfg: &ExperimentConfig, point: &Point, trial: usize) -> Result<Vec<DetectorOutcome>> {
    run_trial_traced(cfg, point, trial, None)
}

fn run_trial_traced(
    cfg: &ExperimentConfig,
    point: &Point,
    trial: usize,
    mut trace: Option<&mut Vec<String>>,
) -> Result<Vec<DetectorOutcome>> {
    let draw = draw_trial(point, cfg.base_seed, trial)?;
    let variants = cfg.gas_variants();
    let mut out = Vec::new();
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        let rx = draw.receive(snr, cfg.lcp)?;
        let digest = rx.digest();
        for &det in &cfg.detectors {
            let mut push = |variant: &str, decided: &BpskBlock| {
                out.push(DetectorOutcome {
                    detector: det,
                    variant: variant.to_string(),
                    snr_index: si,
                    rx_digest: digest,
                    bit_errors: decided.bit_errors(&draw.block),
                })
            };
            match det {
                Detector::Mmse => push("-", &sc_fde::mmse_detect(&rx, &draw.channel)),
                Detector::Mld => push("-", &sc_fde::mld_exhaustive(&rx, &draw.channel)?),
                Detector::Gas => {
                    for (vi, (label, gcfg)) in variants.iter().enumerate() {
                        let mut rng = gas_rng(draw.seed, vi, si);
                        let res = gas::detect_traced(&rx, &draw.channel, gcfg, &mut rng)?;
                        if si == 0 && vi == 0 {
                            if let Some(t) = trace.as_deref_mut() {
                                t.extend(res.trace.csv_rows(trial));
                            }
                        }
                        push(label, &BpskBlock::from_bits(res.best_bits));
                    }
                }
            }
        }
    }
    Ok(out)
}

pub const BER_CSV_HEADER: &str =
    "scenario,detector,variant,N,L,R,strategy,snr_db,bit_errors,bits_total,ber,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct BerRow {
    pub scenario: Scenario,
    pub detector: Detector,
    pub variant: String,
    pub n: usize,
    pub l: usize,
    pub r: usize,
    pub strategy: TapStrategy,
    pub snr_db: f64,
    pub bit_errors: usize,
    pub bits_total: usize,
    pub ber: f64,
    pub seed: u64,
}

impl BerRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario.name(),
            self.detector.name(),
            self.variant,
            self.n,
            self.l,
            self.r,
            self.strategy.name(),
            self.snr_db,
            self.bit_errors,
            self.bits_total,
            self.ber,
            self.seed
        )
    }

    /// Binomial standard error of the BER estimate.
    pub fn std_error(&self) -> f64 {
        (self.ber * (1.0 - self.ber) / self.bits_total as f64).sqrt()
    }
}

/// Monte-Carlo BER for the `ris-gain`, `taps`, `tap-compensation` and
/// `noise` scenarios. Rows are ordered by point, detector variant, SNR.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<Vec<BerRow>> {
    run_scenario_traced(cfg, None)
}

/// As [`run_scenario`], also collecting GAS trace rows of the first
/// variant at the first point and first SNR.
pub fn run_scenario_traced(
    cfg: &ExperimentConfig,
    mut trace: Option<&mut Vec<String>>,
) -> Result<Vec<BerRow>> {
    cfg.validate()?;
    if !matches!(
        cfg.scenario,
        Scenario::RisGain | Scenario::Taps | Scenario::TapCompensation | Scenario::Noise
    ) {
        return Err(Error::Config(format!(
            "scenario {} does not produce BER rows",
            cfg.scenario.name()
        )));
    }
    let mut rows = Vec::new();
    for (pi, point) in cfg.points().iter().enumerate() {
        // (detector, variant) in first-seen order, errors per SNR
        let mut keys: Vec<(Detector, String)> = Vec::new();
        let mut errors: Vec<Vec<usize>> = Vec::new();
        for trial in 0..cfg.blocks {
            let t = if pi == 0 { trace.as_deref_mut() } else { None };
            for o in run_trial_traced(cfg, point, trial, t)? {
                let key = (o.detector, o.variant);
                let idx = match keys.iter().position(|k| *k == key) {
                    Some(i) => i,
                    None => {
                        keys.push(key);
                        errors.push(vec![0; cfg.snr_db.len()]);
                        keys.len() - 1
                    }
                };
                errors[idx][o.snr_index] += o.bit_errors;
            }
        }
        let bits_total = cfg.blocks * point.n;
        for ((det, variant), errs) in keys.into_iter().zip(errors) {
            for (si, &e) in errs.iter().enumerate() {
                rows.push(BerRow {
                    scenario: cfg.scenario,
                    detector: det,
                    variant: variant.clone(),
                    n: point.n,
                    l: point.taps(),
                    r: point.elements,
                    strategy: point.strategy,
                    snr_db: cfg.snr_db[si],
                    bit_errors: e,
                    bits_total,
                    ber: e as f64 / bits_total as f64,
                    seed: cfg.base_seed,
                });
            }
        }
    }
    Ok(rows)
}

pub const CONVERGENCE_CSV_HEADER: &str = "N,init,snr_db,iteration,ber,mean_energy_gap,trials";

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub init: InitStrategy,
    pub snr_db: f64,
    pub iteration: usize,
    pub ber: f64,
    /// Mean of best-so-far energy minus the exhaustive minimum.
    pub mean_energy_gap: f64,
    pub trials: usize,
}

impl ConvergenceRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.init.name(),
            self.snr_db,
            self.iteration,
            self.ber,
            self.mean_energy_gap,
            self.trials
        )
    }
}

/// BER if the search stopped after each iteration, for both
/// initializations. Runs a fixed number of iterations (no early stop);
/// iteration 0 is the initial point.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    let snr = cfg.snr_db[0];
    let iters = cfg.iterations;
    let mut rows = Vec::new();
    for point in cfg.points() {
        for (ii, init) in [InitStrategy::Mmse, InitStrategy::Random].into_iter().enumerate() {
            let gcfg = GasConfig {
                init,
                max_iterations: iters,
                patience: iters.max(1),
                noise: cfg.noise,
                ..cfg.gas.clone()
            };
            let mut errors = vec![0usize; iters + 1];
            let mut gaps = vec![0.0f64; iters + 1];
            for trial in 0..cfg.blocks {
                let draw = draw_trial(&point, cfg.base_seed, trial)?;
                let rx = draw.receive(snr, cfg.lcp)?;
                let p = qubo::build_qubo(draw.channel.lambda(), &rx.y_f)?;
                let e_min = qubo::energy_bounds(&p, qubo::BoundsMode::Exact)?.e_min;
                let mut rng = gas_rng(draw.seed, ii, 0);
                let res = gas::detect_traced(&rx, &draw.channel, &gcfg, &mut rng)?;
                for i in 0..=iters {
                    let best: Bits = res.trace.best_after(i).to_vec();
                    errors[i] += BpskBlock::from_bits(best.clone()).bit_errors(&draw.block);
                    gaps[i] += qubo::energy(&p, &best)? - e_min;
                }
            }
            let bits = (cfg.blocks * point.n) as f64;
            for i in 0..=iters {
                rows.push(ConvergenceRow {
                    n: point.n,
                    init,
                    snr_db: snr,
                    iteration: i,
                    ber: errors[i] as f64 / bits,
                    mean_energy_gap: gaps[i] / cfg.blocks as f64,
                    trials: cfg.blocks,
                });
            }
        }
    }
    Ok(rows)
}

/// First iteration whose BER is within 5 % of the final BER.
pub fn iterations_to_floor(bers: &[f64]) -> usize {
    let Some(&last) = bers.last() else {
        return 0;
    };
    bers.iter()
        .position(|&b| b <= 1.05 * last)
        .unwrap_or(bers.len() - 1)
}

pub const RESOURCES_CSV_HEADER: &str = "n,m,L,h,rz,crz,ccrz,iqft,walk_h,walk_rz,walk_crz,walk_ccrz,walk_iqft,classical,grover_calls,expected_grover,trial";

/// One row per trial: the analytic budget for the instance's register
/// width, the gate walk of its first state preparation and the query
/// counts of an ideal GAS run.
pub fn run_resources(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    let snr = cfg.snr_db[0];
    let mut rows = Vec::new();
    for point in cfg.points() {
        for trial in 0..cfg.blocks {
            let draw = draw_trial(&point, cfg.base_seed, trial)?;
            let rx = draw.receive(snr, cfg.lcp)?;
            let p = qubo::build_qubo(draw.channel.lambda(), &rx.y_f)?;
            let m = gas::value_width(&p, cfg.gas.margin)?;
            let (b0, y0) = gas::mmse_threshold(&rx, &draw.channel);
            let budget = resources::budget_state_prep(point.n, m, point.taps())?;
            let walked = resources::walk(&gas::build_state_prep(&p, y0, m)?);
            let mut rng = gas_rng(draw.seed, 0, 0);
            let gcfg = GasConfig {
                noise: NoiseSpec::ideal(),
                ..cfg.gas.clone()
            };
            let res = match gcfg.init {
                InitStrategy::Mmse => gas::run_gas_from(&p, &gcfg, b0, &mut rng)?,
                InitStrategy::Random => gas::run_gas(&p, &gcfg, &mut rng)?,
            };
            let q = resources::query_stats(&res.trace);
            rows.push(format!(
                "{},{},{},{},{},{},{},{},{},{trial}",
                budget.csv_row(point.n, m, point.taps()),
                walked.h,
                walked.rz,
                walked.crz,
                walked.ccrz,
                walked.iqft_blocks,
                q.classical,
                q.grover_calls,
                q.expected_grover
            ));
        }
    }
    Ok(rows)
}

/// QUBO text of trial `cfg.trial` at the first SNR.
pub fn dump_qubo(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let point = cfg.points()[0];
    let draw = draw_trial(&point, cfg.base_seed, cfg.trial)?;
    let rx = draw.receive(cfg.snr_db[0], cfg.lcp)?;
    let p = qubo::build_qubo(draw.channel.lambda(), &rx.y_f)?;
    let bits: String = draw
        .block
        .bits()
        .iter()
        .map(|&b| if b { '1' } else { '0' })
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# N={} L={} R={} snr_db={} trial={} transmitted={bits}",
        point.n,
        point.taps(),
        point.elements,
        cfg.snr_db[0],
        cfg.trial
    );
    s.push_str(&qubo::dump(&p));
    Ok(s)
}

/// Full CSV (or QUBO text) output of `cfg`'s scenario.
pub fn render(cfg: &ExperimentConfig) -> Result<String> {
    let mut out = String::new();
    let mut emit = |header: &str, rows: Vec<String>| {
        out.push_str(header);
        out.push('\n');
        for r in rows {
            out.push_str(&r);
            out.push('\n');
        }
    };
    match cfg.scenario {
        Scenario::Convergence => emit(
            CONVERGENCE_CSV_HEADER,
            run_convergence(cfg)?.iter().map(ConvergenceRow::csv).collect(),
        ),
        Scenario::Resources => emit(RESOURCES_CSV_HEADER, run_resources(cfg)?),
        Scenario::DumpQubo => return dump_qubo(cfg),
        _ => emit(BER_CSV_HEADER, run_scenario(cfg)?.iter().map(BerRow::csv).collect()),
    }
    Ok(out)
}
