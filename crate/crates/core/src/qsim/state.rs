use std::fmt::Write as _;

use num_complex::Complex64;

use super::fourier;
use crate::error::{invalid, Result};

/// Elementary and block-level gates.
///
/// Phase gates follow `RZ(θ) = diag(1, e^{iθ})`; controlled variants apply
/// the phase when every control and the target are 1. Block gates act on a
/// contiguous register starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Rz { target: usize, theta: f64 },
    Crz { control: usize, target: usize, theta: f64 },
    Mcrz { controls: Vec<usize>, target: usize, theta: f64 },
    Cnot { control: usize, target: usize },
    Swap(usize, usize),
    /// Inverse QFT: `|k⟩ ↦ 2^{−len/2} Σ_v e^{−2πi vk/2^len} |v⟩`.
    Iqft { start: usize, len: usize },
    Qft { start: usize, len: usize },
    /// `2|ψ₀⟩⟨ψ₀| − I` with `ψ₀` uniform over qubits `0..key` and `|0⟩` on
    /// the `anchor` qubits directly above; higher qubits are spectators.
    Diffusion { key: usize, anchor: usize },
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Y(_) => "y",
            Gate::Z(_) => "z",
            Gate::Rz { .. } => "rz",
            Gate::Crz { .. } => "crz",
            Gate::Mcrz { .. } => "mcrz",
            Gate::Cnot { .. } => "cnot",
            Gate::Swap(..) => "swap",
            Gate::Iqft { .. } => "iqft",
            Gate::Qft { .. } => "qft",
            Gate::Diffusion { .. } => "diffusion",
        }
    }

    pub fn controls(&self) -> Vec<usize> {
        match self {
            Gate::Crz { control, .. } | Gate::Cnot { control, .. } => vec![*control],
            Gate::Mcrz { controls, .. } => controls.clone(),
            _ => Vec::new(),
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => vec![*q],
            Gate::Rz { target, .. }
            | Gate::Crz { target, .. }
            | Gate::Mcrz { target, .. }
            | Gate::Cnot { target, .. } => vec![*target],
            Gate::Swap(a, b) => vec![*a, *b],
            Gate::Iqft { start, len } | Gate::Qft { start, len } => (*start..start + len).collect(),
            Gate::Diffusion { key, anchor } => (0..key + anchor).collect(),
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            Gate::Rz { theta, .. } | Gate::Crz { theta, .. } | Gate::Mcrz { theta, .. } => {
                Some(*theta)
            }
            Gate::Z(_) => Some(std::f64::consts::PI),
            _ => None,
        }
    }

    /// Controls followed by targets.
    pub fn qubits(&self) -> Vec<usize> {
        let mut q = self.controls();
        q.extend(self.targets());
        q
    }

    pub fn is_block(&self) -> bool {
        matches!(self, Gate::Iqft { .. } | Gate::Qft { .. } | Gate::Diffusion { .. })
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Rz { target, theta } => Gate::Rz {
                target: *target,
                theta: -theta,
            },
            Gate::Crz {
                control,
                target,
                theta,
            } => Gate::Crz {
                control: *control,
                target: *target,
                theta: -theta,
            },
            Gate::Mcrz {
                controls,
                target,
                theta,
            } => Gate::Mcrz {
                controls: controls.clone(),
                target: *target,
                theta: -theta,
            },
            Gate::Iqft { start, len } => Gate::Qft {
                start: *start,
                len: *len,
            },
            Gate::Qft { start, len } => Gate::Iqft {
                start: *start,
                len: *len,
            },
            g => g.clone(),
        }
    }

    /// Decomposes block gates into one- and two-qubit gates plus one
    /// multi-controlled phase. The diffusion expansion equals the block up
    /// to a global phase of −1.
    pub fn expand(&self) -> Vec<Gate> {
        match self {
            Gate::Qft { start, len } => fourier::qft_gates(*start, *len),
            Gate::Iqft { start, len } => fourier::qft_gates(*start, *len)
                .iter()
                .rev()
                .map(Gate::inverse)
                .collect(),
            Gate::Diffusion { key, anchor } => {
                let total = key + anchor;
                let mut g: Vec<Gate> = (0..*key).map(Gate::H).collect();
                g.extend((0..total).map(Gate::X));
                g.push(Gate::Mcrz {
                    controls: (0..total - 1).collect(),
                    target: total - 1,
                    theta: std::f64::consts::PI,
                });
                g.extend((0..total).map(Gate::X));
                g.extend((0..*key).map(Gate::H));
                g
            }
            g => vec![g.clone()],
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let q = self.qubits();
        if q.is_empty() {
            return invalid(format!("{} acts on no qubits", self.name()));
        }
        if let Some(&bad) = q.iter().find(|&&i| i >= n_qubits) {
            return invalid(format!(
                "{} on qubit {bad} of a {n_qubits}-qubit state",
                self.name()
            ));
        }
        let mut sorted = q.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != q.len() {
            return invalid(format!("{} repeats a qubit", self.name()));
        }
        Ok(())
    }
}

/// Ordered gate list over a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(n_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.n_qubits)?;
        self.gates.push(g);
        Ok(())
    }

    /// Appends `other`, which must act on the same number of qubits.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return invalid("appending circuits of different widths");
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Every block gate replaced by its elementary decomposition.
    pub fn expand(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().flat_map(Gate::expand).collect(),
        }
    }

    /// One gate per line: `kind controls targets theta`, with `-` for an
    /// empty list or a missing angle.
    pub fn netlist(&self) -> String {
        let list = |v: Vec<usize>| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        let mut s = String::new();
        for g in &self.gates {
            let theta = g
                .theta()
                .filter(|_| !matches!(g, Gate::Z(_)))
                .map_or("-".to_string(), |t| t.to_string());
            let _ = writeln!(
                s,
                "{} {} {} {}",
                g.name(),
                list(g.controls()),
                list(g.targets()),
                theta
            );
        }
        s
    }
}

/// Pure statevector over `n_qubits` qubits; qubit 0 is the least
/// significant bit of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// Largest supported register.
pub const MAX_QUBITS: usize = 26;

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(crate::Error::ResourceLimit(format!(
                "{n_qubits} qubits (limit {MAX_QUBITS})"
            )));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return invalid(format!("basis index {index} out of range"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return invalid("amplitude count is not a power of two");
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal distribution of the `len` qubits starting at `start`.
    pub fn register_probabilities(&self, start: usize, len: usize) -> Vec<f64> {
        let mask = (1usize << len) - 1;
        let mut out = vec![0.0; 1 << len];
        for (i, a) in self.amps.iter().enumerate() {
            out[(i >> start) & mask] += a.norm_sqr();
        }
        out
    }

    pub fn apply(&mut self, g: &Gate) -> Result<()> {
        g.validate(self.n_qubits)?;
        self.apply_unchecked(g);
        Ok(())
    }

    pub fn apply_circuit(&mut self, c: &Circuit) -> Result<()> {
        if c.n_qubits() != self.n_qubits {
            return invalid(format!(
                "{}-qubit circuit on a {}-qubit state",
                c.n_qubits(),
                self.n_qubits
            ));
        }
        for g in c.gates() {
            self.apply_unchecked(g);
        }
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, g: &Gate) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match g {
            Gate::H(q) => self.apply_1q(*q, |a, b| ((a + b) * s, (a - b) * s)),
            Gate::X(q) => self.apply_1q(*q, |a, b| (b, a)),
            Gate::Y(q) => {
                let i = Complex64::new(0.0, 1.0);
                self.apply_1q(*q, |a, b| (-i * b, i * a))
            }
            Gate::Z(q) => self.phase_on(&[*q], Complex64::new(-1.0, 0.0)),
            Gate::Rz { target, theta } => self.phase_on(&[*target], Complex64::from_polar(1.0, *theta)),
            Gate::Crz {
                control,
                target,
                theta,
            } => self.phase_on(&[*control, *target], Complex64::from_polar(1.0, *theta)),
            Gate::Mcrz {
                controls,
                target,
                theta,
            } => {
                let mut q = controls.clone();
                q.push(*target);
                self.phase_on(&q, Complex64::from_polar(1.0, *theta))
            }
            Gate::Cnot { control, target } => {
                let (c, t) = (*control, *target);
                for_each_index(self.n_qubits, &[c, t], 1 << c, |i| {
                    self.amps.swap(i, i | (1 << t));
                });
            }
            Gate::Swap(a, b) => {
                let (a, b) = (*a, *b);
                for_each_index(self.n_qubits, &[a, b], 1 << a, |i| {
                    self.amps.swap(i, (i & !(1 << a)) | (1 << b));
                });
            }
            Gate::Iqft { start, len } => fourier::transform_register(&mut self.amps, *start, *len, true),
            Gate::Qft { start, len } => fourier::transform_register(&mut self.amps, *start, *len, false),
            Gate::Diffusion { key, anchor } => self.reflect(*key, *anchor),
        }
    }

    fn apply_1q(&mut self, q: usize, f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64)) {
        let bit = 1usize << q;
        for_each_index(self.n_qubits, &[q], 0, |i| {
            let (a, b) = f(self.amps[i], self.amps[i | bit]);
            self.amps[i] = a;
            self.amps[i | bit] = b;
        });
    }

    /// Multiplies amplitudes whose listed qubits are all 1 by `phase`.
    fn phase_on(&mut self, qubits: &[usize], phase: Complex64) {
        let mask = qubits.iter().fold(0usize, |m, q| m | (1 << q));
        for_each_index(self.n_qubits, qubits, mask, |i| {
            self.amps[i] *= phase;
        });
    }

    fn reflect(&mut self, key: usize, anchor: usize) {
        let low = key + anchor;
        let kdim = 1usize << key;
        let block = 1usize << low;
        let scale = 2.0 / kdim as f64;
        for chunk in self.amps.chunks_mut(block) {
            // anchor = 0 slice is the first kdim entries of each chunk
            let sum: Complex64 = chunk[..kdim].iter().sum();
            let add = sum * scale;
            for a in chunk.iter_mut() {
                *a = -*a;
            }
            for a in &mut chunk[..kdim] {
                *a += add;
            }
        }
    }
}

/// Visits every basis index whose bits at `fixed` equal those of `pattern`.
fn for_each_index(n_qubits: usize, fixed: &[usize], pattern: usize, mut f: impl FnMut(usize)) {
    let mut positions: Vec<usize> = fixed.to_vec();
    positions.sort_unstable();
    let free = n_qubits - positions.len();
    for j in 0..1usize << free {
        let mut i = j;
        for &p in &positions {
            let low = i & ((1 << p) - 1);
            i = ((i >> p) << (p + 1)) | low;
        }
        f(i | pattern);
    }
}

/// Applies `g` to a copy of `state`.
pub fn apply_gate(state: &Statevector, g: &Gate) -> Result<Statevector> {
    let mut s = state.clone();
    s.apply(g)?;
    Ok(s)
}
