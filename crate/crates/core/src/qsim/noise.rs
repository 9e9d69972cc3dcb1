use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::state::{Circuit, Gate, Statevector};
use crate::error::{invalid, Result};

/// Conditional readout probabilities, rows indexed by the true bit:
/// `rows[t][r] = P(read r | true t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutMatrix {
    rows: [[f64; 2]; 2],
}

impl ReadoutMatrix {
    pub fn from_rows(rows: [[f64; 2]; 2]) -> Result<Self> {
        for (t, row) in rows.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return invalid(format!("readout row for true bit {t} is not a distribution"));
            }
        }
        Ok(Self { rows })
    }

    /// `P(1|0) = 0.05`, `P(0|1) = 0.10`.
    pub fn standard() -> Self {
        Self {
            rows: [[0.95, 0.05], [0.10, 0.90]],
        }
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.rows
    }

    /// Probability that a true bit `b` is read as `!b`.
    pub fn flip_probability(&self, b: bool) -> f64 {
        if b {
            self.rows[1][0]
        } else {
            self.rows[0][1]
        }
    }
}

impl Default for ReadoutMatrix {
    fn default() -> Self {
        Self::standard()
    }
}

/// Depolarizing and readout noise settings.
///
/// Two-qubit depolarizing noise attaches to every (control, target) pair of
/// multi-qubit gates; `p1` attaches to single-qubit gates and defaults to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub p1: f64,
    pub p2: f64,
    pub depolarizing: bool,
    pub readout: ReadoutMatrix,
    pub readout_enabled: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseSpec {
    pub fn ideal() -> Self {
        Self {
            p1: 0.0,
            p2: 0.02,
            depolarizing: false,
            readout: ReadoutMatrix::standard(),
            readout_enabled: false,
        }
    }

    pub fn depolarizing(p2: f64) -> Self {
        Self {
            p2,
            depolarizing: true,
            ..Self::ideal()
        }
    }

    pub fn readout(matrix: ReadoutMatrix) -> Self {
        Self {
            readout: matrix,
            readout_enabled: true,
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("{name} = {p} is not a probability"));
            }
        }
        ReadoutMatrix::from_rows(self.readout.rows).map(|_| ())
    }

    /// Whether any Pauli insertions can occur.
    pub fn depolarizing_active(&self) -> bool {
        self.depolarizing && (self.p1 > 0.0 || self.p2 > 0.0)
    }
}

fn pauli(kind: usize, q: usize) -> Option<Gate> {
    match kind {
        1 => Some(Gate::X(q)),
        2 => Some(Gate::Y(q)),
        3 => Some(Gate::Z(q)),
        _ => None,
    }
}

/// Qubit pairs that receive a two-qubit depolarizing event after `g`.
fn noisy_pairs(g: &Gate) -> Vec<(usize, usize)> {
    match g {
        Gate::Swap(a, b) => vec![(*a, *b)],
        Gate::Crz { control, target, .. } | Gate::Cnot { control, target } => {
            vec![(*control, *target)]
        }
        Gate::Mcrz { controls, target, .. } => controls.iter().map(|&c| (c, *target)).collect(),
        _ => Vec::new(),
    }
}

/// Samples the Pauli insertions following one elementary gate.
///
/// Single-qubit sites insert one of `{X, Y, Z}` with probability `p1`;
/// each two-qubit pair inserts one of the 15 non-identity Pauli products
/// with probability `p2`.
pub fn depolarizing_events<R: Rng + ?Sized>(
    g: &Gate,
    noise: &NoiseSpec,
    rng: &mut R,
    out: &mut Vec<Gate>,
) {
    if !noise.depolarizing {
        return;
    }
    let pairs = noisy_pairs(g);
    if pairs.is_empty() {
        if noise.p1 > 0.0 && rng.gen::<f64>() < noise.p1 {
            let q = g.targets()[0];
            out.extend(pauli(rng.gen_range(1..4), q));
        }
        return;
    }
    if noise.p2 <= 0.0 {
        return;
    }
    for (a, b) in pairs {
        if rng.gen::<f64>() < noise.p2 {
            let k = rng.gen_range(1..16);
            out.extend(pauli(k / 4, a));
            out.extend(pauli(k % 4, b));
        }
    }
}

/// One stochastic trajectory of `circuit` under depolarizing noise, with
/// block gates expanded so every elementary site can fail.
pub fn inject_depolarizing<R: Rng + ?Sized>(
    circuit: &Circuit,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Circuit {
    if !noise.depolarizing_active() {
        return circuit.clone();
    }
    let mut gates = Vec::with_capacity(circuit.len());
    for g in circuit.expand().gates() {
        gates.push(g.clone());
        depolarizing_events(g, noise, rng, &mut gates);
    }
    Circuit::from_gates(circuit.n_qubits(), gates).expect("insertions reuse valid qubits")
}

/// Applies `circuit`, sampling Pauli insertions on the fly. Equivalent in
/// distribution to applying [`inject_depolarizing`]'s output.
pub fn apply_noisy<R: Rng + ?Sized>(
    state: &mut Statevector,
    circuit: &Circuit,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<()> {
    if !noise.depolarizing_active() {
        return state.apply_circuit(circuit);
    }
    if circuit.n_qubits() != state.n_qubits() {
        return invalid("circuit and state widths differ");
    }
    let mut events = Vec::new();
    for g in circuit.gates() {
        for e in g.expand() {
            state.apply_unchecked(&e);
            events.clear();
            depolarizing_events(&e, noise, rng, &mut events);
            for p in &events {
                state.apply_unchecked(p);
            }
        }
    }
    Ok(())
}

/// Flips each of the low `len` bits of `value` per the readout matrix.
pub fn apply_readout<R: Rng + ?Sized>(
    value: usize,
    len: usize,
    matrix: &ReadoutMatrix,
    rng: &mut R,
) -> usize {
    let mut v = value;
    for j in 0..len {
        let b = (value >> j) & 1 == 1;
        if rng.gen::<f64>() < matrix.flip_probability(b) {
            v ^= 1 << j;
        }
    }
    v
}

/// Samples `shots` outcomes of the register `start..start + len`.
pub fn measure_register<R: Rng + ?Sized>(
    state: &Statevector,
    start: usize,
    len: usize,
    shots: usize,
    rng: &mut R,
    noise: &NoiseSpec,
) -> Result<Vec<usize>> {
    if shots == 0 {
        return invalid("at least one shot required");
    }
    if len == 0 || start + len > state.n_qubits() {
        return invalid("measured register outside the state");
    }
    let probs = state.register_probabilities(start, len);
    let dist = WeightedIndex::new(&probs).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    Ok((0..shots)
        .map(|_| {
            let v = dist.sample(rng);
            if noise.readout_enabled {
                apply_readout(v, len, &noise.readout, rng)
            } else {
                v
            }
        })
        .collect())
}

/// Samples `shots` outcomes of every qubit.
pub fn measure<R: Rng + ?Sized>(
    state: &Statevector,
    shots: usize,
    rng: &mut R,
    noise: &NoiseSpec,
) -> Result<Vec<usize>> {
    measure_register(state, 0, state.n_qubits(), shots, rng, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn within_3sigma(count: usize, total: usize, p: f64) -> bool {
        let mean = total as f64 * p;
        let sd = (total as f64 * p * (1.0 - p)).sqrt();
        (count as f64 - mean).abs() <= 3.0 * sd
    }

    #[test]
    fn basis_state_measures_deterministically() {
        let s = Statevector::basis(3, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shots = measure(&s, 100, &mut rng, &NoiseSpec::ideal()).unwrap();
        assert!(shots.iter().all(|&v| v == 5));
        assert_eq!(measure_register(&s, 1, 2, 3, &mut rng, &NoiseSpec::ideal()).unwrap(), vec![2; 3]);
    }

    #[test]
    fn readout_flip_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = NoiseSpec::readout(ReadoutMatrix::standard());
        let shots = 100_000;
        let zero = measure(&Statevector::zero(1).unwrap(), shots, &mut rng, &noise).unwrap();
        assert!(within_3sigma(zero.iter().filter(|&&v| v == 1).count(), shots, 0.05));
        let one = measure(&Statevector::basis(1, 1).unwrap(), shots, &mut rng, &noise).unwrap();
        assert!(within_3sigma(one.iter().filter(|&&v| v == 0).count(), shots, 0.10));
    }

    #[test]
    fn uniform_two_qubit_frequencies() {
        let mut s = Statevector::zero(2).unwrap();
        s.apply(&Gate::H(0)).unwrap();
        s.apply(&Gate::H(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shots = measure(&s, 100_000, &mut rng, &NoiseSpec::ideal()).unwrap();
        for v in 0..4 {
            assert!(within_3sigma(shots.iter().filter(|&&x| x == v).count(), 100_000, 0.25));
        }
    }

    #[test]
    fn readout_matrix_validation() {
        assert!(ReadoutMatrix::from_rows([[0.95, 0.05], [0.10, 0.90]]).is_ok());
        // column-stochastic reading of the same numbers is rejected
        assert!(ReadoutMatrix::from_rows([[0.95, 0.10], [0.05, 0.90]]).is_err());
        let mut n = NoiseSpec::ideal();
        n.p2 = 1.5;
        assert!(n.validate().is_err());
    }

    #[test]
    fn zero_probability_leaves_circuit_unchanged() {
        let c = Circuit::from_gates(
            3,
            vec![Gate::H(0), Gate::Cnot { control: 0, target: 1 }, Gate::Iqft { start: 0, len: 3 }],
        )
        .unwrap();
        let mut noise = NoiseSpec::depolarizing(0.0);
        noise.p1 = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(inject_depolarizing(&c, &noise, &mut rng), c);
    }

    #[test]
    fn single_qubit_paulis_are_uniform() {
        let c = Circuit::from_gates(1, vec![Gate::H(0)]).unwrap();
        let mut noise = NoiseSpec::depolarizing(0.0);
        noise.p1 = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..trials {
            let t = inject_depolarizing(&c, &noise, &mut rng);
            assert_eq!(t.len(), 2);
            counts[match t.gates()[1] {
                Gate::X(_) => 0,
                Gate::Y(_) => 1,
                Gate::Z(_) => 2,
                ref g => panic!("unexpected {g:?}"),
            }] += 1;
        }
        for c in counts {
            assert!(within_3sigma(c, trials, 1.0 / 3.0), "{counts:?}");
        }
    }

    #[test]
    fn two_qubit_paulis_are_uniform() {
        let c = Circuit::from_gates(2, vec![Gate::Cnot { control: 0, target: 1 }]).unwrap();
        let noise = NoiseSpec::depolarizing(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let trials = 100_000;
        let mut counts = [0usize; 16];
        for _ in 0..trials {
            let t = inject_depolarizing(&c, &noise, &mut rng);
            let mut pa = [0usize; 2];
            for g in &t.gates()[1..] {
                let (k, q) = match g {
                    Gate::X(q) => (1, *q),
                    Gate::Y(q) => (2, *q),
                    Gate::Z(q) => (3, *q),
                    g => panic!("unexpected {g:?}"),
                };
                pa[q] = k;
            }
            counts[pa[0] * 4 + pa[1]] += 1;
        }
        assert_eq!(counts[0], 0);
        for c in &counts[1..] {
            assert!(within_3sigma(*c, trials, 1.0 / 15.0), "{counts:?}");
        }
    }

    #[test]
    fn bloch_vector_shrinks_as_depolarizing_channel() {
        let p = 0.3;
        let site = Circuit::from_gates(1, vec![Gate::Rz { target: 0, theta: 0.0 }]).unwrap();
        let mut noise = NoiseSpec::depolarizing(0.0);
        noise.p1 = p;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 100_000;
        let mut x_expect = 0.0;
        for _ in 0..trials {
            let mut s = Statevector::zero(1).unwrap();
            s.apply(&Gate::H(0)).unwrap();
            apply_noisy(&mut s, &site, &noise, &mut rng).unwrap();
            let a = s.amplitudes();
            x_expect += 2.0 * (a[0].conj() * a[1]).re;
        }
        let x = x_expect / trials as f64;
        let analytic = 1.0 - 4.0 * p / 3.0;
        assert!((x - analytic).abs() < 0.02 * analytic, "{x} vs {analytic}");
    }

    #[test]
    fn trajectories_converge_to_channel_distribution() {
        let p = 0.3;
        let circuit = Circuit::from_gates(
            2,
            vec![Gate::H(0), Gate::Cnot { control: 0, target: 1 }, Gate::H(0), Gate::H(1)],
        )
        .unwrap();
        // exact channel: mix over no-error and all 15 Pauli pairs after the CNOT
        let run = |extra: &[Gate]| {
            let mut s = Statevector::zero(2).unwrap();
            s.apply(&Gate::H(0)).unwrap();
            s.apply(&Gate::Cnot { control: 0, target: 1 }).unwrap();
            for g in extra {
                s.apply(g).unwrap();
            }
            s.apply(&Gate::H(0)).unwrap();
            s.apply(&Gate::H(1)).unwrap();
            s.probabilities()
        };
        let mut exact: Vec<f64> = run(&[]).iter().map(|v| v * (1.0 - p)).collect();
        for k in 1..16 {
            let extra: Vec<Gate> = pauli(k / 4, 0).into_iter().chain(pauli(k % 4, 1)).collect();
            for (e, v) in exact.iter_mut().zip(run(&extra)) {
                *e += p / 15.0 * v;
            }
        }
        let noise = NoiseSpec::depolarizing(p);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let shots = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..shots {
            let mut s = Statevector::zero(2).unwrap();
            apply_noisy(&mut s, &circuit, &noise, &mut rng).unwrap();
            counts[measure(&s, 1, &mut rng, &noise).unwrap()[0]] += 1;
        }
        let tv: f64 = 0.5
            * counts
                .iter()
                .zip(&exact)
                .map(|(&c, e)| (c as f64 / shots as f64 - e).abs())
                .sum::<f64>();
        assert!(tv < 0.02, "total variation {tv}");
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let circuit = Circuit::from_gates(
            3,
            vec![Gate::H(0), Gate::Mcrz { controls: vec![0, 1], target: 2, theta: 1.0 }, Gate::Iqft { start: 0, len: 3 }],
        )
        .unwrap();
        let mut noise = NoiseSpec::depolarizing(0.2);
        noise.readout_enabled = true;
        let once = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::new();
            for _ in 0..50 {
                let mut s = Statevector::zero(3).unwrap();
                apply_noisy(&mut s, &circuit, &noise, &mut rng).unwrap();
                out.extend(measure(&s, 2, &mut rng, &noise).unwrap());
            }
            out
        };
        assert_eq!(once(9), once(9));
    }
}
