//! Gate-level statevector simulation with depolarizing and readout noise.
//!
//! Qubit 0 is the least significant bit of a basis index. Registers are
//! contiguous qubit ranges; a register value is read with its lowest qubit
//! as the least significant bit.

mod fourier;
mod noise;
mod state;

pub use fourier::{fejer_profile, iqft, qft};
pub use noise::{
    apply_noisy, apply_readout, depolarizing_events, inject_depolarizing, measure,
    measure_register, NoiseSpec, ReadoutMatrix,
};
pub use state::{apply_gate, Circuit, Gate, Statevector, MAX_QUBITS};
