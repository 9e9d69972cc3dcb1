//! Hybrid quantum–classical detection for RIS-assisted single-carrier
//! frequency-domain equalization (SC-FDE) links.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: Rayleigh multipath links, RIS phase configuration and the
//!   cascaded end-to-end channel.
//! - [`sc_fde`]: cyclic-prefix block transmission, MMSE equalization and the
//!   exhaustive maximum-likelihood baseline.
//! - [`qubo`]: reduction of the frequency-domain ML metric to a QUBO.
//! - [`qsim`]: a gate-level statevector simulator with depolarizing and
//!   readout noise.
//! - [`gas`]: Grover adaptive search circuits and the adaptive threshold loop.
//! - [`resources`]: analytic gate budgets and query statistics.
//! - [`experiment`]: Monte-Carlo harness, configuration files and CSV output
//!   used by the `scfde-gas` binary.

pub mod channel;
pub mod dft;
mod error;
pub mod experiment;
pub mod gas;
pub mod qsim;
pub mod qubo;
pub mod resources;
pub mod sc_fde;

pub use error::{Error, Result};

/// Binary vector used for key-register bitstrings and BPSK bit blocks.
///
/// Bit `i` corresponds to key qubit `i`, which is the `i`-th least
/// significant bit of the basis-state index.
pub type Bits = Vec<bool>;

/// Converts a basis-state index into `n` bits, least significant first.
pub fn bits_from_index(index: usize, n: usize) -> Bits {
    (0..n).map(|i| (index >> i) & 1 == 1).collect()
}

/// Inverse of [`bits_from_index`].
pub fn index_from_bits(bits: &[bool]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (usize::from(b) << i))
}
