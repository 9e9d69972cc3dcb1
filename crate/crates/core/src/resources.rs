//! Analytic resource counts for the search circuits and query bookkeeping.
//!
//! Counts are at block level: an inverse QFT is one block and
//! multi-controlled rotations are not decomposed.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::gas::GasTrace;
use crate::qsim::{Circuit, Gate};

/// Gate counts of one state-preparation circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GateBudget {
    pub h: usize,
    pub rz: usize,
    pub crz: usize,
    /// Doubly-controlled rotations.
    pub ccrz: usize,
    /// Rotations with three or more controls.
    pub higher_controlled: usize,
    pub iqft_blocks: usize,
}

pub const BUDGET_CSV_HEADER: &str = "n,m,L,h,rz,crz,ccrz,iqft";
pub const QUERY_CSV_HEADER: &str = "classical,grover_calls,expected_grover";

impl GateBudget {
    pub fn csv_row(&self, n: usize, m: usize, taps: usize) -> String {
        format!(
            "{n},{m},{taps},{},{},{},{},{}",
            self.h, self.rz, self.crz, self.ccrz, self.iqft_blocks
        )
    }

    pub fn total(&self) -> usize {
        self.h + self.rz + self.crz + self.ccrz + self.higher_controlled + self.iqft_blocks
    }

    fn scaled(&self, k: usize) -> GateBudget {
        GateBudget {
            h: self.h * k,
            rz: self.rz * k,
            crz: self.crz * k,
            ccrz: self.ccrz * k,
            higher_controlled: self.higher_controlled * k,
            iqft_blocks: self.iqft_blocks * k,
        }
    }

    /// Componentwise `self ≤ other`.
    pub fn within(&self, other: &GateBudget) -> bool {
        self.h <= other.h
            && self.rz <= other.rz
            && self.crz <= other.crz
            && self.ccrz <= other.ccrz
            && self.higher_controlled <= other.higher_controlled
            && self.iqft_blocks <= other.iqft_blocks
    }
}

/// Structural budget for `n` key qubits, `m` value qubits and an `taps`-tap
/// channel: each bit couples to at most `taps − 1` neighbours.
pub fn budget_state_prep(n: usize, m: usize, taps: usize) -> Result<GateBudget> {
    if n == 0 || m == 0 || taps == 0 {
        return invalid("n, m and L must all be at least 1");
    }
    Ok(GateBudget {
        h: n + m,
        rz: m,
        crz: n * m,
        ccrz: n * (taps - 1) * m,
        higher_controlled: 0,
        iqft_blocks: 1,
    })
}

/// Counts the gates of an emitted circuit by kind.
pub fn walk(circuit: &Circuit) -> GateBudget {
    let mut b = GateBudget::default();
    for g in circuit.gates() {
        match g {
            Gate::H(_) => b.h += 1,
            Gate::Rz { .. } => b.rz += 1,
            Gate::Crz { .. } => b.crz += 1,
            Gate::Mcrz { controls, .. } => match controls.len() {
                0 => b.rz += 1,
                1 => b.crz += 1,
                2 => b.ccrz += 1,
                _ => b.higher_controlled += 1,
            },
            Gate::Iqft { .. } => b.iqft_blocks += 1,
            _ => {}
        }
    }
    b
}

/// Block totals for one search iteration with `l` Grover steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationCost {
    pub state_prep_blocks: usize,
    pub oracle_z: usize,
    pub diffusion_blocks: usize,
    /// State-preparation gates summed over all blocks.
    pub gates: GateBudget,
}

pub fn iteration_cost(l: usize, budget: &GateBudget) -> IterationCost {
    let blocks = 2 * l + 1;
    IterationCost {
        state_prep_blocks: blocks,
        oracle_z: l,
        diffusion_blocks: l,
        gates: budget.scaled(blocks),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryStats {
    pub classical: usize,
    pub grover_calls: usize,
    /// `Σ ⌈k_i − 1⌉ / 2`, the mean of uniform draws from `{0, …, ⌈k_i − 1⌉}`.
    pub expected_grover: f64,
}

impl QueryStats {
    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.classical, self.grover_calls, self.expected_grover)
    }
}

pub fn query_stats(trace: &GasTrace) -> QueryStats {
    QueryStats {
        classical: trace.records.len() + 1,
        grover_calls: trace.records.iter().map(|r| r.l).sum(),
        expected_grover: trace
            .records
            .iter()
            .map(|r| (r.k - 1.0).ceil().max(0.0) / 2.0)
            .sum(),
    }
}

/// `⌊(π/4)·√(S/M)⌋` Grover iterations for `marked` solutions among `size`.
pub fn grover_optimal(size: u64, marked: u64) -> Result<u64> {
    if marked == 0 {
        return invalid("number of marked states must be positive");
    }
    if marked > size {
        return invalid("more marked states than candidates");
    }
    Ok((PI / 4.0 * (size as f64 / marked as f64).sqrt()).floor() as u64)
}
