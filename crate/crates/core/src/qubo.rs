//! Reduction of the frequency-domain BPSK ML metric to a real QUBO.
//!
//! With `x = 2b − 1` and the unitary DFT matrix `Q`, the metric
//! `‖y_f − ΛQx‖²` becomes `bᵀq b + cᵀb + constant`, where
//!
//! - `q = 4·Re(QᴴΛᴴΛQ)`,
//! - `c = −4·Re(QᴴΛᴴΛQ)·1 + 2·c_B` with `c_B = −2·Re(QᴴΛᴴy_f)`,
//! - `constant = 1ᵀRe(QᴴΛᴴΛQ)1 − c_Bᵀ1 + ‖y_f‖²`.
//!
//! Only the real part of the Hermitian form survives because `x` is real.
//! The constant keeps `‖y_f‖²`, so energies equal raw ML metrics.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::dft;
use crate::error::{invalid, Error, Result};
use crate::bits_from_index;

/// Largest variable count accepted by exhaustive enumeration.
pub const MAX_EXACT_VARS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n: usize,
    /// Row-major `n × n`, symmetric.
    q: Vec<f64>,
    c: Vec<f64>,
    constant: f64,
}

impl QuboProblem {
    /// `q` is row-major `n × n` and must be symmetric to within 1e-12.
    pub fn new(q: Vec<f64>, c: Vec<f64>, constant: f64) -> Result<Self> {
        let n = c.len();
        if q.len() != n * n {
            return invalid(format!("matrix has {} entries, expected {}", q.len(), n * n));
        }
        if !q.iter().chain(&c).all(|v| v.is_finite()) || !constant.is_finite() {
            return invalid("non-finite coefficient");
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (q[i * n + j], q[j * n + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return invalid(format!("matrix not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { n, q, c, constant })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.q
    }

    pub fn linear(&self) -> &[f64] {
        &self.c
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Same problem with a different additive constant.
    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    fn energy_unchecked(&self, b: &[bool]) -> f64 {
        let n = self.n;
        let mut e = self.constant;
        for i in 0..n {
            if !b[i] {
                continue;
            }
            e += self.c[i];
            let row = &self.q[i * n..(i + 1) * n];
            for j in 0..n {
                if b[j] {
                    e += row[j];
                }
            }
        }
        e
    }
}

/// Builds the QUBO for channel eigenvalues `lambda` and received spectrum `y_f`.
pub fn build_qubo(lambda: &[Complex64], y_f: &[Complex64]) -> Result<QuboProblem> {
    let n = lambda.len();
    if y_f.len() != n {
        return invalid(format!(
            "eigenvalue vector has length {n}, received spectrum {}",
            y_f.len()
        ));
    }
    if n == 0 {
        return invalid("empty block");
    }
    // Re(QᴴΛᴴΛQ)[i][j] = (1/N) Σ_k |Λ_k|² cos(2πk(i−j)/N)
    let power: Vec<f64> = lambda.iter().map(|l| l.norm_sqr()).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = (i + n - j) % n;
            let s: f64 = power
                .iter()
                .enumerate()
                .map(|(k, p)| p * (2.0 * PI * (k * d) as f64 / n as f64).cos())
                .sum();
            a[i * n + j] = s / n as f64;
        }
    }
    // lags beyond the channel memory vanish analytically; clear rounding residue
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for v in a.iter_mut() {
        if v.abs() <= 1e-13 * scale {
            *v = 0.0;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    let matched: Vec<Complex64> = lambda
        .iter()
        .zip(y_f)
        .map(|(l, y)| l.conj() * y)
        .collect();
    let c_b: Vec<f64> = dft::unitary_idft(&matched)
        .iter()
        .map(|v| -2.0 * v.re)
        .collect();

    let row_sums: Vec<f64> = (0..n).map(|i| a[i * n..(i + 1) * n].iter().sum()).collect();
    let q: Vec<f64> = a.iter().map(|v| 4.0 * v).collect();
    let c: Vec<f64> = (0..n).map(|i| -4.0 * row_sums[i] + 2.0 * c_b[i]).collect();
    let y_energy: f64 = y_f.iter().map(|v| v.norm_sqr()).sum();
    let constant = row_sums.iter().sum::<f64>() - c_b.iter().sum::<f64>() + y_energy;
    QuboProblem::new(q, c, constant)
}

/// `bᵀq b + cᵀb + constant`.
pub fn energy(p: &QuboProblem, b: &[bool]) -> Result<f64> {
    if b.len() != p.n {
        return invalid(format!("bitstring has {} bits, problem has {}", b.len(), p.n));
    }
    Ok(p.energy_unchecked(b))
}

/// Energies of all `2^n` bitstrings indexed by [`crate::index_from_bits`].
pub fn energy_table(p: &QuboProblem) -> Result<Vec<f64>> {
    if p.n > MAX_EXACT_VARS {
        return Err(Error::ResourceLimit(format!(
            "enumerating 2^{} bitstrings (limit 2^{MAX_EXACT_VARS})",
            p.n
        )));
    }
    Ok((0..1usize << p.n)
        .map(|idx| p.energy_unchecked(&bits_from_index(idx, p.n)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBounds {
    pub e_min: f64,
    pub e_max: f64,
    /// Both bounds are attained by some bitstring.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsMode {
    Exact,
    Interval,
}

pub fn energy_bounds(p: &QuboProblem, mode: BoundsMode) -> Result<EnergyBounds> {
    match mode {
        BoundsMode::Exact => {
            let table = energy_table(p)?;
            let (lo, hi) = table
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
                    (lo.min(e), hi.max(e))
                });
            Ok(EnergyBounds {
                e_min: lo,
                e_max: hi,
                exact: true,
            })
        }
        BoundsMode::Interval => {
            let mut lo = 0.0;
            let mut hi = 0.0;
            let mut constant = 0.0;
            for m in to_monomials(p) {
                if m.support.is_empty() {
                    constant = m.coeff;
                } else if m.coeff < 0.0 {
                    lo += m.coeff;
                } else {
                    hi += m.coeff;
                }
            }
            Ok(EnergyBounds {
                e_min: constant + lo,
                e_max: constant + hi,
                exact: false,
            })
        }
    }
}

/// Value-register width `⌈log₂(e_max − e_min + 1)⌉ + 1 + margin`.
///
/// Every shifted cost `E − γ` with `γ ∈ [e_min, e_max]` then lies in the
/// two's-complement range `[−2^(m−1), 2^(m−1) − 1]`.
pub fn register_width(bounds: &EnergyBounds, margin: usize) -> usize {
    let spread = (bounds.e_max - bounds.e_min).max(0.0) + 1.0;
    let bits = spread.log2().ceil().max(0.0) as usize;
    // guard against log2 rounding just below an exact power of two
    let bits = if ((1u128 << bits.min(120)) as f64) < spread {
        bits + 1
    } else {
        bits
    };
    bits + 1 + margin
}

/// Product of key bits in `support` scaled by `coeff`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub support: Vec<usize>,
    pub coeff: f64,
}

impl Monomial {
    pub fn eval(&self, b: &[bool]) -> f64 {
        if self.support.iter().all(|&i| b[i]) {
            self.coeff
        } else {
            0.0
        }
    }
}

/// Monomial expansion with the diagonal folded into linear terms (`b² = b`).
///
/// The first entry is always the constant with empty support, followed by
/// nonzero linear terms in index order and nonzero pair terms `(i, j)`,
/// `i < j`, in row-major order.
pub fn to_monomials(p: &QuboProblem) -> Vec<Monomial> {
    let n = p.n;
    let mut out = vec![Monomial {
        support: Vec::new(),
        coeff: p.constant,
    }];
    for i in 0..n {
        let v = p.c[i] + p.q(i, i);
        if v != 0.0 {
            out.push(Monomial {
                support: vec![i],
                coeff: v,
            });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = p.q(i, j) + p.q(j, i);
            if v != 0.0 {
                out.push(Monomial {
                    support: vec![i, j],
                    coeff: v,
                });
            }
        }
    }
    out
}

/// Text dump: a `# variables <n>` header, rows `i j coeff` (`i = j` linear
/// with the diagonal folded in, `i < j` pair coefficient) and a
/// `const <value>` line.
pub fn dump(p: &QuboProblem) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# variables {}", p.n);
    let monomials = to_monomials(p);
    for m in &monomials {
        match m.support.as_slice() {
            [i] => {
                let _ = writeln!(s, "{i} {i} {}", m.coeff);
            }
            [i, j] => {
                let _ = writeln!(s, "{i} {j} {}", m.coeff);
            }
            _ => {}
        }
    }
    let _ = writeln!(s, "const {}", p.constant);
    s
}

/// Parses the [`dump`] format. Blank lines and other `#` comments are
/// ignored; without a `# variables` header the count is inferred from the
/// largest index.
pub fn parse(text: &str) -> Result<QuboProblem> {
    let perr = |line: usize, msg: &str| Error::Parse(format!("line {line}: {msg}"));
    let mut declared: Option<usize> = None;
    let mut constant = 0.0;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            if it.next() == Some("variables") {
                let v = it.next().ok_or_else(|| perr(ln, "missing variable count"))?;
                declared = Some(v.parse().map_err(|_| perr(ln, "bad variable count"))?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["const", v] => {
                constant = v.parse().map_err(|_| perr(ln, "bad constant"))?;
            }
            [i, j, v] => {
                let i: usize = i.parse().map_err(|_| perr(ln, "bad row index"))?;
                let j: usize = j.parse().map_err(|_| perr(ln, "bad column index"))?;
                let v: f64 = v.parse().map_err(|_| perr(ln, "bad coefficient"))?;
                if !v.is_finite() {
                    return Err(perr(ln, "non-finite coefficient"));
                }
                entries.push((i.min(j), i.max(j), v));
            }
            _ => return Err(perr(ln, "expected `i j coeff` or `const value`")),
        }
    }
    let inferred = entries.iter().map(|&(_, j, _)| j + 1).max().unwrap_or(0);
    let n = match declared {
        Some(n) if n < inferred => {
            return Err(Error::Parse(format!(
                "index {} exceeds declared variable count {n}",
                inferred - 1
            )))
        }
        Some(n) => n,
        None => inferred,
    };
    let mut q = vec![0.0; n * n];
    let mut c = vec![0.0; n];
    for (i, j, v) in entries {
        if i == j {
            c[i] += v;
        } else {
            q[i * n + j] += 0.5 * v;
            q[j * n + i] += 0.5 * v;
        }
    }
    QuboProblem::new(q, c, constant)
}
