//! Truncated Fock space of the three bosonic modes.
//!
//! The tensor ordering is fixed as `a ⊗ b ⊗ c`: two optical modes followed by
//! the mechanical mode. A basis state `|i_a, i_b, i_c⟩` has flat index
//! `(i_a * n_b + i_b) * n_c + i_c`.

mod operator;
mod state;

pub use operator::{displacement, expm_dense, FockOperator};
pub use state::{coherent_amplitudes, coherent_state, thermal_populations, thermal_state, vacuum, QuantumState};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DIM: usize = 50_000;

/// Truncation tail above which a state constructor warns.
pub const TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    A,
    B,
    C,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::A, Mode::B, Mode::C];

    fn position(self) -> usize {
        match self {
            Mode::A => 0,
            Mode::B => 1,
            Mode::C => 2,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::A => "a",
            Mode::B => "b",
            Mode::C => "c",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Mode::A),
            "b" => Ok(Mode::B),
            "c" | "m" | "mech" | "mechanical" => Ok(Mode::C),
            other => Err(Error::Usage(format!("unknown mode '{other}', expected a, b or c"))),
        }
    }
}

/// Fock cutoffs (number of retained levels) of the three modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeDims {
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
}

impl ModeDims {
    pub fn new(n_a: usize, n_b: usize, n_c: usize) -> Result<Self> {
        Self::with_limit(n_a, n_b, n_c, DEFAULT_MAX_DIM)
    }

    pub fn with_limit(n_a: usize, n_b: usize, n_c: usize, max_dim: usize) -> Result<Self> {
        if n_a == 0 || n_b == 0 || n_c == 0 {
            return Err(Error::Usage(format!(
                "all cutoffs must be at least 1, got ({n_a}, {n_b}, {n_c})"
            )));
        }
        let total = n_a
            .checked_mul(n_b)
            .and_then(|x| x.checked_mul(n_c))
            .unwrap_or(usize::MAX);
        if total > max_dim {
            return Err(Error::SizeLimit {
                what: "Hilbert space dimension",
                required: total,
                limit: max_dim,
                hint: "reduce the Fock cutoffs or raise --max-dim",
            });
        }
        Ok(Self { n_a, n_b, n_c })
    }

    pub fn total(&self) -> usize {
        self.n_a * self.n_b * self.n_c
    }

    pub fn cutoff(&self, mode: Mode) -> usize {
        match mode {
            Mode::A => self.n_a,
            Mode::B => self.n_b,
            Mode::C => self.n_c,
        }
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.n_a, self.n_b, self.n_c]
    }

    pub fn index(&self, ia: usize, ib: usize, ic: usize) -> usize {
        debug_assert!(ia < self.n_a && ib < self.n_b && ic < self.n_c);
        (ia * self.n_b + ib) * self.n_c + ic
    }

    /// Inverse of [`ModeDims::index`].
    pub fn levels(&self, i: usize) -> [usize; 3] {
        let ic = i % self.n_c;
        let rest = i / self.n_c;
        [rest / self.n_b, rest % self.n_b, ic]
    }
}

impl fmt::Display for ModeDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.n_a, self.n_b, self.n_c)
    }
}
