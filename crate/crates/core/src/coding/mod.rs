//! Binary LDPC coding for BICM runs.
//!
//! A [`ParityCheckCode`] is built from a sparse parity-check matrix (usually an
//! alist file). Encoding goes through a GF(2) reduced row-echelon form of `H`,
//! so any full or rank-deficient matrix is encodable; information bits sit in
//! the non-pivot columns. Decoding is flooding-schedule sum-product.

mod alist;
mod decoder;
mod gf2;
mod interleaver;
pub mod peg;

pub use decoder::{decode_bp, BpDecoder, DecodeOutcome, DEFAULT_MAX_ITERS};
pub use interleaver::{deinterleave, interleave, Interleaver};

use std::path::Path;

use crate::error::{Error, Result};
use gf2::SystematicEncoder;

/// Bundled rate-3/4 PEG code, n = 2000, variable degree 3, check degree 12.
pub const BUNDLED_ALIST: &str = include_str!("../../assets/peg_2000_1500.alist");

#[derive(Debug, Clone)]
pub struct ParityCheckCode {
    n: usize,
    checks: Vec<Vec<u32>>,
    vars: Vec<Vec<u32>>,
    encoder: SystematicEncoder,
}

impl ParityCheckCode {
    /// Builds a code from the variable indices of each check.
    pub fn from_checks(n: usize, checks: Vec<Vec<u32>>) -> Result<Self> {
        if n == 0 || checks.is_empty() {
            return Err(Error::Code("empty parity-check matrix".into()));
        }
        let mut vars = vec![Vec::new(); n];
        for (c, row) in checks.iter().enumerate() {
            let mut sorted = row.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Code(format!("check {c} lists a variable twice")));
            }
            for &v in row {
                let slot = vars.get_mut(v as usize).ok_or_else(|| {
                    Error::Code(format!("check {c} references variable {v} >= n = {n}"))
                })?;
                slot.push(c as u32);
            }
        }
        if let Some(v) = vars.iter().position(Vec::is_empty) {
            return Err(Error::Code(format!("variable {v} is in no check")));
        }
        let encoder = SystematicEncoder::new(n, &checks);
        if encoder.k() == 0 {
            return Err(Error::Code("parity-check matrix has full column rank (k = 0)".into()));
        }
        Ok(ParityCheckCode {
            n,
            checks,
            vars,
            encoder,
        })
    }

    pub fn bundled() -> Self {
        Self::from_alist(BUNDLED_ALIST).expect("bundled alist is valid")
    }

    pub fn from_alist(text: &str) -> Result<Self> {
        let (n, checks) = alist::parse(text)?;
        Self::from_checks(n, checks)
    }

    pub fn to_alist(&self) -> String {
        alist::write(self.n, &self.checks, &self.vars)
    }

    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_alist(&text)
    }

    pub fn save_alist(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_alist()).map_err(|e| Error::io(path, e))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.encoder.k()
    }

    pub fn num_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn checks(&self) -> &[Vec<u32>] {
        &self.checks
    }

    pub fn vars(&self) -> &[Vec<u32>] {
        &self.vars
    }

    /// Codeword positions carrying the information bits, in order.
    pub fn info_positions(&self) -> &[usize] {
        self.encoder.free_columns()
    }

    /// Systematic encoding; bits are 0/1 bytes.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::Code(format!(
                "expected {} information bits, got {}",
                self.k(),
                info.len()
            )));
        }
        Ok(self.encoder.encode(info))
    }

    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions().iter().map(|&p| codeword[p]).collect()
    }

    /// True when `H·c = 0` over GF(2).
    pub fn check_syndrome(&self, codeword: &[u8]) -> bool {
        codeword.len() == self.n
            && self
                .checks
                .iter()
                .all(|row| row.iter().fold(0u8, |acc, &v| acc ^ codeword[v as usize]) == 0)
    }
}
