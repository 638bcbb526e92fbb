//! Flooding-schedule sum-product decoder.

use super::ParityCheckCode;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 50;

/// Largest magnitude of a tanh product; caps check messages near ±28.
const TANH_LIMIT: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

/// Reusable message storage for one code; one instance per worker.
#[derive(Debug, Clone)]
pub struct BpDecoder<'a> {
    code: &'a ParityCheckCode,
    /// Edge ordering is check-major; `edge_var[e]` is the variable of edge `e`.
    edge_var: Vec<u32>,
    check_start: Vec<usize>,
    var_edges: Vec<Vec<u32>>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> BpDecoder<'a> {
    pub fn new(code: &'a ParityCheckCode) -> Self {
        let mut edge_var = Vec::new();
        let mut check_start = vec![0];
        let mut var_edges = vec![Vec::new(); code.n()];
        for row in code.checks() {
            for &v in row {
                var_edges[v as usize].push(edge_var.len() as u32);
                edge_var.push(v);
            }
            check_start.push(edge_var.len());
        }
        let e = edge_var.len();
        BpDecoder {
            code,
            edge_var,
            check_start,
            var_edges,
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            scratch: Vec::new(),
        }
    }

    /// Decodes channel LLRs (positive ⇒ bit 0). Stops as soon as the hard
    /// decision satisfies every check; a bit with exactly zero posterior is
    /// treated as undecided and blocks convergence.
    pub fn decode(&mut self, llrs: &[f64], max_iters: usize) -> Result<DecodeOutcome> {
        let n = self.code.n();
        if llrs.len() != n {
            return Err(Error::Code(format!("expected {n} LLRs, got {}", llrs.len())));
        }
        if max_iters == 0 {
            return Err(Error::Code("max_iters must be at least 1".into()));
        }
        for (e, &v) in self.edge_var.iter().enumerate() {
            self.v2c[e] = llrs[v as usize];
        }
        let mut bits = vec![0u8; n];
        let mut posterior = vec![0.0; n];
        for iter in 1..=max_iters {
            self.check_update();
            for v in 0..n {
                let edges = &self.var_edges[v];
                let total = llrs[v] + edges.iter().map(|&e| self.c2v[e as usize]).sum::<f64>();
                posterior[v] = total;
                bits[v] = u8::from(total < 0.0);
                for &e in edges {
                    self.v2c[e as usize] = total - self.c2v[e as usize];
                }
            }
            if posterior.iter().all(|&p| p != 0.0) && self.code.check_syndrome(&bits) {
                return Ok(DecodeOutcome {
                    bits,
                    converged: true,
                    iterations: iter,
                });
            }
        }
        Ok(DecodeOutcome {
            bits,
            converged: false,
            iterations: max_iters,
        })
    }

    fn check_update(&mut self) {
        for c in 0..self.check_start.len() - 1 {
            let (lo, hi) = (self.check_start[c], self.check_start[c + 1]);
            let t = &mut self.scratch;
            t.clear();
            t.extend(self.v2c[lo..hi].iter().map(|&x| (0.5 * x).tanh()));
            // Leave-one-out products via a forward pass then a backward pass.
            let mut acc = 1.0;
            for (i, e) in (lo..hi).enumerate() {
                self.c2v[e] = acc;
                acc *= t[i];
            }
            acc = 1.0;
            for (i, e) in (lo..hi).enumerate().rev() {
                let p = (self.c2v[e] * acc).clamp(-TANH_LIMIT, TANH_LIMIT);
                self.c2v[e] = 2.0 * p.atanh();
                acc *= t[i];
            }
        }
    }
}

/// One-shot decode; allocates a fresh [`BpDecoder`].
pub fn decode_bp(code: &ParityCheckCode, llrs: &[f64], max_iters: usize) -> Result<DecodeOutcome> {
    BpDecoder::new(code).decode(llrs, max_iters)
}
