//! Monte Carlo link simulations with deterministic early stopping.
//!
//! Work is cut into fixed units (symbol blocks or codeword frames), unit `i`
//! drawing from RNG stream `i`. Units are evaluated a wave at a time on the
//! current rayon pool, then folded in index order; the stopping rule is
//! checked after every unit, so the set of units counted never depends on
//! the number of threads.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::add_noise;
use crate::coding::{BpDecoder, Interleaver, ParityCheckCode};
use crate::demapper::{Demapper, LlrFrame};
use crate::error::Result;
use crate::rng::{block_rng, SimRng};

const UNCODED_BLOCK: usize = 1024;
const WAVE: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub bits: u64,
    pub bit_errors: u64,
    pub frames: u64,
    pub frame_errors: u64,
}

impl ErrorCounts {
    fn add(&mut self, o: &ErrorCounts) {
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.frames += o.frames;
        self.frame_errors += o.frame_errors;
    }

    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits.max(1) as f64
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.frames.max(1) as f64
    }
}

fn run_waves<F>(unit: F, stop: impl Fn(&ErrorCounts) -> bool) -> Result<ErrorCounts>
where
    F: Fn(u64) -> Result<ErrorCounts> + Sync,
{
    let unit = &unit;
    let mut total = ErrorCounts::default();
    let mut next = 0u64;
    loop {
        let wave: Vec<ErrorCounts> = (next..next + WAVE as u64)
            .into_par_iter()
            .map(unit)
            .collect::<Result<_>>()?;
        for c in &wave {
            total.add(c);
            if stop(&total) {
                return Ok(total);
            }
        }
        next += WAVE as u64;
    }
}

/// Hard-decision bit error rate of the demapper's LLR signs.
pub fn uncoded_ber(
    demapper: &Demapper,
    n0: f64,
    target_errors: u64,
    max_bits: u64,
    seed: u64,
) -> Result<ErrorCounts> {
    let tx = demapper.tx();
    let m = tx.bits_per_symbol();
    let sigma = (n0 / 2.0).sqrt();
    run_waves(
        |block| {
            let mut rng = block_rng(seed, block);
            let mut frame = LlrFrame::with_capacity(m);
            let mut c = ErrorCounts::default();
            for _ in 0..UNCODED_BLOCK {
                let k = rng.random_range(0..tx.order());
                frame.clear();
                demapper.demap(add_noise(tx.points()[k], sigma, &mut rng), n0, &mut frame)?;
                for (i, &l) in frame.values.iter().enumerate() {
                    c.bit_errors += u64::from(u8::from(l < 0.0) != tx.label_bit(k, i));
                }
                c.bits += m as u64;
            }
            c.frames = 1;
            c.frame_errors = u64::from(c.bit_errors > 0);
            Ok(c)
        },
        |t| t.bit_errors >= target_errors || t.bits >= max_bits,
    )
}

/// BICM transmitter/receiver around one LDPC code.
#[derive(Debug, Clone)]
pub struct CodedLink<'a> {
    pub code: &'a ParityCheckCode,
    pub demapper: &'a Demapper,
    pub interleaver: Interleaver,
    pub max_iters: usize,
    by_label: Vec<usize>,
}

impl<'a> CodedLink<'a> {
    pub fn new(code: &'a ParityCheckCode, demapper: &'a Demapper, interleaver_seed: u64, max_iters: usize) -> Self {
        let tx = demapper.tx();
        let mut by_label = vec![0; tx.order()];
        for (k, &l) in tx.labels().iter().enumerate() {
            by_label[l as usize] = k;
        }
        CodedLink {
            code,
            demapper,
            interleaver: Interleaver::new(code.n(), interleaver_seed),
            max_iters,
            by_label,
        }
    }

    /// Sends one random codeword; returns its information-bit error counts.
    pub fn frame(&self, n0: f64, rng: &mut SimRng, decoder: &mut BpDecoder<'_>) -> Result<ErrorCounts> {
        let tx = self.demapper.tx();
        let m = tx.bits_per_symbol();
        let n = self.code.n();
        let sigma = (n0 / 2.0).sqrt();
        let info: Vec<u8> = (0..self.code.k()).map(|_| rng.random_range(0..2u8)).collect();
        let mut bits = self.interleaver.interleave(&self.code.encode(&info)?);
        while !bits.len().is_multiple_of(m) {
            bits.push(rng.random_range(0..2u8));
        }
        let mut frame = LlrFrame::with_capacity(bits.len());
        for chunk in bits.chunks(m) {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            let x = tx.points()[self.by_label[label]];
            self.demapper.demap(add_noise(x, sigma, rng), n0, &mut frame)?;
        }
        let llrs = self.interleaver.deinterleave(&frame.values[..n]);
        let out = decoder.decode(&llrs, self.max_iters)?;
        let errors = self
            .code
            .info_positions()
            .iter()
            .zip(&info)
            .filter(|(&p, &b)| out.bits[p] != b)
            .count() as u64;
        Ok(ErrorCounts {
            bits: info.len() as u64,
            bit_errors: errors,
            frames: 1,
            frame_errors: u64::from(errors > 0),
        })
    }
}

/// Coded BER/FER, stopping at `target_frame_errors` or `max_frames`.
pub fn coded_ber(
    link: &CodedLink<'_>,
    n0: f64,
    target_frame_errors: u64,
    max_frames: u64,
    seed: u64,
) -> Result<ErrorCounts> {
    run_waves(
        |f| {
            let mut decoder = BpDecoder::new(link.code);
            link.frame(n0, &mut block_rng(seed, f), &mut decoder)
        },
        |t| t.frame_errors >= target_frame_errors || t.frames >= max_frames,
    )
}
