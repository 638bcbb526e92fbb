use rand::seq::SliceRandom;

use crate::rng::{block_rng, derive_seed};

const INTERLEAVER_DOMAIN: u64 = 0x1e_a7e5;

/// Seeded pseudo-random permutation: output position `i` takes input `perm[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut block_rng(derive_seed(seed, INTERLEAVER_DOMAIN), 0));
        Interleaver { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.perm.len(), "interleaver length mismatch");
        self.perm.iter().map(|&p| input[p]).collect()
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.perm.len(), "interleaver length mismatch");
        let mut out = vec![T::default(); input.len()];
        for (&p, &x) in self.perm.iter().zip(input) {
            out[p] = x;
        }
        out
    }
}

pub fn interleave<T: Copy>(bits: &[T], seed: u64) -> Vec<T> {
    Interleaver::new(bits.len(), seed).interleave(bits)
}

pub fn deinterleave<T: Copy + Default>(bits: &[T], seed: u64) -> Vec<T> {
    Interleaver::new(bits.len(), seed).deinterleave(bits)
}
