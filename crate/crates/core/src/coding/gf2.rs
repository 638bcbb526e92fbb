//! Dense GF(2) elimination used to derive a systematic encoder from `H`.

/// Row-echelon description of `H`: each pivot bit is the parity of a subset
/// of the free (information) bits.
#[derive(Debug, Clone)]
pub(crate) struct SystematicEncoder {
    n: usize,
    pivots: Vec<usize>,
    free: Vec<usize>,
    /// Per pivot row, the free columns it depends on, packed over free-column index.
    rows: Vec<Vec<u64>>,
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
fn get(row: &[u64], i: usize) -> bool {
    (row[i / 64] >> (i % 64)) & 1 == 1
}

impl SystematicEncoder {
    pub(crate) fn new(n: usize, checks: &[Vec<u32>]) -> Self {
        let w = words(n);
        let mut h: Vec<Vec<u64>> = checks
            .iter()
            .map(|row| {
                let mut r = vec![0u64; w];
                for &v in row {
                    r[v as usize / 64] ^= 1 << (v % 64);
                }
                r
            })
            .collect();

        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..n {
            if rank == h.len() {
                break;
            }
            let Some(p) = (rank..h.len()).find(|&r| get(&h[r], col)) else {
                continue;
            };
            h.swap(rank, p);
            let pivot_row = h[rank].clone();
            for (r, row) in h.iter_mut().enumerate() {
                if r != rank && get(row, col) {
                    for (a, b) in row.iter_mut().zip(&pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }

        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let fw = words(free.len());
        let rows = h[..rank]
            .iter()
            .map(|row| {
                let mut packed = vec![0u64; fw];
                for (j, &c) in free.iter().enumerate() {
                    if get(row, c) {
                        packed[j / 64] |= 1 << (j % 64);
                    }
                }
                packed
            })
            .collect();
        SystematicEncoder {
            n,
            pivots,
            free,
            rows,
        }
    }

    pub(crate) fn k(&self) -> usize {
        self.free.len()
    }

    pub(crate) fn free_columns(&self) -> &[usize] {
        &self.free
    }

    pub(crate) fn encode(&self, info: &[u8]) -> Vec<u8> {
        let mut packed = vec![0u64; words(self.free.len())];
        for (j, &b) in info.iter().enumerate() {
            packed[j / 64] |= u64::from(b & 1) << (j % 64);
        }
        let mut cw = vec![0u8; self.n];
        for (&c, &b) in self.free.iter().zip(info) {
            cw[c] = b & 1;
        }
        for (&p, row) in self.pivots.iter().zip(&self.rows) {
            let ones: u32 = row.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            cw[p] = (ones & 1) as u8;
        }
        cw
    }
}
