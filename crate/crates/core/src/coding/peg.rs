//! Progressive edge-growth (PEG) construction of regular-column LDPC codes.
//!
//! Each variable node's edges are placed one at a time. The first goes to a
//! check of minimum current degree; each later edge goes to a check that is
//! as far as possible from the variable in the current graph (unreachable if
//! possible, otherwise in the deepest BFS layer), again preferring low degree.
//! Remaining ties are broken with a seeded RNG.

use rand::Rng;

use super::ParityCheckCode;
use crate::error::{Error, Result};
use crate::rng::block_rng;

/// Builds an `n`-variable, `m`-check code with every variable of degree `var_degree`.
pub fn construct(n: usize, m: usize, var_degree: usize, seed: u64) -> Result<ParityCheckCode> {
    if var_degree == 0 || var_degree > m || m >= n {
        return Err(Error::Code(format!(
            "invalid PEG parameters n={n}, m={m}, degree={var_degree}"
        )));
    }
    let mut rng = block_rng(seed, 0);
    let mut checks: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut vars: Vec<Vec<u32>> = vec![Vec::new(); n];

    let mut check_seen = vec![usize::MAX; m];
    let mut var_seen = vec![usize::MAX; n];
    let mut stamp = 0usize;

    for j in 0..n {
        for edge in 0..var_degree {
            let candidates: Vec<usize> = if edge == 0 {
                (0..m).collect()
            } else {
                stamp += 1;
                deepest_checks(j, &checks, &vars, &mut check_seen, &mut var_seen, stamp)
            };
            let candidates: Vec<usize> = candidates
                .into_iter()
                .filter(|&c| !vars[j].contains(&(c as u32)))
                .collect();
            let min_deg = candidates.iter().map(|&c| checks[c].len()).min().ok_or_else(|| {
                Error::Code(format!("PEG ran out of candidate checks at variable {j}"))
            })?;
            let best: Vec<usize> = candidates
                .into_iter()
                .filter(|&c| checks[c].len() == min_deg)
                .collect();
            let c = best[rng.random_range(0..best.len())];
            checks[c].push(j as u32);
            vars[j].push(c as u32);
        }
    }
    ParityCheckCode::from_checks(n, checks)
}

/// Checks farthest from variable `root` in the current Tanner graph.
fn deepest_checks(
    root: usize,
    checks: &[Vec<u32>],
    vars: &[Vec<u32>],
    check_seen: &mut [usize],
    var_seen: &mut [usize],
    stamp: usize,
) -> Vec<usize> {
    let m = checks.len();
    let mut reached = 0usize;
    let mut frontier = vec![root];
    var_seen[root] = stamp;
    loop {
        let mut layer = Vec::new();
        for &v in &frontier {
            for &c in &vars[v] {
                let c = c as usize;
                if check_seen[c] != stamp {
                    check_seen[c] = stamp;
                    layer.push(c);
                }
            }
        }
        if layer.is_empty() {
            // Tree stopped growing: pick among checks never reached.
            return (0..m).filter(|&c| check_seen[c] != stamp).collect();
        }
        reached += layer.len();
        if reached == m {
            // Everything reachable: the last layer is the farthest.
            return layer;
        }
        let mut next = Vec::new();
        for &c in &layer {
            for &v in &checks[c] {
                let v = v as usize;
                if var_seen[v] != stamp {
                    var_seen[v] = stamp;
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
}
