//! Binary Merkle tree over transaction hashes.

use sha2::{Digest, Sha256};

use crate::types::Hash32;

/// Below this leaf count the parallel path is pure overhead.
#[cfg(feature = "parallel")]
const PARALLEL_THRESHOLD: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("merkle root of an empty leaf list")]
pub struct EmptyTree;

fn hash_pair(left: &Hash32, right: &Hash32) -> Hash32 {
    let mut hasher = Sha256::new();
    hasher.update(left.0);
    hasher.update(right.0);
    Hash32(hasher.finalize().into())
}

fn reduce(mut level: Vec<Hash32>, pair_up: impl Fn(&[Hash32]) -> Vec<Hash32>) -> Hash32 {
    while level.len() > 1 {
        level = pair_up(&level);
    }
    level[0]
}

fn pair_up_seq(level: &[Hash32]) -> Vec<Hash32> {
    level
        .chunks(2)
        .map(|pair| match pair {
            [left, right] => hash_pair(left, right),
            // Odd node at any level is paired with itself.
            [lone] => hash_pair(lone, lone),
            _ => unreachable!(),
        })
        .collect()
}

/// Root of the binary tree: adjacent leaves are paired, an odd node at any
/// level is duplicated, and a single leaf is its own root.
///
/// Dispatches to a rayon reduction for large trees when the `parallel`
/// feature is enabled; the result is identical either way.
pub fn merkle_root(leaves: &[Hash32]) -> Result<Hash32, EmptyTree> {
    #[cfg(feature = "parallel")]
    if leaves.len() >= PARALLEL_THRESHOLD {
        return merkle_root_par(leaves);
    }
    merkle_root_seq(leaves)
}

/// Sequential reference path; always available for comparison benches.
pub fn merkle_root_seq(leaves: &[Hash32]) -> Result<Hash32, EmptyTree> {
    if leaves.is_empty() {
        return Err(EmptyTree);
    }
    Ok(reduce(leaves.to_vec(), pair_up_seq))
}

#[cfg(feature = "parallel")]
fn pair_up_par(level: &[Hash32]) -> Vec<Hash32> {
    use rayon::prelude::*;
    level
        .par_chunks(2)
        .map(|pair| match pair {
            [left, right] => hash_pair(left, right),
            [lone] => hash_pair(lone, lone),
            _ => unreachable!(),
        })
        .collect()
}

/// Level-parallel path used above [`PARALLEL_THRESHOLD`].
#[cfg(feature = "parallel")]
pub fn merkle_root_par(leaves: &[Hash32]) -> Result<Hash32, EmptyTree> {
    if leaves.is_empty() {
        return Err(EmptyTree);
    }
    Ok(reduce(leaves.to_vec(), pair_up_par))
}
