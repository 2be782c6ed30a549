//! Merkle-tree accumulator over RS symbols.
//!
//! Leaves hash `(index ‖ payload)`. A level with an odd number of nodes is
//! padded by duplicating its last node. Witnesses record on which side each
//! sibling sits, and verification requires those sides to spell out the
//! claimed index, so a witness is bound to exactly one position.

use std::sync::Arc;

use super::hash::{self, Digest, Kappa};
use super::rs::RsSymbol;
use super::CodecError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Witness {
    pub path: Arc<[(Digest, Side)]>,
}

/// Tree depth for `n` leaves: ⌈log2 n⌉.
pub fn depth(n: usize) -> usize {
    (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize
}

fn leaves(kappa: Kappa, d: &[RsSymbol]) -> Result<Vec<Digest>, CodecError> {
    if d.is_empty() {
        return Err(CodecError::InvalidInput("empty symbol list"));
    }
    d.iter()
        .enumerate()
        .map(|(i, s)| {
            if s.index as usize != i + 1 {
                return Err(CodecError::InvalidInput("symbols must be indexed 1..n in order"));
            }
            Ok(hash::leaf(kappa, s.index as u32, &s.payload))
        })
        .collect()
}

fn parent_level(kappa: Kappa, level: &[Digest]) -> Vec<Digest> {
    level
        .chunks(2)
        .map(|pair| {
            let right = pair.get(1).unwrap_or(&pair[0]);
            hash::node(kappa, &pair[0], right)
        })
        .collect()
}

/// Root of the tree over `d`, which must hold symbols `1..=n` in order.
pub fn accumulate(kappa: Kappa, d: &[RsSymbol]) -> Result<Digest, CodecError> {
    let mut level = leaves(kappa, d)?;
    while level.len() > 1 {
        level = parent_level(kappa, &level);
    }
    Ok(level[0])
}

/// Root and all `n` witnesses in one pass.
pub fn accumulate_with_witnesses(
    kappa: Kappa,
    d: &[RsSymbol],
) -> Result<(Digest, Vec<Witness>), CodecError> {
    let mut level = leaves(kappa, d)?;
    let n = level.len();
    let mut paths: Vec<Vec<(Digest, Side)>> = vec![Vec::with_capacity(depth(n)); n];
    let mut pos: Vec<usize> = (0..n).collect();
    while level.len() > 1 {
        for (leaf, p) in pos.iter_mut().enumerate() {
            let (sib, side) = if *p % 2 == 0 {
                (*level.get(*p + 1).unwrap_or(&level[*p]), Side::Right)
            } else {
                (level[*p - 1], Side::Left)
            };
            paths[leaf].push((sib, side));
            *p /= 2;
        }
        level = parent_level(kappa, &level);
    }
    let witnesses = paths.into_iter().map(|p| Witness { path: p.into() }).collect();
    Ok((level[0], witnesses))
}

/// Witness for the symbol at 1-based `index`.
pub fn create_witness(kappa: Kappa, d: &[RsSymbol], index: usize) -> Result<Witness, CodecError> {
    if index == 0 || index > d.len() {
        return Err(CodecError::InvalidInput("witness index out of range"));
    }
    let (_, mut all) = accumulate_with_witnesses(kappa, d)?;
    Ok(all.swap_remove(index - 1))
}

/// Check that `sym` sits at `index` under root `z`.
pub fn verify_witness(kappa: Kappa, z: &Digest, w: &Witness, index: usize, sym: &RsSymbol) -> bool {
    if index == 0 || sym.index as usize != index || w.path.len() >= usize::BITS as usize {
        return false;
    }
    let mut pos = 0usize;
    let mut acc = hash::leaf(kappa, index as u32, &sym.payload);
    for (level, (sib, side)) in w.path.iter().enumerate() {
        acc = match side {
            Side::Right => hash::node(kappa, &acc, sib),
            Side::Left => {
                pos |= 1 << level;
                hash::node(kappa, sib, &acc)
            }
        };
    }
    pos == index - 1 && acc == *z
}
