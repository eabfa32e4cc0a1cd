//! Block splitting `x = (y, z, w)` of a system and the rank of its top
//! block `H`.

use super::{rank::bareiss_rank, Monomial, PolySystem};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Assignment of the variables to blocks `y`, `z`, `w` (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarPartition {
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub w: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    Y,
    Z,
    W,
}

impl VarPartition {
    pub fn new(n: usize, y: Vec<usize>, z: Vec<usize>, w: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; n];
        for &v in y.iter().chain(&z).chain(&w) {
            if v >= n {
                return Err(Error::invalid(format!("variable index {v} out of range")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::invalid(format!("variable x{} in two blocks", v + 1)));
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("variable x{} in no block", v + 1)));
        }
        Ok(VarPartition { y, z, w })
    }

    /// Every variable in `w`.
    pub fn identity(n: usize) -> Self {
        VarPartition {
            y: vec![],
            z: vec![],
            w: (0..n).collect(),
        }
    }

    /// `(m, s, t)`, the block sizes.
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.y.len(), self.z.len(), self.w.len())
    }

    fn block_of(&self, n: usize) -> Vec<Block> {
        let mut b = vec![Block::W; n];
        for &v in &self.y {
            b[v] = Block::Y;
        }
        for &v in &self.z {
            b[v] = Block::Z;
        }
        b
    }
}

/// The split of one form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormSplit {
    pub degree: u32,
    /// Monomials in `y` only.
    pub f: Vec<Monomial>,
    /// Monomials in `(y, z)` with at least one `z` variable.
    pub g: Vec<Monomial>,
    /// Monomials with at least one `w` variable.
    pub h: Vec<Monomial>,
    /// Part of `h` that also involves `y` or `z`.
    pub big_g: Vec<Monomial>,
    /// Part of `h` supported on `w` alone.
    pub big_h: Vec<Monomial>,
}

impl FormSplit {
    /// `f + g + h` as one canonical monomial list.
    pub fn reassemble(&self) -> Vec<Monomial> {
        super::canonicalize(self.f.iter().chain(&self.g).chain(&self.h).cloned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub partition: VarPartition,
    pub forms: Vec<FormSplit>,
}

pub fn decompose(sys: &PolySystem, partition: &VarPartition) -> Decomposition {
    let blocks = partition.block_of(sys.n());
    let forms = sys
        .forms()
        .map(|form| {
            let mut s = FormSplit {
                degree: form.degree,
                f: vec![],
                g: vec![],
                h: vec![],
                big_g: vec![],
                big_h: vec![],
            };
            for m in &form.monomials {
                let has = |b: Block| m.support().any(|j| blocks[j] == b);
                if has(Block::W) {
                    s.h.push(m.clone());
                    if has(Block::Y) || has(Block::Z) {
                        s.big_g.push(m.clone());
                    } else {
                        s.big_h.push(m.clone());
                    }
                } else if has(Block::Z) {
                    s.g.push(m.clone());
                } else {
                    s.f.push(m.clone());
                }
            }
            s
        })
        .collect();
    Decomposition {
        partition: partition.clone(),
        forms,
    }
}

/// Rank over the rationals of the coefficient vectors of `H_1, .., H_R`.
pub fn top_block_rank(decomp: &Decomposition) -> usize {
    let mut basis: BTreeMap<&[u32], usize> = BTreeMap::new();
    for s in &decomp.forms {
        for m in &s.big_h {
            let k = basis.len();
            basis.entry(&m.exps).or_insert(k);
        }
    }
    if basis.is_empty() {
        return 0;
    }
    let mut rows: Vec<Vec<BigInt>> = decomp
        .forms
        .iter()
        .map(|s| {
            let mut row = vec![BigInt::zero(); basis.len()];
            for m in &s.big_h {
                row[basis[m.exps.as_slice()]] = m.coeff.clone();
            }
            row
        })
        .collect();
    bareiss_rank(&mut rows)
}
