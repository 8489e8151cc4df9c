//! Index arithmetic for the hypergrid `[side]^dims`.
//!
//! Cells are 0-based coordinate vectors. The linear index puts dimension 0 in
//! the least significant position: `index(v) = v[0] + side * v[1] + ...`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub side: usize,
    pub dims: usize,
}

impl GridShape {
    pub fn new(side: usize, dims: usize) -> Self {
        GridShape { side, dims }
    }

    /// Number of cells, or `None` on overflow.
    pub fn checked_len(&self) -> Option<usize> {
        let mut n: usize = 1;
        for _ in 0..self.dims {
            n = n.checked_mul(self.side)?;
        }
        Some(n)
    }

    pub fn len(&self) -> usize {
        self.checked_len().expect("grid size overflows usize")
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    /// Cell count as a wide integer, for budget checks.
    pub fn len_u128(&self) -> u128 {
        (self.side as u128).saturating_pow(self.dims as u32)
    }

    pub fn ensure_within(&self, budget: usize, what: &'static str) -> Result<usize> {
        match self.checked_len() {
            Some(n) if n <= budget => Ok(n),
            _ => Err(Error::Budget {
                what,
                needed: self.len_u128(),
                budget: budget as u128,
            }),
        }
    }

    pub fn contains(&self, cell: &[usize]) -> bool {
        cell.len() == self.dims && cell.iter().all(|&c| c < self.side)
    }

    pub fn index(&self, cell: &[usize]) -> usize {
        debug_assert!(self.contains(cell));
        cell.iter().rev().fold(0, |acc, &c| acc * self.side + c)
    }

    pub fn cell(&self, mut index: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dims);
        for _ in 0..self.dims {
            out.push(index % self.side);
            index /= self.side;
        }
        out
    }

    pub fn cell_into(&self, mut index: usize, out: &mut [usize]) {
        for slot in out.iter_mut() {
            *slot = index % self.side;
            index /= self.side;
        }
    }

    /// Iterates over every cell in linear-index order.
    pub fn cells(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len()).map(move |i| self.cell(i))
    }

    /// Linear stride of dimension `dim`.
    pub fn stride(&self, dim: usize) -> usize {
        self.side.pow(dim as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let s = GridShape::new(4, 3);
        for i in 0..s.len() {
            assert_eq!(s.index(&s.cell(i)), i);
        }
        assert_eq!(s.index(&[1, 0, 0]), 1);
        assert_eq!(s.index(&[0, 1, 0]), 4);
        assert_eq!(s.stride(2), 16);
    }

    #[test]
    fn budget_check() {
        let s = GridShape::new(64, 8);
        assert!(s.ensure_within(1 << 20, "cells").is_err());
        assert_eq!(GridShape::new(4, 2).ensure_within(16, "cells"), Ok(16));
    }
}
