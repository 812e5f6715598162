//! Tate decompositions of split grassmannians and flag varieties.
//!
//! [`schubert_cells`] enumerates the Schubert cells of `Gr(k, d)` directly
//! (partitions in a `k x (d-k)` box) and serves as an independent check of the
//! q-binomial route used by [`split_grassmannian_motive`].

use crate::arith::{gauss_binom, Prime, QPoly};
use crate::csa::{dim_flag, AlgebraClass};
use crate::error::{domain, Result};
use crate::motive::MotiveExpr;

/// Sorted multiset of cell dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMultiset(Vec<u64>);

impl CellMultiset {
    pub fn from_unsorted(mut cells: Vec<u64>) -> Self {
        cells.sort_unstable();
        CellMultiset(cells)
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The motive of the grassmannian of `k`-planes in a `d`-dimensional space.
pub fn split_grassmannian_motive(d: u64, k: u64, p: Prime) -> Result<MotiveExpr> {
    if d == 0 || k > d {
        return domain(format!("Gr({k}, {d}) requires 0 <= k <= d and d > 0"));
    }
    MotiveExpr::from_poincare(AlgebraClass::split(d, p)?, &gauss_binom(d, k as i64))
}

/// Poincare polynomial of the split flag variety: peel off the largest
/// subspace, `flag(d; i_1..i_r) = [d choose i_r] * flag(i_r; i_1..i_{r-1})`.
pub fn split_flag_poincare(d: u64, dims: &[u64]) -> Result<QPoly> {
    dim_flag(d, dims)?;
    let mut poly = QPoly::one();
    let mut ambient = d;
    for &i in dims.iter().rev() {
        poly = &poly * &gauss_binom(ambient, i as i64);
        ambient = i;
    }
    Ok(poly)
}

pub fn split_flag_motive(d: u64, dims: &[u64], p: Prime) -> Result<MotiveExpr> {
    let poly = split_flag_poincare(d, dims)?;
    MotiveExpr::from_poincare(AlgebraClass::split(d, p)?, &poly)
}

/// Sizes of all partitions fitting in a `k x (d - k)` box.
pub fn schubert_cells(d: u64, k: u64) -> CellMultiset {
    if k > d {
        return CellMultiset(Vec::new());
    }
    let width = d - k;
    let mut sizes = Vec::new();
    let mut parts = Vec::with_capacity(k as usize);
    box_partitions(k as usize, width, &mut parts, &mut sizes);
    CellMultiset::from_unsorted(sizes)
}

// Appends the size of every weakly decreasing completion of `parts` to
// length `rows` with entries at most `max`.
fn box_partitions(rows: usize, max: u64, parts: &mut Vec<u64>, sizes: &mut Vec<u64>) {
    if parts.len() == rows {
        sizes.push(parts.iter().sum());
        return;
    }
    for next in 0..=max {
        parts.push(next);
        box_partitions(rows, next, parts, sizes);
        parts.pop();
    }
}
