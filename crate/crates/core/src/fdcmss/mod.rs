//! Forward-decay Count-Min sketch whose cells are two-counter Space-Saving
//! summaries.
//!
//! All stored counter values are non-normalized sums of `g(t_i - L)`.
//! Normalization by `g(t - L)` happens only when the sketch is queried.
//! Sketches built with the same `(d, w, hash_seed)` share their hash
//! functions and can be merged.

mod codec;
mod decay;
mod hash;
mod summary;

use std::collections::BTreeMap;

pub use codec::{decode, encode, encoded_len, FORMAT_VERSION, MAGIC};
pub use decay::{weight, DecayKind, DecaySpec, Timestamp};
pub use hash::{derive_row_hashes, RowHash, PRIME};
pub use summary::{Counter, SSummary};

use crate::error::{Error, Result};

/// Items are 32-bit unsigned integers.
pub type ItemId = u32;

#[derive(Clone, Debug, PartialEq)]
pub struct Sketch {
    d: usize,
    w: usize,
    hash_seed: u64,
    hashes: Vec<RowHash>,
    /// Row-major `d x w` grid.
    cells: Vec<SSummary>,
}

impl Sketch {
    /// Allocates an empty `d x w` sketch with hash functions derived from
    /// `hash_seed`.
    pub fn new(d: usize, w: usize, hash_seed: u64) -> Result<Self> {
        if d == 0 || w == 0 {
            return Err(Error::invalid(format!(
                "sketch dimensions must be positive, got d={d}, w={w}"
            )));
        }
        if d.checked_mul(w).is_none() {
            return Err(Error::invalid("sketch dimensions overflow"));
        }
        Ok(Sketch {
            d,
            w,
            hash_seed,
            hashes: derive_row_hashes(d, hash_seed),
            cells: vec![SSummary::EMPTY; d * w],
        })
    }

    pub fn depth(&self) -> usize {
        self.d
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }

    pub fn row_hashes(&self) -> &[RowHash] {
        &self.hashes
    }

    /// Column of `item` in `row`.
    pub fn bucket(&self, row: usize, item: ItemId) -> usize {
        self.hashes[row].bucket(item, self.w)
    }

    pub fn cell(&self, row: usize, col: usize) -> &SSummary {
        &self.cells[row * self.w + col]
    }

    pub fn cells(&self) -> &[SSummary] {
        &self.cells
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [SSummary] {
        &mut self.cells
    }

    /// Two sketches can be merged iff they share dimensions and hash seed.
    pub fn is_compatible(&self, other: &Sketch) -> bool {
        self.d == other.d && self.w == other.w && self.hash_seed == other.hash_seed
    }

    fn check_compatible(&self, other: &Sketch) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(Error::Incompatible(format!(
                "({}, {}, {:#x}) vs ({}, {}, {:#x})",
                self.d, self.w, self.hash_seed, other.d, other.w, other.hash_seed
            )))
        }
    }

    /// Adds an occurrence with an already computed non-normalized weight.
    pub fn update_weight(&mut self, item: ItemId, x: f64) {
        for row in 0..self.d {
            let col = self.bucket(row, item);
            self.cells[row * self.w + col].update(item, x);
        }
    }

    /// Adds the occurrence `(item, ts)` with weight `g(ts - L)`.
    pub fn update(&mut self, item: ItemId, ts: Timestamp, decay: &DecaySpec) -> Result<()> {
        let x = decay.weight(ts)?;
        self.update_weight(item, x);
        Ok(())
    }

    /// Non-normalized point estimate: the minimum over the `d` mapped cells.
    pub fn estimate_raw(&self, item: ItemId) -> f64 {
        (0..self.d)
            .map(|row| self.cell(row, self.bucket(row, item)).estimate(item))
            .fold(f64::INFINITY, f64::min)
    }

    /// Decayed frequency estimate of `item` at query time `t`.
    pub fn point_estimate(&self, item: ItemId, t: Timestamp, decay: &DecaySpec) -> Result<f64> {
        Ok(self.estimate_raw(item) / decay.weight(t)?)
    }

    /// Non-normalized total mass of row 0. By the 1-norm property every
    /// row holds the same total.
    pub fn total_raw(&self) -> f64 {
        self.row_total_raw(0)
    }

    pub fn row_total_raw(&self, row: usize) -> f64 {
        self.cells[row * self.w..(row + 1) * self.w]
            .iter()
            .map(SSummary::mass)
            .sum()
    }

    /// Estimated decayed count at query time `t`.
    pub fn total(&self, t: Timestamp, decay: &DecaySpec) -> Result<f64> {
        Ok(self.total_raw() / decay.weight(t)?)
    }

    /// Cell-wise merge of two compatible sketches.
    pub fn merge(&self, other: &Sketch) -> Result<Sketch> {
        self.check_compatible(other)?;
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| a.merge(b))
            .collect();
        Ok(Sketch {
            d: self.d,
            w: self.w,
            hash_seed: self.hash_seed,
            hashes: self.hashes.clone(),
            cells,
        })
    }

    /// Divides every counter by `v`.
    pub fn scale(&mut self, v: f64) -> Result<()> {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("scale factor must be positive, got {v}")));
        }
        for cell in &mut self.cells {
            cell.scale(v);
        }
        Ok(())
    }

    /// Returns a copy with every counter divided by `v`.
    pub fn scaled(&self, v: f64) -> Result<Sketch> {
        let mut out = self.clone();
        out.scale(v)?;
        Ok(out)
    }

    /// Candidate heavy hitters of this sketch alone.
    ///
    /// With `C` the estimated total and `tau = phi * C * (1 - eps*) / (1 + eps*)`,
    /// an item is reported when it is the larger counter of some cell, that
    /// counter normalized exceeds `tau`, and its point estimate exceeds `tau`.
    /// The result is sorted by item and lists each item once.
    pub fn local_query(
        &self,
        phi: f64,
        eps_star: f64,
        t: Timestamp,
        decay: &DecaySpec,
    ) -> Result<Vec<(ItemId, f64)>> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::invalid(format!("phi must lie in (0, 1), got {phi}")));
        }
        if !(0.0..1.0).contains(&eps_star) {
            return Err(Error::invalid(format!("eps* must lie in [0, 1), got {eps_star}")));
        }
        let norm = decay.weight(t)?;
        let total = self.total_raw() / norm;
        let tau = phi * total * (1.0 - eps_star) / (1.0 + eps_star);

        let mut found = BTreeMap::new();
        for cell in &self.cells {
            let cm = cell.max_counter();
            let Some(item) = cm.item else { continue };
            if cm.fhat / norm > tau && !found.contains_key(&item) {
                let estimate = self.estimate_raw(item) / norm;
                if estimate > tau {
                    found.insert(item, estimate);
                }
            }
        }
        Ok(found.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_decay() -> DecaySpec {
        DecaySpec::polynomial(1.0, 0).unwrap()
    }

    fn one_cell(a: (ItemId, f64), b: (ItemId, f64)) -> Sketch {
        let mut sk = Sketch::new(1, 1, 0).unwrap();
        sk.cells_mut()[0] = SSummary::from_counters(Counter::new(a.0, a.1), Counter::new(b.0, b.1));
        sk
    }

    #[test]
    fn construction() {
        let sk = Sketch::new(4, 8, 42).unwrap();
        assert_eq!(sk.cells().len(), 32);
        let empty = sk
            .cells()
            .iter()
            .flat_map(|c| c.counters.iter())
            .filter(|c| c.is_empty())
            .count();
        assert_eq!(empty, 64);
        assert!(matches!(Sketch::new(0, 8, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(Sketch::new(4, 0, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn same_seed_same_mapping() {
        let a = Sketch::new(4, 8, 7).unwrap();
        let b = Sketch::new(4, 8, 7).unwrap();
        for item in 0..10_000u32 {
            for row in 0..4 {
                assert_eq!(a.bucket(row, item), b.bucket(row, item));
            }
        }
    }

    #[test]
    fn single_row_updates() {
        let mut sk = Sketch::new(1, 4, 3).unwrap();
        sk.update_weight(10, 2.0);
        let col = sk.bucket(0, 10);
        assert_eq!(*sk.cell(0, col), SSummary::from_counters(Counter::new(10, 2.0), Counter::EMPTY));
        sk.update_weight(10, 2.0);
        assert_eq!(*sk.cell(0, col), SSummary::from_counters(Counter::new(10, 4.0), Counter::EMPTY));
    }

    #[test]
    fn update_uses_decay_weight() {
        let decay = DecaySpec::polynomial(2.0, 0).unwrap();
        let mut sk = Sketch::new(2, 4, 3).unwrap();
        sk.update(9, Timestamp(3), &decay).unwrap();
        assert_eq!(sk.estimate_raw(9), 9.0);
        assert!(sk.update(9, Timestamp(0), &decay).is_err());
    }

    #[test]
    fn point_estimate_hand_traces() {
        let sk = one_cell((1, 5.0), (2, 2.0));
        let t = Timestamp(1);
        assert_eq!(sk.point_estimate(1, t, &unit_decay()).unwrap(), 5.0);
        assert_eq!(sk.point_estimate(3, t, &unit_decay()).unwrap(), 2.0);
        let empty = Sketch::new(3, 5, 1).unwrap();
        assert_eq!(empty.point_estimate(77, Timestamp(9), &unit_decay()).unwrap(), 0.0);
    }

    #[test]
    fn totals() {
        let mut sk = Sketch::new(3, 5, 1).unwrap();
        assert_eq!(sk.total(Timestamp(10), &unit_decay()).unwrap(), 0.0);
        sk.update_weight(1, 2.0);
        sk.update_weight(2, 3.0);
        assert_eq!(sk.total(Timestamp(10), &unit_decay()).unwrap(), 0.5);
        for row in 0..3 {
            assert_eq!(sk.row_total_raw(row), 5.0);
        }
    }

    #[test]
    fn merge_requires_compatibility() {
        let a = Sketch::new(2, 4, 1).unwrap();
        assert!(matches!(a.merge(&Sketch::new(2, 4, 2).unwrap()), Err(Error::Incompatible(_))));
        assert!(a.merge(&Sketch::new(2, 5, 1).unwrap()).is_err());
        assert!(a.merge(&Sketch::new(3, 4, 1).unwrap()).is_err());
    }

    #[test]
    fn merge_with_empty_sketch() {
        let mut a = Sketch::new(2, 4, 1).unwrap();
        for (i, x) in [(1u32, 2.0), (2, 3.0), (3, 1.5), (1, 0.5)] {
            a.update_weight(i, x);
        }
        let empty = Sketch::new(2, 4, 1).unwrap();
        assert_eq!(a.merge(&empty).unwrap(), a);
    }

    #[test]
    fn merge_and_scale_hand_trace() {
        let a = one_cell((1, 5.0), (2, 3.0));
        let b = one_cell((1, 2.0), (3, 4.0));
        let mut m = a.merge(&b).unwrap();
        assert_eq!(*m.cell(0, 0), SSummary::from_counters(Counter::new(1, 7.0), Counter::new(3, 7.0)));
        m.scale(2.0).unwrap();
        assert_eq!(*m.cell(0, 0), SSummary::from_counters(Counter::new(1, 3.5), Counter::new(3, 3.5)));
    }

    #[test]
    fn scale_identity_and_inverse() {
        let mut a = Sketch::new(2, 4, 1).unwrap();
        for (i, x) in [(1u32, 2.0), (2, 3.0), (3, 1.25)] {
            a.update_weight(i, x);
        }
        assert_eq!(a.scaled(1.0).unwrap(), a);
        let back = a.scaled(2.0).unwrap().scaled(0.5).unwrap();
        for (x, y) in back.cells().iter().zip(a.cells()) {
            for (cx, cy) in x.counters.iter().zip(&y.counters) {
                assert_eq!(cx.item, cy.item);
                assert!((cx.fhat - cy.fhat).abs() <= 1e-12 * cy.fhat.abs());
            }
        }
        assert!(a.scale(0.0).is_err());
        assert!(a.scale(-1.0).is_err());
    }

    #[test]
    fn local_query_hand_trace() {
        let sk = one_cell((1, 8.0), (2, 2.0));
        let h = sk.local_query(0.5, 0.0, Timestamp(1), &unit_decay()).unwrap();
        assert_eq!(h, vec![(1, 8.0)]);
        let empty = Sketch::new(2, 3, 1).unwrap();
        assert!(empty.local_query(0.5, 0.0, Timestamp(1), &unit_decay()).unwrap().is_empty());
    }

    #[test]
    fn local_query_reports_each_item_once() {
        let mut sk = Sketch::new(4, 16, 5).unwrap();
        for _ in 0..10 {
            sk.update_weight(7, 1.0);
        }
        sk.update_weight(8, 1.0);
        let h = sk.local_query(0.2, 0.0, Timestamp(1), &unit_decay()).unwrap();
        assert_eq!(h, vec![(7, 10.0)]);
    }

    #[test]
    fn local_query_validates_arguments() {
        let sk = Sketch::new(1, 1, 0).unwrap();
        let t = Timestamp(1);
        assert!(sk.local_query(0.0, 0.0, t, &unit_decay()).is_err());
        assert!(sk.local_query(1.0, 0.0, t, &unit_decay()).is_err());
        assert!(sk.local_query(0.5, 1.0, t, &unit_decay()).is_err());
        assert!(sk.local_query(0.5, -0.1, t, &unit_decay()).is_err());
    }
}
