//! Two-counter Space-Saving summaries, the content of every sketch cell.

use std::cmp::Ordering;

use super::ItemId;

/// One Space-Saving counter. An empty counter has no item and `fhat == 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Counter {
    pub item: Option<ItemId>,
    pub fhat: f64,
}

impl Counter {
    pub const EMPTY: Counter = Counter { item: None, fhat: 0.0 };

    pub fn new(item: ItemId, fhat: f64) -> Self {
        Counter {
            item: Some(item),
            fhat,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.item.is_none()
    }
}

/// A Space-Saving summary with exactly two counters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SSummary {
    pub counters: [Counter; 2],
}

impl SSummary {
    pub const EMPTY: SSummary = SSummary {
        counters: [Counter::EMPTY, Counter::EMPTY],
    };

    pub fn from_counters(a: Counter, b: Counter) -> Self {
        SSummary { counters: [a, b] }
    }

    /// Index of the counter monitoring `item`, if any.
    pub fn find(&self, item: ItemId) -> Option<usize> {
        self.counters.iter().position(|c| c.item == Some(item))
    }

    /// Minimum counter value; an empty counter counts as zero.
    pub fn min_fhat(&self) -> f64 {
        self.counters[0].fhat.min(self.counters[1].fhat)
    }

    /// Sum of both counters.
    pub fn mass(&self) -> f64 {
        self.counters[0].fhat + self.counters[1].fhat
    }

    /// The majority item candidate: the counter with the larger value
    /// (first counter on ties).
    pub fn max_counter(&self) -> &Counter {
        if self.counters[1].fhat > self.counters[0].fhat {
            &self.counters[1]
        } else {
            &self.counters[0]
        }
    }

    /// Estimated (non-normalized) frequency of `item` in this cell's
    /// sub-stream: its counter if monitored, otherwise the minimum counter.
    pub fn estimate(&self, item: ItemId) -> f64 {
        match self.find(item) {
            Some(k) => self.counters[k].fhat,
            None => self.min_fhat(),
        }
    }

    /// Space-Saving update with non-negative weight `x`.
    ///
    /// Eviction on a tie at the minimum takes the lower-index counter.
    pub fn update(&mut self, item: ItemId, x: f64) {
        debug_assert!(x >= 0.0);
        if let Some(k) = self.find(item) {
            self.counters[k].fhat += x;
            return;
        }
        if let Some(k) = self.counters.iter().position(Counter::is_empty) {
            self.counters[k] = Counter::new(item, x);
            return;
        }
        let k = if self.counters[1].fhat < self.counters[0].fhat { 1 } else { 0 };
        let c = &mut self.counters[k];
        c.fhat += x;
        c.item = Some(item);
    }

    /// Merges two summaries.
    ///
    /// Items monitored by both sides get the sum of their counters; items
    /// monitored by one side get their counter plus the other side's
    /// minimum. The two largest candidates survive, ordered by
    /// `(fhat desc, item asc)`.
    pub fn merge(&self, other: &SSummary) -> SSummary {
        let m_self = self.min_fhat();
        let m_other = other.min_fhat();
        let mut candidates: [Counter; 4] = [Counter::EMPTY; 4];
        let mut n = 0;

        for c in self.counters.iter().filter(|c| !c.is_empty()) {
            let item = c.item.expect("occupied");
            let fhat = match other.find(item) {
                Some(k) => c.fhat + other.counters[k].fhat,
                None => c.fhat + m_other,
            };
            candidates[n] = Counter::new(item, fhat);
            n += 1;
        }
        for c in other.counters.iter().filter(|c| !c.is_empty()) {
            let item = c.item.expect("occupied");
            if self.find(item).is_none() {
                candidates[n] = Counter::new(item, c.fhat + m_self);
                n += 1;
            }
        }

        let candidates = &mut candidates[..n];
        candidates.sort_by(purge_order);
        let mut merged = SSummary::EMPTY;
        for (slot, c) in merged.counters.iter_mut().zip(candidates.iter()) {
            *slot = *c;
        }
        merged
    }

    /// Divides both counters by `v`.
    pub fn scale(&mut self, v: f64) {
        for c in &mut self.counters {
            c.fhat /= v;
        }
    }
}

fn purge_order(a: &Counter, b: &Counter) -> Ordering {
    b.fhat.total_cmp(&a.fhat).then_with(|| a.item.cmp(&b.item))
}
