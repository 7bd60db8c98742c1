// SPDX-License-Identifier: MIT OR Apache-2.0

//! Insert-only order-statistic index for prefix scans.
//!
//! The full series is known up front, so every observation gets a fixed slot
//! (its rank in the sorted series). A segment tree over the slots keeps, per
//! node, the count, mean and centered sum of squares of the inserted values.
//! That gives `O(log n)` insertion, `k`-th order statistic lookup and
//! window moments. Window moments are merged only from nodes that lie inside
//! the window, so huge values outside it never enter the arithmetic.

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u32,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn single(x: f64) -> Self {
        Self { count: 1, mean: x, m2: 0.0 }
    }

    // Chan et al. pairwise update.
    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let na = f64::from(self.count);
        let nb = f64::from(other.count);
        let n = na + nb;
        let delta = other.mean - self.mean;
        Self {
            count: self.count + other.count,
            mean: self.mean + delta * (nb / n),
            m2: self.m2 + other.m2 + delta * delta * (na * nb / n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrderStatIndex {
    /// Observation values in slot (rank) order.
    by_rank: Vec<f64>,
    /// Slot of each observation, by original position.
    slot_of: Vec<usize>,
    leaves: usize,
    tree: Vec<Moments>,
    len: usize,
}

impl OrderStatIndex {
    /// Prepares an empty index able to hold any subset of `series`.
    pub fn new(series: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..series.len()).collect();
        order.sort_by(|&i, &j| series[i].total_cmp(&series[j]).then(i.cmp(&j)));
        let mut slot_of = vec![0; series.len()];
        for (slot, &i) in order.iter().enumerate() {
            slot_of[i] = slot;
        }
        let by_rank = order.iter().map(|&i| series[i]).collect();
        let leaves = series.len().max(1).next_power_of_two();
        Self { by_rank, slot_of, leaves, tree: vec![Moments::default(); 2 * leaves], len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Inserts the observation at original position `i`.
    pub fn insert(&mut self, i: usize) {
        let slot = self.slot_of[i];
        let mut node = self.leaves + slot;
        debug_assert_eq!(self.tree[node].count, 0, "position {i} inserted twice");
        self.tree[node] = Moments::single(self.by_rank[slot]);
        node /= 2;
        while node >= 1 {
            self.tree[node] = self.tree[2 * node].merge(self.tree[2 * node + 1]);
            node /= 2;
        }
        self.len += 1;
    }

    fn kth_slot(&self, mut k: usize) -> usize {
        debug_assert!(k < self.len);
        let mut node = 1;
        while node < self.leaves {
            let left = self.tree[2 * node].count as usize;
            if k < left {
                node *= 2;
            } else {
                k -= left;
                node = 2 * node + 1;
            }
        }
        node - self.leaves
    }

    /// `k`-th smallest inserted value, zero-based.
    pub fn kth(&self, k: usize) -> f64 {
        self.by_rank[self.kth_slot(k)]
    }

    pub fn median(&self) -> f64 {
        let n = self.len;
        if n % 2 == 1 {
            self.kth(n / 2)
        } else {
            crate::estimators::midpoint(self.kth(n / 2 - 1), self.kth(n / 2))
        }
    }

    /// Number of inserted values strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let (mut lo, mut hi) = (0, self.len);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.kth(mid) < x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `k`-th smallest absolute deviation `|x - center|`, zero-based.
    ///
    /// Deviations left of `center` increase as the rank decreases and those
    /// right of it increase with rank, so this is a selection over two sorted
    /// sequences and needs no materialized deviation array.
    pub fn kth_abs_deviation(&self, center: f64, k: usize) -> f64 {
        debug_assert!(k < self.len);
        let split = self.count_below(center);
        let left_len = split;
        let right_len = self.len - split;
        let left = |j: usize| center - self.kth(split - 1 - j);
        let right = |j: usize| self.kth(split + j) - center;
        // Take `t` from the left sequence and `k + 1 - t` from the right.
        let need = k + 1;
        let mut lo = need.saturating_sub(right_len);
        let mut hi = need.min(left_len);
        while lo < hi {
            let t = (lo + hi) / 2;
            // Too few taken from the left if its next element beats the last
            // one taken from the right.
            if left(t) < right(need - t - 1) {
                lo = t + 1;
            } else {
                hi = t;
            }
        }
        let t = lo;
        match (t, need - t) {
            (0, r) => right(r - 1),
            (l, 0) => left(l - 1),
            (l, r) => left(l - 1).max(right(r - 1)),
        }
    }

    /// Median of `|x - center|` over the inserted values.
    pub fn median_abs_deviation(&self, center: f64) -> f64 {
        let n = self.len;
        if n % 2 == 1 {
            self.kth_abs_deviation(center, n / 2)
        } else {
            crate::estimators::midpoint(
                self.kth_abs_deviation(center, n / 2 - 1),
                self.kth_abs_deviation(center, n / 2),
            )
        }
    }

    /// Population variance of the order statistics with zero-based ranks in
    /// `[lo, hi)`.
    pub fn window_variance(&self, lo: usize, hi: usize) -> f64 {
        debug_assert!(lo < hi && hi <= self.len);
        let first = self.kth_slot(lo) + self.leaves;
        let last = self.kth_slot(hi - 1) + self.leaves;
        // Bottom-up range query over the closed slot range [first, last].
        // Left and right partial results are kept separately to preserve the
        // merge order.
        let (mut l, mut r) = (first, last + 1);
        let mut acc_l = Moments::default();
        let mut acc_r = Moments::default();
        while l < r {
            if l & 1 == 1 {
                acc_l = acc_l.merge(self.tree[l]);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                acc_r = self.tree[r].merge(acc_r);
            }
            l /= 2;
            r /= 2;
        }
        let m = acc_l.merge(acc_r);
        debug_assert_eq!(m.count as usize, hi - lo);
        m.m2 / f64::from(m.count)
    }
}
