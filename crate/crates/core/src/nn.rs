//! Exact Euclidean nearest and radius queries over a growing, prunable point set.
//!
//! Points live in a static k-d tree that is rebuilt from scratch once enough
//! insertions have accumulated in a linear side buffer, or once too many
//! indexed points have been removed. Small sets are scanned linearly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::distance_sq;

/// Handle of a vertex within one tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

const LINEAR_LIMIT: usize = 64;
const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
pub struct NearestIndex {
    dim: usize,
    /// Slot-major coordinates.
    coords: Vec<f64>,
    ids: Vec<VertexId>,
    live: Vec<bool>,
    slot_of: HashMap<VertexId, usize>,
    /// Slots covered by the k-d tree, permuted into tree order.
    order: Vec<usize>,
    /// Split axis for each position of `order`.
    split_axis: Vec<u32>,
    /// Slots inserted since the last rebuild.
    pending: Vec<usize>,
    live_count: usize,
    /// Removed slots not yet compacted away.
    dead: usize,
}

impl NearestIndex {
    pub fn new(dim: usize) -> Self {
        NearestIndex {
            dim,
            coords: Vec::new(),
            ids: Vec::new(),
            live: Vec::new(),
            slot_of: HashMap::new(),
            order: Vec::new(),
            split_axis: Vec::new(),
            pending: Vec::new(),
            live_count: 0,
            dead: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.live_count
    }

    pub fn is_empty(&self) -> bool {
        self.live_count == 0
    }

    pub fn contains(&self, id: VertexId) -> bool {
        self.slot_of.contains_key(&id)
    }

    pub fn insert(&mut self, id: VertexId, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if self.slot_of.contains_key(&id) {
            return Err(Error::DuplicateVertex(id.0));
        }
        let slot = self.ids.len();
        self.coords.extend_from_slice(x);
        self.ids.push(id);
        self.live.push(true);
        self.slot_of.insert(id, slot);
        self.pending.push(slot);
        self.live_count += 1;
        if self.live_count > LINEAR_LIMIT && self.pending.len() > (self.order.len() / 4).max(LINEAR_LIMIT) {
            self.rebuild();
        }
        Ok(())
    }

    pub fn remove(&mut self, id: VertexId) -> Result<()> {
        let slot = self.slot_of.remove(&id).ok_or(Error::UnknownVertex(id.0))?;
        self.live[slot] = false;
        self.live_count -= 1;
        self.dead += 1;
        if self.dead > LINEAR_LIMIT && 2 * self.dead > self.ids.len() {
            self.rebuild();
        }
        Ok(())
    }

    /// Closest live point; ties go to the smallest id.
    pub fn nearest(&self, x: &[f64]) -> Result<VertexId> {
        if self.live_count == 0 {
            return Err(Error::EmptyIndex);
        }
        let mut best = (f64::INFINITY, VertexId(usize::MAX));
        if !self.order.is_empty() {
            self.nearest_in(0, self.order.len(), x, &mut best);
        }
        for &slot in &self.pending {
            self.consider(slot, x, &mut best);
        }
        Ok(best.1)
    }

    /// All live ids within the closed ball of radius `r`, sorted by id.
    pub fn near(&self, x: &[f64], r: f64) -> Vec<VertexId> {
        let mut out = Vec::new();
        if r < 0.0 || r.is_nan() {
            return out;
        }
        if !self.order.is_empty() {
            self.near_in(0, self.order.len(), x, r, &mut out);
        }
        for &slot in &self.pending {
            if self.live[slot] && distance_sq(self.point(slot), x).sqrt() <= r {
                out.push(self.ids[slot]);
            }
        }
        out.sort_unstable();
        out
    }

    pub fn ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.slot_of.keys().copied()
    }

    #[inline]
    fn point(&self, slot: usize) -> &[f64] {
        &self.coords[slot * self.dim..(slot + 1) * self.dim]
    }

    #[inline]
    fn consider(&self, slot: usize, x: &[f64], best: &mut (f64, VertexId)) {
        if !self.live[slot] {
            return;
        }
        let d = distance_sq(self.point(slot), x);
        let id = self.ids[slot];
        if d < best.0 || (d == best.0 && id < best.1) {
            *best = (d, id);
        }
    }

    fn nearest_in(&self, lo: usize, hi: usize, x: &[f64], best: &mut (f64, VertexId)) {
        if hi - lo <= LEAF_SIZE {
            for &slot in &self.order[lo..hi] {
                self.consider(slot, x, best);
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let slot = self.order[mid];
        let axis = self.split_axis[mid] as usize;
        let diff = x[axis] - self.point(slot)[axis];
        self.consider(slot, x, best);
        let (first, second) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_in(first.0, first.1, x, best);
        // Equal plane distance may still hide a smaller id.
        if diff * diff <= best.0 {
            self.nearest_in(second.0, second.1, x, best);
        }
    }

    fn near_in(&self, lo: usize, hi: usize, x: &[f64], r: f64, out: &mut Vec<VertexId>) {
        if hi - lo <= LEAF_SIZE {
            for &slot in &self.order[lo..hi] {
                if self.live[slot] && distance_sq(self.point(slot), x).sqrt() <= r {
                    out.push(self.ids[slot]);
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let slot = self.order[mid];
        let axis = self.split_axis[mid] as usize;
        let diff = x[axis] - self.point(slot)[axis];
        if self.live[slot] && distance_sq(self.point(slot), x).sqrt() <= r {
            out.push(self.ids[slot]);
        }
        if diff <= r {
            self.near_in(lo, mid, x, r, out);
        }
        if diff >= -r {
            self.near_in(mid + 1, hi, x, r, out);
        }
    }

    fn rebuild(&mut self) {
        // Compact away dead slots.
        let mut coords = Vec::with_capacity(self.live_count * self.dim);
        let mut ids = Vec::with_capacity(self.live_count);
        for slot in 0..self.ids.len() {
            if self.live[slot] {
                coords.extend_from_slice(self.point(slot));
                ids.push(self.ids[slot]);
            }
        }
        self.coords = coords;
        self.live = vec![true; ids.len()];
        self.slot_of = ids.iter().enumerate().map(|(s, id)| (*id, s)).collect();
        self.ids = ids;
        self.pending.clear();
        self.dead = 0;

        let n = self.ids.len();
        self.order = (0..n).collect();
        self.split_axis = vec![0; n];
        self.build(0, n);
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi - lo <= LEAF_SIZE {
            return;
        }
        let dim = self.dim;
        let axis = (0..dim)
            .map(|a| {
                let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
                for &slot in &self.order[lo..hi] {
                    let v = self.coords[slot * dim + a];
                    min = min.min(v);
                    max = max.max(v);
                }
                (a, max - min)
            })
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc })
            .0;
        let mid = lo + (hi - lo) / 2;
        let coords = &self.coords;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            coords[a * dim + axis].total_cmp(&coords[b * dim + axis])
        });
        self.split_axis[mid] = axis as u32;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    /// Linear-scan reference over the live set.
    #[derive(Default)]
    struct Oracle {
        points: BTreeMap<VertexId, Vec<f64>>,
    }

    impl Oracle {
        fn nearest(&self, x: &[f64]) -> Option<VertexId> {
            let mut best: Option<(f64, VertexId)> = None;
            for (id, p) in &self.points {
                let d: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, *id));
                }
            }
            best.map(|b| b.1)
        }

        fn near(&self, x: &[f64], r: f64) -> Vec<VertexId> {
            self.points
                .iter()
                .filter(|(_, p)| {
                    p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= r
                })
                .map(|(id, _)| *id)
                .collect()
        }
    }

    fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect()
    }

    #[test]
    fn trivial_queries() {
        let mut idx = NearestIndex::new(2);
        assert_eq!(idx.nearest(&[0.0, 0.0]), Err(Error::EmptyIndex));
        idx.insert(VertexId(7), &[0.1, 0.2]).unwrap();
        assert_eq!(idx.nearest(&[0.4, 0.4]).unwrap(), VertexId(7));
        assert_eq!(idx.near(&[0.1, 0.2], 0.0), vec![VertexId(7)]);
        assert_eq!(idx.insert(VertexId(7), &[0.0, 0.0]), Err(Error::DuplicateVertex(7)));
        idx.insert(VertexId(3), &[0.3, 0.3]).unwrap();
        assert_eq!(idx.near(&[0.0, 0.0], 2.0), vec![VertexId(3), VertexId(7)]);
        idx.remove(VertexId(7)).unwrap();
        assert_eq!(idx.nearest(&[0.1, 0.2]).unwrap(), VertexId(3));
        assert_eq!(idx.remove(VertexId(7)), Err(Error::UnknownVertex(7)));
        idx.remove(VertexId(3)).unwrap();
        assert_eq!(idx.nearest(&[0.0, 0.0]), Err(Error::EmptyIndex));
    }

    #[test]
    fn ties_prefer_smallest_id() {
        let mut idx = NearestIndex::new(2);
        for i in (0..200).rev() {
            idx.insert(VertexId(i), &[0.25, 0.25]).unwrap();
        }
        assert_eq!(idx.nearest(&[0.0, 0.0]).unwrap(), VertexId(0));
    }

    #[test]
    fn matches_linear_scan_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for dim in [2, 4, 8] {
            let mut idx = NearestIndex::new(dim);
            let mut oracle = Oracle::default();
            for i in 0..1000 {
                let p = random_point(&mut rng, dim);
                idx.insert(VertexId(i), &p).unwrap();
                oracle.points.insert(VertexId(i), p);
            }
            for _ in 0..100 {
                let q = random_point(&mut rng, dim);
                assert_eq!(Some(idx.nearest(&q).unwrap()), oracle.nearest(&q));
                let r = rng.random_range(0.0..0.4);
                assert_eq!(idx.near(&q, r), oracle.near(&q, r));
            }
            let q = random_point(&mut rng, dim);
            assert_eq!(idx.near(&q, 10.0).len(), 1000);
        }
    }

    #[derive(Clone, Debug)]
    enum Op {
        Insert(Vec<f64>),
        Remove(usize),
        Nearest(Vec<f64>),
        Near(Vec<f64>, f64),
    }

    fn op() -> impl Strategy<Value = Op> {
        let pt = prop::collection::vec(-0.5f64..0.5, 3);
        prop_oneof![
            6 => pt.clone().prop_map(Op::Insert),
            2 => any::<usize>().prop_map(Op::Remove),
            2 => pt.clone().prop_map(Op::Nearest),
            1 => (pt, 0.0f64..0.6).prop_map(|(p, r)| Op::Near(p, r)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn interleaved_operations_match_oracle(ops in prop::collection::vec(op(), 1..600)) {
            let mut idx = NearestIndex::new(3);
            let mut oracle = Oracle::default();
            let mut next = 0usize;
            for op in ops {
                match op {
                    Op::Insert(p) => {
                        idx.insert(VertexId(next), &p).unwrap();
                        oracle.points.insert(VertexId(next), p);
                        next += 1;
                    }
                    Op::Remove(k) => {
                        if !oracle.points.is_empty() {
                            let id = *oracle.points.keys().nth(k % oracle.points.len()).unwrap();
                            oracle.points.remove(&id);
                            idx.remove(id).unwrap();
                        }
                    }
                    Op::Nearest(q) => {
                        prop_assert_eq!(idx.nearest(&q).ok(), oracle.nearest(&q));
                    }
                    Op::Near(q, r) => {
                        prop_assert_eq!(idx.near(&q, r), oracle.near(&q, r));
                    }
                }
                prop_assert_eq!(idx.len(), oracle.points.len());
            }
        }
    }
}
