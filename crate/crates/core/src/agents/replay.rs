use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

/// Fixed-capacity ring buffer with oldest-first eviction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    /// Slot the next push overwrites once full.
    head: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::new(),
            head: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Stores `item` and returns its storage index.
    pub fn push(&mut self, item: T) -> usize {
        if self.items.len() < self.capacity {
            self.items.push(item);
            self.items.len() - 1
        } else {
            let slot = self.head;
            self.items[slot] = item;
            self.head = (self.head + 1) % self.capacity;
            slot
        }
    }

    pub fn get(&self, index: usize) -> &T {
        &self.items[index]
    }

    /// Items from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer.iter())
    }

    /// `batch` distinct storage indices drawn uniformly, or `None` when the
    /// buffer holds fewer items.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Vec<usize>> {
        if batch > self.items.len() {
            return None;
        }
        Some(rand::seq::index::sample(rng, self.items.len(), batch).into_vec())
    }
}

/// Binary tree of non-negative weights with prefix-sum search, for
/// sampling storage slots in proportion to their priority.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    leaves: usize,
    /// Heap layout: node `i` has children `2i+1` and `2i+2`; leaves start at `leaves - 1`.
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        SumTree {
            leaves,
            nodes: vec![0.0; 2 * leaves - 1],
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[0]
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.nodes[self.leaves - 1 + slot]
    }

    pub fn set(&mut self, slot: usize, weight: f64) {
        debug_assert!(weight >= 0.0 && weight.is_finite());
        let mut i = self.leaves - 1 + slot;
        self.nodes[i] = weight;
        while i > 0 {
            i = (i - 1) / 2;
            self.nodes[i] = self.nodes[2 * i + 1] + self.nodes[2 * i + 2];
        }
    }

    /// Slot whose cumulative weight range holds `mass`, for `mass` in `[0, total)`.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut i = 0;
        while i < self.leaves - 1 {
            let left = 2 * i + 1;
            // Never descend into an empty subtree, even when rounding says so.
            if (mass < self.nodes[left] && self.nodes[left] > 0.0) || self.nodes[left + 1] <= 0.0 {
                i = left;
            } else {
                mass -= self.nodes[left];
                i = left + 1;
            }
        }
        i - (self.leaves - 1)
    }

    /// `batch` distinct slots, each draw proportional to the remaining
    /// weights. `None` when fewer than `batch` slots carry weight.
    pub fn sample<R: Rng + ?Sized>(&mut self, batch: usize, rng: &mut R) -> Option<Vec<usize>> {
        let mut taken: Vec<(usize, f64)> = Vec::with_capacity(batch);
        while taken.len() < batch {
            let total = self.total();
            if total <= 0.0 {
                break;
            }
            let slot = self.find(rng.random::<f64>() * total);
            taken.push((slot, self.get(slot)));
            self.set(slot, 0.0);
        }
        let ok = taken.len() == batch;
        let slots = taken.iter().map(|&(s, _)| s).collect();
        for (s, w) in taken {
            self.set(s, w);
        }
        ok.then_some(slots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn sum_tree_samples_in_proportion() {
        let mut t = SumTree::new(5);
        for (slot, w) in [1.0, 0.0, 3.0, 0.0, 6.0].into_iter().enumerate() {
            t.set(slot, w);
        }
        assert_eq!(t.total(), 10.0);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(9.99), 4);
        let mut rng = stream(1, Stream::AgentA);
        let mut hits = [0u32; 5];
        for _ in 0..20_000 {
            hits[t.sample(1, &mut rng).unwrap()[0]] += 1;
        }
        assert_eq!((hits[1], hits[3]), (0, 0));
        assert!((hits[4] as f64 / 20_000.0 - 0.6).abs() < 0.02, "{hits:?}");
        let mut all = t.sample(3, &mut rng).unwrap();
        all.sort_unstable();
        assert_eq!(all, [0, 2, 4]);
        assert!(t.sample(4, &mut rng).is_none());
        assert_eq!(t.total(), 10.0, "weights restored after sampling");
    }

    #[test]
    fn evicts_oldest_first() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(i);
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), [2, 3, 4]);
    }

    #[test]
    fn samples_distinct_indices() {
        let mut b = ReplayBuffer::new(10);
        let mut rng = stream(0, Stream::AgentA);
        assert!(b.sample_indices(1, &mut rng).is_none());
        for i in 0..10 {
            b.push(i);
        }
        let mut idx = b.sample_indices(10, &mut rng).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, (0..10).collect::<Vec<_>>());
    }
}
