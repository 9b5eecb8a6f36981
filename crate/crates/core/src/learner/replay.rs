use std::collections::VecDeque;

use rand::Rng;

use crate::quantum::FeatureVector;

/// One interaction `(s, a, r, s', done)` with the scalarized reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: FeatureVector,
    pub a: usize,
    pub r: f64,
    pub s_next: FeatureVector,
    pub done: bool,
}

/// Fixed-capacity FIFO experience memory.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    buf: VecDeque<Transition>,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, buf: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buf.iter()
    }

    /// `m` distinct transitions drawn uniformly (all of them if fewer).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Vec<Transition> {
        let m = m.min(self.buf.len());
        rand::seq::index::sample(rng, self.buf.len(), m)
            .into_iter()
            .map(|i| self.buf[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn tr(a: usize) -> Transition {
        let s = FeatureVector::new([0.0; 5]).unwrap();
        Transition { s, a, r: a as f64, s_next: s, done: false }
    }

    #[test]
    fn fifo_eviction() {
        let mut m = ReplayMemory::new(3);
        for a in 0..5 {
            m.push(tr(a));
        }
        assert_eq!(m.len(), 3);
        assert_eq!(m.iter().map(|t| t.a).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn sample_is_distinct_and_bounded() {
        let mut m = ReplayMemory::new(100);
        for a in 0..10 {
            m.push(tr(a));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = m.sample(&mut rng, 6);
        let mut ids: Vec<_> = s.iter().map(|t| t.a).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 6);
        assert_eq!(m.sample(&mut rng, 50).len(), 10);
    }
}
