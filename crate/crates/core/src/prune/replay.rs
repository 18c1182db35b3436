use std::collections::VecDeque;

use super::state::PruneState;
use crate::numerics::RngStream;

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: PruneState,
    pub action: f64,
    pub reward: f64,
    pub next_state: PruneState,
    pub terminal: bool,
}

/// Fixed-capacity experience pool; the oldest transition is evicted first.
#[derive(Clone, Debug)]
pub struct ReplayPool {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayPool {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            items: VecDeque::with_capacity(capacity.max(1)),
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

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `n` transitions drawn uniformly with replacement.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Vec<Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n)
            .map(|_| self.items[rng.index(self.items.len())].clone())
            .collect()
    }
}
