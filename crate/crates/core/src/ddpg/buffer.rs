use rand::Rng;

use super::DdpgError;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub state: Vec<T>,
    pub action: Vec<T>,
    pub reward: T,
    pub next_state: Vec<T>,
    pub terminal: bool,
}

/// Fixed-capacity FIFO ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<Transition<T>>,
    cursor: usize,
}

impl<T: Clone> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer needs a positive capacity");
        Self { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), cursor: 0 }
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

    pub fn push(&mut self, t: Transition<T>) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn push_all(&mut self, ts: impl IntoIterator<Item = Transition<T>>) {
        for t in ts {
            self.push(t);
        }
    }

    /// Items from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition<T>> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// Indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>, DdpgError> {
        if self.items.is_empty() {
            return Err(DdpgError::EmptyBuffer);
        }
        Ok((0..batch).map(|_| rng.gen_range(0..self.items.len())).collect())
    }

    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition<T>>, DdpgError> {
        Ok(self.sample_indices(batch, rng)?.into_iter().map(|i| &self.items[i]).collect())
    }

    pub fn get(&self, i: usize) -> Option<&Transition<T>> {
        self.items.get(i)
    }
}
