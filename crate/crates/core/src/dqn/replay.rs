use rand::Rng;

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest
/// entry.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    // slot the next push writes to once the buffer is full
    head: usize,
    inserted: u64,
}

impl<T> ReplayBuffer<T> {
    /// # Panics
    ///
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            head: 0,
            inserted: 0,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.head] = item;
            self.head = (self.head + 1) % self.capacity;
        }
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total pushes over the buffer's lifetime.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// Contents from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer)
    }

    /// `batch` items drawn uniformly with replacement. Empty when the buffer
    /// is empty.
    pub fn sample<'a, R: Rng>(&'a self, batch: usize, rng: &mut R) -> Vec<&'a T> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..batch)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    #[test]
    fn evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(2);
        buf.push('a');
        buf.push('b');
        buf.push('c');
        assert_eq!(buf.iter().copied().collect::<Vec<_>>(), vec!['b', 'c']);
        buf.push('d');
        assert_eq!(buf.iter().copied().collect::<Vec<_>>(), vec!['c', 'd']);
        assert_eq!(buf.inserted(), 4);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let mut buf = ReplayBuffer::new(100);
        (0..100).for_each(|i| buf.push(i));
        let a: Vec<i32> = buf.sample(32, &mut rng::seeded(3)).into_iter().copied().collect();
        let b: Vec<i32> = buf.sample(32, &mut rng::seeded(3)).into_iter().copied().collect();
        assert_eq!(a, b);
        assert!(ReplayBuffer::<i32>::new(4).sample(8, &mut rng::seeded(0)).is_empty());
    }

    proptest! {
        #[test]
        fn keeps_the_most_recent_window(cap in 1usize..20, n in 0usize..100) {
            let mut buf = ReplayBuffer::new(cap);
            (0..n).for_each(|i| buf.push(i));
            prop_assert!(buf.len() <= cap);
            let expected: Vec<usize> = (n.saturating_sub(cap)..n).collect();
            prop_assert_eq!(buf.iter().copied().collect::<Vec<_>>(), expected);
        }
    }
}
