//! Trajectory storage. Mini-batches are contiguous slices with a random
//! start, so transition order is preserved for the advantage recursion.

use rand::Rng;

use crate::error::{Error, Result};
use crate::{NetInput, Real};

/// One decision-point transition.
///
/// `actions`, `log_probs` hold one entry per actor head (a single entry for
/// joint-action agents); `values`/`next_values` hold one entry per critic
/// head.
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: NetInput,
    pub actions: Vec<usize>,
    pub reward: Real,
    pub next_obs: NetInput,
    pub log_probs: Vec<Real>,
    pub values: Vec<Real>,
    pub next_values: Vec<Real>,
    pub done: bool,
}

#[derive(Debug, Default)]
pub struct TrajectoryBuffer {
    items: Vec<Transition>,
    capacity: usize,
}

impl TrajectoryBuffer {
    pub fn new(capacity: usize) -> Self {
        TrajectoryBuffer { items: Vec::new(), capacity }
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

    /// Appends a transition, dropping the oldest when at capacity.
    pub fn push(&mut self, transition: Transition) -> Result<()> {
        if transition.log_probs.iter().any(|lp| !lp.is_finite()) {
            return Err(Error::training("non-finite log-probability in transition"));
        }
        if transition.values.iter().chain(&transition.next_values).any(|v| !v.is_finite()) {
            return Err(Error::training("non-finite value estimate in transition"));
        }
        if self.items.len() == self.capacity {
            self.items.remove(0);
        }
        self.items.push(transition);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    /// A contiguous window of `k` transitions starting at a random valid
    /// offset.
    pub fn window<R: Rng>(&self, k: usize, rng: &mut R) -> Result<&[Transition]> {
        if k == 0 || k > self.items.len() {
            return Err(Error::spec(format!("window of {k} from buffer of {}", self.items.len())));
        }
        let start = rng.gen_range(0..=self.items.len() - k);
        Ok(&self.items[start..start + k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(tag: Real) -> Transition {
        Transition {
            obs: [[tag; 8]; 8],
            actions: vec![0],
            reward: tag,
            next_obs: [[tag; 8]; 8],
            log_probs: vec![-0.1],
            values: vec![0.0],
            next_values: vec![0.0],
            done: false,
        }
    }

    #[test]
    fn windows_are_contiguous_with_random_start() {
        let mut buffer = TrajectoryBuffer::new(100);
        for i in 0..50 {
            buffer.push(transition(i as Real)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let w = buffer.window(16, &mut rng).unwrap();
            assert_eq!(w.len(), 16);
            for pair in w.windows(2) {
                assert!((pair[1].reward - pair[0].reward - 1.0).abs() < 1e-12);
            }
        }
        assert!(buffer.window(51, &mut rng).is_err());
    }

    #[test]
    fn capacity_drops_oldest() {
        let mut buffer = TrajectoryBuffer::new(4);
        for i in 0..6 {
            buffer.push(transition(i as Real)).unwrap();
        }
        assert_eq!(buffer.len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = buffer.window(4, &mut rng).unwrap();
        assert_eq!(w[0].reward, 2.0);
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let mut buffer = TrajectoryBuffer::new(4);
        let mut bad = transition(0.0);
        bad.log_probs = vec![Real::NAN];
        assert!(buffer.push(bad).is_err());
    }
}
