//! Prioritized experience replay with a fixed-size FIFO ring.
//!
//! New transitions enter at the current maximum priority. Sampling is with
//! replacement, proportional to priority^a, and importance weights are
//! normalized by the largest weight in the buffer.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One stored step: (observation, action index, reward, next observation,
/// terminal flag).
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub terminal: bool,
}

/// Indices and importance weights of one sampled batch.
#[derive(Debug, Clone)]
pub struct SampledBatch {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
    priorities: VecDeque<f64>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
            priorities: VecDeque::with_capacity(capacity),
        }
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

    pub fn get(&self, idx: usize) -> &Transition {
        &self.items[idx]
    }

    pub fn priority(&self, idx: usize) -> f64 {
        self.priorities[idx]
    }

    pub fn max_priority(&self) -> f64 {
        self.priorities.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Append a transition at the current max priority, evicting the oldest
    /// entry when full.
    pub fn push(&mut self, t: Transition) {
        let p = if self.is_empty() {
            1.0
        } else {
            self.max_priority()
        };
        if self.items.len() == self.capacity {
            self.items.pop_front();
            self.priorities.pop_front();
        }
        self.items.push_back(t);
        self.priorities.push_back(p);
    }

    /// Sample `batch` indices with replacement, P(i) proportional to p_i^a,
    /// with importance weights (N P(i))^-beta normalized by the buffer max.
    ///
    /// Returns `None` while the buffer holds fewer than `batch` transitions.
    pub fn sample(
        &self,
        batch: usize,
        a: f64,
        beta: f64,
        rng: &mut ChaCha8Rng,
    ) -> Option<SampledBatch> {
        if self.len() < batch {
            return None;
        }
        let scaled: Vec<f64> = self.priorities.iter().map(|p| p.powf(a)).collect();
        let total: f64 = scaled.iter().sum();
        let mut cumulative = Vec::with_capacity(scaled.len());
        let mut acc = 0.0;
        for s in &scaled {
            acc += s;
            cumulative.push(acc);
        }
        let min_scaled = scaled.iter().cloned().fold(f64::MAX, f64::min);

        let mut indices = Vec::with_capacity(batch);
        let mut weights = Vec::with_capacity(batch);
        for _ in 0..batch {
            let u = rng.gen::<f64>() * total;
            let idx = match cumulative.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                Ok(i) => (i + 1).min(scaled.len() - 1),
                Err(i) => i.min(scaled.len() - 1),
            };
            indices.push(idx);
            // w_i / w_max = (P_i / P_min)^-beta = (p_i^a / p_min^a)^-beta.
            weights.push((scaled[idx] / min_scaled).powf(-beta));
        }
        Some(SampledBatch { indices, weights })
    }

    /// Overwrite priorities after a learning step. Values are clamped to
    /// stay strictly positive.
    pub fn update_priorities(&mut self, indices: &[usize], new_priorities: &[f64]) {
        assert_eq!(indices.len(), new_priorities.len());
        for (&i, &p) in indices.iter().zip(new_priorities) {
            self.priorities[i] = p.max(1e-12);
        }
    }
}
