//! Deterministic seed derivation and sampling primitives.
//!
//! Every randomized operation takes an explicit seed; parallel runs derive
//! private sub-seeds from the master seed and their run index, so results
//! are independent of thread count and schedule.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a master seed and a salt chain (pair index, null
/// model id, run index, ...). Stable across platforms and releases.
pub fn derive_seed(master: u64, salts: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &s in salts {
        state = splitmix64(state ^ splitmix64(s.wrapping_add(0x9E37_79B9)));
    }
    state
}

/// Uniform sample of `n` items without replacement via partial Fisher-Yates.
/// Output order is the draw order.
pub fn sample_without_replacement<T: Copy>(pool: &[T], n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    assert!(n <= pool.len(), "sample larger than pool");
    let mut items: Vec<T> = pool.to_vec();
    for i in 0..n {
        let j = rng.random_range(i..items.len());
        items.swap(i, j);
    }
    items.truncate(n);
    items
}

/// Fenwick-tree weighted sampler supporting O(log n) draws and removals.
///
/// Alive entries with weight 0 are never drawn; removal zeroes the weight
/// and decrements the alive count regardless of weight.
#[derive(Debug, Clone)]
pub struct WeightedSampler {
    tree: Vec<f64>,
    weights: Vec<f64>,
    alive: Vec<bool>,
    n_alive: usize,
}

impl WeightedSampler {
    pub fn new(weights: Vec<f64>) -> Self {
        let n = weights.len();
        debug_assert!(weights.iter().all(|w| w.is_finite() && *w >= 0.0));
        let mut tree = vec![0.0; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            let mut j = i + 1;
            while j <= n {
                tree[j] += w;
                j += j & j.wrapping_neg();
            }
        }
        WeightedSampler {
            tree,
            weights,
            alive: vec![true; n],
            n_alive: n,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn n_alive(&self) -> usize {
        self.n_alive
    }

    pub fn is_alive(&self, idx: usize) -> bool {
        self.alive[idx]
    }

    pub fn total(&self) -> f64 {
        let mut j = self.weights.len();
        let mut sum = 0.0;
        while j > 0 {
            sum += self.tree[j];
            j -= j & j.wrapping_neg();
        }
        sum
    }

    /// Draw an index with probability proportional to its weight. Returns
    /// `None` when the total weight is not positive.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Option<usize> {
        let total = self.total();
        if !(total > 0.0) {
            return None;
        }
        let mut r = rng.random::<f64>() * total;
        // Find the smallest index with prefix sum > r.
        let n = self.weights.len();
        let mut pos = 0usize;
        let mut mask = n.next_power_of_two();
        while mask > 0 {
            let next = pos + mask;
            if next <= n && self.tree[next] <= r {
                r -= self.tree[next];
                pos = next;
            }
            mask >>= 1;
        }
        // pos is now the count of leaves with cumulative <= r; the draw is
        // leaf `pos`. Guard against floating-point overshoot at the tail.
        let mut idx = pos.min(n - 1);
        while idx > 0 && (!self.alive[idx] || self.weights[idx] <= 0.0) {
            idx -= 1;
        }
        while idx < n && (!self.alive[idx] || self.weights[idx] <= 0.0) {
            idx += 1;
        }
        if idx >= n {
            return None;
        }
        Some(idx)
    }

    /// Remove an entry: weight becomes 0 and it stops counting as alive.
    pub fn remove(&mut self, idx: usize) {
        if !self.alive[idx] {
            return;
        }
        let w = self.weights[idx];
        self.alive[idx] = false;
        self.n_alive -= 1;
        if w != 0.0 {
            self.weights[idx] = 0.0;
            let n = self.weights.len();
            let mut j = idx + 1;
            while j <= n {
                self.tree[j] -= w;
                j += j & j.wrapping_neg();
            }
        }
    }
}
