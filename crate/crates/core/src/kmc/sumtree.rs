/// Complete binary tree of partial sums over non-negative leaf weights.
///
/// Parents are recomputed from their children on every update, so the root
/// never accumulates drift from repeated incremental adds.
#[derive(Debug, Clone)]
pub(crate) struct SumTree {
    len: usize,
    base: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(weights: &[f64]) -> Self {
        let len = weights.len();
        let base = len.next_power_of_two().max(1);
        let mut nodes = vec![0.0; 2 * base];
        nodes[base..base + len].copy_from_slice(weights);
        for i in (1..base).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        Self { len, base, nodes }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        debug_assert!(i < self.len && w >= 0.0);
        let mut n = self.base + i;
        if self.nodes[n] == w {
            return;
        }
        self.nodes[n] = w;
        while n > 1 {
            n /= 2;
            self.nodes[n] = self.nodes[2 * n] + self.nodes[2 * n + 1];
        }
    }

    /// Leaf whose cumulative interval contains `u` ∈ [0, total).
    ///
    /// Never returns a zero-weight leaf while the total is positive.
    pub fn find(&self, mut u: f64) -> usize {
        let mut n = 1;
        while n < self.base {
            let left = self.nodes[2 * n];
            let right = self.nodes[2 * n + 1];
            if (u < left && left > 0.0) || right <= 0.0 {
                n *= 2;
            } else {
                u -= left;
                n = 2 * n + 1;
            }
        }
        n - self.base
    }
}
