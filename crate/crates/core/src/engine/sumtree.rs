/// Binary tree of partial sums over non-negative leaf weights. Internal
/// nodes are always recomputed from their children, so repeated updates do
/// not accumulate drift.
#[derive(Clone, Debug)]
pub(crate) struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub(crate) fn new(len: usize) -> Self {
        let leaves = len.max(1).next_power_of_two();
        SumTree { leaves, nodes: vec![0.0; 2 * leaves] }
    }

    #[inline]
    pub(crate) fn total(&self) -> f64 {
        self.nodes[1]
    }

    #[inline]
    pub(crate) fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    /// Writes a leaf without touching ancestors; call [`SumTree::rebuild`] after.
    #[inline]
    pub(crate) fn set_lazy(&mut self, i: usize, w: f64) {
        self.nodes[self.leaves + i] = w;
    }

    pub(crate) fn rebuild(&mut self) {
        for i in (1..self.leaves).rev() {
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    pub(crate) fn set(&mut self, i: usize, w: f64) {
        let mut idx = self.leaves + i;
        self.nodes[idx] = w;
        idx /= 2;
        while idx >= 1 {
            self.nodes[idx] = self.nodes[2 * idx] + self.nodes[2 * idx + 1];
            idx /= 2;
        }
    }

    /// Leaf whose cumulative range contains `x`, for `0 <= x < total`.
    pub(crate) fn find(&self, mut x: f64) -> usize {
        let mut idx = 1;
        while idx < self.leaves {
            let left = self.nodes[2 * idx];
            if x < left {
                idx *= 2;
            } else {
                x -= left;
                idx = 2 * idx + 1;
            }
        }
        idx - self.leaves
    }
}
