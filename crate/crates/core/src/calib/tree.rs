//! Greedy CART regression tree with variance-reduction splits.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_leaf: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flat node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeState {
    pub nodes: Vec<Node>,
}

struct Builder<'a> {
    z: &'a [Vec<f64>],
    y: &'a [f64],
    params: TreeParams,
    nodes: Vec<Node>,
}

fn mean(y: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let total: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let total_sq: f64 = idx.iter().map(|&i| self.y[i] * self.y[i]).sum();
        let parent_sse = total_sq - total * total / n as f64;
        if parent_sse <= 1e-12 * (1.0 + total_sq) {
            return None;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..self.z[0].len() {
            order.sort_by(|&a, &b| self.z[a][f].total_cmp(&self.z[b][f]).then(a.cmp(&b)));
            let (mut ls, mut lsq) = (0.0, 0.0);
            for k in 0..n - 1 {
                let yi = self.y[order[k]];
                ls += yi;
                lsq += yi * yi;
                let nl = k + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let (lo, hi) = (self.z[order[k]][f], self.z[order[k + 1]][f]);
                if hi <= lo {
                    continue;
                }
                let rs = total - ls;
                let rsq = total_sq - lsq;
                let sse = (lsq - ls * ls / nl as f64) + (rsq - rs * rs / nr as f64);
                if best.is_none_or(|(_, _, b)| sse < b) {
                    best = Some((f, 0.5 * (lo + hi), sse));
                }
            }
        }
        best.filter(|&(_, _, sse)| sse < parent_sse)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: mean(self.y, &idx),
        });
        if depth >= self.params.max_depth {
            return id;
        }
        if let Some((feature, threshold, _)) = self.best_split(&idx) {
            let (l, r): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| self.z[i][feature] <= threshold);
            let left = self.grow(l, depth + 1);
            let right = self.grow(r, depth + 1);
            self.nodes[id] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        id
    }
}

impl TreeState {
    pub fn fit(z: &[Vec<f64>], y: &[f64], params: TreeParams) -> Self {
        let mut b = Builder {
            z,
            y,
            params,
            nodes: Vec::new(),
        };
        b.grow((0..y.len()).collect(), 0);
        TreeState { nodes: b.nodes }
    }

    pub fn predict(&self, z: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if z[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Checks child indices are in range and point forward, so prediction
    /// terminates.
    pub fn is_well_formed(&self) -> bool {
        !self.nodes.is_empty()
            && self.nodes.iter().enumerate().all(|(i, n)| match n {
                Node::Leaf { .. } => true,
                Node::Split { left, right, .. } => {
                    *left > i && *right > i && *left < self.nodes.len() && *right < self.nodes.len()
                }
            })
    }
}
