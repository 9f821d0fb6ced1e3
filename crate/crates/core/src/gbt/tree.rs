//! Depth-limited regression trees grown by exact greedy search on
//! second-order gradient statistics.
//!
//! The three covariates are small-range integers, so one histogram bin per
//! distinct value makes the histogram scan exact.

use serde::{Deserialize, Serialize};

pub const N_FEATURES: usize = 3;

pub type Features = [i32; N_FEATURES];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `feature <= threshold` go left.
    Split { feature: usize, threshold: i32, left: u32, right: u32 },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, f: &Features) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if f[feature] <= threshold { left as usize } else { right as usize };
                }
            }
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left as usize).max(go(nodes, right as usize)),
            }
        }
        go(&self.nodes, 0)
    }
}

pub(crate) struct GrowParams {
    pub max_depth: u32,
    pub min_child_weight: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub learning_rate: f64,
}

/// Gradient statistics over a fixed set of feature vectors.
pub(crate) struct Grower<'a> {
    feats: &'a [Features],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GrowParams,
    features: &'a [usize],
    lo: Features,
    width: [usize; N_FEATURES],
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: i32,
}

impl<'a> Grower<'a> {
    pub fn new(
        feats: &'a [Features],
        grad: &'a [f64],
        hess: &'a [f64],
        params: &'a GrowParams,
        features: &'a [usize],
    ) -> Self {
        let mut lo = [i32::MAX; N_FEATURES];
        let mut hi = [i32::MIN; N_FEATURES];
        for f in feats {
            for k in 0..N_FEATURES {
                lo[k] = lo[k].min(f[k]);
                hi[k] = hi[k].max(f[k]);
            }
        }
        let mut width = [0; N_FEATURES];
        for k in 0..N_FEATURES {
            width[k] = if feats.is_empty() { 0 } else { (hi[k] - lo[k]) as usize + 1 };
        }
        Grower { feats, grad, hess, params, features, lo, width }
    }

    /// Grow a tree over the rows in `rows`.
    pub fn grow(&self, rows: Vec<usize>) -> Tree {
        let mut nodes = Vec::new();
        self.grow_node(rows, 0, &mut nodes);
        Tree { nodes }
    }

    fn grow_node(&self, rows: Vec<usize>, depth: u32, nodes: &mut Vec<Node>) -> u32 {
        let id = nodes.len() as u32;
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &i| (g + self.grad[i], h + self.hess[i]));
        let leaf = Node::Leaf { value: -self.params.learning_rate * g / (h + self.params.lambda) };
        nodes.push(leaf);
        if depth >= self.params.max_depth || rows.len() < 2 {
            return id;
        }
        let Some(best) = self.best_split(&rows, g, h) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.feats[i][best.feature] <= best.threshold);
        let l = self.grow_node(left, depth + 1, nodes);
        let r = self.grow_node(right, depth + 1, nodes);
        nodes[id as usize] = Node::Split { feature: best.feature, threshold: best.threshold, left: l, right: r };
        id
    }

    fn best_split(&self, rows: &[usize], g: f64, h: f64) -> Option<Candidate> {
        let lambda = self.params.lambda;
        let parent = g * g / (h + lambda);
        let mut best: Option<Candidate> = None;
        for &k in self.features {
            let w = self.width[k];
            let mut hg = vec![0.0; w];
            let mut hh = vec![0.0; w];
            let mut cnt = vec![0u32; w];
            for &i in rows {
                let b = (self.feats[i][k] - self.lo[k]) as usize;
                hg[b] += self.grad[i];
                hh[b] += self.hess[i];
                cnt[b] += 1;
            }
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            for b in 0..w {
                if cnt[b] == 0 {
                    continue;
                }
                gl += hg[b];
                hl += hh[b];
                nl += cnt[b] as usize;
                if nl == rows.len() {
                    break;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent) - self.params.gamma;
                if gain > 1e-12 && best.as_ref().is_none_or(|c| gain > c.gain) {
                    best = Some(Candidate { gain, feature: k, threshold: self.lo[k] + b as i32 });
                }
            }
        }
        best
    }
}
