//! Regression trees grown level by level with exact greedy split search.

use serde::{Deserialize, Serialize};

use super::Regularization;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Where examples with a missing value for `feature` go.
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(weight: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { weight }],
        }
    }

    /// Leaf weight for a row; `NaN` marks a missing value.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { weight } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                    idx = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Column-major training matrix with per-feature presorted indices.
pub(crate) struct ColumnData {
    pub n_rows: usize,
    pub cols: Vec<Vec<f64>>,
    sorted: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
}

impl ColumnData {
    /// `rows` are row-major with `NaN` for missing values.
    pub fn new(rows: &[Vec<f64>], n_features: usize) -> Self {
        let n_rows = rows.len();
        let mut cols = vec![Vec::with_capacity(n_rows); n_features];
        for row in rows {
            for (f, col) in cols.iter_mut().enumerate() {
                col.push(row[f]);
            }
        }
        let mut sorted = Vec::with_capacity(n_features);
        let mut missing = Vec::with_capacity(n_features);
        for col in &cols {
            let (mut present, mut absent): (Vec<u32>, Vec<u32>) =
                (0..n_rows as u32).partition(|&i| !col[i as usize].is_nan());
            present.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            absent.shrink_to_fit();
            sorted.push(present);
            missing.push(absent);
        }
        Self {
            n_rows,
            cols,
            sorted,
            missing,
        }
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    default_left: bool,
    left: (f64, f64),
    right: (f64, f64),
}

/// A split point strictly between two adjacent distinct values.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

const NONE: u32 = u32::MAX;

/// Fits one tree to gradients `g` and hessians `h`.
///
/// Returns the tree and, for each training row, the weight of the leaf it landed in.
pub(crate) fn grow_tree(
    data: &ColumnData,
    g: &[f64],
    h: &[f64],
    max_depth: usize,
    reg: &Regularization,
) -> (RegressionTree, Vec<f64>) {
    let n = data.n_rows;
    let lambda = reg.lambda;
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);

    let mut nodes = vec![Node::Leaf { weight: 0.0 }];
    let mut stats: Vec<(f64, f64)> = vec![(g.iter().sum(), h.iter().sum())];
    let mut node_of = vec![0u32; n];
    let mut frontier: Vec<usize> = vec![0];

    for _depth in 0..max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut slot_of = vec![NONE; nodes.len()];
        for (s, &node) in frontier.iter().enumerate() {
            slot_of[node] = s as u32;
        }
        let k = frontier.len();
        let mut best: Vec<Option<Candidate>> = vec![None; k];

        let mut miss = vec![(0.0f64, 0.0f64); k];
        let mut acc = vec![(0.0f64, 0.0f64); k];
        let mut last = vec![f64::NAN; k];
        for f in 0..data.n_features() {
            miss.iter_mut().for_each(|m| *m = (0.0, 0.0));
            acc.iter_mut().for_each(|a| *a = (0.0, 0.0));
            last.iter_mut().for_each(|l| *l = f64::NAN);
            for &i in &data.missing[f] {
                let s = slot_of[node_of[i as usize] as usize];
                if s != NONE {
                    miss[s as usize].0 += g[i as usize];
                    miss[s as usize].1 += h[i as usize];
                }
            }
            let col = &data.cols[f];
            for &i in &data.sorted[f] {
                let i = i as usize;
                let s = slot_of[node_of[i] as usize];
                if s == NONE {
                    continue;
                }
                let s = s as usize;
                let v = col[i];
                if !last[s].is_nan() && v > last[s] {
                    let (gt, ht) = stats[frontier[s]];
                    let (gm, hm) = miss[s];
                    let (gl, hl) = acc[s];
                    let parent = score(gt, ht);
                    for default_left in [true, false] {
                        let (lg, lh) = if default_left { (gl + gm, hl + hm) } else { (gl, hl) };
                        let (rg, rh) = (gt - lg, ht - lh);
                        if lh < reg.min_child_weight || rh < reg.min_child_weight {
                            continue;
                        }
                        let gain = 0.5 * (score(lg, lh) + score(rg, rh) - parent) - reg.gamma;
                        let current = best[s].map_or(0.0, |c| c.gain);
                        if gain > current {
                            best[s] = Some(Candidate {
                                gain,
                                feature: f,
                                threshold: midpoint(last[s], v),
                                default_left,
                                left: (lg, lh),
                                right: (rg, rh),
                            });
                        }
                    }
                }
                acc[s].0 += g[i];
                acc[s].1 += h[i];
                last[s] = v;
            }
        }

        let mut next = Vec::new();
        for (s, &node) in frontier.iter().enumerate() {
            if let Some(c) = best[s] {
                let left = nodes.len();
                nodes.push(Node::Leaf { weight: 0.0 });
                nodes.push(Node::Leaf { weight: 0.0 });
                stats.push(c.left);
                stats.push(c.right);
                nodes[node] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    default_left: c.default_left,
                    left,
                    right: left + 1,
                };
                next.push(left);
                next.push(left + 1);
            } else {
                let (gs, hs) = stats[node];
                nodes[node] = Node::Leaf {
                    weight: -gs / (hs + lambda),
                };
            }
        }
        for (i, node) in node_of.iter_mut().enumerate() {
            if let Node::Split {
                feature,
                threshold,
                default_left,
                left,
                right,
            } = &nodes[*node as usize]
            {
                let v = data.cols[*feature][i];
                let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                *node = if go_left { *left } else { *right } as u32;
            }
        }
        frontier = next;
    }
    for &node in &frontier {
        let (gs, hs) = stats[node];
        nodes[node] = Node::Leaf {
            weight: -gs / (hs + lambda),
        };
    }

    let leaf_weights = node_of
        .iter()
        .map(|&node| match nodes[node as usize] {
            Node::Leaf { weight } => weight,
            Node::Split { .. } => unreachable!("rows always end at a leaf"),
        })
        .collect();
    (RegressionTree { nodes }, leaf_weights)
}
