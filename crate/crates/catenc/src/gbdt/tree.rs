//! Regression-tree growth and traversal.
//!
//! Trees grow best-first: every expandable node's best split goes into a
//! priority queue and the highest-gain split in the whole frontier is
//! applied next, until the queue empties or the tree holds `2^max_depth`
//! leaves. Ties in gain break toward the node created first.

use std::collections::BinaryHeap;

use super::binning::MISSING_BIN;
use super::split::{best_split, leaf_value, FoundSplit, SplitKind, SplitRule};
use super::{Feature, FeatureMatrix, GbdtParams, GradHess, PreparedFeature};

/// One node of a fitted tree. Children are indices into [`Tree::nodes`].
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Branch { rule: SplitRule, left: u32, right: u32 },
    Leaf { value: f64 },
}

/// A fitted regression tree; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub(crate) fn predict_row(&self, features: &FeatureMatrix, row: usize) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Branch { rule, left, right } => {
                    at = if routes_left(rule, features, row) {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

fn routes_left(rule: &SplitRule, features: &FeatureMatrix, row: usize) -> bool {
    match (&rule.kind, &features.features[rule.feature]) {
        (SplitKind::NumericThreshold { threshold, default_left }, Feature::Numeric(values)) => {
            let v = values[row];
            if v.is_nan() {
                *default_left
            } else {
                v < *threshold
            }
        }
        (
            SplitKind::NumericThreshold { threshold, .. },
            Feature::Categorical { codes, .. },
        ) => {
            // Codes-as-numeric mode: the integer code is the value.
            (codes[row] as f64) < *threshold
        }
        (
            SplitKind::CategorySet { left, right, default_left },
            Feature::Categorical { codes, .. },
        ) => {
            let code = codes[row];
            if left.binary_search(&code).is_ok() {
                true
            } else if right.binary_search(&code).is_ok() {
                false
            } else {
                *default_left
            }
        }
        // A set rule on a numeric column cannot be produced by fitting and
        // is rejected when loading a stored model; route by default.
        (SplitKind::CategorySet { default_left, .. }, Feature::Numeric(_)) => *default_left,
    }
}

struct NodeWork {
    depth: usize,
    rows: Vec<u32>,
    value: f64,
    split: Option<FoundSplit>,
    children: Option<(usize, usize)>,
}

struct HeapItem {
    gain: f64,
    work: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.work == other.work
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap on gain; equal gains favor the earlier-created node.
        self.gain.total_cmp(&other.gain).then(other.work.cmp(&self.work))
    }
}

fn new_work(
    arena: &mut Vec<NodeWork>,
    heap: &mut BinaryHeap<HeapItem>,
    prepared: &[PreparedFeature],
    gh: &GradHess,
    params: &GbdtParams,
    rows: Vec<u32>,
    depth: usize,
) -> usize {
    let (mut g, mut h) = (0.0, 0.0);
    for &r in &rows {
        g += gh.g[r as usize];
        h += gh.h[r as usize];
    }
    let value = leaf_value(g, h, params.lambda_l2);
    let index = arena.len();
    let split = if depth < params.max_depth && rows.len() >= 2 * params.min_samples_leaf {
        best_split(prepared, gh, &rows, params)
    } else {
        None
    };
    if let Some(found) = &split {
        heap.push(HeapItem { gain: found.gain, work: index });
    }
    arena.push(NodeWork { depth, rows, value, split, children: None });
    index
}

fn partition(
    split: &FoundSplit,
    prepared: &[PreparedFeature],
    rows: Vec<u32>,
) -> (Vec<u32>, Vec<u32>) {
    let mut left_rows = Vec::new();
    let mut right_rows = Vec::new();
    match (&split.kind, &prepared[split.feature]) {
        (SplitKind::NumericThreshold { threshold, default_left }, PreparedFeature::Binned(b)) => {
            // The threshold is one of the cuts; rows left iff value < it,
            // i.e. iff the row's bin is at or below the cut's index.
            let boundary = b.cuts.partition_point(|&c| c < *threshold) as u16;
            for r in rows {
                let goes_left = match b.bins[r as usize] {
                    MISSING_BIN => *default_left,
                    bin => bin <= boundary,
                };
                if goes_left {
                    left_rows.push(r);
                } else {
                    right_rows.push(r);
                }
            }
        }
        (SplitKind::CategorySet { left, .. }, PreparedFeature::Cats { codes, .. }) => {
            // Every code present at the node is in one of the two sides.
            for r in rows {
                if left.binary_search(&codes[r as usize]).is_ok() {
                    left_rows.push(r);
                } else {
                    right_rows.push(r);
                }
            }
        }
        _ => unreachable!("split kind does not match the feature it was found on"),
    }
    (left_rows, right_rows)
}

pub(crate) fn grow_tree(
    prepared: &[PreparedFeature],
    gh: &GradHess,
    params: &GbdtParams,
) -> Tree {
    let rows: Vec<u32> = (0..gh.g.len() as u32).collect();
    let mut arena: Vec<NodeWork> = Vec::new();
    let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
    new_work(&mut arena, &mut heap, prepared, gh, params, rows, 0);

    let leaf_cap = 1usize.checked_shl(params.max_depth as u32).unwrap_or(usize::MAX);
    let mut leaves = 1usize;
    while leaves < leaf_cap {
        let Some(item) = heap.pop() else { break };
        let split = arena[item.work].split.clone().expect("heap items carry a split");
        let rows = std::mem::take(&mut arena[item.work].rows);
        let (left_rows, right_rows) = partition(&split, prepared, rows);
        let depth = arena[item.work].depth + 1;
        let left = new_work(&mut arena, &mut heap, prepared, gh, params, left_rows, depth);
        let right = new_work(&mut arena, &mut heap, prepared, gh, params, right_rows, depth);
        arena[item.work].children = Some((left, right));
        leaves += 1;
    }

    let mut nodes = Vec::with_capacity(arena.len());
    emit(&arena, 0, &mut nodes);
    Tree { nodes }
}

/// Flattens the work arena into pre-order node storage.
fn emit(arena: &[NodeWork], at: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    match arena[at].children {
        None => nodes.push(Node::Leaf { value: arena[at].value }),
        Some((l, r)) => {
            let found = arena[at].split.as_ref().expect("inner nodes carry their split");
            nodes.push(Node::Branch {
                rule: SplitRule { feature: found.feature, kind: found.kind.clone() },
                left: 0,
                right: 0,
            });
            let left = emit(arena, l, nodes);
            let right = emit(arena, r, nodes);
            let Node::Branch { left: lf, right: rf, .. } = &mut nodes[id as usize] else {
                unreachable!();
            };
            *lf = left;
            *rf = right;
        }
    }
    id
}
