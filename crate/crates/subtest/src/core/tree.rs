//! Directed rooted trees and the tree join process: sampling each tree edge's
//! pairwise marginal independently and asking, per root label, whether the
//! sampled pair sets admit a full labeling of the tree.

use super::{
    marginal_pair, process_s_indicator, validate_arity, CoreError, IndicatorVector, RngSeed,
    TupleMass,
};
use std::collections::BTreeSet;

/// A directed rooted tree on vertices `0..n_vertices`: every non-root vertex
/// has exactly one outgoing edge `(u, parent(u))` and every vertex reaches the
/// root. Edges are oriented toward the root.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DirectedRootedTree {
    n_vertices: usize,
    root: usize,
    parent: Vec<Option<usize>>,
}

impl DirectedRootedTree {
    /// Builds a tree from its directed edge list `(child, parent)`.
    pub fn new(
        n_vertices: usize,
        edges: &[(usize, usize)],
        root: usize,
    ) -> Result<Self, CoreError> {
        if n_vertices == 0 || root >= n_vertices {
            return Err(CoreError::TreeError(format!(
                "root {root} out of range for {n_vertices} vertices"
            )));
        }
        if edges.len() != n_vertices - 1 {
            return Err(CoreError::TreeError(format!(
                "a tree on {n_vertices} vertices needs {} edges, got {}",
                n_vertices - 1,
                edges.len()
            )));
        }
        let mut parent: Vec<Option<usize>> = vec![None; n_vertices];
        for &(u, v) in edges {
            if u >= n_vertices || v >= n_vertices || u == v {
                return Err(CoreError::TreeError(format!("bad edge ({u}, {v})")));
            }
            if u == root {
                return Err(CoreError::TreeError(
                    "the root must have no outgoing edge".into(),
                ));
            }
            if parent[u].is_some() {
                return Err(CoreError::TreeError(format!(
                    "vertex {u} has two outgoing edges"
                )));
            }
            parent[u] = Some(v);
        }
        // Every vertex must reach the root without cycles.
        for start in 0..n_vertices {
            let mut seen = 0usize;
            let mut cur = start;
            while cur != root {
                match parent[cur] {
                    Some(next) => {
                        cur = next;
                        seen += 1;
                        if seen > n_vertices {
                            return Err(CoreError::TreeError(format!(
                                "cycle reachable from vertex {start}"
                            )));
                        }
                    }
                    None => {
                        return Err(CoreError::TreeError(format!(
                            "vertex {start} cannot reach the root"
                        )))
                    }
                }
            }
        }
        Ok(DirectedRootedTree {
            n_vertices,
            root,
            parent,
        })
    }

    /// The directed path `0 -> 1 -> ... -> t` rooted at `t` (`t` edges).
    pub fn path(t: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..t).map(|i| (i, i + 1)).collect();
        DirectedRootedTree::new(t + 1, &edges, t).expect("path is a valid rooted tree")
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Directed edges `(child, parent)` sorted by child id.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n_vertices)
            .filter_map(|u| self.parent[u].map(|v| (u, v)))
            .collect()
    }

    /// Children of each vertex.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.n_vertices];
        for (u, v) in self.edges() {
            ch[v].push(u);
        }
        ch
    }

    /// Vertices ordered so that children precede parents (post-order).
    pub fn bottom_up_order(&self) -> Vec<usize> {
        let children = self.children();
        let mut order = Vec::with_capacity(self.n_vertices);
        let mut stack = vec![(self.root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                order.push(v);
            } else {
                stack.push((v, true));
                for &c in children[v].iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        order
    }
}

/// Tree join process: for every tree edge `(u, v)` draw `m` independent
/// samples from the pairwise marginal of `f` on coordinates `(u, v)`; the
/// output marks root label `b` iff some labeling `y` of the tree vertices by
/// `[n]` has `y[root] = b` and every edge's pair `(y[u], y[v])` among that
/// edge's samples.
///
/// Realizability is decided by a leaves-to-root sweep over label sets (never
/// by enumerating labelings): a label `a` is realizable at `v` iff for every
/// child `c` some label realizable at `c` forms a sampled pair `(·, a)` on the
/// edge `(c, v)`.
pub fn process_j_tree(
    tree: &DirectedRootedTree,
    f: &TupleMass,
    n: u32,
    m: u64,
    seed: RngSeed,
) -> Result<IndicatorVector<u32>, CoreError> {
    validate_arity(f, tree.n_vertices())?;
    for (t, _) in f.support() {
        if t.iter().any(|&x| x == 0 || x > n) {
            return Err(CoreError::ShapeError(format!(
                "tuple {t:?} has entries outside [1, {n}]"
            )));
        }
    }

    // Per-edge sampled pair sets, drawn from independent substreams in the
    // deterministic (child-sorted) edge order.
    let edges = tree.edges();
    let mut sampled: Vec<IndicatorVector<(u32, u32)>> = Vec::with_capacity(edges.len());
    for (idx, &(u, v)) in edges.iter().enumerate() {
        let pair_marginal = marginal_pair(f, u, v)?;
        sampled.push(process_s_indicator(
            &pair_marginal,
            m,
            seed.substream(idx as u64),
        ));
    }
    let edge_index: std::collections::BTreeMap<(usize, usize), usize> = edges
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| ((u, v), i))
        .collect();

    // Leaves-to-root sweep. Realizable label sets start as all of [n] at the
    // leaves (a leaf is unconstrained until its edge to the parent is used).
    let children = tree.children();
    let full: BTreeSet<u32> = (1..=n).collect();
    let mut realizable: Vec<Option<BTreeSet<u32>>> = vec![None; tree.n_vertices()];
    for v in tree.bottom_up_order() {
        let mut labels = full.clone();
        for &c in &children[v] {
            let idx = edge_index[&(c, v)];
            let child_labels = realizable[c].as_ref().expect("post-order");
            // Parent labels supported by this child: some (b, a) sampled with
            // b realizable at the child.
            let mut supported: BTreeSet<u32> = BTreeSet::new();
            for (b, a) in sampled[idx].iter() {
                if child_labels.contains(b) {
                    supported.insert(*a);
                }
            }
            labels = labels.intersection(&supported).copied().collect();
            if labels.is_empty() {
                break;
            }
        }
        realizable[v] = Some(labels);
    }

    Ok(IndicatorVector::from_set(
        realizable[tree.root()].take().expect("root visited"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{marginal_single, MassFunction};
    use crate::rat;
    use std::collections::BTreeMap;

    #[test]
    fn tree_validation_catches_malformed_inputs() {
        assert!(DirectedRootedTree::new(3, &[(0, 2), (1, 2)], 2).is_ok());
        // Root with an outgoing edge.
        assert!(DirectedRootedTree::new(3, &[(2, 0), (1, 2)], 2).is_err());
        // Two outgoing edges at one vertex.
        assert!(DirectedRootedTree::new(3, &[(0, 1), (0, 2)], 2).is_err());
        // Wrong edge count.
        assert!(DirectedRootedTree::new(3, &[(0, 2)], 2).is_err());
        // Cycle: 0 -> 1 -> 0 never reaches root 2.
        assert!(DirectedRootedTree::new(3, &[(0, 1), (1, 0)], 2).is_err());
    }

    #[test]
    fn path_tree_shape() {
        let t = DirectedRootedTree::path(3);
        assert_eq!(t.n_vertices(), 4);
        assert_eq!(t.root(), 3);
        assert_eq!(t.edges(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(t.bottom_up_order(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_edge_tree_join_equals_second_coordinate_batch() {
        // For the one-edge tree, the join is exactly the indicator batch of
        // the root coordinate's sampled values (the leaf is unconstrained).
        let mut w: BTreeMap<Vec<u32>, crate::Rat> = BTreeMap::new();
        w.insert(vec![1, 2], rat(1, 4));
        w.insert(vec![3, 4], rat(1, 4));
        w.insert(vec![5, 4], rat(1, 4));
        w.insert(vec![2, 5], rat(1, 4));
        let f = MassFunction::from_map(w).unwrap();
        let tree = DirectedRootedTree::path(1);
        let seed = RngSeed::new(11, 4);
        let joined = process_j_tree(&tree, &f, 5, 9, seed).unwrap();

        // Replicate the draw: the single edge (0, 1) uses substream 0.
        let pairs = marginal_pair(&f, 0, 1).unwrap();
        let sampled = process_s_indicator(&pairs, 9, seed.substream(0));
        let expect: std::collections::BTreeSet<u32> =
            sampled.iter().map(|(_, b)| *b).collect();
        assert_eq!(joined.as_set(), &expect);
        // Sanity: the root marginal dominates what the join can mark.
        let root_marginal = marginal_single(&f, 1).unwrap();
        for b in joined.iter() {
            assert!(root_marginal.contains(b));
        }
    }

    #[test]
    fn two_edge_path_requires_a_common_middle_label() {
        // f concentrated on tuples (a, b, c) = (1, 2, 3) and (4, 5, 6); with
        // enough samples both root labels appear, and the middle label must
        // chain: label 3 needs (2,3) on edge (1,2) and (1,2) on edge (0,1).
        let mut w: BTreeMap<Vec<u32>, crate::Rat> = BTreeMap::new();
        w.insert(vec![1, 2, 3], rat(1, 2));
        w.insert(vec![4, 5, 6], rat(1, 2));
        let f = MassFunction::from_map(w).unwrap();
        let tree = DirectedRootedTree::path(2);
        let joined = process_j_tree(&tree, &f, 6, 256, RngSeed::new(2, 8)).unwrap();
        // With 256 samples per edge both tuples are sampled on both edges
        // with overwhelming probability.
        assert!(joined.contains(&3));
        assert!(joined.contains(&6));
        assert!(!joined.contains(&1));
        assert_eq!(joined.len(), 2);
    }

    #[test]
    fn cross_tuple_chaining_is_allowed() {
        // Tuples (1, 2, 9) and (7, 2, 3) share the middle label 2, so the
        // root label 3 is realizable by chaining edge samples from different
        // tuples: y = (1, 2, 3) is a valid labeling even though no single
        // tuple equals it.
        let mut w: BTreeMap<Vec<u32>, crate::Rat> = BTreeMap::new();
        w.insert(vec![1, 2, 9], rat(1, 2));
        w.insert(vec![7, 2, 3], rat(1, 2));
        let f = MassFunction::from_map(w).unwrap();
        let tree = DirectedRootedTree::path(2);
        let joined = process_j_tree(&tree, &f, 9, 512, RngSeed::new(6, 1)).unwrap();
        assert!(joined.contains(&9));
        assert!(joined.contains(&3));
    }
}
