//! Core vocabulary: edges, mass functions, edge distributions, count and
//! indicator vectors, labeled samples, seeded sampling, and the derived
//! sampling processes used throughout the testers and lemma checks.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * Vertices are `u32` ids, 1-based (`1..=n`).
//! * An [`Edge`] is an unordered pair `{a, b}` with `a < b` after
//!   normalization; self-loops are rejected.
//! * A [`MassFunction`] is a *sub*-probability assignment: nonnegative exact
//!   rationals with total at most one (up to `MASS_TOL` for float-derived
//!   inputs). The missing mass is the probability of the distinguished `nil`
//!   outcome, which samplers report as `None` — never as a sentinel id.
//! * Support iteration order is ascending (B-tree) everywhere, which is also
//!   the canonical order for inverse-CDF sampling.

mod sample;
mod tree;

pub use sample::{
    and_indicator, draw_samples, join_indicator, process_j, process_p, process_s,
    process_s_indicator, process_w, uniform_unit, wedge_counts, RngSeed, Sampler,
};
pub use tree::{process_j_tree, DirectedRootedTree};

use crate::{rat_int, render_mass, Rat, MASS_TOL};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

// ============================================================================
// Errors
// ============================================================================

/// Errors raised by core constructors and processes.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    /// A weight is negative, non-finite, or the total mass exceeds one.
    #[error("invalid mass: {0}")]
    InvalidMass(String),
    /// Mismatched dimensions: edge endpoints out of range, ragged tuples,
    /// weight/edge arrays of different lengths, and similar.
    #[error("shape error: {0}")]
    ShapeError(String),
    /// A directed rooted tree constraint is violated.
    #[error("tree error: {0}")]
    TreeError(String),
}

// ============================================================================
// Edges
// ============================================================================

/// Unordered pair of distinct vertices, stored normalized with `a < b`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    a: u32,
    b: u32,
}

impl Edge {
    /// Builds `{a, b}`, normalizing the order. Self-loops are rejected.
    pub fn new(a: u32, b: u32) -> Result<Self, CoreError> {
        if a == b {
            return Err(CoreError::ShapeError(format!("self-loop at vertex {a}")));
        }
        if a == 0 || b == 0 {
            return Err(CoreError::ShapeError(
                "vertex ids are 1-based; 0 is not a vertex".into(),
            ));
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Ok(Edge { a, b })
    }

    /// Infallible constructor for code paths where distinctness is already
    /// established; still normalizes and checks in debug builds.
    pub fn of(a: u32, b: u32) -> Self {
        debug_assert!(a != b && a > 0 && b > 0);
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Edge { a, b }
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    /// Both endpoints in ascending order.
    pub fn ends(&self) -> (u32, u32) {
        (self.a, self.b)
    }

    /// True iff `v` is one of the endpoints.
    pub fn touches(&self, v: u32) -> bool {
        self.a == v || self.b == v
    }

    /// The endpoint other than `v`; `None` if `v` is not an endpoint.
    pub fn other(&self, v: u32) -> Option<u32> {
        if self.a == v {
            Some(self.b)
        } else if self.b == v {
            Some(self.a)
        } else {
            None
        }
    }

    /// Shared endpoint with another edge, if any (the smaller one if both
    /// endpoints are shared, which cannot happen for distinct edges).
    pub fn common_vertex(&self, other: &Edge) -> Option<u32> {
        if other.touches(self.a) {
            Some(self.a)
        } else if other.touches(self.b) {
            Some(self.b)
        } else {
            None
        }
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.a, self.b)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.a, self.b)
    }
}

/// A wedge: a path of two edges `{a, b}, {b, c}` recorded as its endpoint
/// pair `{a, c}` plus the middle vertex `b`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Wedge {
    /// Endpoints `{a, c}` of the wedge.
    pub ends: Edge,
    /// Middle vertex, distinct from both endpoints.
    pub mid: u32,
}

impl Wedge {
    pub fn new(ends: Edge, mid: u32) -> Result<Self, CoreError> {
        if ends.touches(mid) {
            return Err(CoreError::ShapeError(format!(
                "wedge middle {mid} coincides with an endpoint of {ends}"
            )));
        }
        Ok(Wedge { ends, mid })
    }
}

// ============================================================================
// Mass functions
// ============================================================================

/// Domain marker: anything with a total order and value semantics can index a
/// mass function (vertices, edges, grid cells, wedges, tuples).
pub trait Domain: Ord + Clone + fmt::Debug {}
impl<T: Ord + Clone + fmt::Debug> Domain for T {}

/// A sub-probability mass function over an ordered domain: nonnegative exact
/// rational weights with total at most one (`MASS_TOL` slack for inputs that
/// arrived as floats). Zero weights are dropped, so `support()` iterates only
/// strictly positive atoms, in ascending domain order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MassFunction<D: Domain> {
    weights: BTreeMap<D, Rat>,
    total: Rat,
}

impl<D: Domain> MassFunction<D> {
    /// Validates and canonicalizes a weight map.
    pub fn from_map(weights: BTreeMap<D, Rat>) -> Result<Self, CoreError> {
        let mut clean = BTreeMap::new();
        let mut total = Rat::zero();
        for (d, w) in weights {
            if w.is_negative() {
                return Err(CoreError::InvalidMass(format!(
                    "negative weight {} at {d:?}",
                    render_mass(&w)
                )));
            }
            if w.is_zero() {
                continue;
            }
            total += &w;
            clean.insert(d, w);
        }
        let slack = Rat::from_float(MASS_TOL).expect("tolerance is finite");
        if total > rat_int(1) + slack {
            return Err(CoreError::InvalidMass(format!(
                "total mass {} exceeds one",
                render_mass(&total)
            )));
        }
        Ok(MassFunction {
            weights: clean,
            total,
        })
    }

    /// Uniform mass `1/|atoms|` on the given atoms (deduplicated).
    pub fn uniform<I: IntoIterator<Item = D>>(atoms: I) -> Result<Self, CoreError> {
        let set: BTreeSet<D> = atoms.into_iter().collect();
        if set.is_empty() {
            return Err(CoreError::InvalidMass(
                "uniform mass over an empty atom set".into(),
            ));
        }
        let w = Rat::new(1.into(), (set.len() as i64).into());
        Self::from_map(set.into_iter().map(|d| (d, w.clone())).collect())
    }

    /// The empty (everywhere-zero) mass function.
    pub fn zero() -> Self {
        MassFunction {
            weights: BTreeMap::new(),
            total: Rat::zero(),
        }
    }

    /// Total mass (the `nil` outcome has probability `1 - total()`).
    pub fn total(&self) -> &Rat {
        &self.total
    }

    /// True iff the total mass is one up to `MASS_TOL` (a proper
    /// distribution, i.e. `nil` has probability zero).
    pub fn is_proper(&self) -> bool {
        let slack = Rat::from_float(MASS_TOL).expect("tolerance is finite");
        (self.total.clone() - rat_int(1)).abs() <= slack
    }

    /// Weight at `d` (zero off the support).
    pub fn get(&self, d: &D) -> Rat {
        self.weights.get(d).cloned().unwrap_or_else(Rat::zero)
    }

    /// Strictly positive atoms in ascending domain order.
    pub fn support(&self) -> impl Iterator<Item = (&D, &Rat)> {
        self.weights.iter()
    }

    /// Number of support atoms.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn contains(&self, d: &D) -> bool {
        self.weights.contains_key(d)
    }

    /// Mass of a set given by a predicate.
    pub fn mass_where(&self, mut pred: impl FnMut(&D) -> bool) -> Rat {
        let mut acc = Rat::zero();
        for (d, w) in &self.weights {
            if pred(d) {
                acc += w;
            }
        }
        acc
    }
}

/// Thresholding pruning: keeps exactly the atoms with weight at least
/// `eps / domain_size` and zeroes the rest. The discarded mass is strictly
/// below `eps` whenever the domain truly has at most `domain_size` atoms, so
/// the result is an `eps`-pruning of `f` (pointwise dominated, small loss).
pub fn epsilon_prune<D: Domain>(
    f: &MassFunction<D>,
    domain_size: u64,
    eps: &Rat,
) -> Result<MassFunction<D>, CoreError> {
    if domain_size == 0 {
        return Err(CoreError::ShapeError("empty domain".into()));
    }
    if f.len() as u64 > domain_size {
        return Err(CoreError::ShapeError(format!(
            "support of size {} does not fit in a domain of size {domain_size}",
            f.len()
        )));
    }
    if eps.is_negative() {
        return Err(CoreError::InvalidMass("negative pruning parameter".into()));
    }
    let threshold = eps / rat_int(domain_size as i64);
    let kept: BTreeMap<D, Rat> = f
        .support()
        .filter(|(_, w)| **w >= threshold)
        .map(|(d, w)| (d.clone(), w.clone()))
        .collect();
    MassFunction::from_map(kept)
}

// ============================================================================
// Tuples and marginals
// ============================================================================

/// Mass function over fixed-length tuples in `[n]^V`, used by the tree join
/// process. All tuples must share one length.
pub type TupleMass = MassFunction<Vec<u32>>;

/// Checks that every tuple in `f` has length `arity`.
pub fn validate_arity(f: &TupleMass, arity: usize) -> Result<(), CoreError> {
    for (t, _) in f.support() {
        if t.len() != arity {
            return Err(CoreError::ShapeError(format!(
                "tuple {t:?} has length {}, expected {arity}",
                t.len()
            )));
        }
    }
    Ok(())
}

/// Marginal of a tuple mass function onto the listed coordinates (in the
/// listed order). Coordinates out of range are a shape error.
pub fn marginal(f: &TupleMass, coords: &[usize]) -> Result<TupleMass, CoreError> {
    let mut out: BTreeMap<Vec<u32>, Rat> = BTreeMap::new();
    for (t, w) in f.support() {
        let mut key = Vec::with_capacity(coords.len());
        for &c in coords {
            let v = t.get(c).ok_or_else(|| {
                CoreError::ShapeError(format!("coordinate {c} out of range for tuple {t:?}"))
            })?;
            key.push(*v);
        }
        *out.entry(key).or_insert_with(Rat::zero) += w;
    }
    MassFunction::from_map(out)
}

/// Marginal onto an ordered pair of coordinates, keyed by `(u32, u32)`.
pub fn marginal_pair(f: &TupleMass, u: usize, v: usize) -> Result<MassFunction<(u32, u32)>, CoreError> {
    let m = marginal(f, &[u, v])?;
    let mut out = BTreeMap::new();
    for (t, w) in m.support() {
        out.insert((t[0], t[1]), w.clone());
    }
    MassFunction::from_map(out)
}

/// Marginal onto a single coordinate, keyed by `u32`.
pub fn marginal_single(f: &TupleMass, u: usize) -> Result<MassFunction<u32>, CoreError> {
    let m = marginal(f, &[u])?;
    let mut out = BTreeMap::new();
    for (t, w) in m.support() {
        out.insert(t[0], w.clone());
    }
    MassFunction::from_map(out)
}

// ============================================================================
// Edge distributions
// ============================================================================

/// A sub-probability distribution over the edge set of the complete graph on
/// `[n]`; the central object the testers sample from.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EdgeDistribution {
    n: u32,
    mass: MassFunction<Edge>,
}

impl EdgeDistribution {
    pub fn new(n: u32, mass: MassFunction<Edge>) -> Result<Self, CoreError> {
        if n == 0 {
            return Err(CoreError::ShapeError("graph on zero vertices".into()));
        }
        for (e, _) in mass.support() {
            if e.b() > n {
                return Err(CoreError::ShapeError(format!(
                    "edge {e} out of range for n = {n}"
                )));
            }
        }
        Ok(EdgeDistribution { n, mass })
    }

    /// Uniform distribution over the given edges.
    pub fn uniform<I: IntoIterator<Item = Edge>>(n: u32, edges: I) -> Result<Self, CoreError> {
        Self::new(n, MassFunction::uniform(edges)?)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mass(&self) -> &MassFunction<Edge> {
        &self.mass
    }

    /// Half the total mass incident to each vertex:
    /// `deg(a) = (1/2) * sum over b != a of p({a,b})`.
    /// Summing over all vertices recovers the total edge mass exactly.
    pub fn degree_mass(&self) -> MassFunction<u32> {
        let half = crate::rat(1, 2);
        let mut deg: BTreeMap<u32, Rat> = BTreeMap::new();
        for (e, w) in self.mass.support() {
            let contribution = w * &half;
            *deg.entry(e.a()).or_insert_with(Rat::zero) += &contribution;
            *deg.entry(e.b()).or_insert_with(Rat::zero) += &contribution;
        }
        MassFunction::from_map(deg).expect("degree mass inherits validity from the edge mass")
    }
}

// ============================================================================
// Count and indicator vectors
// ============================================================================

/// Sparse vector of sample counts over a domain.  The derived `Ord` is the
/// plain map order (so count vectors can themselves serve as a domain); the
/// entrywise partial order lives in [`CountVector::dominates`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct CountVector<D: Domain> {
    counts: BTreeMap<D, u64>,
}

impl<D: Domain> CountVector<D> {
    pub fn new() -> Self {
        CountVector {
            counts: BTreeMap::new(),
        }
    }

    pub fn from_counts(counts: BTreeMap<D, u64>) -> Self {
        let counts = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        CountVector { counts }
    }

    pub fn add(&mut self, d: D, k: u64) {
        if k > 0 {
            *self.counts.entry(d).or_insert(0) += k;
        }
    }

    pub fn get(&self, d: &D) -> u64 {
        self.counts.get(d).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&D, u64)> {
        self.counts.iter().map(|(d, c)| (d, *c))
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.is_empty()
    }

    /// Coordinatewise `self >= other`.
    pub fn dominates(&self, other: &CountVector<D>) -> bool {
        other.entries().all(|(d, c)| self.get(d) >= c)
    }

    /// Entrywise minimum with one: the indicator of the support.
    pub fn to_indicator(&self) -> IndicatorVector<D> {
        IndicatorVector {
            set: self.counts.keys().cloned().collect(),
        }
    }
}

/// Sparse 0/1 vector over a domain (the support of a count vector).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct IndicatorVector<D: Domain> {
    set: BTreeSet<D>,
}

impl<D: Domain> IndicatorVector<D> {
    pub fn new() -> Self {
        IndicatorVector {
            set: BTreeSet::new(),
        }
    }

    pub fn from_set(set: BTreeSet<D>) -> Self {
        IndicatorVector { set }
    }

    pub fn insert(&mut self, d: D) {
        self.set.insert(d);
    }

    pub fn contains(&self, d: &D) -> bool {
        self.set.contains(d)
    }

    pub fn iter(&self) -> impl Iterator<Item = &D> {
        self.set.iter()
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn as_set(&self) -> &BTreeSet<D> {
        &self.set
    }

    /// Coordinatewise `self >= other`, i.e. superset.
    pub fn dominates(&self, other: &IndicatorVector<D>) -> bool {
        other.set.is_subset(&self.set)
    }

    /// View as a count vector with unit counts.
    pub fn to_counts(&self) -> CountVector<D> {
        CountVector {
            counts: self.set.iter().map(|d| (d.clone(), 1)).collect(),
        }
    }
}

// ============================================================================
// Labeled samples
// ============================================================================

/// One labeled sample: an edge drawn from the distribution together with its
/// label, or the `nil` outcome (no edge; the label is fixed to negative).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LabeledSample {
    edge: Option<Edge>,
    positive: bool,
}

impl LabeledSample {
    pub fn nil() -> Self {
        LabeledSample {
            edge: None,
            positive: false,
        }
    }

    pub fn new(edge: Edge, positive: bool) -> Self {
        LabeledSample {
            edge: Some(edge),
            positive,
        }
    }

    pub fn edge(&self) -> Option<Edge> {
        self.edge
    }

    /// True iff this sample carries an edge with a positive label.
    pub fn is_positive(&self) -> bool {
        self.positive
    }

    /// The edge, when present with a positive label.
    pub fn positive_edge(&self) -> Option<Edge> {
        if self.positive {
            self.edge
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn edge_normalizes_and_rejects_loops() {
        let e = Edge::new(5, 2).unwrap();
        assert_eq!(e.ends(), (2, 5));
        assert!(Edge::new(3, 3).is_err());
        assert!(Edge::new(0, 1).is_err());
        assert_eq!(e.other(2), Some(5));
        assert_eq!(e.other(7), None);
    }

    #[test]
    fn mass_function_validates_and_canonicalizes() {
        let mut m = BTreeMap::new();
        m.insert(1u32, rat(1, 2));
        m.insert(2u32, rat(0, 1));
        m.insert(3u32, rat(1, 4));
        let f = MassFunction::from_map(m).unwrap();
        assert_eq!(f.len(), 2); // the zero atom is dropped
        assert_eq!(*f.total(), rat(3, 4));
        assert!(!f.is_proper());
        assert_eq!(f.get(&2), rat(0, 1));

        let mut bad = BTreeMap::new();
        bad.insert(1u32, rat(-1, 2));
        assert!(matches!(
            MassFunction::from_map(bad),
            Err(CoreError::InvalidMass(_))
        ));

        let mut heavy = BTreeMap::new();
        heavy.insert(1u32, rat(2, 3));
        heavy.insert(2u32, rat(2, 3));
        assert!(MassFunction::from_map(heavy).is_err());
    }

    #[test]
    fn uniform_masses_are_proper() {
        let f = MassFunction::uniform([1u32, 2, 3, 4]).unwrap();
        assert!(f.is_proper());
        assert_eq!(f.get(&3), rat(1, 4));
    }

    #[test]
    fn degree_mass_sums_to_edge_mass() {
        // Path 1-2-3 with masses 1/2 each: deg(2) = 1/2, deg(1) = deg(3) = 1/4.
        let p = EdgeDistribution::uniform(3, [Edge::of(1, 2), Edge::of(2, 3)]).unwrap();
        let deg = p.degree_mass();
        assert_eq!(deg.get(&2), rat(1, 2));
        assert_eq!(deg.get(&1), rat(1, 4));
        assert_eq!(deg.total(), p.mass().total());
    }

    #[test]
    fn prune_keeps_heavy_atoms_only() {
        let mut m = BTreeMap::new();
        m.insert(1u32, rat(1, 2));
        m.insert(2u32, rat(1, 100));
        m.insert(3u32, rat(1, 8));
        let f = MassFunction::from_map(m).unwrap();
        // Domain [8], eps = 1/2: threshold 1/16 keeps 1/2 and 1/8 only.
        let g = epsilon_prune(&f, 8, &rat(1, 2)).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.get(&1), rat(1, 2));
        assert_eq!(g.get(&2), rat(0, 1));
        // Discarded mass is below eps.
        let dropped = f.total() - g.total();
        assert!(dropped < rat(1, 2));
        // Atom exactly at the threshold is kept.
        let g2 = epsilon_prune(&f, 8, &rat(1, 1)).unwrap();
        assert!(g2.contains(&3)); // threshold 1/8, weight 1/8 stays
        assert!(!g2.contains(&2));
    }

    #[test]
    fn marginals_compose() {
        let mut m = BTreeMap::new();
        m.insert(vec![1u32, 2, 3], rat(1, 4));
        m.insert(vec![1u32, 5, 3], rat(1, 4));
        m.insert(vec![2u32, 2, 4], rat(1, 2));
        let f = MassFunction::from_map(m).unwrap();
        validate_arity(&f, 3).unwrap();
        let pair = marginal_pair(&f, 0, 2).unwrap();
        assert_eq!(pair.get(&(1, 3)), rat(1, 2));
        assert_eq!(pair.get(&(2, 4)), rat(1, 2));
        let single = marginal_single(&f, 1).unwrap();
        assert_eq!(single.get(&2), rat(3, 4));
        assert_eq!(single.get(&5), rat(1, 4));
        // Marginalizing the marginal equals marginalizing directly.
        let via_pair = marginal(&marginal(&f, &[0, 2]).unwrap(), &[0]).unwrap();
        let direct = marginal(&f, &[0]).unwrap();
        assert_eq!(via_pair, direct);
    }

    #[test]
    fn count_vector_domination() {
        let mut w = CountVector::new();
        w.add(Edge::of(1, 2), 3);
        w.add(Edge::of(2, 3), 1);
        let mut z = CountVector::new();
        z.add(Edge::of(1, 2), 2);
        assert!(w.dominates(&z));
        assert!(!z.dominates(&w));
        z.add(Edge::of(4, 5), 1);
        assert!(!w.dominates(&z));
        let ind = w.to_indicator();
        assert_eq!(ind.len(), 2);
        assert!(ind.contains(&Edge::of(1, 2)));
    }
}
