//! Canonical one-sided testers for support properties of edge distributions.
//!
//! Every tester here consumes a slice of [`LabeledSample`]s and inspects only
//! the sampled points (never the underlying distribution), so a tester run is
//! a pure function of the sample batch.  All testers are one-sided: they
//! reject only when the samples themselves contain a violation, and the
//! violation is returned as a witness.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::core::{Edge, LabeledSample};

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum TesterError {
    /// A parameter is outside its meaningful range.
    #[error("range error: {0}")]
    RangeError(String),
    /// The provided sample batch is too small for the requested procedure.
    #[error("budget error: {0}")]
    BudgetError(String),
}

// ---------------------------------------------------------------------------
// pattern graphs
// ---------------------------------------------------------------------------

/// A small simple graph on vertex set `{1, .., k}` used as a test pattern:
/// the `H` of H-freeness and homomorphism properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternGraph {
    k: u32,
    edges: BTreeSet<Edge>,
}

impl PatternGraph {
    /// Builds a pattern on `{1, .., k}` from an explicit edge list.
    pub fn from_edges(k: u32, edges: &[(u32, u32)]) -> Result<Self, TesterError> {
        if k == 0 {
            return Err(TesterError::RangeError(
                "pattern graph needs at least one vertex".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            let e = Edge::new(a, b).map_err(|err| TesterError::RangeError(err.to_string()))?;
            if e.b() > k {
                return Err(TesterError::RangeError(format!(
                    "pattern edge {e} has an endpoint above k = {k}"
                )));
            }
            set.insert(e);
        }
        Ok(PatternGraph { k, edges: set })
    }

    /// The single edge `{1,2}`.
    pub fn single_edge() -> Self {
        Self::from_edges(2, &[(1, 2)]).expect("static pattern")
    }

    /// The triangle on `{1,2,3}`.
    pub fn triangle() -> Self {
        Self::from_edges(3, &[(1, 2), (2, 3), (1, 3)]).expect("static pattern")
    }

    /// The four-cycle `1-2-3-4-1`.
    pub fn square() -> Self {
        Self::from_edges(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]).expect("static pattern")
    }

    /// The path with `t` edges on `t + 1` vertices: `1-2-..-(t+1)`.
    pub fn path(t: u32) -> Result<Self, TesterError> {
        if t == 0 {
            return Err(TesterError::RangeError("path needs at least one edge".into()));
        }
        let edges: Vec<(u32, u32)> = (1..=t).map(|i| (i, i + 1)).collect();
        Self::from_edges(t + 1, &edges)
    }

    /// The cycle with `l` edges, `l >= 3`.
    pub fn cycle(l: u32) -> Result<Self, TesterError> {
        if l < 3 {
            return Err(TesterError::RangeError("cycle needs at least 3 edges".into()));
        }
        let mut edges: Vec<(u32, u32)> = (1..l).map(|i| (i, i + 1)).collect();
        edges.push((1, l));
        Self::from_edges(l, &edges)
    }

    /// The complete graph on `k` vertices, `k >= 2`.
    pub fn complete(k: u32) -> Result<Self, TesterError> {
        if k < 2 {
            return Err(TesterError::RangeError(
                "complete pattern needs at least 2 vertices".into(),
            ));
        }
        let mut edges = Vec::new();
        for a in 1..=k {
            for b in (a + 1)..=k {
                edges.push((a, b));
            }
        }
        Self::from_edges(k, &edges)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    /// Number of edges, written `t` in the sample-budget formulas.
    pub fn edge_count(&self) -> u64 {
        self.edges.len() as u64
    }

    pub fn adjacent(&self, a: u32, b: u32) -> bool {
        match Edge::new(a, b) {
            Ok(e) => self.edges.contains(&e),
            Err(_) => false,
        }
    }

    /// True iff the pattern is a tree on all `k` vertices: connected,
    /// acyclic, and without isolated vertices.
    pub fn is_tree(&self) -> bool {
        if self.edges.len() as u64 != (self.k as u64).saturating_sub(1) {
            return false;
        }
        if self.k == 1 {
            return true;
        }
        // k - 1 edges: connectivity alone rules out cycles.
        let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for e in &self.edges {
            adj.entry(e.a()).or_default().push(e.b());
            adj.entry(e.b()).or_default().push(e.a());
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![1u32];
        seen.insert(1u32);
        while let Some(v) = stack.pop() {
            for &w in adj.get(&v).into_iter().flatten() {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() as u32 == self.k
    }

    /// True iff every vertex of `{1, .., k}` touches some edge.
    pub fn has_no_isolated_vertices(&self) -> bool {
        let mut incident: BTreeSet<u32> = BTreeSet::new();
        for e in &self.edges {
            incident.insert(e.a());
            incident.insert(e.b());
        }
        incident.len() as u32 == self.k
    }

    fn is_triangle(&self) -> bool {
        self.k == 3 && self.edges.len() == 3
    }

    fn is_four_cycle(&self) -> bool {
        if self.k != 4 || self.edges.len() != 4 {
            return false;
        }
        let mut deg: BTreeMap<u32, u32> = BTreeMap::new();
        for e in &self.edges {
            *deg.entry(e.a()).or_insert(0) += 1;
            *deg.entry(e.b()).or_insert(0) += 1;
        }
        deg.len() == 4 && deg.values().all(|&d| d == 2)
    }
}

// ---------------------------------------------------------------------------
// properties and verdicts
// ---------------------------------------------------------------------------

/// A support property of edge distributions, determined by which edge sets
/// (supports) satisfy it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Property {
    /// Supports admitting a graph homomorphism into `H`.  With `H` a single
    /// edge this is bipartiteness.
    HomToH(PatternGraph),
    /// Supports containing no copy of `H` as a (not necessarily induced)
    /// subgraph.
    HFree(PatternGraph),
    /// Distributions splitting as a clique part plus an independent part:
    /// some vertex set `K` with every positive-mass edge inside `K` and every
    /// zero-mass edge outside `K` — equivalently, no alternating triple
    /// positive `{a,b}`, negative `{b,c}`, positive `{c,d}`.
    Clique,
}

impl Property {
    /// Short stable name used in reports.
    pub fn name(&self) -> String {
        match self {
            Property::HomToH(h) if *h == PatternGraph::single_edge() => "bipartite".into(),
            Property::HomToH(h) => format!("hom-to-{}v{}e", h.k(), h.edge_count()),
            Property::HFree(h) if h.is_triangle() => "triangle-free".into(),
            Property::HFree(h) if h.is_four_cycle() => "square-free".into(),
            Property::HFree(h) => format!("{}v{}e-free", h.k(), h.edge_count()),
            Property::Clique => "clique".into(),
        }
    }

    /// Whether shrinking a satisfying support keeps it satisfying.  The
    /// clique property is the one property here where it does not: erasing a
    /// clique edge while keeping the rest can create a violation.
    pub fn is_downward_closed(&self) -> bool {
        !matches!(self, Property::Clique)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// A concrete violation exhibited by a tester: labeled sampled points whose
/// labels are jointly incompatible with the property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `(edge, label)` pairs; for support properties all labels are `true`.
    pub points: Vec<(Edge, bool)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub decision: Decision,
    /// Present exactly when the decision is `Reject`.
    pub witness: Option<Violation>,
}

impl Verdict {
    fn accept() -> Self {
        Verdict { decision: Decision::Accept, witness: None }
    }

    fn reject(points: Vec<(Edge, bool)>) -> Self {
        Verdict { decision: Decision::Reject, witness: Some(Violation { points }) }
    }

    pub fn is_reject(&self) -> bool {
        self.decision == Decision::Reject
    }
}

// ---------------------------------------------------------------------------
// sample graph (deduplicated positives)
// ---------------------------------------------------------------------------

/// The simple graph formed by the distinct positive edges of a batch.
struct SampleGraph {
    edges: BTreeSet<Edge>,
    adj: BTreeMap<u32, BTreeSet<u32>>,
}

impl SampleGraph {
    fn from_positives(samples: &[LabeledSample]) -> Self {
        let mut edges = BTreeSet::new();
        let mut adj: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for s in samples {
            if let Some(e) = s.positive_edge() {
                if edges.insert(e) {
                    adj.entry(e.a()).or_default().insert(e.b());
                    adj.entry(e.b()).or_default().insert(e.a());
                }
            }
        }
        SampleGraph { edges, adj }
    }

    fn neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.adj.get(&v).into_iter().flatten().copied()
    }

    fn vertices(&self) -> impl Iterator<Item = u32> + '_ {
        self.adj.keys().copied()
    }

    fn has_edge(&self, a: u32, b: u32) -> bool {
        match Edge::new(a, b) {
            Ok(e) => self.edges.contains(&e),
            Err(_) => false,
        }
    }
}

// ---------------------------------------------------------------------------
// subgraph containment
// ---------------------------------------------------------------------------

/// Finds a copy of `h` in the graph, returning its edges.  Vertices are
/// scanned in ascending id order, so the returned copy is deterministic in
/// the edge set.
fn find_copy(h: &PatternGraph, g: &SampleGraph) -> Option<Vec<Edge>> {
    if h.is_triangle() {
        return find_triangle(g);
    }
    if h.is_four_cycle() {
        return find_four_cycle(g);
    }
    find_copy_backtracking(h, g)
}

fn find_triangle(g: &SampleGraph) -> Option<Vec<Edge>> {
    for e in &g.edges {
        let (a, b) = e.ends();
        let na = g.adj.get(&a)?;
        let nb = g.adj.get(&b)?;
        if let Some(&c) = na.intersection(nb).next() {
            return Some(vec![*e, Edge::of(b, c), Edge::of(a, c)]);
        }
    }
    None
}

fn find_four_cycle(g: &SampleGraph) -> Option<Vec<Edge>> {
    // A four-cycle is a pair of vertices with two common neighbors; scan the
    // (ordered) diagonal pairs.
    let verts: Vec<u32> = g.vertices().collect();
    for (i, &a) in verts.iter().enumerate() {
        for &c in &verts[i + 1..] {
            let na = match g.adj.get(&a) {
                Some(s) => s,
                None => continue,
            };
            let nc = match g.adj.get(&c) {
                Some(s) => s,
                None => continue,
            };
            let mut common = na.intersection(nc);
            if let (Some(&b), Some(&d)) = (common.next(), common.next()) {
                return Some(vec![
                    Edge::of(a, b),
                    Edge::of(b, c),
                    Edge::of(c, d),
                    Edge::of(a, d),
                ]);
            }
        }
    }
    None
}

fn find_copy_backtracking(h: &PatternGraph, g: &SampleGraph) -> Option<Vec<Edge>> {
    let verts: Vec<u32> = g.vertices().collect();
    let k = h.k() as usize;
    if verts.len() < k {
        return None;
    }
    let mut image: Vec<Option<u32>> = vec![None; k];
    let mut used: BTreeSet<u32> = BTreeSet::new();
    if !extend_embedding(h, g, &verts, 0, &mut image, &mut used) {
        return None;
    }
    let mut copy = Vec::new();
    for e in h.edges() {
        let ia = image[(e.a() - 1) as usize].expect("complete embedding");
        let ib = image[(e.b() - 1) as usize].expect("complete embedding");
        copy.push(Edge::of(ia, ib));
    }
    Some(copy)
}

fn extend_embedding(
    h: &PatternGraph,
    g: &SampleGraph,
    verts: &[u32],
    next: usize,
    image: &mut Vec<Option<u32>>,
    used: &mut BTreeSet<u32>,
) -> bool {
    if next == image.len() {
        return true;
    }
    'candidates: for &v in verts {
        if used.contains(&v) {
            continue;
        }
        // Every pattern edge between vertex `next + 1` and an already-placed
        // vertex must land on a graph edge.
        for placed in 0..next {
            if h.adjacent((next + 1) as u32, (placed + 1) as u32) {
                let w = image[placed].expect("placed");
                if !g.has_edge(v, w) {
                    continue 'candidates;
                }
            }
        }
        image[next] = Some(v);
        used.insert(v);
        if extend_embedding(h, g, verts, next + 1, image, used) {
            return true;
        }
        image[next] = None;
        used.remove(&v);
    }
    false
}

// ---------------------------------------------------------------------------
// homomorphism testing
// ---------------------------------------------------------------------------

/// Does the graph admit a homomorphism into `h`?  Positive-edge endpoints get
/// colors in `{1, .., k}` such that every edge maps to an edge of `h`.
fn has_hom(h: &PatternGraph, g: &SampleGraph) -> bool {
    if h == &PatternGraph::single_edge() {
        return is_bipartite(g);
    }
    let verts: Vec<u32> = g.vertices().collect();
    let mut coloring: BTreeMap<u32, u32> = BTreeMap::new();
    assign_colors(h, g, &verts, 0, &mut coloring)
}

fn assign_colors(
    h: &PatternGraph,
    g: &SampleGraph,
    verts: &[u32],
    next: usize,
    coloring: &mut BTreeMap<u32, u32>,
) -> bool {
    if next == verts.len() {
        return true;
    }
    let v = verts[next];
    'colors: for c in 1..=h.k() {
        for w in g.neighbors(v) {
            if let Some(&cw) = coloring.get(&w) {
                if !h.adjacent(c, cw) {
                    continue 'colors;
                }
            }
        }
        coloring.insert(v, c);
        if assign_colors(h, g, verts, next + 1, coloring) {
            return true;
        }
        coloring.remove(&v);
    }
    false
}

fn is_bipartite(g: &SampleGraph) -> bool {
    let mut color: BTreeMap<u32, bool> = BTreeMap::new();
    for start in g.vertices() {
        if color.contains_key(&start) {
            continue;
        }
        color.insert(start, false);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let cv = color[&v];
            for w in g.neighbors(v) {
                match color.get(&w) {
                    Some(&cw) if cw == cv => return false,
                    Some(_) => {}
                    None => {
                        color.insert(w, !cv);
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// the canonical testers
// ---------------------------------------------------------------------------

/// One-sided tester for H-freeness: rejects iff the distinct positive edges
/// contain a copy of `h`, which is then the witness.
pub fn canonical_subgraph_tester(
    h: &PatternGraph,
    samples: &[LabeledSample],
) -> Result<Verdict, TesterError> {
    if h.edge_count() == 0 {
        return Err(TesterError::RangeError(
            "freeness pattern needs at least one edge".into(),
        ));
    }
    if !h.has_no_isolated_vertices() {
        return Err(TesterError::RangeError(
            "freeness pattern must have no isolated vertices".into(),
        ));
    }
    let g = SampleGraph::from_positives(samples);
    match find_copy(h, &g) {
        Some(copy) => Ok(Verdict::reject(copy.into_iter().map(|e| (e, true)).collect())),
        None => Ok(Verdict::accept()),
    }
}

/// One-sided tester for homomorphism into `h`: rejects iff the distinct
/// positive edges admit no homomorphism into `h`.  The witness is a minimal
/// positive-edge subset that still admits none.
pub fn hom_tester(h: &PatternGraph, samples: &[LabeledSample]) -> Result<Verdict, TesterError> {
    let g = SampleGraph::from_positives(samples);
    if has_hom(h, &g) {
        return Ok(Verdict::accept());
    }
    let witness = minimize_hom_violation(h, &g.edges);
    Ok(Verdict::reject(witness.into_iter().map(|e| (e, true)).collect()))
}

/// Greedy minimization: drop edges (ascending order) whose removal keeps the
/// rest violating.  The result is inclusion-minimal.
fn minimize_hom_violation(h: &PatternGraph, edges: &BTreeSet<Edge>) -> Vec<Edge> {
    let mut keep: Vec<Edge> = edges.iter().copied().collect();
    let mut i = 0;
    while i < keep.len() {
        let mut trial = keep.clone();
        trial.remove(i);
        let g = graph_of(&trial);
        if has_hom(h, &g) {
            i += 1; // edge is load-bearing
        } else {
            keep.remove(i);
        }
    }
    keep
}

fn graph_of(edges: &[Edge]) -> SampleGraph {
    let samples: Vec<LabeledSample> =
        edges.iter().map(|&e| LabeledSample::new(e, true)).collect();
    SampleGraph::from_positives(&samples)
}

/// One-sided tester for the clique property: rejects iff the samples contain
/// an alternating triple — positive `{a,b}`, negative `{b,c}`, positive
/// `{c,d}` with `a != c`, `b != d` (`a = d` is allowed, giving a triangle
/// with a negative side).  Such a triple is incompatible with any clique
/// split, since `{b,c}` negative forces one of `b, c` outside the clique,
/// while each carries a positive edge.
pub fn clique_tester(samples: &[LabeledSample]) -> Result<Verdict, TesterError> {
    let mut positives: BTreeSet<Edge> = BTreeSet::new();
    let mut negatives: BTreeSet<Edge> = BTreeSet::new();
    for s in samples {
        match (s.edge(), s.is_positive()) {
            (Some(e), true) => {
                positives.insert(e);
            }
            (Some(e), false) => {
                negatives.insert(e);
            }
            (None, _) => {}
        }
    }
    // Positive adjacency for the endpoint scans.
    let mut pos_adj: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for e in &positives {
        pos_adj.entry(e.a()).or_default().insert(e.b());
        pos_adj.entry(e.b()).or_default().insert(e.a());
    }
    for neg in &negatives {
        let (b, c) = neg.ends();
        // positive {a,b} with a != c, positive {c,d} with d != b
        let a = pos_adj
            .get(&b)
            .and_then(|s| s.iter().copied().find(|&a| a != c));
        let d = pos_adj
            .get(&c)
            .and_then(|s| s.iter().copied().find(|&d| d != b));
        if let (Some(a), Some(d)) = (a, d) {
            return Ok(Verdict::reject(vec![
                (Edge::of(a, b), true),
                (*neg, false),
                (Edge::of(c, d), true),
            ]));
        }
    }
    Ok(Verdict::accept())
}

/// Dispatches a sample batch to the tester for `property`.
pub fn run_property_tester(
    property: &Property,
    samples: &[LabeledSample],
) -> Result<Verdict, TesterError> {
    match property {
        Property::HomToH(h) => hom_tester(h, samples),
        Property::HFree(h) => canonical_subgraph_tester(h, samples),
        Property::Clique => clique_tester(samples),
    }
}

// ---------------------------------------------------------------------------
// sample budgets
// ---------------------------------------------------------------------------

fn check_eps(eps: f64) -> Result<(), TesterError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(TesterError::RangeError(format!(
            "distance parameter must lie in (0, 1], got {eps}"
        )));
    }
    Ok(())
}

/// Samples sufficient to test homomorphism into a `k`-vertex pattern on
/// `n`-vertex instances: `ceil((2 + n ln k) / eps)`.
pub fn hom_sample_budget(n: u64, k: u64, eps: f64) -> Result<u64, TesterError> {
    check_eps(eps)?;
    if n == 0 || k == 0 {
        return Err(TesterError::RangeError(
            "vertex counts must be positive".into(),
        ));
    }
    let raw = (2.0 + n as f64 * (k as f64).ln()) / eps;
    Ok(raw.ceil() as u64)
}

/// Samples sufficient for the canonical H-freeness tester on `n`-vertex
/// instances.  With `t` pattern edges:
/// one edge `ceil(18 / eps)`; trees `t * ceil(288 t^4 / eps * n^((t-1)/t))`;
/// otherwise `ceil(18 t^2 * C(n,2)^((t-1)/t) / eps)`.
pub fn subgraph_sample_budget(h: &PatternGraph, n: u64, eps: f64) -> Result<u64, TesterError> {
    check_eps(eps)?;
    let t = h.edge_count();
    if t == 0 {
        return Err(TesterError::RangeError(
            "freeness pattern needs at least one edge".into(),
        ));
    }
    if n < 2 {
        return Err(TesterError::RangeError(
            "instances need at least two vertices".into(),
        ));
    }
    if t == 1 {
        return Ok((18.0 / eps).ceil() as u64);
    }
    let tf = t as f64;
    let exponent = (tf - 1.0) / tf;
    if h.is_tree() {
        let inner = 288.0 * tf.powi(4) / eps * (n as f64).powf(exponent);
        Ok(t * inner.ceil() as u64)
    } else {
        let pairs = n * (n - 1) / 2;
        let raw = 18.0 * tf * tf * (pairs as f64).powf(exponent) / eps;
        Ok(raw.ceil() as u64)
    }
}

// ---------------------------------------------------------------------------
// labeled-sample reduction
// ---------------------------------------------------------------------------

/// Runs a support tester through labeled samples alone.
///
/// Given a tester that is sound and complete on batches of `m` support
/// samples, draw `ceil(18 m / eps)` labeled samples.  If at most `9 m` are
/// positive, accept: too few positives means the support mass is below
/// `eps / 2` and the distribution is close to one with empty support.
/// Otherwise split the first `9 m` positive edges into nine batches of `m`,
/// run the support tester on each, and take the majority.
pub fn support_to_labeled_reduction<F>(
    mut support_tester: F,
    m: u64,
    eps: f64,
    samples: &[LabeledSample],
) -> Result<Verdict, TesterError>
where
    F: FnMut(&[Edge]) -> bool,
{
    check_eps(eps)?;
    if m == 0 {
        return Err(TesterError::RangeError(
            "inner sample size must be positive".into(),
        ));
    }
    let needed = labeled_budget(m, eps)?;
    if (samples.len() as u64) < needed {
        return Err(TesterError::BudgetError(format!(
            "need {needed} labeled samples, got {}",
            samples.len()
        )));
    }
    let positives: Vec<Edge> = samples[..needed as usize]
        .iter()
        .filter_map(|s| s.positive_edge())
        .collect();
    if positives.len() as u64 <= 9 * m {
        return Ok(Verdict::accept());
    }
    let mut accepts = 0u32;
    for batch in 0..9 {
        let lo = (batch * m) as usize;
        let hi = lo + m as usize;
        if support_tester(&positives[lo..hi]) {
            accepts += 1;
        }
    }
    if accepts >= 5 {
        Ok(Verdict::accept())
    } else {
        Ok(Verdict { decision: Decision::Reject, witness: None })
    }
}

/// Labeled samples consumed by the reduction: `ceil(18 m / eps)`.
pub fn labeled_budget(m: u64, eps: f64) -> Result<u64, TesterError> {
    check_eps(eps)?;
    Ok((18.0 * m as f64 / eps).ceil() as u64)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
