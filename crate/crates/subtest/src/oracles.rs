//! Exact brute-force ground truth at desk scale: violation enumeration,
//! distances, total-variation distances between sample ensembles, domination
//! coupling optimization, and structure verifiers.
//!
//! Everything here is exhaustive and exact (rational arithmetic throughout);
//! the price is hard size limits, enforced up front.  These oracles are the
//! reference the samplers, testers, and generators are checked against, so
//! they deliberately share no search code with those modules.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::core::{CountVector, Domain, Edge, EdgeDistribution, MassFunction};
use crate::generators::SidonSet;
use crate::testers::{PatternGraph, Property};
use crate::{rat_int, Rat};

/// Vertex cap for properties needing subset or coloring searches.
pub const GENERAL_ORACLE_LIMIT: u32 = 8;
/// Vertex cap for subgraph-freeness properties (copy enumeration only).
pub const HFREE_ORACLE_LIMIT: u32 = 12;
/// Cap on `|support|^m` in exact total-variation enumeration.
pub const TV_SEQUENCE_CAP: f64 = 1e7;
/// Cap on `|supp mu| * |supp nu|` in the domination coupling optimizer.
pub const DOMINATION_PAIR_CAP: usize = 100_000;

const HOM_EDGE_CAP: usize = 16;
const COPY_STEP_CAP: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    /// The instance exceeds the exhaustive-search limits.
    #[error("oracle too big: {0}")]
    OracleTooBig(String),
    /// The enumeration space for an exact computation is too large.
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("shape error: {0}")]
    ShapeError(String),
}

// ---------------------------------------------------------------------------
// violation hypergraphs
// ---------------------------------------------------------------------------

/// The minimal violations of a labeled edge function against a property:
/// vertices are the labeled points of the domain, hyperedges are the minimal
/// point sets that no member of the property agrees with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationHypergraph {
    pub n: u32,
    /// Each hyperedge is a sorted list of `(edge, label)` points.
    pub hyperedges: Vec<Vec<(Edge, bool)>>,
}

impl ViolationHypergraph {
    fn from_sets(n: u32, sets: BTreeSet<Vec<(Edge, bool)>>) -> Self {
        ViolationHypergraph {
            n,
            hyperedges: sets.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyperedges.is_empty()
    }

    /// Membership of a labeled point set, up to ordering.
    pub fn contains(&self, points: &[(Edge, bool)]) -> bool {
        let mut key: Vec<(Edge, bool)> = points.to_vec();
        key.sort_unstable();
        key.dedup();
        self.hyperedges.iter().any(|h| *h == key)
    }

    /// Checks the defining invariant: every hyperedge is a violation and
    /// every one-point-removed subset is consistent again.
    pub fn verify_minimal(&self, property: &Property) -> Result<bool, OracleError> {
        for hyp in &self.hyperedges {
            if consistent_with_property(property, hyp)? {
                return Ok(false);
            }
            for skip in 0..hyp.len() {
                let sub: Vec<(Edge, bool)> = hyp
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &p)| p)
                    .collect();
                if !consistent_with_property(property, &sub)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Does some member of the property agree with every labeled point?
pub fn consistent_with_property(
    property: &Property,
    points: &[(Edge, bool)],
) -> Result<bool, OracleError> {
    let mut label_of: BTreeMap<Edge, bool> = BTreeMap::new();
    for &(e, l) in points {
        if let Some(&prev) = label_of.get(&e) {
            if prev != l {
                return Ok(false); // the same point cannot carry both labels
            }
        }
        label_of.insert(e, l);
    }
    let positives: BTreeSet<Edge> = label_of
        .iter()
        .filter(|&(_, &l)| l)
        .map(|(&e, _)| e)
        .collect();
    match property {
        // Downward closed: negatives never constrain, positives must be free.
        Property::HFree(h) => Ok(enumerate_copies(h, &positives)?.is_empty()),
        // Take the positive graph itself as the candidate member.
        Property::HomToH(h) => Ok(hom_exists(h, &positives)),
        Property::Clique => {
            let mut core: BTreeSet<u32> = BTreeSet::new();
            for e in &positives {
                core.insert(e.a());
                core.insert(e.b());
            }
            // Any clique covering the positives contains all their endpoints,
            // so a negative pair inside that vertex set is unsatisfiable.
            for (&e, &l) in &label_of {
                if !l && core.contains(&e.a()) && core.contains(&e.b()) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

// ---------------------------------------------------------------------------
// exhaustive pattern-copy enumeration
// ---------------------------------------------------------------------------

/// All copies of `h` in the edge set, as distinct edge sets.
pub fn enumerate_copies(
    h: &PatternGraph,
    edges: &BTreeSet<Edge>,
) -> Result<Vec<BTreeSet<Edge>>, OracleError> {
    if h.edge_count() == 0 {
        return Err(OracleError::ShapeError(
            "copy enumeration needs a pattern with edges".into(),
        ));
    }
    if !h.has_no_isolated_vertices() {
        return Err(OracleError::ShapeError(
            "copy enumeration needs a pattern without isolated vertices".into(),
        ));
    }
    let mut adj: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for e in edges {
        adj.entry(e.a()).or_default().insert(e.b());
        adj.entry(e.b()).or_default().insert(e.a());
    }
    let verts: Vec<u32> = adj.keys().copied().collect();
    let k = h.k() as usize;
    let mut found: BTreeSet<BTreeSet<Edge>> = BTreeSet::new();
    let mut image: Vec<u32> = Vec::with_capacity(k);
    let mut used: BTreeSet<u32> = BTreeSet::new();
    let mut steps: u64 = 0;
    collect_embeddings(h, &adj, &verts, &mut image, &mut used, &mut found, &mut steps)?;
    Ok(found.into_iter().collect())
}

fn collect_embeddings(
    h: &PatternGraph,
    adj: &BTreeMap<u32, BTreeSet<u32>>,
    verts: &[u32],
    image: &mut Vec<u32>,
    used: &mut BTreeSet<u32>,
    found: &mut BTreeSet<BTreeSet<Edge>>,
    steps: &mut u64,
) -> Result<(), OracleError> {
    if image.len() == h.k() as usize {
        let copy: BTreeSet<Edge> = h
            .edges()
            .map(|e| Edge::of(image[(e.a() - 1) as usize], image[(e.b() - 1) as usize]))
            .collect();
        found.insert(copy);
        return Ok(());
    }
    let next = image.len() as u32 + 1;
    'candidates: for &v in verts {
        *steps += 1;
        if *steps > COPY_STEP_CAP {
            return Err(OracleError::OracleTooBig(
                "copy enumeration exceeded its step budget".into(),
            ));
        }
        if used.contains(&v) {
            continue;
        }
        for placed in 1..next {
            if h.adjacent(next, placed) {
                let w = image[(placed - 1) as usize];
                if !adj.get(&v).is_some_and(|s| s.contains(&w)) {
                    continue 'candidates;
                }
            }
        }
        image.push(v);
        used.insert(v);
        collect_embeddings(h, adj, verts, image, used, found, steps)?;
        image.pop();
        used.remove(&v);
    }
    Ok(())
}

/// Exhaustive homomorphism existence from the edge set into `h`.
fn hom_exists(h: &PatternGraph, edges: &BTreeSet<Edge>) -> bool {
    if edges.is_empty() {
        return true;
    }
    if h.edge_count() == 0 {
        return false;
    }
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for e in edges {
        adj.entry(e.a()).or_default().push(e.b());
        adj.entry(e.b()).or_default().push(e.a());
    }
    let verts: Vec<u32> = adj.keys().copied().collect();
    let mut color: BTreeMap<u32, u32> = BTreeMap::new();
    try_color(h, &adj, &verts, 0, &mut color)
}

fn try_color(
    h: &PatternGraph,
    adj: &BTreeMap<u32, Vec<u32>>,
    verts: &[u32],
    pos: usize,
    color: &mut BTreeMap<u32, u32>,
) -> bool {
    if pos == verts.len() {
        return true;
    }
    let v = verts[pos];
    'colors: for c in 1..=h.k() {
        for &w in &adj[&v] {
            if let Some(&cw) = color.get(&w) {
                if !h.adjacent(c, cw) {
                    continue 'colors;
                }
            }
        }
        color.insert(v, c);
        if try_color(h, adj, verts, pos + 1, color) {
            return true;
        }
        color.remove(&v);
    }
    false
}

// ---------------------------------------------------------------------------
// odd cycles (minimal non-two-colorable subgraphs)
// ---------------------------------------------------------------------------

fn odd_cycles(edges: &BTreeSet<Edge>) -> Vec<BTreeSet<Edge>> {
    let mut adj: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for e in edges {
        adj.entry(e.a()).or_default().insert(e.b());
        adj.entry(e.b()).or_default().insert(e.a());
    }
    let verts: Vec<u32> = adj.keys().copied().collect();
    let mut out: Vec<BTreeSet<Edge>> = Vec::new();
    for &root in &verts {
        let mut path = vec![root];
        let mut on_path = BTreeSet::from([root]);
        cycle_dfs(root, root, &adj, &mut path, &mut on_path, &mut out);
    }
    out
}

/// Extends simple paths from `root` through vertices larger than `root`,
/// recording each cycle once (second vertex below last vertex).
fn cycle_dfs(
    root: u32,
    u: u32,
    adj: &BTreeMap<u32, BTreeSet<u32>>,
    path: &mut Vec<u32>,
    on_path: &mut BTreeSet<u32>,
    out: &mut Vec<BTreeSet<Edge>>,
) {
    for &w in &adj[&u] {
        if w == root {
            if path.len() >= 3 && path[1] < *path.last().expect("nonempty") && path.len() % 2 == 1 {
                let mut cyc: BTreeSet<Edge> = path
                    .windows(2)
                    .map(|p| Edge::of(p[0], p[1]))
                    .collect();
                cyc.insert(Edge::of(*path.last().expect("nonempty"), root));
                out.push(cyc);
            }
        } else if w > root && !on_path.contains(&w) {
            path.push(w);
            on_path.insert(w);
            cycle_dfs(root, w, adj, path, on_path, out);
            path.pop();
            on_path.remove(&w);
        }
    }
}

// ---------------------------------------------------------------------------
// minimal non-homomorphic subsets (general pattern)
// ---------------------------------------------------------------------------

/// Minimal edge subsets with no homomorphism into `h`, by the size frontier:
/// scan connected subsets in increasing size, skipping supersets of known
/// violations.  A minimal violation is necessarily connected, and by the time
/// size `s` is scanned every smaller minimal violation is known, so survivors
/// failing the homomorphism check are exactly the minimal violations.
fn hom_minimal_violations(
    h: &PatternGraph,
    edges: &BTreeSet<Edge>,
) -> Result<Vec<BTreeSet<Edge>>, OracleError> {
    if edges.len() > HOM_EDGE_CAP {
        return Err(OracleError::OracleTooBig(format!(
            "homomorphism violation search is capped at {HOM_EDGE_CAP} edges, got {}",
            edges.len()
        )));
    }
    let all: Vec<Edge> = edges.iter().copied().collect();
    let masks: Vec<u32> = (0u32..(1 << all.len()))
        .filter(|&m| m != 0 && mask_connected(m, &all))
        .collect();
    let mut by_size: Vec<u32> = masks;
    by_size.sort_by_key(|m| m.count_ones());
    let mut violations: Vec<u32> = Vec::new();
    for &m in &by_size {
        if violations.iter().any(|&v| v & m == v) {
            continue; // contains a known violation
        }
        let subset: BTreeSet<Edge> = all
            .iter()
            .enumerate()
            .filter(|&(i, _)| m >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if !hom_exists(h, &subset) {
            violations.push(m);
        }
    }
    Ok(violations
        .into_iter()
        .map(|m| {
            all.iter()
                .enumerate()
                .filter(|&(i, _)| m >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect()
        })
        .collect())
}

fn mask_connected(mask: u32, all: &[Edge]) -> bool {
    let chosen: Vec<Edge> = all
        .iter()
        .enumerate()
        .filter(|&(i, _)| mask >> i & 1 == 1)
        .map(|(_, &e)| e)
        .collect();
    let mut reached: BTreeSet<u32> = BTreeSet::new();
    let first = chosen[0];
    reached.insert(first.a());
    reached.insert(first.b());
    let mut grew = true;
    while grew {
        grew = false;
        for e in &chosen {
            let (a, b) = (reached.contains(&e.a()), reached.contains(&e.b()));
            if a != b {
                reached.insert(e.a());
                reached.insert(e.b());
                grew = true;
            }
        }
    }
    chosen
        .iter()
        .all(|e| reached.contains(&e.a()) && reached.contains(&e.b()))
}

// ---------------------------------------------------------------------------
// enumerate_violations
// ---------------------------------------------------------------------------

/// All minimal violations of the fully labeled edge function `1_E` on `[n]`
/// against `property`, by exhaustive search.
pub fn enumerate_violations(
    property: &Property,
    n: u32,
    positives: &BTreeSet<Edge>,
) -> Result<ViolationHypergraph, OracleError> {
    if n == 0 {
        return Err(OracleError::ShapeError("empty vertex set".into()));
    }
    for e in positives {
        if e.b() > n {
            return Err(OracleError::ShapeError(format!(
                "edge {e} out of range for n = {n}"
            )));
        }
    }
    let limit = match property {
        Property::HFree(_) => HFREE_ORACLE_LIMIT,
        _ => GENERAL_ORACLE_LIMIT,
    };
    if n > limit {
        return Err(OracleError::OracleTooBig(format!(
            "n = {n} exceeds the oracle limit {limit} for {}",
            property.name()
        )));
    }
    let mut sets: BTreeSet<Vec<(Edge, bool)>> = BTreeSet::new();
    match property {
        Property::HFree(h) => {
            for copy in enumerate_copies(h, positives)? {
                sets.insert(copy.into_iter().map(|e| (e, true)).collect());
            }
        }
        Property::HomToH(h) if h.edge_count() == 0 => {
            // No homomorphism target edge: any single positive edge violates.
            for &e in positives {
                sets.insert(vec![(e, true)]);
            }
        }
        Property::HomToH(h) if *h == PatternGraph::single_edge() => {
            for cyc in odd_cycles(positives) {
                sets.insert(cyc.into_iter().map(|e| (e, true)).collect());
            }
        }
        Property::HomToH(h) => {
            for sub in hom_minimal_violations(h, positives)? {
                sets.insert(sub.into_iter().map(|e| (e, true)).collect());
            }
        }
        Property::Clique => {
            // Alternating triples over the full labeled domain: positive
            // {a,b}, negative {b,c}, positive {c,d}, with a != c, d != b.
            let mut pos_adj: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
            for e in positives {
                pos_adj.entry(e.a()).or_default().insert(e.b());
                pos_adj.entry(e.b()).or_default().insert(e.a());
            }
            for b in 1..=n {
                for c in (b + 1)..=n {
                    let neg = Edge::of(b, c);
                    if positives.contains(&neg) {
                        continue;
                    }
                    let from_b: Vec<u32> = pos_adj
                        .get(&b)
                        .into_iter()
                        .flatten()
                        .copied()
                        .filter(|&a| a != c)
                        .collect();
                    let from_c: Vec<u32> = pos_adj
                        .get(&c)
                        .into_iter()
                        .flatten()
                        .copied()
                        .filter(|&d| d != b)
                        .collect();
                    for &a in &from_b {
                        for &d in &from_c {
                            let mut hyp =
                                vec![(Edge::of(a, b), true), (neg, false), (Edge::of(c, d), true)];
                            hyp.sort_unstable();
                            hyp.dedup();
                            sets.insert(hyp);
                        }
                    }
                }
            }
        }
    }
    Ok(ViolationHypergraph::from_sets(n, sets))
}

// ---------------------------------------------------------------------------
// exact distance: minimum-weight vertex cover of the violation hypergraph
// ---------------------------------------------------------------------------

/// Exact distance from the labeled function `1_E` to the property under `mu`:
/// the minimum `mu`-weight of a point set meeting every minimal violation.
/// Violations touching a zero-mass point are coverable for free and drop out.
pub fn exact_distance(
    positives: &BTreeSet<Edge>,
    mu: &MassFunction<Edge>,
    property: &Property,
    n: u32,
) -> Result<Rat, OracleError> {
    let hypergraph = enumerate_violations(property, n, positives)?;
    let mut binding: Vec<BTreeSet<Edge>> = Vec::new();
    for hyp in &hypergraph.hyperedges {
        if hyp.iter().all(|&(e, _)| !mu.get(&e).is_zero()) {
            binding.push(hyp.iter().map(|&(e, _)| e).collect());
        }
    }
    Ok(min_weight_cover(&binding, mu))
}

fn min_weight_cover(hyperedges: &[BTreeSet<Edge>], mu: &MassFunction<Edge>) -> Rat {
    if hyperedges.is_empty() {
        return rat_int(0);
    }
    // Split into connected components over shared points.
    let points: Vec<Edge> = hyperedges
        .iter()
        .flat_map(|h| h.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<Edge, usize> = points.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut dsu: Vec<usize> = (0..points.len()).collect();
    fn find(dsu: &mut Vec<usize>, x: usize) -> usize {
        if dsu[x] != x {
            let r = find(dsu, dsu[x]);
            dsu[x] = r;
        }
        dsu[x]
    }
    for hyp in hyperedges {
        let mut it = hyp.iter();
        let first = index[it.next().expect("nonempty hyperedge")];
        for e in it {
            let (a, b) = (find(&mut dsu, first), find(&mut dsu, index[e]));
            dsu[a] = b;
        }
    }
    let mut components: BTreeMap<usize, Vec<BTreeSet<Edge>>> = BTreeMap::new();
    for hyp in hyperedges {
        let root = find(&mut dsu, index[hyp.iter().next().expect("nonempty")]);
        components.entry(root).or_default().push(hyp.clone());
    }
    let mut total = rat_int(0);
    for (_, comp) in components {
        total += cover_component(&comp, mu);
    }
    total
}

fn cover_component(hyperedges: &[BTreeSet<Edge>], mu: &MassFunction<Edge>) -> Rat {
    // Trivial upper bound: take every point of the component.
    let all_points: BTreeSet<Edge> = hyperedges.iter().flat_map(|h| h.iter().copied()).collect();
    let mut best: Rat = all_points.iter().map(|e| mu.get(e)).sum();
    let working: Vec<&BTreeSet<Edge>> = hyperedges.iter().collect();
    branch_cover(&working, mu, rat_int(0), &mut best);
    best
}

fn disjoint_lower_bound(remaining: &[&BTreeSet<Edge>], mu: &MassFunction<Edge>) -> Rat {
    let mut used: BTreeSet<Edge> = BTreeSet::new();
    let mut bound = rat_int(0);
    for hyp in remaining {
        if hyp.iter().all(|e| !used.contains(e)) {
            let cheapest = hyp
                .iter()
                .map(|e| mu.get(e))
                .min()
                .expect("nonempty hyperedge");
            bound += cheapest;
            used.extend(hyp.iter().copied());
        }
    }
    bound
}

fn branch_cover(
    remaining: &[&BTreeSet<Edge>],
    mu: &MassFunction<Edge>,
    cost: Rat,
    best: &mut Rat,
) {
    if remaining.is_empty() {
        if cost < *best {
            *best = cost;
        }
        return;
    }
    if cost.clone() + disjoint_lower_bound(remaining, mu) >= *best {
        return;
    }
    // Branch on a smallest uncovered hyperedge, heaviest points first.
    let pivot = remaining
        .iter()
        .min_by_key(|h| h.len())
        .expect("nonempty remaining");
    let mut choices: Vec<Edge> = pivot.iter().copied().collect();
    choices.sort_by(|a, b| mu.get(b).cmp(&mu.get(a)));
    for point in choices {
        let rest: Vec<&BTreeSet<Edge>> = remaining
            .iter()
            .filter(|h| !h.contains(&point))
            .copied()
            .collect();
        branch_cover(&rest, mu, cost.clone() + mu.get(&point), best);
    }
}

/// Distance by direct minimization over all property members on `[n]` —
/// exponential in `C(n,2)`, so capped at five vertices.  Used to
/// cross-validate [`exact_distance`].
pub fn exact_distance_by_enumeration(
    positives: &BTreeSet<Edge>,
    mu: &MassFunction<Edge>,
    property: &Property,
    n: u32,
) -> Result<Rat, OracleError> {
    if n > 5 {
        return Err(OracleError::OracleTooBig(
            "direct member enumeration is capped at n = 5".into(),
        ));
    }
    let pairs: Vec<Edge> = (1..=n)
        .flat_map(|a| ((a + 1)..=n).map(move |b| Edge::of(a, b)))
        .collect();
    let disagreement = |member: &BTreeSet<Edge>| -> Rat {
        mu.mass_where(|e| positives.contains(e) != member.contains(e))
    };
    let mut best: Option<Rat> = None;
    let mut consider = |member: &BTreeSet<Edge>| {
        let d = disagreement(member);
        if best.as_ref().is_none_or(|b| d < *b) {
            best = Some(d);
        }
    };
    match property {
        Property::Clique => {
            for mask in 0u32..(1 << n) {
                let k_set: Vec<u32> = (1..=n).filter(|&v| mask >> (v - 1) & 1 == 1).collect();
                let member: BTreeSet<Edge> = k_set
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &a)| k_set[i + 1..].iter().map(move |&b| Edge::of(a, b)))
                    .collect();
                consider(&member);
            }
        }
        _ => {
            for mask in 0u64..(1 << pairs.len()) {
                let member: BTreeSet<Edge> = pairs
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                let ok = match property {
                    Property::HFree(h) => enumerate_copies(h, &member)?.is_empty(),
                    Property::HomToH(h) => hom_exists(h, &member),
                    Property::Clique => unreachable!(),
                };
                if ok {
                    consider(&member);
                }
            }
        }
    }
    Ok(best.expect("property has at least one member"))
}

// ---------------------------------------------------------------------------
// exact total variation between sample ensembles
// ---------------------------------------------------------------------------

/// Exact total variation between the distributions of an `m`-sample sequence
/// drawn from a uniformly random member of each family.  Full enumeration
/// over sequences, averaging over family members exactly.
pub fn exact_tv_sample_distributions(
    family_yes: &[EdgeDistribution],
    family_no: &[EdgeDistribution],
    m: u64,
) -> Result<Rat, OracleError> {
    if family_yes.is_empty() || family_no.is_empty() {
        return Err(OracleError::ShapeError("families must be nonempty".into()));
    }
    for inst in family_yes.iter().chain(family_no) {
        if !inst.mass().is_proper() {
            return Err(OracleError::ShapeError(
                "family members must be proper distributions".into(),
            ));
        }
    }
    let support: Vec<Edge> = family_yes
        .iter()
        .chain(family_no)
        .flat_map(|inst| inst.mass().support().map(|(&e, _)| e))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if (support.len() as f64).powf(m as f64) > TV_SEQUENCE_CAP {
        return Err(OracleError::TooLarge(format!(
            "|support|^m = {}^{m} exceeds the enumeration cap",
            support.len()
        )));
    }
    // Per-member mass of each support edge, indexed [member][edge].
    let table = |family: &[EdgeDistribution]| -> Vec<Vec<Rat>> {
        family
            .iter()
            .map(|inst| support.iter().map(|e| inst.mass().get(e)).collect())
            .collect()
    };
    let yes_table = table(family_yes);
    let no_table = table(family_no);
    let yes_products = vec![rat_int(1); yes_table.len()];
    let no_products = vec![rat_int(1); no_table.len()];
    let mut acc = rat_int(0);
    tv_recurse(
        m,
        support.len(),
        &yes_table,
        &no_table,
        &yes_products,
        &no_products,
        &mut acc,
    );
    Ok(acc / rat_int(2))
}

fn tv_recurse(
    levels_left: u64,
    support_len: usize,
    yes_table: &[Vec<Rat>],
    no_table: &[Vec<Rat>],
    yes_products: &[Rat],
    no_products: &[Rat],
    acc: &mut Rat,
) {
    let all_zero = yes_products.iter().all(Rat::is_zero) && no_products.iter().all(Rat::is_zero);
    if all_zero {
        return; // the whole subtree of sequences has probability zero on both sides
    }
    if levels_left == 0 {
        let p_yes: Rat = yes_products.iter().sum::<Rat>() / rat_int(yes_products.len() as i64);
        let p_no: Rat = no_products.iter().sum::<Rat>() / rat_int(no_products.len() as i64);
        *acc += (p_yes - p_no).abs();
        return;
    }
    for j in 0..support_len {
        let next_yes: Vec<Rat> = yes_products
            .iter()
            .zip(yes_table)
            .map(|(p, row)| p.clone() * row[j].clone())
            .collect();
        let next_no: Vec<Rat> = no_products
            .iter()
            .zip(no_table)
            .map(|(p, row)| p.clone() * row[j].clone())
            .collect();
        tv_recurse(
            levels_left - 1,
            support_len,
            yes_table,
            no_table,
            &next_yes,
            &next_no,
            acc,
        );
    }
}

// ---------------------------------------------------------------------------
// stochastic domination: the coupling optimizer
// ---------------------------------------------------------------------------

/// An explicit coupling witnessing domination: the first marginal is exactly
/// `mu`, the second scaled by `lambda2` stays below `nu` pointwise, and the
/// dominating pairs carry mass at least `lambda1`.
#[derive(Debug, Clone)]
pub struct CouplingCertificate<W: Domain> {
    pub entries: Vec<(W, W, Rat)>,
    pub lambda1: Rat,
    pub lambda2: Rat,
    /// Probability mass on dominating pairs (at least `lambda1`).
    pub achieved: Rat,
}

impl<W: Domain> CouplingCertificate<W> {
    /// Re-checks all three defining conditions exactly.
    pub fn verify(
        &self,
        mu: &MassFunction<W>,
        nu: &MassFunction<W>,
        mut dominates: impl FnMut(&W, &W) -> bool,
    ) -> bool {
        let mut w_marginal: BTreeMap<&W, Rat> = BTreeMap::new();
        let mut z_marginal: BTreeMap<&W, Rat> = BTreeMap::new();
        let mut good = rat_int(0);
        for (w, z, mass) in &self.entries {
            if mass.is_negative() {
                return false;
            }
            *w_marginal.entry(w).or_insert_with(|| rat_int(0)) += mass.clone();
            *z_marginal.entry(z).or_insert_with(|| rat_int(0)) += mass.clone();
            if dominates(w, z) {
                good += mass.clone();
            }
        }
        let w_ok = mu
            .support()
            .all(|(w, p)| w_marginal.get(w).map(|m| m == p).unwrap_or(p.is_zero()))
            && w_marginal.iter().all(|(w, m)| mu.get(w) == *m);
        let z_ok = z_marginal
            .iter()
            .all(|(z, m)| self.lambda2.clone() * m.clone() <= nu.get(z));
        w_ok && z_ok && good >= self.lambda1
    }
}

#[derive(Debug, Clone)]
pub enum DominationOutcome<W: Domain> {
    Dominates(CouplingCertificate<W>),
    /// The coupling optimum fell short of `lambda1`; reports what is achievable.
    Infeasible { optimum: Rat },
}

/// Decides whether `mu` is `(lambda1, lambda2)`-dominated by `nu` under the
/// given partial order, by maximizing the dominating-pair mass over couplings
/// with exact first marginal `mu` and second marginal at most `nu / lambda2`.
/// The maximization is an exact-rational maximum flow.
pub fn check_domination<W, F>(
    mu: &MassFunction<W>,
    nu: &MassFunction<W>,
    lambda1: &Rat,
    lambda2: &Rat,
    mut dominates: F,
) -> Result<DominationOutcome<W>, OracleError>
where
    W: Domain,
    F: FnMut(&W, &W) -> bool,
{
    for (name, lambda) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(lambda > &rat_int(0) && lambda <= &rat_int(1)) {
            return Err(OracleError::ShapeError(format!(
                "{name} must lie in (0, 1], got {lambda}"
            )));
        }
    }
    if !mu.is_proper() || !nu.is_proper() {
        return Err(OracleError::ShapeError(
            "domination needs proper distributions on both sides".into(),
        ));
    }
    let ws: Vec<&W> = mu.support().map(|(w, _)| w).collect();
    let zs: Vec<&W> = nu.support().map(|(z, _)| z).collect();
    if ws.len() * zs.len() > DOMINATION_PAIR_CAP {
        return Err(OracleError::OracleTooBig(format!(
            "support product {} exceeds the coupling cap",
            ws.len() * zs.len()
        )));
    }
    // Nodes: 0..ws | ws..ws+zs | source | sink.
    let nw = ws.len();
    let nz = zs.len();
    let source = nw + nz;
    let sink = source + 1;
    let mut net = FlowNet::new(sink + 1);
    for (i, w) in ws.iter().enumerate() {
        net.add(source, i, mu.get(w));
    }
    for (j, z) in zs.iter().enumerate() {
        net.add(nw + j, sink, nu.get(z) / lambda2.clone());
    }
    let mut good_arcs: Vec<(usize, usize, usize)> = Vec::new(); // (w, z, arc id)
    for (i, w) in ws.iter().enumerate() {
        for (j, z) in zs.iter().enumerate() {
            if dominates(w, z) {
                let arc = net.add(i, nw + j, rat_int(2));
                good_arcs.push((i, j, arc));
            }
        }
    }
    let optimum = net.max_flow(source, sink);
    if optimum < *lambda1 {
        return Ok(DominationOutcome::Infeasible { optimum });
    }
    // Assemble the full coupling: optimal flow on dominating pairs, then the
    // leftover mu-mass routed to leftover capacity (never on a dominating
    // pair, or the flow was not maximal).
    let mut table: BTreeMap<(usize, usize), Rat> = BTreeMap::new();
    let mut w_sent = vec![rat_int(0); nw];
    let mut z_got = vec![rat_int(0); nz];
    for &(i, j, arc) in &good_arcs {
        let f = net.flow(arc);
        if !f.is_zero() {
            w_sent[i] += f.clone();
            z_got[j] += f.clone();
            table.insert((i, j), f);
        }
    }
    let mut z_room: Vec<Rat> = zs
        .iter()
        .enumerate()
        .map(|(j, z)| nu.get(z) / lambda2.clone() - z_got[j].clone())
        .collect();
    for (i, w) in ws.iter().enumerate() {
        let mut left = mu.get(w) - w_sent[i].clone();
        let mut j = 0;
        while !left.is_zero() && j < nz {
            if !z_room[j].is_zero() {
                let send = if left <= z_room[j] { left.clone() } else { z_room[j].clone() };
                z_room[j] -= send.clone();
                left -= send.clone();
                *table.entry((i, j)).or_insert_with(|| rat_int(0)) += send;
            }
            j += 1;
        }
        if !left.is_zero() {
            return Err(OracleError::ShapeError(
                "capacity exhausted while completing the coupling".into(),
            ));
        }
    }
    let entries: Vec<(W, W, Rat)> = table
        .into_iter()
        .map(|((i, j), mass)| (ws[i].clone(), zs[j].clone(), mass))
        .collect();
    let achieved: Rat = entries
        .iter()
        .filter(|(w, z, _)| dominates(w, z))
        .map(|(_, _, m)| m.clone())
        .sum();
    Ok(DominationOutcome::Dominates(CouplingCertificate {
        entries,
        lambda1: lambda1.clone(),
        lambda2: lambda2.clone(),
        achieved,
    }))
}

/// Convenience instantiation of [`check_domination`] for count vectors under
/// entrywise domination.
pub fn check_domination_counts<D: Domain>(
    mu: &MassFunction<CountVector<D>>,
    nu: &MassFunction<CountVector<D>>,
    lambda1: &Rat,
    lambda2: &Rat,
) -> Result<DominationOutcome<CountVector<D>>, OracleError> {
    check_domination(mu, nu, lambda1, lambda2, |w, z| w.dominates(z))
}

// ---------------------------------------------------------------------------
// maximum flow with exact rational capacities
// ---------------------------------------------------------------------------

struct FlowNet {
    to: Vec<usize>,
    residual: Vec<Rat>,
    original: Vec<Rat>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(nodes: usize) -> Self {
        FlowNet {
            to: Vec::new(),
            residual: Vec::new(),
            original: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    /// Adds a forward arc and its zero-capacity reverse; returns the arc id.
    fn add(&mut self, u: usize, v: usize, cap: Rat) -> usize {
        let id = self.to.len();
        self.to.push(v);
        self.residual.push(cap.clone());
        self.original.push(cap);
        self.adj[u].push(id);
        self.to.push(u);
        self.residual.push(rat_int(0));
        self.original.push(rat_int(0));
        self.adj[v].push(id + 1);
        id
    }

    fn flow(&self, arc: usize) -> Rat {
        self.original[arc].clone() - self.residual[arc].clone()
    }

    /// Edmonds–Karp: shortest augmenting paths until none remain.
    fn max_flow(&mut self, s: usize, t: usize) -> Rat {
        let mut total = rat_int(0);
        loop {
            let mut pred: Vec<Option<usize>> = vec![None; self.adj.len()];
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &arc in &self.adj[u] {
                    let v = self.to[arc];
                    if v != s && pred[v].is_none() && !self.residual[arc].is_zero() {
                        pred[v] = Some(arc);
                        queue.push_back(v);
                    }
                }
            }
            let Some(_) = pred[t] else { break };
            let mut bottleneck: Option<Rat> = None;
            let mut v = t;
            while v != s {
                let arc = pred[v].expect("path arc");
                let r = self.residual[arc].clone();
                bottleneck = Some(match bottleneck {
                    Some(b) if b <= r => b,
                    _ => r,
                });
                v = self.to[arc ^ 1];
            }
            let push = bottleneck.expect("positive bottleneck");
            let mut v = t;
            while v != s {
                let arc = pred[v].expect("path arc");
                self.residual[arc] -= push.clone();
                self.residual[arc ^ 1] += push.clone();
                v = self.to[arc ^ 1];
            }
            total += push;
        }
        total
    }
}

// ---------------------------------------------------------------------------
// structure verifiers
// ---------------------------------------------------------------------------

/// True iff the set contains no three-term arithmetic progression
/// (distinct `x, y, z` with `x + z = 2y`).
pub fn verify_3ap_free(set: &[u64]) -> bool {
    let elems: BTreeSet<u64> = set.iter().copied().collect();
    let sorted: Vec<u64> = elems.iter().copied().collect();
    for (i, &x) in sorted.iter().enumerate() {
        for &z in &sorted[i + 1..] {
            let sum = x + z;
            if sum % 2 == 0 && elems.contains(&(sum / 2)) {
                return false;
            }
        }
    }
    true
}

/// The fifteen partitions of four indices, used to recognize trivial
/// solutions of four-variable linear equations.
const INDEX_PARTITIONS: [&[&[usize]]; 15] = [
    &[&[0, 1, 2, 3]],
    &[&[0, 1, 2], &[3]],
    &[&[0, 1, 3], &[2]],
    &[&[0, 2, 3], &[1]],
    &[&[1, 2, 3], &[0]],
    &[&[0, 1], &[2, 3]],
    &[&[0, 2], &[1, 3]],
    &[&[0, 3], &[1, 2]],
    &[&[0, 1], &[2], &[3]],
    &[&[0, 2], &[1], &[3]],
    &[&[0, 3], &[1], &[2]],
    &[&[1, 2], &[0], &[3]],
    &[&[1, 3], &[0], &[2]],
    &[&[2, 3], &[0], &[1]],
    &[&[0], &[1], &[2], &[3]],
];

fn is_trivial_solution(coeffs: &[i64; 4], values: &[u64; 4]) -> bool {
    INDEX_PARTITIONS.iter().any(|partition| {
        partition.iter().all(|block| {
            let equal = block.windows(2).all(|w| values[w[0]] == values[w[1]]);
            let csum: i64 = block.iter().map(|&i| coeffs[i]).sum();
            equal && csum == 0
        })
    })
}

/// Exhaustively checks the k-fold Sidon condition: every solution of
/// `c1 a1 + c2 a2 + c3 a3 + c4 a4 = 0` with integer coefficients of absolute
/// value at most `k` summing to zero must be trivial (some partition of the
/// indices with equal values and zero coefficient sum per block).
pub fn verify_kfold_sidon(set: &SidonSet) -> bool {
    let k = set.fold as i64;
    let g = set.group;
    let elems = &set.elements;
    // Scaled-value tables per coefficient, indexed [c + k][element].
    let tables: Vec<Vec<u64>> = (-k..=k)
        .map(|c| elems.iter().map(|&a| g.scale(c, a)).collect())
        .collect();
    let coeff_range: Vec<i64> = (-k..=k).collect();
    for &c1 in &coeff_range {
        for &c2 in &coeff_range {
            for &c3 in &coeff_range {
                let c4 = -(c1 + c2 + c3);
                if c4.abs() > k || (c1 == 0 && c2 == 0 && c3 == 0 && c4 == 0) {
                    continue;
                }
                let coeffs = [c1, c2, c3, c4];
                let (t1, t2) = (&tables[(c1 + k) as usize], &tables[(c2 + k) as usize]);
                let (t3, t4) = (&tables[(c3 + k) as usize], &tables[(c4 + k) as usize]);
                for (i1, &a1) in elems.iter().enumerate() {
                    let s1 = t1[i1];
                    for (i2, &a2) in elems.iter().enumerate() {
                        let s2 = g.add(s1, t2[i2]);
                        for (i3, &a3) in elems.iter().enumerate() {
                            let s3 = g.add(s2, t3[i3]);
                            for (i4, &a4) in elems.iter().enumerate() {
                                if g.add(s3, t4[i4]) == 0
                                    && !is_trivial_solution(&coeffs, &[a1, a2, a3, a4])
                                {
                                    return false;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    true
}

/// True iff every edge of the set lies in exactly one copy of the pattern.
pub fn verify_exactly_one_copy(
    edges: &BTreeSet<Edge>,
    h: &PatternGraph,
) -> Result<bool, OracleError> {
    let copies = enumerate_copies(h, edges)?;
    let mut count: BTreeMap<Edge, u32> = edges.iter().map(|&e| (e, 0)).collect();
    for copy in &copies {
        for e in copy {
            *count.get_mut(e).expect("copies use edges of the set") += 1;
        }
    }
    Ok(count.values().all(|&c| c == 1))
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{uniform_unit, RngSeed};
    use crate::generators::Group;
    use crate::rat;
    use rand_chacha::rand_core::RngCore;

    fn edge_set(pairs: &[(u32, u32)]) -> BTreeSet<Edge> {
        pairs.iter().map(|&(a, b)| Edge::of(a, b)).collect()
    }

    fn uniform_on(pairs: &[(u32, u32)]) -> MassFunction<Edge> {
        let w = rat(1, pairs.len() as i64);
        MassFunction::from_map(pairs.iter().map(|&(a, b)| (Edge::of(a, b), w.clone())).collect())
            .unwrap()
    }

    #[test]
    fn k4_has_four_triangle_violations() {
        let e = edge_set(&[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        let hg =
            enumerate_violations(&Property::HFree(PatternGraph::triangle()), 4, &e).unwrap();
        assert_eq!(hg.len(), 4);
        assert!(hg.verify_minimal(&Property::HFree(PatternGraph::triangle())).unwrap());
        assert!(hg.contains(&[
            (Edge::of(1, 2), true),
            (Edge::of(1, 3), true),
            (Edge::of(2, 3), true),
        ]));
    }

    #[test]
    fn bipartite_support_has_no_violations() {
        let e = edge_set(&[(1, 3), (1, 4), (2, 3), (2, 4)]);
        let prop = Property::HomToH(PatternGraph::single_edge());
        let hg = enumerate_violations(&prop, 4, &e).unwrap();
        assert!(hg.is_empty());
    }

    #[test]
    fn odd_cycle_violations_in_k4() {
        let e = edge_set(&[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        let prop = Property::HomToH(PatternGraph::single_edge());
        let hg = enumerate_violations(&prop, 4, &e).unwrap();
        // K4: four triangles, no odd cycle of length five fits in four vertices
        assert_eq!(hg.len(), 4);
        assert!(hg.verify_minimal(&prop).unwrap());
    }

    #[test]
    fn edgeless_target_gives_singleton_violations() {
        let e = edge_set(&[(1, 2), (3, 4)]);
        let h = PatternGraph::from_edges(1, &[]).unwrap();
        let hg = enumerate_violations(&Property::HomToH(h), 4, &e).unwrap();
        assert_eq!(hg.len(), 2);
        assert!(hg.hyperedges.iter().all(|h| h.len() == 1));
    }

    #[test]
    fn general_hom_violations_match_colorability() {
        // K4 is not 3-colorable; its minimal non-3-colorable subgraph is K4 itself.
        let e = edge_set(&[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        let prop = Property::HomToH(PatternGraph::triangle());
        let hg = enumerate_violations(&prop, 4, &e).unwrap();
        assert_eq!(hg.len(), 1);
        assert_eq!(hg.hyperedges[0].len(), 6);
        assert!(hg.verify_minimal(&prop).unwrap());
    }

    #[test]
    fn clique_violations_are_alternating_triples() {
        let e = edge_set(&[(1, 2), (2, 3)]);
        let hg = enumerate_violations(&Property::Clique, 3, &e).unwrap();
        assert_eq!(hg.len(), 1);
        assert_eq!(
            hg.hyperedges[0],
            vec![
                (Edge::of(1, 2), true),
                (Edge::of(1, 3), false),
                (Edge::of(2, 3), true),
            ]
        );
        assert!(hg.verify_minimal(&Property::Clique).unwrap());
        // a full triangle is a clique: nothing to violate
        let tri = edge_set(&[(1, 2), (2, 3), (1, 3)]);
        assert!(enumerate_violations(&Property::Clique, 3, &tri).unwrap().is_empty());
    }

    #[test]
    fn distance_examples() {
        // one square under the uniform quarter weights: remove any one edge
        let sq = edge_set(&[(1, 2), (2, 3), (3, 4), (1, 4)]);
        let mu = uniform_on(&[(1, 2), (2, 3), (3, 4), (1, 4)]);
        let d = exact_distance(&sq, &mu, &Property::HFree(PatternGraph::square()), 4).unwrap();
        assert_eq!(d, rat(1, 4));
        // a member of the property is at distance zero
        let d0 = exact_distance(&sq, &mu, &Property::HFree(PatternGraph::triangle()), 4).unwrap();
        assert_eq!(d0, rat_int(0));
        // two edge-disjoint triangles, uniform sixths: one edge from each
        let two = edge_set(&[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)]);
        let mu = uniform_on(&[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)]);
        let d = exact_distance(&two, &mu, &Property::HFree(PatternGraph::triangle()), 6).unwrap();
        assert_eq!(d, rat(1, 3));
    }

    #[test]
    fn zero_mass_points_cover_for_free() {
        // triangle where one edge has no mass: deleting it is free
        let tri = edge_set(&[(1, 2), (2, 3), (1, 3)]);
        let mu = MassFunction::from_map(
            [
                (Edge::of(1, 2), rat(1, 2)),
                (Edge::of(2, 3), rat(1, 2)),
            ]
            .into(),
        )
        .unwrap();
        let d = exact_distance(&tri, &mu, &Property::HFree(PatternGraph::triangle()), 3).unwrap();
        assert_eq!(d, rat_int(0));
    }

    #[test]
    fn branch_and_bound_agrees_with_member_enumeration() {
        let seed = RngSeed { master: 2026, stream: 11 };
        let mut rng = seed.rng();
        let n = 5u32;
        let pairs: Vec<Edge> = (1..=n)
            .flat_map(|a| ((a + 1)..=n).map(move |b| Edge::of(a, b)))
            .collect();
        let properties = [
            Property::HomToH(PatternGraph::single_edge()),
            Property::HomToH(PatternGraph::triangle()),
            Property::HFree(PatternGraph::triangle()),
            Property::HFree(PatternGraph::square()),
            Property::HFree(PatternGraph::path(2).unwrap()),
            Property::Clique,
        ];
        for trial in 0..20 {
            // random labeled function and random rational masses, some zero
            let positives: BTreeSet<Edge> = pairs
                .iter()
                .filter(|_| uniform_unit(&mut rng) < 0.5)
                .copied()
                .collect();
            let mut weights: BTreeMap<Edge, Rat> = BTreeMap::new();
            for &e in &pairs {
                if uniform_unit(&mut rng) < 0.7 {
                    weights.insert(e, rat_int((rng.next_u64() % 4 + 1) as i64));
                }
            }
            if weights.is_empty() {
                weights.insert(pairs[trial % pairs.len()], rat_int(1));
            }
            let total: Rat = weights.values().cloned().sum();
            let mu = MassFunction::from_map(
                weights.into_iter().map(|(e, w)| (e, w / total.clone())).collect(),
            )
            .unwrap();
            for prop in &properties {
                let fast = exact_distance(&positives, &mu, prop, n).unwrap();
                let slow = exact_distance_by_enumeration(&positives, &mu, prop, n).unwrap();
                assert_eq!(fast, slow, "property {} trial {trial}", prop.name());
            }
        }
    }

    #[test]
    fn violations_are_minimal_on_random_instances() {
        let seed = RngSeed { master: 2026, stream: 12 };
        let mut rng = seed.rng();
        let n = 5u32;
        let pairs: Vec<Edge> = (1..=n)
            .flat_map(|a| ((a + 1)..=n).map(move |b| Edge::of(a, b)))
            .collect();
        let properties = [
            Property::HomToH(PatternGraph::single_edge()),
            Property::HFree(PatternGraph::square()),
            Property::Clique,
        ];
        for _ in 0..10 {
            let positives: BTreeSet<Edge> = pairs
                .iter()
                .filter(|_| uniform_unit(&mut rng) < 0.5)
                .copied()
                .collect();
            for prop in &properties {
                let hg = enumerate_violations(prop, n, &positives).unwrap();
                assert!(hg.verify_minimal(prop).unwrap(), "property {}", prop.name());
            }
        }
    }

    #[test]
    fn tv_trivial_cases() {
        let inst = |pairs: &[(u32, u32)]| {
            EdgeDistribution::new(4, uniform_on(pairs)).unwrap()
        };
        let a = inst(&[(1, 2), (3, 4)]);
        let b = inst(&[(1, 3)]);
        // zero samples reveal nothing
        assert_eq!(
            exact_tv_sample_distributions(&[a.clone()], &[b.clone()], 0).unwrap(),
            rat_int(0)
        );
        // identical families are indistinguishable
        assert_eq!(
            exact_tv_sample_distributions(&[a.clone(), b.clone()], &[a.clone(), b.clone()], 3)
                .unwrap(),
            rat_int(0)
        );
        // disjoint supports are fully distinguishable by one sample
        assert_eq!(
            exact_tv_sample_distributions(&[a.clone()], &[b.clone()], 1).unwrap(),
            rat_int(1)
        );
        // one shared edge out of two: half the mass collides
        let c = inst(&[(1, 2), (1, 3)]);
        assert_eq!(
            exact_tv_sample_distributions(&[a], &[c], 1).unwrap(),
            rat(1, 2)
        );
    }

    #[test]
    fn tv_respects_sequence_cap() {
        let insts: Vec<EdgeDistribution> = (0..40)
            .map(|i| {
                EdgeDistribution::new(
                    41,
                    uniform_on(&[(i + 1, i + 2)]),
                )
                .unwrap()
            })
            .collect();
        assert!(matches!(
            exact_tv_sample_distributions(&insts, &insts, 5),
            Err(OracleError::TooLarge(_))
        ));
    }

    fn counts(entries: &[(u32, u64)]) -> CountVector<u32> {
        CountVector::from_counts(entries.iter().copied().collect())
    }

    #[test]
    fn domination_point_masses() {
        let v = counts(&[(1, 2), (2, 1)]);
        let mu = MassFunction::from_map([(v.clone(), rat_int(1))].into()).unwrap();
        let outcome = check_domination_counts(&mu, &mu, &rat_int(1), &rat_int(1)).unwrap();
        match outcome {
            DominationOutcome::Dominates(cert) => {
                assert!(cert.verify(&mu, &mu, |w, z| w.dominates(z)));
                assert_eq!(cert.achieved, rat_int(1));
            }
            DominationOutcome::Infeasible { .. } => panic!("identical point masses dominate"),
        }
        // the zero vector does not dominate the all-ones vector
        let zero = counts(&[]);
        let one = counts(&[(1, 1)]);
        let mu = MassFunction::from_map([(zero, rat_int(1))].into()).unwrap();
        let nu = MassFunction::from_map([(one, rat_int(1))].into()).unwrap();
        match check_domination_counts(&mu, &nu, &rat_int(1), &rat_int(1)).unwrap() {
            DominationOutcome::Infeasible { optimum } => assert_eq!(optimum, rat_int(0)),
            DominationOutcome::Dominates(_) => panic!("zero cannot dominate one"),
        }
    }

    #[test]
    fn domination_is_monotone_in_both_parameters() {
        let lo = counts(&[(1, 1)]);
        let hi = counts(&[(1, 2)]);
        let mu = MassFunction::from_map([(lo.clone(), rat(1, 2)), (hi.clone(), rat(1, 2))].into())
            .unwrap();
        let nu = MassFunction::from_map([(lo, rat(3, 4)), (hi, rat(1, 4))].into()).unwrap();
        let feasible = |l1: Rat, l2: Rat| {
            matches!(
                check_domination_counts(&mu, &nu, &l1, &l2).unwrap(),
                DominationOutcome::Dominates(_)
            )
        };
        assert!(feasible(rat(9, 10), rat(3, 4)));
        assert!(feasible(rat(1, 2), rat(3, 4)));
        assert!(feasible(rat(9, 10), rat(1, 2)));
        assert!(feasible(rat(1, 2), rat(1, 2)));
    }

    /// Order ideals of the count-vector grid `{0,1,2}^coords`.
    fn downward_closed_sets(coords: &[u32]) -> Vec<Vec<CountVector<u32>>> {
        let mut grid: Vec<Vec<(u32, u64)>> = vec![vec![]];
        for &c in coords {
            let mut next = Vec::new();
            for v in &grid {
                for count in 0..=2u64 {
                    let mut w = v.clone();
                    if count > 0 {
                        w.push((c, count));
                    }
                    next.push(w);
                }
            }
            grid = next;
        }
        let vectors: Vec<CountVector<u32>> = grid.iter().map(|v| counts(v)).collect();
        let mut ideals: Vec<Vec<usize>> = Vec::new();
        let mut current: Vec<usize> = Vec::new();
        fn build(
            idx: usize,
            vectors: &[CountVector<u32>],
            current: &mut Vec<usize>,
            ideals: &mut Vec<Vec<usize>>,
        ) {
            if idx == vectors.len() {
                ideals.push(current.clone());
                return;
            }
            // exclude vectors[idx]: allowed only if nothing above it is in
            let can_exclude = current.iter().all(|&j| !vectors[j].dominates(&vectors[idx]));
            // include: allowed only if everything below it would be includable;
            // defer that by filtering at the end instead
            current.push(idx);
            build(idx + 1, vectors, current, ideals);
            current.pop();
            if can_exclude {
                build(idx + 1, vectors, current, ideals);
            }
        }
        build(0, &vectors, &mut current, &mut ideals);
        ideals
            .into_iter()
            .filter(|ideal| {
                // keep genuine ideals: closed downward
                ideal.iter().all(|&i| {
                    vectors
                        .iter()
                        .enumerate()
                        .all(|(j, v)| !vectors[i].dominates(v) || ideal.contains(&j))
                })
            })
            .map(|ideal| ideal.into_iter().map(|i| vectors[i].clone()).collect())
            .collect()
    }

    #[test]
    fn certificates_bound_downward_closed_sets() {
        // mu sits slightly above nu; domination holds with a mild lambda1
        let l0 = counts(&[]);
        let l1 = counts(&[(1, 1)]);
        let l2 = counts(&[(1, 2)]);
        let mu = MassFunction::from_map([(l1.clone(), rat(1, 2)), (l2.clone(), rat(1, 2))].into())
            .unwrap();
        let nu = MassFunction::from_map(
            [(l0.clone(), rat(1, 4)), (l1.clone(), rat(1, 2)), (l2.clone(), rat(1, 4))].into(),
        )
        .unwrap();
        let lambda1 = rat(3, 4);
        let lambda2 = rat(1, 2);
        let cert = match check_domination_counts(&mu, &nu, &lambda1, &lambda2).unwrap() {
            DominationOutcome::Dominates(cert) => cert,
            DominationOutcome::Infeasible { optimum } => {
                panic!("expected feasible, optimum {optimum}")
            }
        };
        assert!(cert.verify(&mu, &nu, |w, z| w.dominates(z)));
        // consequence: mu(S) <= nu(S)/lambda2 + (1 - lambda1) for downward-closed S
        for ideal in downward_closed_sets(&[1]) {
            let in_ideal = |v: &CountVector<u32>| ideal.contains(v);
            let mu_s = mu.mass_where(|v| in_ideal(v));
            let nu_s = nu.mass_where(|v| in_ideal(v));
            assert!(
                mu_s <= nu_s / lambda2.clone() + (rat_int(1) - lambda1.clone()),
                "ideal of size {} breaks the bound",
                ideal.len()
            );
        }
    }

    #[test]
    fn three_ap_verifier() {
        assert!(verify_3ap_free(&[1, 2, 4, 8, 9]));
        assert!(!verify_3ap_free(&[1, 2, 3]));
        assert!(verify_3ap_free(&[]));
        assert!(verify_3ap_free(&[5]));
        assert!(!verify_3ap_free(&[2, 6, 10]));
    }

    #[test]
    fn sidon_verifier_classic_cases() {
        let g = Group::Zn { n: 7 };
        let good = SidonSet::new(g, vec![0, 1, 3], 1).unwrap();
        assert!(verify_kfold_sidon(&good));
        let bad = SidonSet::new(g, vec![0, 1, 2], 1).unwrap();
        assert!(!verify_kfold_sidon(&bad));
    }

    #[test]
    fn sidon_verifier_threefold_cases() {
        // points on the parabola over a prime plane stay three-fold Sidon
        // only for well-chosen parameter subsets
        let g = Group::PrimePlane { p: 11 };
        let on_parabola = |a: u64| g.pair(a, a * a % 11).unwrap();
        let good: Vec<u64> = [0u64, 1, 2, 4].iter().map(|&a| on_parabola(a)).collect();
        assert!(verify_kfold_sidon(&SidonSet::new(g, good, 3).unwrap()));
        // the full parabola is not: five points admit nontrivial relations
        let g5 = Group::PrimePlane { p: 5 };
        let full: Vec<u64> = (0..5).map(|a| g5.pair(a, a * a % 5).unwrap()).collect();
        assert!(!verify_kfold_sidon(&SidonSet::new(g5, full, 3).unwrap()));
        // a full line is far from Sidon: x + y = 2z on collinear points
        let line: Vec<u64> = (0..5).map(|a| g5.pair(a, a).unwrap()).collect();
        assert!(!verify_kfold_sidon(&SidonSet::new(g5, line, 3).unwrap()));
        // {0, 1} is three-fold Sidon in integers mod seven
        let z7 = Group::Zn { n: 7 };
        assert!(verify_kfold_sidon(&SidonSet::new(z7, vec![0, 1], 3).unwrap()));
    }

    #[test]
    fn exactly_one_copy_verifier() {
        // two disjoint squares: every edge in exactly one four-cycle
        let e = edge_set(&[
            (1, 2), (2, 3), (3, 4), (1, 4),
            (5, 6), (6, 7), (7, 8), (5, 8),
        ]);
        assert!(verify_exactly_one_copy(&e, &PatternGraph::square()).unwrap());
        // K4 has every edge in two triangles
        let k4 = edge_set(&[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        assert!(!verify_exactly_one_copy(&k4, &PatternGraph::triangle()).unwrap());
        // and the packing bound: 2 disjoint squares over 8 uniform edges
        let mu = uniform_on(&[
            (1, 2), (2, 3), (3, 4), (1, 4),
            (5, 6), (6, 7), (7, 8), (5, 8),
        ]);
        let d = exact_distance(&e, &mu, &Property::HFree(PatternGraph::square()), 8).unwrap();
        assert_eq!(d, rat(1, 4));
    }
}
