//! Exact LP-duality machinery for distance certification: fractional
//! matchings on uniform hypergraphs with linearly independent support,
//! square witnesses extracted from an edge distribution, Hall-matching
//! descendants, the walk/hop mass tables, and the dilute/concentrated
//! classifier with its two sample budgets.
//!
//! Everything here is exact rational arithmetic end to end — the solver is a
//! textbook simplex with Bland's rule, support reduction walks the kernel of
//! the support columns explicitly, and every returned object re-verifies its
//! defining conditions before it leaves the module.

use crate::core::{CoreError, Edge, EdgeDistribution, MassFunction, Wedge};
use crate::oracles::{enumerate_copies, OracleError};
use crate::testers::PatternGraph;
use crate::{rat_int, Rat};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("shape error: {0}")]
    ShapeError(String),
    /// The optimum of the matching LP stays below `eps/k`, certifying that
    /// the mass is not far from the property: the tight coordinates form a
    /// vertex cover of small total mass.
    #[error(
        "matching total {} is below the required {}; tight cover {{{}}} has mass {}",
        .0.achieved, .0.required, .0.cover.join(", "), .0.cover_mass
    )]
    NotFarEnough(Box<NotFarReport>),
    /// A Hall matching between weighted hyperedges and their own vertices
    /// does not exist — possible only when the support indicators were not
    /// linearly independent to begin with.
    #[error("independence violated: {0}")]
    IndependenceViolated(String),
    /// An internal solver invariant failed; indicates a bug, not bad input.
    #[error("solver bug: {0}")]
    SolverBug(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Payload of [`WitnessError::NotFarEnough`]: how much matching mass was
/// achievable, what was required, and the tight vertex cover certifying the
/// shortfall.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotFarReport {
    pub achieved: Rat,
    pub required: Rat,
    pub cover: Vec<String>,
    pub cover_mass: Rat,
}

fn check_eps(eps: &Rat) -> Result<(), WitnessError> {
    if *eps <= rat_int(0) || *eps >= rat_int(1) {
        return Err(WitnessError::ShapeError(format!(
            "eps must lie strictly between 0 and 1, got {eps}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// hypergraphs and fractional matchings
// ---------------------------------------------------------------------------

/// A `k`-uniform hypergraph over an ordered vertex type.  Hyperedges are
/// deduplicated and kept sorted, so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph<V: Ord + Clone> {
    k: u32,
    edges: Vec<BTreeSet<V>>,
    vertices: BTreeSet<V>,
}

impl<V: Ord + Clone + fmt::Debug> Hypergraph<V> {
    pub fn new(k: u32, edges: Vec<BTreeSet<V>>) -> Result<Self, WitnessError> {
        if k == 0 {
            return Err(WitnessError::ShapeError(
                "uniformity must be positive".into(),
            ));
        }
        let mut sorted: Vec<BTreeSet<V>> = edges;
        sorted.sort();
        sorted.dedup();
        let mut vertices = BTreeSet::new();
        for e in &sorted {
            if e.len() != k as usize {
                return Err(WitnessError::ShapeError(format!(
                    "hyperedge {e:?} has {} vertices, expected {k}",
                    e.len()
                )));
            }
            vertices.extend(e.iter().cloned());
        }
        Ok(Hypergraph {
            k,
            edges: sorted,
            vertices,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn edges(&self) -> &[BTreeSet<V>] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &BTreeSet<V> {
        &self.vertices
    }
}

/// Nonnegative rational weights on the hyperedges of a `k`-uniform
/// hypergraph whose support indicators are linearly independent and whose
/// vertex loads stay below a given mass vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalMatching<V: Ord + Clone> {
    k: u32,
    weights: BTreeMap<BTreeSet<V>, Rat>,
}

impl<V: Ord + Clone + fmt::Debug + fmt::Display> FractionalMatching<V> {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn weights(&self) -> &BTreeMap<BTreeSet<V>, Rat> {
        &self.weights
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, edge: &BTreeSet<V>) -> Rat {
        self.weights.get(edge).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn total(&self) -> Rat {
        self.weights.values().sum()
    }

    /// Per-vertex load `Σ_e λ_e · 1_e(v)` over the support.
    pub fn vertex_load(&self) -> BTreeMap<V, Rat> {
        let mut load: BTreeMap<V, Rat> = BTreeMap::new();
        for (edge, w) in &self.weights {
            for v in edge {
                *load.entry(v.clone()).or_insert_with(Rat::zero) += w;
            }
        }
        load
    }

    /// Exact re-check of the three defining conditions: support indicators
    /// linearly independent, vertex loads dominated by `p`, and the total in
    /// `[eps/k, max(1, Σp)/k]`.
    pub fn verify(&self, p: &MassFunction<V>, eps: &Rat) -> Result<(), WitnessError> {
        check_eps(eps)?;
        let columns: Vec<Vec<V>> = self
            .weights
            .keys()
            .map(|e| e.iter().cloned().collect())
            .collect();
        if indicator_rank(&columns) != columns.len() {
            return Err(WitnessError::IndependenceViolated(
                "support indicators are linearly dependent".into(),
            ));
        }
        for (v, load) in self.vertex_load() {
            if load > p.get(&v) {
                return Err(WitnessError::ShapeError(format!(
                    "load {load} at {v} exceeds mass {}",
                    p.get(&v)
                )));
            }
        }
        let total = self.total();
        let k = rat_int(self.k as i64);
        let lower = eps / &k;
        let upper = p.total().clone().max(rat_int(1)) / &k;
        if total < lower || total > upper {
            return Err(WitnessError::ShapeError(format!(
                "total {total} outside [{lower}, {upper}]"
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// exact linear algebra on indicator columns
// ---------------------------------------------------------------------------

/// Row-reduces the indicator matrix of the given vertex sets (one column per
/// set) and returns `(rank, kernel vector if the columns are dependent)`.
/// The kernel vector is a not-all-zero rational combination summing the
/// columns to zero.
fn indicator_kernel<V: Ord + Clone>(columns: &[Vec<V>]) -> (usize, Option<Vec<Rat>>) {
    let rows: BTreeSet<V> = columns.iter().flatten().cloned().collect();
    let row_index: BTreeMap<&V, usize> = rows.iter().zip(0..).collect();
    let m = rows.len();
    let k = columns.len();
    // dense matrix, column-major input → row-major storage
    let mut mat = vec![vec![Rat::zero(); k]; m];
    for (j, col) in columns.iter().enumerate() {
        for v in col {
            mat[row_index[v]][j] = rat_int(1);
        }
    }
    // reduced row echelon form with exact pivots
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; k];
    let mut rank = 0;
    for j in 0..k {
        let Some(pr) = (rank..m).find(|&r| !mat[r][j].is_zero()) else {
            continue;
        };
        mat.swap(rank, pr);
        let inv = mat[rank][j].clone();
        for x in &mut mat[rank] {
            *x = &*x / &inv;
        }
        let pivot_row = mat[rank].clone();
        for (r, row) in mat.iter_mut().enumerate() {
            if r != rank && !row[j].is_zero() {
                let f = row[j].clone();
                for (x, pv) in row.iter_mut().zip(&pivot_row) {
                    let delta = &f * pv;
                    *x = &*x - &delta;
                }
            }
        }
        pivot_of_col[j] = Some(rank);
        rank += 1;
        if rank == m {
            break;
        }
    }
    if rank == k {
        return (rank, None);
    }
    // pick the first free column and express it against the pivots
    let free = (0..k)
        .find(|&j| pivot_of_col[j].is_none())
        .expect("rank < k guarantees a free column");
    let mut kernel = vec![Rat::zero(); k];
    kernel[free] = rat_int(1);
    for (j, pivot) in pivot_of_col.iter().enumerate() {
        if let Some(r) = pivot {
            kernel[j] = -mat[*r][free].clone();
        }
    }
    (rank, Some(kernel))
}

fn indicator_rank<V: Ord + Clone>(columns: &[Vec<V>]) -> usize {
    indicator_kernel(columns).0
}

// ---------------------------------------------------------------------------
// simplex with Bland's rule
// ---------------------------------------------------------------------------

/// Maximizes `Σ λ_e` subject to `Σ λ_e·1_e ⪯ p`, `λ ≥ 0`, by dense tableau
/// simplex in exact rationals.  Bland's pivoting rule (smallest improving
/// column, smallest basic variable on ratio ties) rules out cycling, and the
/// slack start `λ = 0` is always feasible.  Returns the optimal weights by
/// hyperedge index.
fn simplex_max_matching<V: Ord + Clone + fmt::Debug>(
    g: &Hypergraph<V>,
    p: &MassFunction<V>,
) -> Result<BTreeMap<usize, Rat>, WitnessError> {
    let rows: Vec<&V> = g.vertices().iter().collect();
    let row_index: BTreeMap<&V, usize> = rows.iter().copied().zip(0..).collect();
    let m = rows.len();
    let nv = g.edge_count();
    let cols = nv + m; // structural variables then slacks

    let mut tableau = vec![vec![Rat::zero(); cols + 1]; m];
    for (j, edge) in g.edges().iter().enumerate() {
        for v in edge {
            tableau[row_index[v]][j] = rat_int(1);
        }
    }
    for (i, row) in tableau.iter_mut().enumerate() {
        row[nv + i] = rat_int(1);
        row[cols] = p.get(rows[i]);
        if row[cols].is_negative() {
            return Err(WitnessError::ShapeError(
                "mass vector has a negative coordinate".into(),
            ));
        }
    }
    // reduced-cost row: +1 for every structural variable under the slack basis
    let mut reduced = vec![Rat::zero(); cols + 1];
    for cell in reduced.iter_mut().take(nv) {
        *cell = rat_int(1);
    }
    let mut basis: Vec<usize> = (nv..cols).collect();

    // pivot until no reduced cost is improving; Bland's rule rules out cycling
    while let Some(enter) = (0..cols).find(|&j| reduced[j] > Rat::zero()) {
        let mut leave: Option<usize> = None;
        let mut best: Option<Rat> = None;
        for i in 0..m {
            if tableau[i][enter] > Rat::zero() {
                let ratio = &tableau[i][cols] / &tableau[i][enter];
                let better = match &best {
                    None => true,
                    Some(b) => ratio < *b || (ratio == *b && basis[i] < basis[leave.unwrap()]),
                };
                if better {
                    best = Some(ratio);
                    leave = Some(i);
                }
            }
        }
        let Some(li) = leave else {
            return Err(WitnessError::SolverBug(
                "matching LP is unbounded, which a mass bound forbids".into(),
            ));
        };
        // pivot on (li, enter)
        let inv = tableau[li][enter].clone();
        for x in &mut tableau[li] {
            *x = &*x / &inv;
        }
        let pivot_row = tableau[li].clone();
        for (i, row) in tableau.iter_mut().enumerate() {
            if i != li && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (x, pv) in row.iter_mut().zip(&pivot_row) {
                    let delta = &f * pv;
                    *x = &*x - &delta;
                }
            }
        }
        if !reduced[enter].is_zero() {
            let f = reduced[enter].clone();
            for (x, pv) in reduced.iter_mut().zip(&pivot_row) {
                let delta = &f * pv;
                *x = &*x - &delta;
            }
        }
        basis[li] = enter;
    }

    let mut out = BTreeMap::new();
    for (i, &var) in basis.iter().enumerate() {
        if var < nv && !tableau[i][cols].is_zero() {
            out.insert(var, tableau[i][cols].clone());
        }
    }
    Ok(out)
}

/// Shrinks an optimal solution onto a support with linearly independent
/// indicators: as long as the support columns have a kernel vector `c`
/// (necessarily with `Σc = 0`, since every column has `k` ones), move by
/// `d = min(−λ_e/c_e)` over the negative entries, zeroing at least one
/// weight without changing the total or any vertex load bound.
fn reduce_support<V: Ord + Clone + fmt::Debug>(
    mut weights: BTreeMap<usize, Rat>,
    g: &Hypergraph<V>,
) -> Result<BTreeMap<usize, Rat>, WitnessError> {
    loop {
        let support: Vec<usize> = weights.keys().copied().collect();
        let columns: Vec<Vec<V>> = support
            .iter()
            .map(|&j| g.edges()[j].iter().cloned().collect())
            .collect();
        let (_, kernel) = indicator_kernel(&columns);
        let Some(mut c) = kernel else {
            return Ok(weights);
        };
        debug_assert!(c.iter().sum::<Rat>().is_zero(), "kernel must sum to zero");
        if c.iter().all(|x| !x.is_negative()) {
            for x in &mut c {
                *x = -x.clone();
            }
        }
        let d = support
            .iter()
            .zip(&c)
            .filter(|(_, ce)| ce.is_negative())
            .map(|(j, ce)| -(&weights[j] / ce))
            .min()
            .ok_or_else(|| {
                WitnessError::SolverBug("kernel vector with no negative entry".into())
            })?;
        for (j, ce) in support.iter().zip(&c) {
            let moved = weights[j].clone() + &d * ce;
            if moved.is_negative() {
                return Err(WitnessError::SolverBug(
                    "kernel step drove a weight negative".into(),
                ));
            }
            if moved.is_zero() {
                weights.remove(j);
            } else {
                weights.insert(*j, moved);
            }
        }
    }
}

/// Maximum fractional matching dominated by `p`, reduced to an independent
/// support and exactly re-verified.  Fails with the certifying tight cover
/// when the optimum stays below `eps/k` — the mass is then provably not far.
pub fn solve_fractional_matching<V>(
    g: &Hypergraph<V>,
    p: &MassFunction<V>,
    eps: &Rat,
) -> Result<FractionalMatching<V>, WitnessError>
where
    V: Ord + Clone + fmt::Debug + fmt::Display,
{
    check_eps(eps)?;
    let optimal = simplex_max_matching(g, p)?;
    let reduced = reduce_support(optimal, g)?;
    let total: Rat = reduced.values().sum();
    let required = eps / &rat_int(g.k() as i64);
    if total < required {
        // the coordinates where the load meets p form a small vertex cover
        let mut load: BTreeMap<&V, Rat> = BTreeMap::new();
        for (&j, w) in &reduced {
            for v in &g.edges()[j] {
                *load.entry(v).or_insert_with(Rat::zero) += w;
            }
        }
        let cover: Vec<&V> = g
            .vertices()
            .iter()
            .filter(|v| load.get(v).cloned().unwrap_or_else(Rat::zero) == p.get(v))
            .collect();
        let covers_everything = g
            .edges()
            .iter()
            .all(|e| e.iter().any(|v| cover.binary_search(&v).is_ok()));
        if !covers_everything {
            return Err(WitnessError::SolverBug(
                "tight coordinates at a suboptimal point do not cover".into(),
            ));
        }
        let cover_mass = cover.iter().map(|v| p.get(v)).sum();
        return Err(WitnessError::NotFarEnough(Box::new(NotFarReport {
            achieved: total,
            required,
            cover: cover.iter().map(|v| v.to_string()).collect(),
            cover_mass,
        })));
    }
    let matching = FractionalMatching {
        k: g.k(),
        weights: reduced
            .into_iter()
            .map(|(j, w)| (g.edges()[j].clone(), w))
            .collect(),
    };
    matching.verify(p, eps)?;
    Ok(matching)
}

// ---------------------------------------------------------------------------
// square witnesses and descendants
// ---------------------------------------------------------------------------

/// All squares (4-cycles as 4-edge sets) lying within an edge set.
pub fn squares_within(edges: &BTreeSet<Edge>) -> Result<Vec<BTreeSet<Edge>>, WitnessError> {
    if edges.is_empty() {
        return Ok(Vec::new());
    }
    Ok(enumerate_copies(&PatternGraph::square(), edges)?)
}

/// Nonnegative weights on squares with independent indicators, dominated by
/// an edge mass `p`, and totalling at least `epsilon/4` — the dual
/// certificate that `p` is `epsilon`-far from square-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareWitness {
    n: u32,
    epsilon: Rat,
    matching: FractionalMatching<Edge>,
}

impl SquareWitness {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn epsilon(&self) -> &Rat {
        &self.epsilon
    }

    /// The weight map, keyed by the square's 4-edge set.
    pub fn weights(&self) -> &BTreeMap<BTreeSet<Edge>, Rat> {
        self.matching.weights()
    }

    pub fn support_len(&self) -> usize {
        self.matching.support_len()
    }

    pub fn total(&self) -> Rat {
        self.matching.total()
    }

    /// `Σ_ζ q_ζ⁴`, the quantity the concentrated-case budget divides by.
    pub fn fourth_power_sum(&self) -> Rat {
        self.matching
            .weights()
            .values()
            .map(|w| w * w * w * w)
            .sum()
    }

    /// Exact re-check of the three defining conditions against `p`.
    pub fn verify(&self, p: &MassFunction<Edge>) -> Result<(), WitnessError> {
        self.matching.verify(p, &self.epsilon)
    }
}

/// Solves the matching LP on the squares within `supp(p)` (weights on
/// squares through zero-mass edges are forced to zero anyway) and wraps the
/// result; `NotFarEnough` propagates when the optimum is below `eps/4`.
pub fn square_witness(p: &EdgeDistribution, eps: &Rat) -> Result<SquareWitness, WitnessError> {
    check_eps(eps)?;
    let support: BTreeSet<Edge> = p.mass().support().map(|(e, _)| *e).collect();
    let squares = squares_within(&support)?;
    let g = Hypergraph::new(4, squares)?;
    let matching = solve_fractional_matching(&g, p.mass(), eps)?;
    Ok(SquareWitness {
        n: p.n(),
        epsilon: eps.clone(),
        matching,
    })
}

/// Transfers the witness mass back to edges: an injective assignment of each
/// weighted square to one of its own edges (augmenting-path matching), with
/// the chosen edge inheriting the square's weight.  Independence of the
/// support guarantees the matching exists; its absence is reported as the
/// violated precondition.
pub fn descendant(w: &SquareWitness) -> Result<EdgeDistribution, WitnessError> {
    let squares: Vec<&BTreeSet<Edge>> = w.weights().keys().collect();
    let mut matched: BTreeMap<Edge, usize> = BTreeMap::new();

    fn augment(
        i: usize,
        squares: &[&BTreeSet<Edge>],
        matched: &mut BTreeMap<Edge, usize>,
        visited: &mut BTreeSet<Edge>,
    ) -> bool {
        for &e in squares[i] {
            if visited.insert(e) {
                let free = match matched.get(&e).copied() {
                    None => true,
                    Some(other) => augment(other, squares, matched, visited),
                };
                if free {
                    matched.insert(e, i);
                    return true;
                }
            }
        }
        false
    }

    for i in 0..squares.len() {
        let mut visited = BTreeSet::new();
        if !augment(i, &squares, &mut matched, &mut visited) {
            return Err(WitnessError::IndependenceViolated(format!(
                "no edge system of distinct representatives for {} squares",
                squares.len()
            )));
        }
    }
    let mut mass = BTreeMap::new();
    for (edge, i) in matched {
        mass.insert(edge, w.weights()[squares[i]].clone());
    }
    Ok(EdgeDistribution::new(w.n(), MassFunction::from_map(mass)?)?)
}

// ---------------------------------------------------------------------------
// walk and hop tables
// ---------------------------------------------------------------------------

/// Exact mass tables of the two-step walk statistics of an edge mass: the
/// wedge mass `walk({a,c}, b) = p_ab·p_bc / (2·deg(b))` for middles in the
/// restriction set, its per-endpoint-pair marginal `hop`, and the
/// discounted marginal `hopd = hop − max_b walk` with the maximizing middle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopTables {
    pub walk: MassFunction<Wedge>,
    pub hop: BTreeMap<Edge, Rat>,
    pub hopd: BTreeMap<Edge, Rat>,
    /// Per endpoint pair, the middle with the largest walk mass (ties broken
    /// toward the smallest vertex id).
    pub argmax_mid: BTreeMap<Edge, u32>,
    pub restricted_to: BTreeSet<u32>,
}

impl HopTables {
    pub fn walk_total(&self) -> &Rat {
        self.walk.total()
    }

    pub fn hop_total(&self) -> Rat {
        self.hop.values().sum()
    }

    pub fn hopd_total(&self) -> Rat {
        self.hopd.values().sum()
    }
}

/// Builds the exact walk/hop tables of `p`, restricting middles to `b`
/// (`None` = all vertices).  Zero-degree middles contribute no walk mass, so
/// the `0/0` convention resolves to zero by construction.
pub fn hop_tables(
    p: &EdgeDistribution,
    b: Option<&BTreeSet<u32>>,
) -> Result<HopTables, WitnessError> {
    let n = p.n();
    let restricted_to: BTreeSet<u32> = match b {
        Some(set) => {
            if let Some(&v) = set.iter().find(|&&v| v == 0 || v > n) {
                return Err(WitnessError::ShapeError(format!(
                    "restriction vertex {v} outside 1..={n}"
                )));
            }
            set.clone()
        }
        None => (1..=n).collect(),
    };
    // adjacency with masses, and exact degrees
    let mut nbrs: BTreeMap<u32, Vec<(u32, Rat)>> = BTreeMap::new();
    for (e, w) in p.mass().support() {
        nbrs.entry(e.a()).or_default().push((e.b(), w.clone()));
        nbrs.entry(e.b()).or_default().push((e.a(), w.clone()));
    }
    let mut walk_map: BTreeMap<Wedge, Rat> = BTreeMap::new();
    for (&mid, around) in &nbrs {
        if !restricted_to.contains(&mid) {
            continue;
        }
        let two_deg: Rat = around.iter().map(|(_, w)| w).sum();
        for (i, (a, wa)) in around.iter().enumerate() {
            for (c, wc) in &around[i + 1..] {
                let ends = Edge::new(*a, *c)?;
                let wedge = Wedge::new(ends, mid)?;
                walk_map.insert(wedge, wa * wc / &two_deg);
            }
        }
    }
    let walk = MassFunction::from_map(walk_map)?;
    let mut hop: BTreeMap<Edge, Rat> = BTreeMap::new();
    let mut best: BTreeMap<Edge, (Rat, u32)> = BTreeMap::new();
    for (wedge, w) in walk.support() {
        *hop.entry(wedge.ends).or_insert_with(Rat::zero) += w;
        best.entry(wedge.ends)
            .and_modify(|(bw, bm)| {
                if *w > *bw || (*w == *bw && wedge.mid < *bm) {
                    *bw = w.clone();
                    *bm = wedge.mid;
                }
            })
            .or_insert_with(|| (w.clone(), wedge.mid));
    }
    let mut hopd = BTreeMap::new();
    let mut argmax_mid = BTreeMap::new();
    for (ends, total) in &hop {
        let (bw, bm) = &best[ends];
        hopd.insert(*ends, total - bw);
        argmax_mid.insert(*ends, *bm);
    }
    Ok(HopTables {
        walk,
        hop,
        hopd,
        argmax_mid,
        restricted_to,
    })
}

/// The set of middles worth keeping at accuracy `eps`: vertices whose degree
/// mass reaches `eps/(2n)`.  Restricting the walk tables to this set costs
/// at most `eps/2` of discounted hop mass.
pub fn heavy_middles(p: &EdgeDistribution, eps: &Rat) -> Result<BTreeSet<u32>, WitnessError> {
    check_eps(eps)?;
    let threshold = eps / &rat_int(2 * p.n() as i64);
    let mut degree: BTreeMap<u32, Rat> = BTreeMap::new();
    for (e, w) in p.mass().support() {
        let half = w / &rat_int(2);
        *degree.entry(e.a()).or_insert_with(Rat::zero) += &half;
        *degree.entry(e.b()).or_insert_with(Rat::zero) += &half;
    }
    Ok(degree
        .into_iter()
        .filter(|(_, d)| *d >= threshold)
        .map(|(v, _)| v)
        .collect())
}

// ---------------------------------------------------------------------------
// the case split
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Dilute,
    Concentrated,
}

impl CaseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseKind::Dilute => "dilute",
            CaseKind::Concentrated => "concentrated",
        }
    }
}

/// Outcome of the dilute/concentrated split on a descendant mass: the label,
/// both exact side values (discounted hop total, and total mass minus it),
/// and a warning when the input misses the `Σp′ ≥ eps/4` precondition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseLabel {
    pub label: CaseKind,
    pub dilute_mass: Rat,
    pub concentrated_mass: Rat,
    pub warning: Option<String>,
}

impl CaseLabel {
    /// The larger of the two sides; at least `eps/8` for true descendants.
    pub fn max_side(&self) -> Rat {
        self.dilute_mass
            .clone()
            .max(self.concentrated_mass.clone())
    }
}

/// Labels a descendant mass dilute when its discounted hop total reaches
/// `eps/8`, concentrated otherwise.  Inputs below the descendant
/// precondition `Σp′ ≥ eps/4` are still classified, with a warning attached
/// — exploratory use on arbitrary masses is intended.
pub fn classify(p_prime: &EdgeDistribution, eps: &Rat) -> Result<CaseLabel, WitnessError> {
    check_eps(eps)?;
    let tables = hop_tables(p_prime, None)?;
    let dilute_mass = tables.hopd_total();
    let concentrated_mass = p_prime.mass().total() - &dilute_mass;
    let label = if dilute_mass >= eps / &rat_int(8) {
        CaseKind::Dilute
    } else {
        CaseKind::Concentrated
    };
    let warning = {
        let floor = eps / &rat_int(4);
        (*p_prime.mass().total() < floor).then(|| {
            format!(
                "total mass {} is below the descendant floor {floor}; \
                 classification is exploratory",
                p_prime.mass().total()
            )
        })
    };
    Ok(CaseLabel {
        label,
        dilute_mass,
        concentrated_mass,
        warning,
    })
}

// ---------------------------------------------------------------------------
// sample budgets
// ---------------------------------------------------------------------------

/// Samples sufficient in the dilute case: `10³·⌈eps⁻¹·n·ln(12n)⌉`
/// (natural log).
pub fn dilute_budget(n: u32, eps: f64) -> Result<u64, WitnessError> {
    if n == 0 {
        return Err(WitnessError::ShapeError(
            "vertex count must be positive".into(),
        ));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(WitnessError::ShapeError(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    let inner = (n as f64 * (12.0 * n as f64).ln() / eps).ceil() as u64;
    Ok(1000 * inner)
}

/// Samples sufficient in the concentrated case: the smallest `m` with
/// `m⁴ · Σq⁴ ≥ 72⁴`, computed exactly from the witness weights.
pub fn concentrated_budget(w: &SquareWitness) -> Result<u64, WitnessError> {
    let s = w.fourth_power_sum();
    if s.is_zero() {
        return Err(WitnessError::NotFarEnough(Box::new(NotFarReport {
            achieved: rat_int(0),
            required: w.epsilon() / &rat_int(4),
            cover: Vec::new(),
            cover_mass: rat_int(0),
        })));
    }
    let bound = rat_int(72).pow(4) / s;
    // float guess, then exact adjustment in both directions
    let mut m = crate::mass_to_f64(&bound).powf(0.25).ceil().max(1.0) as u64;
    while m > 1 && rat_int((m - 1) as i64).pow(4) >= bound {
        m -= 1;
    }
    while rat_int(m as i64).pow(4) < bound {
        m += 1;
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// symmetric quadratic form bound
// ---------------------------------------------------------------------------

/// Both sides of the symmetric-set quadratic form inequality: for a
/// symmetric `S ⊆ [n]×[n]` and reals `x`, returns
/// `(Σ_{(i,j)∈S} x_i·x_j, √|S| · Σ x_i²)`; the first never exceeds the
/// second (largest adjacency eigenvalue is at most `√|S|`).
pub fn spectral_form_sides(
    s: &BTreeSet<(u32, u32)>,
    x: &[f64],
) -> Result<(f64, f64), WitnessError> {
    let n = x.len() as u32;
    for &(i, j) in s {
        if i == 0 || j == 0 || i > n || j > n {
            return Err(WitnessError::ShapeError(format!(
                "pair ({i},{j}) outside [1,{n}]²"
            )));
        }
        if !s.contains(&(j, i)) {
            return Err(WitnessError::ShapeError(format!(
                "set is not symmetric: ({i},{j}) lacks its mirror"
            )));
        }
    }
    let lhs: f64 = s
        .iter()
        .map(|&(i, j)| x[(i - 1) as usize] * x[(j - 1) as usize])
        .sum();
    let rhs = (s.len() as f64).sqrt() * x.iter().map(|v| v * v).sum::<f64>();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::RngSeed;
    use crate::rat;
    use rand::RngCore;

    fn vs(ids: &[u32]) -> BTreeSet<u32> {
        ids.iter().copied().collect()
    }

    fn edge_set(pairs: &[(u32, u32)]) -> BTreeSet<Edge> {
        pairs.iter().map(|&(a, b)| Edge::of(a, b)).collect()
    }

    fn uniform_on(n: u32, pairs: &[(u32, u32)]) -> EdgeDistribution {
        EdgeDistribution::uniform(n, pairs.iter().map(|&(a, b)| Edge::of(a, b))).unwrap()
    }

    /// Random sub-probability edge mass with integer-rational weights.
    fn random_mass(n: u32, edges: usize, seed: RngSeed) -> EdgeDistribution {
        let mut rng = seed.rng();
        let mut raw: BTreeMap<Edge, u64> = BTreeMap::new();
        while raw.len() < edges {
            let a = (rng.next_u64() % n as u64) as u32 + 1;
            let b = (rng.next_u64() % n as u64) as u32 + 1;
            if a != b {
                raw.insert(Edge::of(a, b), rng.next_u64() % 100 + 1);
            }
        }
        let denom: u64 = raw.values().sum::<u64>() * 2; // total mass 1/2
        let mass = raw
            .into_iter()
            .map(|(e, w)| (e, rat(w as i64, denom as i64)))
            .collect();
        EdgeDistribution::new(n, MassFunction::from_map(mass).unwrap()).unwrap()
    }

    #[test]
    fn single_hyperedge_matching_is_min_mass() {
        let g = Hypergraph::new(4, vec![vs(&[1, 2, 3, 4])]).unwrap();
        let p = MassFunction::uniform([1u32, 2, 3, 4]).unwrap();
        let m = solve_fractional_matching(&g, &p, &rat(1, 4)).unwrap();
        assert_eq!(m.total(), rat(1, 4));
        assert_eq!(m.support_len(), 1);
        m.verify(&p, &rat(1, 4)).unwrap();
    }

    #[test]
    fn zero_mass_is_not_far() {
        let g = Hypergraph::new(4, vec![vs(&[1, 2, 3, 4])]).unwrap();
        let p: MassFunction<u32> = MassFunction::from_map(BTreeMap::new()).unwrap();
        match solve_fractional_matching(&g, &p, &rat(1, 4)) {
            Err(WitnessError::NotFarEnough(r)) => {
                assert!(r.achieved.is_zero());
                assert!(r.cover_mass.is_zero());
            }
            other => panic!("expected NotFarEnough, got {other:?}"),
        }
    }

    #[test]
    fn disjoint_triangles_matching() {
        let g = Hypergraph::new(3, vec![vs(&[1, 2, 3]), vs(&[4, 5, 6])]).unwrap();
        let p = MassFunction::from_map((1u32..=6).map(|v| (v, rat(1, 6))).collect()).unwrap();
        let m = solve_fractional_matching(&g, &p, &rat(1, 2)).unwrap();
        assert_eq!(m.total(), rat(1, 3));
        assert_eq!(m.get(&vs(&[1, 2, 3])), rat(1, 6));
        assert_eq!(m.get(&vs(&[4, 5, 6])), rat(1, 6));
    }

    #[test]
    fn not_far_reports_a_small_cover() {
        // mass concentrated on one vertex of each hyperedge: the LP tops out
        // at that vertex's mass
        let g = Hypergraph::new(2, vec![vs(&[1, 2]), vs(&[1, 3])]).unwrap();
        let p = MassFunction::from_map(
            [(1u32, rat(1, 100)), (2, rat(1, 2)), (3, rat(1, 3))].into(),
        )
        .unwrap();
        match solve_fractional_matching(&g, &p, &rat(1, 2)) {
            Err(WitnessError::NotFarEnough(r)) => {
                assert_eq!(r.achieved, rat(1, 100));
                assert!(r.cover.contains(&"1".to_string()));
                assert!(r.cover_mass < rat(1, 2));
            }
            other => panic!("expected NotFarEnough, got {other:?}"),
        }
    }

    #[test]
    fn kernel_walk_shrinks_dependent_support() {
        // the four sides of a 4-cycle (2-uniform) are dependent; a balanced
        // optimum on all four must shrink to at most three hyperedges
        let g = Hypergraph::new(
            2,
            vec![vs(&[1, 2]), vs(&[2, 3]), vs(&[3, 4]), vs(&[1, 4])],
        )
        .unwrap();
        let balanced: BTreeMap<usize, Rat> = (0..4).map(|j| (j, rat(1, 8))).collect();
        let reduced = reduce_support(balanced, &g).unwrap();
        assert!(reduced.len() <= 3);
        let total: Rat = reduced.values().sum();
        assert_eq!(total, rat(1, 2));
        let columns: Vec<Vec<u32>> = reduced
            .keys()
            .map(|&j| g.edges()[j].iter().copied().collect())
            .collect();
        assert_eq!(indicator_rank(&columns), columns.len());
        // loads still bounded by the p that made the balanced point feasible
        let p = MassFunction::from_map((1u32..=4).map(|v| (v, rat(1, 4))).collect()).unwrap();
        let mut load: BTreeMap<u32, Rat> = BTreeMap::new();
        for (&j, w) in &reduced {
            for &v in &g.edges()[j] {
                *load.entry(v).or_insert_with(Rat::zero) += w;
            }
        }
        for (v, l) in load {
            assert!(l <= p.get(&v));
        }
    }

    #[test]
    fn square_witness_on_one_square() {
        let p = uniform_on(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]);
        let w = square_witness(&p, &rat(1, 4)).unwrap();
        assert_eq!(w.support_len(), 1);
        assert_eq!(w.total(), rat(1, 4));
        w.verify(p.mass()).unwrap();
        assert_eq!(w.fourth_power_sum(), rat(1, 256));
    }

    #[test]
    fn square_free_mass_is_not_far() {
        let p = uniform_on(4, &[(1, 2), (2, 3), (3, 4)]);
        assert!(matches!(
            square_witness(&p, &rat(1, 4)),
            Err(WitnessError::NotFarEnough(_))
        ));
    }

    #[test]
    fn complete_four_witness() {
        let p = uniform_on(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        let w = square_witness(&p, &rat(1, 6)).unwrap();
        assert!(w.total() >= rat(1, 24));
        w.verify(p.mass()).unwrap();
        // the three squares of the complete graph pairwise share two edges;
        // every support square really is a square of the graph
        for square in w.weights().keys() {
            assert_eq!(square.len(), 4);
        }
    }

    #[test]
    fn descendant_moves_mass_onto_own_edges() {
        let p = uniform_on(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]);
        let w = square_witness(&p, &rat(1, 4)).unwrap();
        let d = descendant(&w).unwrap();
        assert_eq!(*d.mass().total(), w.total());
        assert_eq!(d.mass().len(), 1);
        let (edge, weight) = d.mass().support().next().unwrap();
        assert!(edge_set(&[(1, 2), (2, 3), (3, 4), (1, 4)]).contains(edge));
        assert_eq!(*weight, rat(1, 4));
    }

    #[test]
    fn descendant_of_dense_witness_is_injective() {
        let p = uniform_on(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        let w = square_witness(&p, &rat(1, 6)).unwrap();
        let d = descendant(&w).unwrap();
        // totals transfer exactly, and each square got a distinct edge
        assert_eq!(*d.mass().total(), w.total());
        assert_eq!(d.mass().len(), w.support_len());
        for (edge, _) in d.mass().support() {
            assert!(w.weights().keys().any(|sq| sq.contains(edge)));
        }
    }

    #[test]
    fn empty_witness_descends_to_zero() {
        let w = SquareWitness {
            n: 4,
            epsilon: rat(1, 4),
            matching: FractionalMatching {
                k: 4,
                weights: BTreeMap::new(),
            },
        };
        let d = descendant(&w).unwrap();
        assert!(d.mass().is_empty());
    }

    #[test]
    fn hop_tables_on_a_path() {
        let mass = MassFunction::from_map(
            [(Edge::of(1, 2), rat(1, 2)), (Edge::of(2, 3), rat(1, 2))].into(),
        )
        .unwrap();
        let p = EdgeDistribution::new(3, mass).unwrap();
        let t = hop_tables(&p, None).unwrap();
        let wedge = Wedge::new(Edge::of(1, 3), 2).unwrap();
        assert_eq!(t.walk.get(&wedge), rat(1, 4));
        assert_eq!(t.hop[&Edge::of(1, 3)], rat(1, 4));
        assert_eq!(t.hopd[&Edge::of(1, 3)], rat_int(0));
        assert_eq!(t.argmax_mid[&Edge::of(1, 3)], 2);
    }

    #[test]
    fn hop_tables_on_an_edge_and_a_square() {
        let single = uniform_on(2, &[(1, 2)]);
        let t = hop_tables(&single, None).unwrap();
        assert!(t.walk.is_empty() && t.hop.is_empty() && t.hopd.is_empty());

        let sq = uniform_on(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]);
        let t = hop_tables(&sq, None).unwrap();
        assert_eq!(t.hop[&Edge::of(1, 3)], rat(1, 4));
        assert_eq!(t.hopd[&Edge::of(1, 3)], rat(1, 8));
        assert_eq!(t.hopd[&Edge::of(2, 4)], rat(1, 8));
        assert_eq!(t.argmax_mid[&Edge::of(1, 3)], 2); // ties break low
    }

    #[test]
    fn walk_mass_respects_degree_bound() {
        for salt in 0..20 {
            let p = random_mass(8, 10, RngSeed::new(11, salt));
            let t = hop_tables(&p, None).unwrap();
            let deg_total: Rat = p.mass().total().clone();
            assert!(*t.walk_total() <= deg_total);
            assert!(*t.walk_total() <= rat_int(1));
            // hopd is pointwise nonnegative and below hop
            for (e, d) in &t.hopd {
                assert!(!d.is_negative());
                assert!(*d <= t.hop[e]);
            }
        }
    }

    #[test]
    fn restricting_middles_costs_little_hopd() {
        // dropping middles below eps/(2n) degree loses at most eps/2
        let eps = rat(1, 5);
        for salt in 0..200 {
            let p = random_mass(8, 7, RngSeed::new(23, salt));
            let b = heavy_middles(&p, &eps).unwrap();
            let full = hop_tables(&p, None).unwrap();
            let pruned = hop_tables(&p, Some(&b)).unwrap();
            let loss = full.hopd_total() - pruned.hopd_total();
            assert!(
                loss <= &eps / &rat_int(2),
                "loss {loss} exceeds eps/2 at salt {salt}"
            );
        }
    }

    #[test]
    fn classify_extremes() {
        // a star has hop mass but its single middle is discounted entirely
        let star = uniform_on(4, &[(1, 2), (1, 3), (1, 4)]);
        let label = classify(&star, &rat(1, 2)).unwrap();
        assert_eq!(label.label, CaseKind::Concentrated);
        assert!(label.dilute_mass.is_zero());
        assert_eq!(label.concentrated_mass, rat_int(1));

        // the square's descendant chain from the dense witness
        let p = uniform_on(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        let eps = rat(1, 6);
        let w = square_witness(&p, &eps).unwrap();
        let d = descendant(&w).unwrap();
        let label = classify(&d, &eps).unwrap();
        assert!(label.warning.is_none());
        assert!(label.max_side() >= &eps / &rat_int(8));
    }

    #[test]
    fn classify_warns_below_descendant_floor() {
        let mass =
            MassFunction::from_map([(Edge::of(1, 2), rat(1, 100))].into()).unwrap();
        let p = EdgeDistribution::new(3, mass).unwrap();
        let label = classify(&p, &rat(1, 2)).unwrap();
        assert!(label.warning.is_some());
        assert_eq!(label.label, CaseKind::Concentrated);
    }

    #[test]
    fn budget_values() {
        assert_eq!(dilute_budget(12, 1.0).unwrap(), 60_000);
        // halving eps doubles the count (up to the inner ceiling)
        let full = dilute_budget(10, 1.0).unwrap();
        let half = dilute_budget(10, 0.5).unwrap();
        assert!(half >= 2 * full - 1000 && half <= 2 * full + 1000);
        assert!(dilute_budget(0, 0.5).is_err());
        assert!(dilute_budget(5, 0.0).is_err());

        let p = uniform_on(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]);
        let w = square_witness(&p, &rat(1, 4)).unwrap();
        assert_eq!(concentrated_budget(&w).unwrap(), 288);
    }

    #[test]
    fn concentrated_budget_is_exact_threshold() {
        let p = uniform_on(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]);
        let w = square_witness(&p, &rat(1, 4)).unwrap();
        let m = concentrated_budget(&w).unwrap();
        let s = w.fourth_power_sum();
        assert!(rat_int(m as i64).pow(4) * s.clone() >= rat_int(72).pow(4));
        assert!(rat_int((m - 1) as i64).pow(4) * s < rat_int(72).pow(4));
    }

    #[test]
    fn spectral_sides_on_random_inputs() {
        let mut rng = RngSeed::new(31, 1).rng();
        for _ in 0..50 {
            let n = 3 + (rng.next_u64() % 8) as u32;
            let mut s = BTreeSet::new();
            for _ in 0..(rng.next_u64() % 20) {
                let i = (rng.next_u64() % n as u64) as u32 + 1;
                let j = (rng.next_u64() % n as u64) as u32 + 1;
                s.insert((i, j));
                s.insert((j, i));
            }
            let x: Vec<f64> = (0..n)
                .map(|_| (rng.next_u64() % 2000) as f64 / 1000.0 - 1.0)
                .collect();
            let (lhs, rhs) = spectral_form_sides(&s, &x).unwrap();
            assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
        }
        let asym: BTreeSet<(u32, u32)> = [(1, 2)].into();
        assert!(spectral_form_sides(&asym, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn hypergraph_shape_checks() {
        assert!(Hypergraph::new(0, Vec::<BTreeSet<u32>>::new()).is_err());
        assert!(Hypergraph::new(3, vec![vs(&[1, 2])]).is_err());
        let g = Hypergraph::new(2, vec![vs(&[1, 2]), vs(&[1, 2]), vs(&[2, 3])]).unwrap();
        assert_eq!(g.edge_count(), 2); // duplicates collapse
        assert_eq!(g.vertices().len(), 3);
    }

    #[test]
    fn eps_range_is_enforced() {
        let p = uniform_on(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]);
        assert!(square_witness(&p, &rat_int(0)).is_err());
        assert!(square_witness(&p, &rat_int(1)).is_err());
        assert!(classify(&p, &rat(3, 2)).is_err());
    }
}
