//! A laboratory for property testing of *edge distributions*: probability
//! distributions over the edge set of an unknown graph, where the tester sees
//! only independent samples (optionally labeled) and must decide, one-sidedly,
//! whether the support satisfies a graph property or the distribution is far
//! from every edge set that does.
//!
//! The crate is organized around six areas:
//!
//! * [`core`] — mass functions, edge distributions, seeded sampling, and the
//!   derived sampling processes (count/indicator batches, products, joins,
//!   wedge statistics, tree joins, pruning, marginals).
//! * [`testers`] — canonical one-sided testers (subgraph-freeness,
//!   homomorphism, clique) with their sample budgets and the
//!   support-to-labeled reduction.
//! * [`witness`] — exact rational LP machinery: fractional matchings on
//!   violation hypergraphs, square witnesses, descendants, hop tables, and the
//!   dilute/concentrated case split with its budgets.
//! * [`generators`] — hard instance families: arithmetic set constructions,
//!   packing graphs, two-cover blow-ups with parity selectors, and the
//!   bipartite/tree/clique gadget families.
//! * [`oracles`] — independent exact references: violation enumeration,
//!   exact distance via minimum-weight covers, exact total variation between
//!   sample processes, coupling-based domination checks, and structure
//!   verifiers.
//! * [`harness`] — Monte Carlo experiments: rejection estimation, threshold
//!   search, log-log scaling fits, and the registered lemma checks.
//!
//! Determinism is a design requirement throughout: every randomized routine
//! takes an explicit [`core::RngSeed`], all maps with observable iteration
//! order are B-trees, and identical seeds produce byte-identical outputs.

pub mod core;
pub mod generators;
pub mod harness;
pub mod oracles;
pub mod testers;
pub mod witness;

mod numeric;

pub use numeric::{mass_to_f64, parse_mass, rat, rat_int, render_mass, Rat, MASS_TOL};
