// The exact reference computations.
//
// Everything here is computed over exact rationals: the minimal violations of
// a property inside a support, the distance from a distribution to the
// property (a minimum-mass cover of those violations), the total variation
// between two m-sample processes, and a coupling certificate for stochastic
// domination between count-vector laws.
//
// Run: cargo run --example exact_oracles

use std::collections::{BTreeMap, BTreeSet};
use std::error::Error;

use subtest::core::{CountVector, Edge, EdgeDistribution, MassFunction};
use subtest::oracles::{
    check_domination_counts, enumerate_violations, exact_distance,
    exact_tv_sample_distributions, DominationOutcome,
};
use subtest::testers::{PatternGraph, Property};
use subtest::{rat, rat_int};

fn edges(pairs: &[(u32, u32)]) -> Result<BTreeSet<Edge>, Box<dyn Error>> {
    Ok(pairs
        .iter()
        .map(|&(a, b)| Edge::new(a, b))
        .collect::<Result<_, _>>()?)
}

fn uniform(n: u32, pairs: &[(u32, u32)]) -> Result<EdgeDistribution, Box<dyn Error>> {
    let list = pairs
        .iter()
        .map(|&(a, b)| Edge::new(a, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EdgeDistribution::new(n, MassFunction::uniform(list)?)?)
}

fn main() -> Result<(), Box<dyn Error>> {
    // Violations: the four triangles of K4, each a minimal witness.
    let k4 = edges(&[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)])?;
    let tri_free = Property::HFree(PatternGraph::triangle());
    let hg = enumerate_violations(&tri_free, 4, &k4)?;
    println!(
        "K4 against triangle-freeness: {} minimal violations (minimality re-checked: {})",
        hg.len(),
        hg.verify_minimal(&tri_free)?
    );

    // Exact distance: two disjoint triangles need one edge removed from each.
    let two_tri = edges(&[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)])?;
    let mu = uniform(6, &[(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)])?;
    let d = exact_distance(&two_tri, mu.mass(), &tri_free, 6)?;
    println!("two disjoint uniform triangles: distance {d} from triangle-freeness");
    assert_eq!(d, rat(1, 3));

    // Total variation between sample processes, exactly.
    let left = uniform(4, &[(1, 2), (3, 4)])?;
    let right = uniform(4, &[(1, 2), (1, 3)])?;
    for m in 0..=3 {
        let tv = exact_tv_sample_distributions(
            &[left.clone()],
            &[right.clone()],
            m,
        )?;
        println!("tv at m = {m}: {tv}");
    }

    // Domination with an explicit coupling certificate.
    let point = |entries: &[(u32, u64)]| CountVector::from_counts(entries.iter().copied().collect());
    let mu = MassFunction::from_map(BTreeMap::from([
        (point(&[(1, 1)]), rat(1, 2)),
        (point(&[(1, 2)]), rat(1, 2)),
    ]))?;
    let nu = MassFunction::from_map(BTreeMap::from([
        (point(&[(1, 1)]), rat(3, 4)),
        (point(&[(1, 2)]), rat(1, 4)),
    ]))?;
    match check_domination_counts(&mu, &nu, &rat(3, 4), &rat(1, 2))? {
        DominationOutcome::Dominates(cert) => {
            println!(
                "domination holds: coupled mass {} over {} pairs, certificate valid: {}",
                cert.achieved,
                cert.entries.len(),
                cert.verify(&mu, &nu, |w, z| w.dominates(z))
            );
        }
        DominationOutcome::Infeasible { optimum } => {
            println!("domination fails; best coupled mass {optimum}");
        }
    }

    // And an infeasible pair: nothing dominates from below.
    let zero = MassFunction::from_map(BTreeMap::from([(point(&[]), rat_int(1))]))?;
    let one = MassFunction::from_map(BTreeMap::from([(point(&[(1, 1)]), rat_int(1))]))?;
    if let DominationOutcome::Infeasible { optimum } =
        check_domination_counts(&zero, &one, &rat_int(1), &rat_int(1))?
    {
        println!("point mass at zero cannot dominate: optimum {optimum}");
    }
    Ok(())
}
