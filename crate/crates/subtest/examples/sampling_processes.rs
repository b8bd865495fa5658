// Seeded sampling processes over a small edge distribution.
//
// Builds a five-vertex distribution, then runs each derived process off one
// master seed: the count batch, the indicator product of two independent
// batches, the join of a vertex batch with a pair batch, and the wedge
// statistic. Re-running with the same seed replays every batch exactly.
//
// Run: cargo run --example sampling_processes

use std::error::Error;

use subtest::core::{
    process_j, process_p, process_s, process_w, wedge_counts, Edge, EdgeDistribution,
    MassFunction, RngSeed,
};

fn main() -> Result<(), Box<dyn Error>> {
    let seed = RngSeed::new(2026, 0);

    // A four-cycle with one diagonal, uniform mass on the five edges.
    let edges = [(1, 2), (2, 3), (3, 4), (1, 4), (1, 3)];
    let mass = MassFunction::uniform(
        edges
            .iter()
            .map(|&(a, b)| Edge::new(a, b))
            .collect::<Result<Vec<_>, _>>()?,
    )?;
    let p = EdgeDistribution::new(5, mass)?;

    println!("distribution: {} edges, uniform 1/5 each", p.mass().len());

    // Count batch: 20 draws tallied per edge.
    let x = process_s(p.mass(), 20, seed.substream(0));
    println!("\ncount batch (m = 20):");
    for (e, c) in x.entries() {
        println!("  {{{}, {}}} drawn {} times", e.a(), e.b(), c);
    }

    // Product process: the intersection of two independent 10-draw batches.
    let w = process_p(p.mass(), 10, p.mass(), 10, seed.substream(1));
    let seen: Vec<String> = w
        .as_set()
        .iter()
        .map(|e| format!("{{{}, {}}}", e.a(), e.b()))
        .collect();
    println!("\nproduct of two 10-draw batches: {}", seen.join(" "));

    // Join process: vertices sampled on the left, ordered pairs on the right;
    // a right endpoint lights up when its left endpoint was sampled too.
    let verts = MassFunction::uniform(1u32..=4)?;
    let pairs = MassFunction::uniform([(1u32, 3u32), (2, 4), (3, 1)])?;
    let joined = process_j(&verts, 6, &pairs, 6, seed.substream(2));
    let lit: Vec<String> = joined.iter().map(u32::to_string).collect();
    println!("join of vertex and pair batches: {{{}}}", lit.join(", "));

    // Wedge statistic: products of edge counts over common endpoints.
    let wedges = process_w(&p, 30, seed.substream(3));
    println!("\nwedge counts (m = 30):");
    for (wedge, c) in wedges.entries() {
        println!(
            "  ends {{{}, {}}} through {}: {}",
            wedge.ends.a(),
            wedge.ends.b(),
            wedge.mid,
            c
        );
    }

    // Determinism: the same seed replays the same batch, a different stream
    // gives a fresh one.
    let again = process_s(p.mass(), 20, seed.substream(0));
    let other = process_s(p.mass(), 20, seed.substream(7));
    println!("\nsame substream replays identically: {}", x == again);
    println!("different substream differs:         {}", x != other);

    // The deterministic tally agrees with the sampled wedge process.
    assert_eq!(wedges, wedge_counts(&process_s(p.mass(), 30, seed.substream(3))));
    Ok(())
}
