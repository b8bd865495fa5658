// The hard-instance constructions and their structure checks.
//
// Builds the arithmetic ingredients (progression-free sets, Sidon sets), the
// packing graphs they induce (every edge in exactly one triangle or square),
// and two of the certified yes/no instance families. Each construction is
// re-verified by the independent oracles.
//
// Run: cargo run --example hardness_generators

use std::error::Error;

use subtest::core::RngSeed;
use subtest::generators::{
    behrend_set, bipartite_hardness_pair, clique_hardness_instance, ruzsa_szemeredi_graph,
    threefold_sidon_set, tv_c4_graph, zn_sidon_set, Side,
};
use subtest::oracles::{
    exact_distance, verify_3ap_free, verify_exactly_one_copy, verify_kfold_sidon,
};
use subtest::testers::PatternGraph;

fn main() -> Result<(), Box<dyn Error>> {
    let seed = RngSeed::new(5, 0);

    // Progression-free sets via digit expansion on a sphere.
    let b = behrend_set(300)?;
    println!(
        "progression-free subset of [1, 300]: {} elements, verified {}",
        b.len(),
        verify_3ap_free(&b)
    );

    // Triangle packing: every edge in exactly one triangle.
    let rs = ruzsa_szemeredi_graph(12, &b.iter().copied().filter(|&x| x <= 4).collect::<Vec<_>>())?;
    println!(
        "triangle packing on 72 vertices: {} edges, one triangle per edge: {}",
        rs.len(),
        verify_exactly_one_copy(&rs, &PatternGraph::triangle())?
    );

    // Three-fold Sidon sets, in a prime plane and in a cyclic group.
    let plane = threefold_sidon_set(17, seed)?;
    println!(
        "3-fold Sidon set in the plane over 17: {} elements, verified {}",
        plane.elements.len(),
        verify_kfold_sidon(&plane)
    );
    let cyclic = zn_sidon_set(35, seed.substream(1))?;
    println!(
        "3-fold Sidon set in Z_35: {} elements, verified {}",
        cyclic.elements.len(),
        verify_kfold_sidon(&cyclic)
    );

    // Square packing from the cyclic set: every edge in exactly one square.
    let c4 = tv_c4_graph(35, &cyclic)?;
    println!(
        "square packing on 140 vertices: {} edges, one square per edge: {}",
        c4.len(),
        verify_exactly_one_copy(&c4, &PatternGraph::square())?
    );

    // A certified yes/no pair for homomorphism into the complete bipartite
    // pattern: the far side's claimed distance is matched by the exact oracle.
    let (yes, no) = bipartite_hardness_pair(1, 3, seed.substream(2))?;
    println!(
        "\nbipartite pair on {} vertices: yes at distance {}, no certified ≥ {}",
        no.n, yes.certified_distance, no.certified_distance
    );
    let exact = exact_distance(&no.positives, no.mu.mass(), &no.property, no.n)?;
    println!("exact distance of the far side: {exact}");
    assert!(exact >= no.certified_distance);

    // The clique family separates support membership from mass placement.
    let far = clique_hardness_instance(2, Side::No, seed.substream(3))?;
    println!(
        "clique far instance on {} vertices, certified distance {}",
        far.n, far.certified_distance
    );
    Ok(())
}
