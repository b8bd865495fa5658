// One-sided testing on a generated hard pair.
//
// Generates the triangle-freeness yes/no pair, computes the canonical sample
// budget for the pattern, and runs the tester on labeled samples from both
// sides. The yes side must accept in every trial — rejection requires an
// explicit violation among the sampled edges — while the far side rejects
// with high frequency at the stated budget.
//
// Run: cargo run --example canonical_testers

use std::error::Error;

use subtest::core::RngSeed;
use subtest::generators::triangle_hardness_pair;
use subtest::mass_to_f64;
use subtest::testers::{run_property_tester, subgraph_sample_budget, Decision, PatternGraph};

fn main() -> Result<(), Box<dyn Error>> {
    let seed = RngSeed::new(11, 0);
    let (yes, no) = triangle_hardness_pair(2, seed)?;
    println!(
        "pair on {} vertices; far side certified at distance {}",
        no.n, no.certified_distance
    );

    let eps = mass_to_f64(&no.certified_distance);
    let m = subgraph_sample_budget(&PatternGraph::triangle(), u64::from(no.n), eps)?;
    println!("canonical budget for the triangle at eps = {eps:.4}: m = {m}");

    let trials = 60u32;
    let mut yes_accepts = 0u32;
    let mut no_rejects = 0u32;
    let mut shown = false;
    for t in 0..trials {
        let trial_seed = seed.substream(u64::from(t));
        let ys = yes.draw_labeled(m, trial_seed.substream(0));
        let ns = no.draw_labeled(m, trial_seed.substream(1));
        let yv = run_property_tester(&yes.property, &ys)?;
        let nv = run_property_tester(&no.property, &ns)?;
        if yv.decision == Decision::Accept {
            yes_accepts += 1;
        }
        if nv.decision == Decision::Reject {
            no_rejects += 1;
            // The verdict carries the violation it saw: a sampled triangle.
            if !shown {
                if let Some(v) = &nv.witness {
                    let pts: Vec<String> = v
                        .points
                        .iter()
                        .map(|(e, _)| format!("{{{}, {}}}", e.a(), e.b()))
                        .collect();
                    println!("sample violation on the far side: {}", pts.join(" "));
                    shown = true;
                }
            }
        }
    }

    println!("yes side accepted {yes_accepts}/{trials} trials");
    println!("far side rejected {no_rejects}/{trials} trials");
    assert_eq!(yes_accepts, trials, "one-sidedness must be exact");
    Ok(())
}
