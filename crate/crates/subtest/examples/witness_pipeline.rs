// The square-witness pipeline, end to end.
//
// For a distribution far from square-freeness the program finds an exact
// rational fractional matching on squares (the witness), derives the
// descendant distribution it induces, classifies the descendant as dilute or
// concentrated, and prices the sample budgets of both cases. A distribution
// that is not far enough is rejected with a certificate: a small edge cover
// whose removal cost is below the requested distance.
//
// Run: cargo run --example witness_pipeline

use std::error::Error;

use subtest::core::{Edge, EdgeDistribution, MassFunction};
use subtest::witness::{
    classify, concentrated_budget, descendant, dilute_budget, square_witness, WitnessError,
};
use subtest::{mass_to_f64, rat};

fn uniform(n: u32, pairs: &[(u32, u32)]) -> Result<EdgeDistribution, Box<dyn Error>> {
    let edges = pairs
        .iter()
        .map(|&(a, b)| Edge::new(a, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EdgeDistribution::new(n, MassFunction::uniform(edges)?)?)
}

fn main() -> Result<(), Box<dyn Error>> {
    // Two disjoint squares, one eighth of mass per edge.
    let p = uniform(
        8,
        &[
            (1, 2),
            (2, 3),
            (3, 4),
            (1, 4),
            (5, 6),
            (6, 7),
            (7, 8),
            (5, 8),
        ],
    )?;
    let eps = rat(1, 4);

    let w = square_witness(&p, &eps)?;
    println!(
        "witness: {} squares, total weight {}, fourth-power sum {}",
        w.support_len(),
        w.total(),
        w.fourth_power_sum()
    );
    for (square, weight) in w.weights() {
        let edges: Vec<String> = square
            .iter()
            .map(|e| format!("{{{}, {}}}", e.a(), e.b()))
            .collect();
        println!("  weight {weight} on {}", edges.join(" "));
    }
    w.verify(p.mass())?;
    println!("witness re-verifies against the distribution");

    let d = descendant(&w)?;
    println!("\ndescendant over {} edges:", d.mass().len());
    for (e, mass) in d.mass().support() {
        println!("  {{{}, {}}} carries {}", e.a(), e.b(), mass);
    }

    let label = classify(&d, &eps)?;
    println!(
        "\ncase: {} (dilute mass {}, concentrated mass {})",
        label.label.as_str(),
        label.dilute_mass,
        label.concentrated_mass
    );
    println!(
        "budgets: dilute {} samples, concentrated {} samples",
        dilute_budget(w.n(), mass_to_f64(&eps))?,
        concentrated_budget(&w)?
    );

    // A star is square-free, so no witness exists at any positive distance.
    let star = uniform(5, &[(1, 2), (1, 3), (1, 4), (1, 5)])?;
    match square_witness(&star, &eps) {
        Err(WitnessError::NotFarEnough(report)) => {
            println!(
                "\nstar refused: reachable total {} is below the required {}",
                report.achieved, report.required
            );
            println!(
                "cheap cover (mass {}): {}",
                report.cover_mass,
                report.cover.join(", ")
            );
        }
        Err(e) => return Err(e.into()),
        Ok(_) => unreachable!("a square-free support admits no square witness"),
    }
    Ok(())
}
