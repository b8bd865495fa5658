// Threshold search and scaling fit over an instance family.
//
// For each grid size, searches for the smallest sample count at which the
// canonical tester rejects the far side in at least two thirds of trials,
// then fits a power law m* ~ n^slope on the log-log points with a bootstrap
// confidence interval.
//
// Run: cargo run --example scaling_study

use std::error::Error;

use subtest::core::RngSeed;
use subtest::generators::Family;
use subtest::harness::{scaling_fit, threshold_search, ThresholdOutcome};

fn main() -> Result<(), Box<dyn Error>> {
    let family = Family::Bipartite { k: 3 };
    let grid = [4u32, 6, 8];
    let trials = 80;
    let target = 2.0 / 3.0;
    let m_cap = 1 << 14;
    let seed = RngSeed::new(31, 0);

    println!("family: three-part homomorphism gadget; target rejection {target:.3}");
    let mut points = Vec::new();
    for (i, &n) in grid.iter().enumerate() {
        match threshold_search(&family, n, target, trials, seed.substream(i as u64), m_cap)? {
            ThresholdOutcome::Resolved(m) => {
                println!("  n = {n:3}  threshold m* = {m}");
                points.push((n, m));
            }
            ThresholdOutcome::Unresolved(cap) => {
                println!("  n = {n:3}  unresolved at cap {cap}");
            }
        }
    }

    let fit = scaling_fit(&points, seed.substream(99))?;
    println!(
        "\nfitted m* ~ n^{:.3}  (bootstrap 95% CI [{:.3}, {:.3}], {} points)",
        fit.slope, fit.ci_low, fit.ci_high, fit.points
    );
    Ok(())
}
