// The registered lemma checks at their shipped parameters.
//
// Each check runs a sampling experiment at the exact budget its statement
// prescribes and compares the observed success frequency against the stated
// bound (minus three standard errors, so a correct implementation essentially
// never flags). Exits with status 2 if any check does not pass.
//
// Run: cargo run --example lemma_suite

use std::error::Error;
use std::process::ExitCode;

use subtest::core::RngSeed;
use subtest::harness::{run_lemma_suite, LemmaOutcome};

fn main() -> Result<ExitCode, Box<dyn Error>> {
    let trials = 400;
    let reports = run_lemma_suite(trials, RngSeed::new(0, 0))?;
    for report in &reports {
        println!("{}", report.summary_line());
    }
    let passed = reports
        .iter()
        .filter(|r| r.outcome == LemmaOutcome::Passed)
        .count();
    println!("\n{passed}/{} checks passed at {trials} trials", reports.len());
    Ok(if passed == reports.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
