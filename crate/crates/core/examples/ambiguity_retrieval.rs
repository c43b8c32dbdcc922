//! Settle an ambiguous multiple-choice answer by asking for one extra premise.

use serde_json::json;
use ssr::bench::analyze;
use ssr::retrieval::PremiseVerifier;
use ssr::solver::SolverConfig;

/// Accepts whatever premise it is shown and logs it.
struct Echo;

impl PremiseVerifier for Echo {
    fn verify_premise(&mut self, assignment: &str) -> Result<bool, String> {
        println!("verifier asked: {assignment}");
        Ok(true)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let envelope = json!({
        "objects": ["owl", "hawk", "crow"],
        "facts": ["Pos(owl) < Pos(crow)"],
        "query": ["Pos(owl) = 1", "Pos(hawk) = 1", "Pos(crow) = 1"]
    });
    let a = analyze(&envelope, None, None, &SolverConfig::default(), Some(&mut Echo))?;
    println!("consistent options: {:?}", a.report.candidate_sat);
    println!("retrieval: {:?}", a.report.retrieval);
    println!("verdict: {}", a.report.verdict);
    Ok(())
}
