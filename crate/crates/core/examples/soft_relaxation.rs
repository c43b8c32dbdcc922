//! Drop the least trusted facts when the translation is contradictory.

use serde_json::json;
use ssr::bench::analyze;
use ssr::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let envelope = json!({
        "objects": ["Stella"],
        "facts": [
            "forall x. Cat(x) -> Furry(x)",
            "Cat(Stella)",
            "not Furry(Stella)",
            "forall x. Furry(x) -> Warm(x)"
        ],
        "query": "Warm(Stella)"
    });
    // The third fact comes from a low-confidence span of the translation.
    let weights = [0.9, 0.8, 0.2, 0.7];
    let a = analyze(&envelope, Some(&weights), None, &SolverConfig::default(), None)?;
    if let Some(r) = &a.report.restored {
        println!("kept facts {:?}, dropped {:?}, weight {:.2}", r.kept, r.dropped, r.total_weight);
    }
    println!("verdict: {}", a.report.verdict);
    Ok(())
}
