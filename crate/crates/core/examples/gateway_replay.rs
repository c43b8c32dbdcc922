//! Run the full pipeline against recorded model replies, without network access.

use std::path::Path;

use ssr::bench::{run_pipeline, BenchConfig, BenchProblem};
use ssr::gateway::Gateway;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pack = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/worked_cases");
    let cases: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(pack.join("cases.json"))?)?;
    let gateway = Gateway::mock(pack.join("fixtures"));
    let config = BenchConfig::default();
    for case in cases {
        let mut problem: BenchProblem = serde_json::from_value(case)?;
        // Force the translation step so the recorded replies are used.
        problem.gold_envelope = None;
        let r = run_pipeline(&problem, Some(&gateway), &config);
        println!("{:<12} {:?} answered {:?}, gold {}", r.id, r.branch, r.label, problem.gold_label);
    }
    Ok(())
}
