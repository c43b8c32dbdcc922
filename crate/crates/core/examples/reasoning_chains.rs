//! Build forward and backward chains for a verdict and check them step by step.

use serde_json::json;
use ssr::bench::{analyze, verify_chain_file, ChainDirection};
use ssr::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let envelope = json!({
        "objects": ["Fae"],
        "facts": [
            "forall x. Wumpus(x) -> Vumpus(x)",
            "forall x. Vumpus(x) -> not Opaque(x)",
            "Wumpus(Fae)"
        ],
        "query": "Opaque(Fae)"
    });
    let config = SolverConfig::default();
    let a = analyze(&envelope, None, Some(ChainDirection::Both), &config, None)?;
    println!("verdict: {}", a.report.verdict);
    for (name, r) in [("forward", &a.forward), ("backward", &a.backward)] {
        if let Some(text) = r.as_ref().and_then(|r| r.text.as_deref()) {
            println!("\n{name}:\n{text}");
        }
    }
    for file in a.chain_files(&envelope) {
        println!("{:?} chain re-checked: {:?}", file.chain.direction, verify_chain_file(&file, &config)?);
    }
    Ok(())
}
