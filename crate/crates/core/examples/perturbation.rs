//! Remove, modify or add premises and watch the reference answer move.

use ssr::bench::{generate_synthetic, perturb, PerturbSpec, SynthKind};
use ssr::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let original = generate_synthetic(SynthKind::Ontology, 1, 3)?.remove(0);
    println!("original ({}):\n{}\n", original.gold_label, original.context);
    for strength in [-2, -1, 1, 2] {
        let p = perturb(&original, &PerturbSpec { strength, seed: 1 }, &SolverConfig::default())?;
        println!("strength {strength:+} ({}):\n{}\n", p.gold_label, p.context);
    }
    Ok(())
}
