//! Evaluate generated problems and test whether branch choice relates to accuracy.

use ssr::bench::{generate_synthetic, run_bench, summarize, BenchConfig, SynthKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut problems = generate_synthetic(SynthKind::Ontology, 40, 7)?;
    problems.extend(generate_synthetic(SynthKind::Ordering, 40, 8)?);
    let config = BenchConfig {
        perturb: -1,
        ..BenchConfig::default()
    };
    let records = run_bench(&problems, None, &config)?;
    print!("{}", summarize(&records));
    Ok(())
}
