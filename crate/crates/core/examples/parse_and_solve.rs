//! Parse an envelope, sanitize it, ground it and answer the query exactly.

use ssr::logic::{parse_formula, parse_problem};
use ssr::sanitize::{sanitize, GateDecision};
use ssr::soft::hard_solve;
use ssr::solver::{ground, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = parse_formula("forall x. (Wumpus(x) and not Cold(x)) -> Size(x) + 1 > 3")?;
    println!("parsed: {f}");

    let problem = parse_problem(
        r#"{
            "objects": ["Max"],
            "facts": ["forall x. Jompus(x) -> Wumpus(x)", "forall x. Wumpus(x) -> not Bright(x)", "Jompus(Max)"],
            "query": "Bright(Max)"
        }"#,
    )?;
    let GateDecision::Proceed(facts) = sanitize(&problem) else {
        return Err("envelope rejected".into());
    };
    let config = SolverConfig::default();
    let grounding = ground(&problem, &facts, &config)?;
    println!("{} ground atoms", grounding.table.len());
    println!("verdict: {}", hard_solve(&grounding, &config));
    Ok(())
}
