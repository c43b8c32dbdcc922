//! Record replay fixtures for a case pack.
//!
//! Each case in `cases.json` is a problem plus the translator reply to
//! serve for it and, optionally, a chain-of-thought reply. Premise
//! verification is always answered "No.". The pipeline runs once per case
//! against these scripted replies and every request it makes is stored.
//!
//! cargo run --example build_fixture_pack -- [pack-dir]

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::Value;
use ssr::bench::{run_pipeline, BenchConfig, BenchProblem};
use ssr::gateway::{ChatResponse, Gateway, GatewayConfig, Record, Scripted};

#[derive(Deserialize)]
struct Case {
    #[serde(flatten)]
    problem: BenchProblem,
    translation: Value,
    cot: Option<String>,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/worked_cases"));
    let cases: Vec<Case> = serde_json::from_str(&std::fs::read_to_string(dir.join("cases.json"))?)?;
    let fixtures = dir.join("fixtures");
    if fixtures.exists() {
        std::fs::remove_dir_all(&fixtures)?;
    }
    let config = BenchConfig::default();
    for case in &cases {
        let p = &case.problem;
        let probe = Gateway::mock(&fixtures);
        let mut script = Scripted::new()
            .respond(
                &probe.translate_request(&p.context, &p.question, p.schema),
                ChatResponse::text(serde_json::to_string_pretty(&case.translation)?),
            )
            .otherwise(ChatResponse::text("No."));
        if let Some(cot) = &case.cot {
            script = script.respond(&probe.cot_request(&p.context, &p.question, &p.option_list()), ChatResponse::text(cot.clone()));
        }
        let gw = Gateway::with_transport(GatewayConfig::replay(&fixtures), Box::new(Record::new(script, &fixtures)));
        let r = run_pipeline(p, Some(&gw), &config);
        println!(
            "{:<12} {:<12} label {:<5} gold {} fwd {:<5} bwd {:<5} {}",
            r.id,
            format!("{:?}", r.branch),
            r.label.as_deref().unwrap_or("-"),
            r.gold,
            r.forward.pass,
            r.backward.pass,
            r.verdict.map(|v| v.to_string()).or(r.reason).unwrap_or_default()
        );
    }
    println!("{} fixtures in {}", std::fs::read_dir(&fixtures)?.count(), fixtures.display());
    Ok(())
}
