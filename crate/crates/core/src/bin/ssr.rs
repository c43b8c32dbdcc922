use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use ssr::bench::{
    analyze, generate_synthetic, load_dataset, perturb, problem_seed, run_bench, run_pipeline, sample, summarize, verify_chain_file, write_dataset, write_results,
    BenchConfig, BenchProblem, ChainDirection, ChainFile, DatasetTag, EvalRecord, PerturbSpec, SynthKind,
};
use ssr::gateway::{Gateway, Mode};

#[derive(Parser)]
#[command(name = "ssr", version, about = "Soft-logic symbolic reasoning over natural-language problems")]
struct Cli {
    /// TOML file with solver budgets, gateway settings and label maps.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GatewayArgs {
    /// Fixture directory for replay and record modes.
    #[arg(long, env = "SSR_FIXTURES")]
    fixtures: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an envelope, or run the pipeline on a problem record.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        gateway: GatewayArgs,
        /// Translate even when a reference envelope is present.
        #[arg(long)]
        translate: bool,
    },
    /// Evaluate a dataset and write results.
    Bench {
        dataset: PathBuf,
        /// Dataset tag; guessed from the file name when omitted.
        #[arg(long)]
        tag: Option<DatasetTag>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        perturb: Option<i32>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        timings: bool,
        #[arg(long, default_value = "results.jsonl")]
        out: PathBuf,
        #[command(flatten)]
        gateway: GatewayArgs,
    },
    /// Perturb every problem of a dataset.
    Perturb {
        dataset: PathBuf,
        #[arg(long)]
        tag: Option<DatasetTag>,
        #[arg(long, allow_hyphen_values = true, value_parser = clap::value_parser!(i32).range(-2..=2))]
        strength: i32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic problems with reference envelopes.
    Generate {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and check reasoning chains for an envelope.
    Chains {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ChainDirection::Both)]
        direction: ChainDirection,
        /// Directory to store chain files in.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a stored chain file.
    VerifyChain { file: PathBuf },
    /// Summarize a results file.
    Report {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn read_json(path: &Path) -> Res<Value> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn load_config(path: Option<&Path>) -> Res<BenchConfig> {
    match path {
        Some(p) => Ok(BenchConfig::from_toml(&fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?)?),
        None => Ok(BenchConfig::default()),
    }
}

/// `None` when replaying without fixtures.
fn gateway(config: &mut BenchConfig, args: &GatewayArgs) -> Res<Option<Gateway>> {
    let mut g = config.gateway.clone().with_env();
    if let Some(d) = &args.fixtures {
        g.fixture_dir = Some(d.clone());
    }
    if let Some(m) = args.mode {
        g.mode = m;
    }
    config.gateway = g.clone();
    if g.mode == Mode::Replay && g.fixture_dir.is_none() {
        return Ok(None);
    }
    Ok(Some(Gateway::new(g)?))
}

fn guess_tag(path: &Path) -> DatasetTag {
    let name = path.file_name().map(|n| n.to_string_lossy().to_lowercase()).unwrap_or_default();
    ["prontoqa", "proofwriter", "folio", "logicaldeduction"]
        .into_iter()
        .find(|t| name.contains(t))
        .and_then(|t| t.parse().ok())
        .unwrap_or(DatasetTag::Synthetic)
}

fn say(text: impl std::fmt::Display) -> Res<()> {
    use std::io::Write;
    Ok(writeln!(std::io::stdout().lock(), "{text}")?)
}

fn print_json(v: &impl serde::Serialize) -> Res<()> {
    say(serde_json::to_string_pretty(v)?)
}

fn run(cli: Cli) -> Res<bool> {
    let mut config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Solve { file, gateway: g, translate } => {
            let v = read_json(&file)?;
            if v.get("context").is_some() {
                let mut problem: BenchProblem = serde_json::from_value(v)?;
                if translate {
                    problem.gold_envelope = None;
                }
                let gw = gateway(&mut config, &g)?;
                let rec = run_pipeline(&problem, gw.as_ref(), &config);
                print_json(&rec)?;
                return Ok(rec.correct);
            }
            let weights: Option<Vec<f64>> = v.get("weights").map(|w| serde_json::from_value(w.clone())).transpose()?;
            let a = analyze(&v, weights.as_deref(), None, &config.solver, None)?;
            print_json(&a)?;
            Ok(!a.report.verdict.is_fallback())
        }
        Command::Bench {
            dataset,
            tag,
            seed,
            sample: n,
            perturb,
            workers,
            timings,
            out,
            gateway: g,
        } => {
            config.seed = seed.unwrap_or(config.seed);
            config.sample = n.unwrap_or(config.sample);
            config.perturb = perturb.unwrap_or(config.perturb);
            config.workers = workers.unwrap_or(config.workers);
            config.timings |= timings;
            let gw = gateway(&mut config, &g)?;
            let problems = sample(load_dataset(&dataset, tag.unwrap_or_else(|| guess_tag(&dataset)))?, config.sample, config.seed);
            let records = run_bench(&problems, gw.as_ref(), &config)?;
            let summary = summarize(&records);
            let summary_path = write_results(&out, &records, &summary)?;
            say(summary.to_string().trim_end())?;
            eprintln!("wrote {} and {}", out.display(), summary_path.display());
            Ok(true)
        }
        Command::Perturb { dataset, tag, strength, seed, out } => {
            let problems = load_dataset(&dataset, tag.unwrap_or_else(|| guess_tag(&dataset)))?;
            let mut result = Vec::with_capacity(problems.len());
            for p in &problems {
                let spec = PerturbSpec {
                    strength,
                    seed: problem_seed(seed, &p.id),
                };
                result.push(perturb(p, &spec, &config.solver)?);
            }
            emit_dataset(out.as_deref(), &result)?;
            Ok(true)
        }
        Command::Generate { kind, count, seed, out } => {
            emit_dataset(out.as_deref(), &generate_synthetic(kind, count, seed)?)?;
            Ok(true)
        }
        Command::Chains { file, direction, out } => {
            let v = read_json(&file)?;
            let envelope = v.get("gold_envelope").cloned().unwrap_or(v);
            let a = analyze(&envelope, None, Some(direction), &config.solver, None)?;
            say(format_args!("verdict: {}", a.report.verdict))?;
            let mut ok = true;
            for (name, r) in [("forward", &a.forward), ("backward", &a.backward)] {
                let Some(r) = r else { continue };
                match (&r.text, &r.check) {
                    (Some(text), Some(check)) => {
                        ok &= check.is_ok();
                        let status = check.as_ref().map_or_else(|e| format!("invalid: {e}"), |_| "verified".into());
                        say(format_args!("\n{name} chain ({status}):\n{text}"))?;
                    }
                    _ => say(format_args!("\n{name}: no chain ({:?})", r.outcome))?,
                }
            }
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                for f in a.chain_files(&envelope) {
                    let path = dir.join(format!("{:?}.json", f.chain.direction).to_lowercase());
                    fs::write(&path, serde_json::to_string_pretty(&f)? + "\n")?;
                    eprintln!("wrote {}", path.display());
                }
            }
            Ok(ok)
        }
        Command::VerifyChain { file } => {
            let f: ChainFile = serde_json::from_value(read_json(&file)?)?;
            match verify_chain_file(&f, &config.solver)? {
                Ok(()) => {
                    say("valid")?;
                    Ok(true)
                }
                Err(v) => {
                    say(format_args!("invalid: {v}"))?;
                    Ok(false)
                }
            }
        }
        Command::Report { file, json } => {
            let text = fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            let records = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<Result<Vec<EvalRecord>, _>>()?;
            let summary = summarize(&records);
            if json {
                print_json(&summary)?;
            } else {
                say(summary.to_string().trim_end())?;
            }
            Ok(true)
        }
    }
}

fn emit_dataset(out: Option<&Path>, problems: &[BenchProblem]) -> Res<()> {
    match out {
        Some(p) => Ok(write_dataset(p, problems)?),
        None => {
            for p in problems {
                say(serde_json::to_string(p)?)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_env("SSR_LOG"))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
