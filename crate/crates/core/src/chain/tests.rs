use super::*;
use crate::logic::parse_problem;
use crate::sanitize::sanitized_facts;
use crate::soft::{soft_solve, Verdict};
use crate::solver::{ground, Grounding, Truth};

fn grounding(json: &str) -> Grounding {
    let p = parse_problem(json).unwrap();
    ground(&p, &sanitized_facts(&p), &SolverConfig::default()).unwrap()
}

fn verdict(g: &Grounding) -> Verdict {
    let w = vec![1.0; g.facts.len()];
    soft_solve(g, &w, &SolverConfig::default(), None).verdict
}

const FAE: &str = r#"{"objects":["Fae"],"facts":["forall x. Jompus(x) -> Large(x)","forall x. Jompus(x) -> Zumpus(x)","forall x. Zumpus(x) -> Sweet(x)","forall x. Zumpus(x) -> Numpus(x)","forall x. Numpus(x) -> Hot(x)","forall x. Tumpus(x) -> Opaque(x)","forall x. Numpus(x) -> Yumpus(x)","forall x. (Modern(x) and Building(x)) -> (Made_of_concrete(x) or Made_of_steel(x))","forall x. Yumpus(x) -> Brown(x)","forall x. Yumpus(x) -> Wumpus(x)","forall x. Wumpus(x) -> not Opaque(x)","forall x. Wumpus(x) -> Impus(x)","Jompus(Fae)"],"query":"Opaque(Fae)"}"#;

const GARY: &str = r#"{"objects":["Bob","Charlie","Dave","Gary"],"facts":["Rough(Bob)","Nice(Charlie)","Rough(Charlie)","White(Charlie)","not White(Dave)","Cold(Gary)","Quiet(Gary)","forall x. (Rough(x) and White(x)) -> Quiet(x)","forall x. (Round(x) and Quiet(x)) -> Rough(x)","forall x. Young(x) -> Round(x)","forall x. Nice(x) -> White(x)","forall x. (Rough(x) and Nice(x)) -> Cold(x)","forall x. (Round(x) and Rough(x)) -> Nice(x)","forall x. Rough(x) -> Young(x)"],"query":"not White(Gary)"}"#;

const TOM: &str = r#"{"objects":["Tom"],"facts":["forall x. Wild_turkey(x) -> (Eastern_wild_turkey(x) or Osceola_wild_turkey(x) or Goulds_wild_turkey(x) or Merriams_wild_turkey(x) or Rio_Grande_wild_turkey(x) or Ocellated_wild_turkey(x))","forall x. (Modern_buildings(x) -> (Concrete(x) or Steel(x)))","not Eastern_wild_turkey(Tom)","not Osceola_wild_turkey(Tom)","not Goulds_wild_turkey(Tom) and not Merriams_wild_turkey(Tom) and not Rio_Grande_wild_turkey(Tom)","Wild_turkey(Tom)"],"query":"Wild_turkey(Tom) and Ocellated_wild_turkey(Tom)"}"#;

const RAVEN: &str = r#"{"objects":["cardinal","robin","blue_jay","quail","raven"],"facts":["Pos(robin) > Pos(raven)","Pos(cardinal) = 1","Pos(raven) > Pos(blue_jay)","Pos(blue_jay) = 3"],"query":["Pos(cardinal) = 4","Pos(robin) = 4","Pos(blue_jay) = 4","Pos(quail) = 4","Pos(raven) = 4"]}"#;

fn derived(c: &Chain) -> Vec<String> {
    c.steps.iter().map(|s| s.derived.to_string()).collect()
}

#[test]
fn fae_forward_and_backward() {
    let g = grounding(FAE);
    let ctx = ChainContext::new(&g, None, &SolverConfig::default()).unwrap();
    let v = verdict(&g);
    assert_eq!(v, Verdict::Boolean(Truth::False));
    let (f, b) = generate_chains(&ctx).unwrap();
    let f = f.chain().unwrap();
    assert_eq!(
        derived(f),
        ["Jompus(Fae)", "Zumpus(Fae)", "Numpus(Fae)", "Yumpus(Fae)", "Wumpus(Fae)", "not Opaque(Fae)"]
    );
    verify_chain(f, &ctx, &v).unwrap();
    let b = b.chain().unwrap();
    assert_eq!(b.steps.len(), 6);
    assert_eq!(b.direction, Direction::Backward);
    verify_chain(b, &ctx, &v).unwrap();
    let text = render_template(f);
    assert!(text.contains("Since Fae is a wumpus, Fae is not opaque."), "{text}");
    assert_eq!(f.pattern(), "given:1,rule:5");
}

#[test]
fn gary_terminates() {
    let g = grounding(GARY);
    let ctx = ChainContext::new(&g, None, &SolverConfig::default()).unwrap();
    assert_eq!(verdict(&g), Verdict::Boolean(Truth::Unknown));
    let (f, b) = generate_chains(&ctx).unwrap();
    assert_eq!(f, ChainOutcome::NoChain(NoChainReason::Fixpoint));
    assert_eq!(b, ChainOutcome::NoChain(NoChainReason::Cycle));
}

#[test]
fn turkey_by_elimination() {
    let g = grounding(TOM);
    let ctx = ChainContext::new(&g, None, &SolverConfig::default()).unwrap();
    let v = verdict(&g);
    assert_eq!(v, Verdict::Boolean(Truth::True));
    let (f, b) = generate_chains(&ctx).unwrap();
    let f = f.chain().unwrap();
    verify_chain(f, &ctx, &v).unwrap();
    assert!(derived(f).contains(&"Ocellated_wild_turkey(Tom)".to_string()));
    assert_eq!(b, ChainOutcome::NoChain(NoChainReason::DeadEnd));
}

#[test]
fn raven_by_propagation() {
    let g = grounding(RAVEN);
    let ctx = ChainContext::new(&g, None, &SolverConfig::default()).unwrap();
    let v = verdict(&g);
    assert_eq!(v, Verdict::Option("E".into()));
    let (f, b) = generate_chains(&ctx).unwrap();
    let f = f.chain().unwrap();
    verify_chain(f, &ctx, &v).unwrap();
    assert_eq!(f.conclusion.label, "E");
    let text = render_template(f);
    assert!(text.contains("the raven is in position 4"), "{text}");
    let b = b.chain().unwrap();
    verify_chain(b, &ctx, &v).unwrap();
    assert_eq!(b.steps.last().unwrap().derived.to_string(), "Pos(raven) = 4");
}

#[test]
fn wrong_verdict_is_rejected() {
    let g = grounding(RAVEN);
    let ctx = ChainContext::new(&g, None, &SolverConfig::default()).unwrap();
    let (f, _) = generate_chains(&ctx).unwrap();
    let err = verify_chain(f.chain().unwrap(), &ctx, &Verdict::Option("B".into())).unwrap_err();
    assert_eq!(err.step, None);
}

#[test]
fn absent_rule_is_rejected() {
    let g = grounding(FAE);
    let ctx = ChainContext::new(&g, None, &SolverConfig::default()).unwrap();
    let (f, _) = generate_chains(&ctx).unwrap();
    let mut c = f.chain().unwrap().clone();
    if let Via::Rule(r) = &mut c.steps[2].via {
        r.premises[0] = Property::Is(crate::logic::PredicateAtom::unary("Tumpus", "Fae"), Value::Bool(true));
    }
    let err = verify_chain(&c, &ctx, &Verdict::Boolean(Truth::False)).unwrap_err();
    assert_eq!(err.step, Some(2));
}

#[test]
fn given_query_is_one_step() {
    let g = grounding(r#"{"objects":["a"],"facts":["Red(a)"],"query":"Red(a)"}"#);
    let ctx = ChainContext::new(&g, None, &SolverConfig::default()).unwrap();
    let (f, b) = generate_chains(&ctx).unwrap();
    assert_eq!(f.chain().unwrap().steps.len(), 1);
    assert_eq!(b.chain().unwrap().steps.len(), 1);
}

#[test]
fn implication_query_adds_its_premise() {
    let g = grounding(
        r#"{"objects":["Anne"],"facts":["forall x. Green(x) -> Round(x)"],"query":"Green(Anne) -> Round(Anne)"}"#,
    );
    let ctx = ChainContext::new(&g, None, &SolverConfig::default()).unwrap();
    assert_eq!(ctx.augmented.len(), 1);
    let (f, _) = generate_chains(&ctx).unwrap();
    let f = f.chain().unwrap();
    assert_eq!(f.conclusion.label, "True");
    verify_chain(f, &ctx, &Verdict::Boolean(Truth::True)).unwrap();
}

#[test]
fn serialization_is_stable() {
    let g = grounding(FAE);
    let ctx = ChainContext::new(&g, None, &SolverConfig::default()).unwrap();
    let (f, _) = generate_chains(&ctx).unwrap();
    let a = serde_json::to_string(&f).unwrap();
    let back: ChainOutcome = serde_json::from_str(&a).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), a);
}
