use std::path::Path;

use kaw_core::audit::{audit, AuditOptions};
use kaw_core::runtime::RuntimeError;
use kaw_core::spec::compile_objective;
use kaw_core::{run_closed_loop, CellSet, CompositeSpec, Outcome, Scenario};

fn load(name: &str) -> Scenario {
    Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)).unwrap()
}

#[test]
fn knowing_one_sign_adds_exactly_its_street() {
    let s = load("urban.scn.json");
    let interp = s.interpretation().unwrap();
    let spec = CompositeSpec::new(s.objective().clone(), &interp).unwrap();
    let none = CellSet::empty(interp.domain_len());
    let base = compile_objective(spec.template(), &interp, spec.obligations(), &none).unwrap();
    assert_eq!(base, spec.game);
    assert_eq!(interp.signs().len(), 2);
    for sign in interp.signs() {
        // a single detected cell of the sign is enough
        let one = CellSet::from_cells(interp.domain_len(), sign.cells.iter().take(1));
        let game = compile_objective(spec.template(), &interp, spec.obligations(), &one).unwrap();
        assert_eq!(game.target, base.target);
        assert_eq!(game.avoid, base.avoid.union(&sign.street), "sign {}", sign.name);
    }
    let mut updated = spec.clone();
    let all = interp.signs().iter().fold(none, |acc, s| acc.union(&s.cells));
    updated.update(&interp, &all).unwrap();
    assert_eq!(updated.kb_part.to_string(), "(G !Street_s1 & G !Street_s2)");
    assert!(updated.formula().to_string().ends_with("(!Obstacle U Target))"));
}

#[test]
fn runs_are_reproducible_and_sound_across_seeds() {
    let s = load("crossing.scn.json");
    let abs = s.build_abstraction().unwrap();
    let mut finals = Vec::new();
    for seed in 0..6 {
        let a = run_closed_loop(&s, &abs, seed, s.file.max_steps).unwrap();
        let b = run_closed_loop(&s, &abs, seed, s.file.max_steps).unwrap();
        assert_eq!(a.trace.to_csv_string(), b.trace.to_csv_string());
        assert_eq!(a.trace.outcome, Outcome::ReachedTarget, "seed {seed}");
        let report = audit(&a.trace, &s, AuditOptions::default()).unwrap();
        assert!(report.passed(), "seed {seed}\n{report}");
        let last_resynth = a.trace.steps.iter().filter(|r| r.resynthesized).map(|r| r.step).next_back();
        assert_eq!(a.sensor.last_detection_step, last_resynth);
        finals.push(a.trace.steps.last().unwrap().state.clone());
    }
    finals.dedup();
    assert!(finals.len() > 1, "the disturbance should make seeds differ");
}

#[test]
fn step_limit_and_mismatch() {
    let s = load("crossing.scn.json");
    let abs = s.build_abstraction().unwrap();
    let short = run_closed_loop(&s, &abs, 1, 3).unwrap();
    assert_eq!(short.trace.outcome, Outcome::StepLimit);
    assert_eq!(short.trace.steps.len(), 4);
    assert!(short.trace.steps.last().unwrap().input.is_none());

    let mut file = s.file.clone();
    file.system.eta_u = vec![1.0];
    let other = Scenario::from_file(file).unwrap();
    assert!(matches!(run_closed_loop(&other, &abs, 1, 3), Err(RuntimeError::AbstractionMismatch)));
}

#[test]
fn schema_lists_every_scenario_field() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("scenario.schema.json")).unwrap()).unwrap();
    let s = load("urban.scn.json");
    let value = serde_json::to_value(&s.file).unwrap();
    let props = |v: &serde_json::Value| -> Vec<String> { v["properties"].as_object().unwrap().keys().cloned().collect() };
    for key in value.as_object().unwrap().keys() {
        assert!(props(&schema).contains(key), "schema misses `{key}`");
    }
    for section in ["system", "knowledge", "map"] {
        let sub = &schema["properties"][section];
        for key in value[section].as_object().unwrap().keys() {
            assert!(props(sub).contains(key), "schema misses `{section}.{key}`");
        }
    }
}
