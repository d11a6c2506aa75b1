//! Trace auditing against a scenario.
//!
//! The auditor only sees the trace and the scenario. It recomputes cells,
//! detections and the activated obligations itself and checks the recorded
//! run against them.

use std::fmt;

use thiserror::Error;

use crate::cellset::CellSet;
use crate::dynamics::ReachSet;
use crate::grid::{Grid, HyperRect};
use crate::knowledge::{Interpretation, KnowledgeError};
use crate::runtime::{sensor_step, SensorState};
use crate::scenario::Scenario;
use crate::spec::{check_trace_by, CompositeSpec, SpecError};
use crate::trace::{Outcome, Trace};

/// Slack for values that went through the 9-digit CSV form.
const TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace has {found} state coordinates, scenario has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AuditOptions {
    /// Treat the reroute check as fatal.
    pub require_reroute: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Whether a failure makes the whole audit fail.
    pub fatal: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<CheckResult>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.fatal)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match (c.passed, c.fatal) {
                (true, _) => "ok",
                (false, true) => "FAIL",
                (false, false) => "warn",
            };
            writeln!(f, "{status:>4}  {:<12} {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// A sign whose obligation became active during the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    pub sign: String,
    pub step: usize,
    pub street: HyperRect,
}

struct Collector {
    checks: Vec<CheckResult>,
}

impl Collector {
    fn push(&mut self, name: &'static str, fatal: bool, failures: Vec<String>, ok: String) {
        let passed = failures.is_empty();
        let detail = if passed {
            ok
        } else {
            let mut d = failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ");
            if failures.len() > 3 {
                d.push_str(&format!("; and {} more", failures.len() - 3));
            }
            d
        };
        self.checks.push(CheckResult { name, passed, fatal, detail });
    }
}

/// Audits `trace` against `scenario`.
pub fn audit(trace: &Trace, scenario: &Scenario, opts: AuditOptions) -> Result<AuditReport, AuditError> {
    let grid = scenario.grid_x();
    let sys = scenario.system();
    let n = grid.dim();
    if trace.steps.is_empty() {
        return Err(AuditError::EmptyTrace);
    }
    if trace.state_dim() != n {
        return Err(AuditError::DimensionMismatch { expected: n, found: trace.state_dim() });
    }
    let interp = scenario.interpretation()?;
    let mut spec = CompositeSpec::new(scenario.objective().clone(), &interp)?;
    let mut out = Collector { checks: Vec::new() };
    let last = trace.steps.len() - 1;

    // step numbering and time stamps
    let tau = sys.tau();
    let mut bad = Vec::new();
    if (trace.tau - tau).abs() > TOL * tau {
        bad.push(format!("trace tau {} differs from scenario tau {tau}", trace.tau));
    }
    for (i, s) in trace.steps.iter().enumerate() {
        if s.step != i {
            bad.push(format!("row {i} has step {}", s.step));
        }
        let t = i as f64 * tau;
        if (s.time - t).abs() > TOL * t.max(1.0) {
            bad.push(format!("step {i}: time {} instead of {t}", s.time));
        }
    }
    out.push("timing", true, bad, format!("{} steps at tau = {tau}", trace.steps.len()));

    // recorded cells match the states
    let mut bad = Vec::new();
    for s in &trace.steps {
        match grid.center(s.cell) {
            Ok(center) if in_cell(grid, &center, &s.state) => {}
            Ok(_) => bad.push(format!("step {}: state not in cell {}", s.step, s.cell)),
            Err(_) => bad.push(format!("step {}: cell {} outside the grid", s.step, s.cell)),
        }
    }
    out.push("cells", true, bad, "every state lies in its recorded cell".into());

    // applied inputs are grid points
    let mut bad = Vec::new();
    for s in &trace.steps[..last] {
        match &s.input {
            None => bad.push(format!("step {}: no input applied", s.step)),
            Some((u, value)) => match scenario.grid_u().center(*u) {
                Ok(c) if c.iter().zip(value).all(|(a, b)| (a - b).abs() <= TOL * a.abs().max(1.0)) => {}
                _ => bad.push(format!("step {}: input {} does not match its value", s.step, u)),
            },
        }
    }
    out.push("inputs", true, bad, "inputs are grid points".into());

    // each step lands in the over-approximated reach set of its cell
    let mut bad = Vec::new();
    let radius = grid.cell_radius();
    for pair in trace.steps.windows(2) {
        let (s, next) = (&pair[0], &pair[1]);
        let Some((_, u)) = &s.input else { continue };
        let Ok(center) = grid.center(s.cell) else { continue };
        let reach = sys.reach_over_approx(&ReachSet::new(center, radius.clone()), u);
        if !reach.contains(&next.state, sys.field().angle_dims(), TOL) {
            bad.push(format!("step {}: successor state outside the reach set", next.step));
        }
    }
    out.push("dynamics", true, bad, "successors inside the reach over-approximation".into());

    // sensing, re-synthesis flags and the avoid set in force at each step
    let target = spec.game.target.clone();
    let mut sensor = SensorState::new(grid.len());
    let mut detection_bad = Vec::new();
    let mut avoid_hits = Vec::new();
    let mut known_per_step = Vec::with_capacity(trace.steps.len());
    for s in &trace.steps {
        let mut expected = Vec::new();
        let stops = target.contains(s.cell) || spec.game.avoid.contains(s.cell);
        if spec.game.avoid.contains(s.cell) {
            avoid_hits.push(format!("step {}: cell {} is in the avoid set", s.step, s.cell));
        }
        if !stops {
            expected = sensor_step(&interp, spec.obligations(), s.cell, &mut sensor, s.step)?;
            if !expected.is_empty() {
                spec.update(&interp, &sensor.known_signs)?;
            }
        }
        if s.detected != expected {
            detection_bad.push(format!(
                "step {}: recorded {} detections, expected {}",
                s.step,
                s.detected.len(),
                expected.len()
            ));
        }
        if s.resynthesized != !expected.is_empty() {
            detection_bad.push(format!("step {}: resynth flag {} disagrees with sensing", s.step, s.resynthesized));
        }
        known_per_step.push(sensor.known_signs.clone());
    }
    let detections: usize = trace.steps.iter().filter(|s| s.resynthesized).count();
    out.push("sensing", true, detection_bad, format!("{detections} detection events reproduced"));
    out.push("avoid", true, avoid_hits, "no avoid cell visited".into());

    // each activated obligation holds on the suffix from its activation
    let activations = activations(&interp, scenario, spec.obligations(), &known_per_step);
    let mut bad = Vec::new();
    for a in &activations {
        let sign = interp.signs().iter().find(|s| s.name == a.sign).expect("activated sign exists");
        let suffix = &trace.steps[a.step..];
        let obligation = crate::spec::LtlFormula::always(crate::spec::LtlFormula::not(
            crate::spec::LtlFormula::prop(&sign.street_concept),
        ));
        if !check_trace_by(&obligation, suffix.len(), |_, i| sign.street.contains(suffix[i].cell)) {
            let first = suffix.iter().find(|s| sign.street.contains(s.cell)).map_or(0, |s| s.step);
            bad.push(format!("street of {} entered at step {first} after detection at step {}", a.sign, a.step));
        }
    }
    let names: Vec<&str> = activations.iter().map(|a| a.sign.as_str()).collect();
    out.push("obligations", true, bad, format!("activated: [{}]", names.join(", ")));

    // the objective over the whole trace
    let objective = scenario.objective();
    let extents = objective
        .props()
        .into_iter()
        .map(|p| interp.extent(&p).map(|e| (p, e)))
        .collect::<Result<std::collections::BTreeMap<String, CellSet>, _>>()?;
    let holds = |p: &str, i: usize| extents[p].contains(trace.steps[i].cell);
    let satisfied = check_trace_by(objective, trace.steps.len(), holds);
    let mut bad = Vec::new();
    if !satisfied {
        bad.push(format!("`{objective}` does not hold on the trace"));
    }
    if trace.outcome != Outcome::ReachedTarget {
        bad.push(format!("outcome is {}", trace.outcome));
    }
    out.push("objective", true, bad, format!("`{objective}` holds, outcome {}", trace.outcome));

    // heading at detection points at the street, and the path moves away afterwards
    let mut bad = Vec::new();
    for a in &activations {
        let s = &trace.steps[a.step];
        let c = a.street.center();
        let toward = (c[0] - s.state[0]) * s.state[2].cos() + (c[1] - s.state[1]) * s.state[2].sin();
        if toward <= 0.0 {
            bad.push(format!("{}: heading at step {} points away from the street", a.sign, a.step));
        }
        let d0 = planar_distance(&a.street, &s.state);
        let d1 = planar_distance(&a.street, &trace.steps[last].state);
        if d1 <= d0 {
            bad.push(format!("{}: final distance {d1:.3} not above distance {d0:.3} at detection", a.sign));
        }
    }
    if activations.is_empty() {
        bad.push("no obligation was activated".into());
    }
    out.push("reroute", opts.require_reroute, bad, format!("{} reroutes", activations.len()));

    Ok(AuditReport { checks: out.checks })
}

/// First step at which each sign's obligation is active.
fn activations(
    interp: &Interpretation,
    scenario: &Scenario,
    obligations: &[crate::knowledge::Obligation],
    known_per_step: &[CellSet],
) -> Vec<Activation> {
    let mut seen = vec![false; interp.signs().len()];
    let mut result = Vec::new();
    for (step, known) in known_per_step.iter().enumerate() {
        for i in crate::spec::active_signs(interp, obligations, known) {
            if !seen[i] {
                seen[i] = true;
                let name = interp.signs()[i].name.clone();
                let region = scenario.map().signs.iter().find(|s| s.name == name).expect("sign in map");
                result.push(Activation { sign: name, step, street: hull(&region.street) });
            }
        }
    }
    result
}

fn hull(boxes: &[HyperRect]) -> HyperRect {
    let mut h = boxes[0].clone();
    for b in &boxes[1..] {
        for i in 0..h.dim() {
            h.lower[i] = h.lower[i].min(b.lower[i]);
            h.upper[i] = h.upper[i].max(b.upper[i]);
        }
    }
    h
}

fn in_cell(grid: &Grid, center: &[f64], x: &[f64]) -> bool {
    (0..grid.dim()).all(|i| {
        let mut d = (x[i] - center[i]).abs();
        if grid.periodic()[i] {
            let period = grid.bounds().upper[i] - grid.bounds().lower[i];
            d = d.rem_euclid(period);
            d = d.min(period - d);
        }
        d <= grid.spacing()[i] / 2.0 + TOL
    })
}

fn planar_distance(rect: &HyperRect, x: &[f64]) -> f64 {
    let gap = |i: usize| (rect.lower[i] - x[i]).max(x[i] - rect.upper[i]).max(0.0);
    gap(0).hypot(gap(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::run_closed_loop;

    const CROSSING: &str = include_str!("../../../scenarios/crossing.scn.json");

    fn run() -> (Scenario, Trace) {
        let s = Scenario::from_json(CROSSING).unwrap();
        let abs = s.build_abstraction().unwrap();
        let run = run_closed_loop(&s, &abs, s.file.seed, s.file.max_steps).unwrap();
        // round trip through the CSV form the auditor normally reads
        let trace = Trace::read_csv(run.trace.to_csv_string().as_bytes()).unwrap();
        (s, trace)
    }

    #[test]
    fn clean_run_passes_every_check() {
        let (s, trace) = run();
        assert_eq!(trace.outcome, Outcome::ReachedTarget);
        let report = audit(&trace, &s, AuditOptions { require_reroute: true }).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.check("obligations").unwrap().detail.contains('a'));
    }

    #[test]
    fn corrupted_traces_fail() {
        let (s, trace) = run();
        let opts = AuditOptions::default();

        let mut t = trace.clone();
        let k = t.steps.len() / 2;
        t.steps[k].state[0] = 1.8;
        t.steps[k].state[1] = 2.1;
        t.steps[k].cell = s.grid_x().quantize(&t.steps[k].state).unwrap();
        let report = audit(&t, &s, opts).unwrap();
        assert!(!report.passed());
        assert!(!report.check("avoid").unwrap().passed);
        assert!(!report.check("objective").unwrap().passed);

        let mut t = trace.clone();
        t.steps[1].cell = crate::grid::CellId(t.steps[1].cell.0 + 1);
        assert!(!audit(&t, &s, opts).unwrap().check("cells").unwrap().passed);

        let mut t = trace.clone();
        t.steps[2].time += 0.05;
        assert!(!audit(&t, &s, opts).unwrap().check("timing").unwrap().passed);

        let mut t = trace.clone();
        for step in &mut t.steps {
            step.detected.clear();
            step.resynthesized = false;
        }
        assert!(!audit(&t, &s, opts).unwrap().check("sensing").unwrap().passed);

        let mut t = trace;
        t.outcome = Outcome::StepLimit;
        assert!(!audit(&t, &s, opts).unwrap().passed());
    }
}
