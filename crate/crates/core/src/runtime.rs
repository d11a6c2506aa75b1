//! Closed-loop simulation with sensing and re-synthesis.
//!
//! Every sampling step quantizes the state, stops on a target or avoid cell,
//! lets the sensor detect signs, re-solves the game when new signs were seen,
//! and applies the controller's input for one period under a disturbance drawn
//! uniformly from `W` with a seeded generator.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::abstraction::Abstraction;
use crate::cellset::CellSet;
use crate::grid::{CellId, GridError};
use crate::knowledge::{Interpretation, KnowledgeError, Obligation};
use crate::scenario::Scenario;
use crate::spec::{CompositeSpec, SpecError};
use crate::synthesis::{Controller, SynthesisError, Solver};
use crate::trace::{Outcome, StepRecord, Trace};

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("initial state {0:?} lies outside the state domain")]
    InitialStateOutsideDomain(Vec<f64>),
    #[error("initial cell {0} is not winning for the initial objective")]
    InitialStateNotWinning(CellId),
    #[error("state {state:?} left the state domain at step {step}")]
    LeftDomain { step: usize, state: Vec<f64> },
    #[error("abstraction was built for a different system or grid")]
    AbstractionMismatch,
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

/// Signs seen so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorState {
    pub known_signs: CellSet,
    pub last_detection_step: Option<usize>,
}

impl SensorState {
    pub fn new(domain_len: usize) -> Self {
        Self { known_signs: CellSet::empty(domain_len), last_detection_step: None }
    }
}

/// Detects unknown cells of each obligation's watched concept related to `x`
/// through the obligation's role, adds them to the known set and returns them
/// in ascending order.
pub fn sensor_step(
    interp: &Interpretation,
    obligations: &[Obligation],
    x: CellId,
    sensor: &mut SensorState,
    step: usize,
) -> Result<Vec<CellId>, KnowledgeError> {
    let mut newly = Vec::new();
    for ob in obligations {
        let watched = interp.extent(&ob.watched)?;
        for s in watched.iter() {
            if !sensor.known_signs.contains(s) && interp.role_holds(&ob.role, x, s)? {
                newly.push(s);
            }
        }
    }
    newly.sort_unstable();
    newly.dedup();
    for s in &newly {
        sensor.known_signs.insert(*s);
    }
    if !newly.is_empty() {
        sensor.last_detection_step = Some(step);
    }
    Ok(newly)
}

#[derive(Debug, Clone)]
pub struct SynthesisEvent {
    pub step: usize,
    pub winning: usize,
    pub avoid: usize,
    /// Size of the region from which all activated streets can be avoided forever.
    pub respected: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: Trace,
    /// Controller in force when the run ended.
    pub controller: Controller,
    /// The initial solve (step 0, nothing sensed) followed by every re-synthesis.
    pub syntheses: Vec<SynthesisEvent>,
    pub sensor: SensorState,
}

struct Loop<'a> {
    interp: Interpretation,
    spec: CompositeSpec,
    solver: Solver<'a>,
}

impl Loop<'_> {
    fn solve(&mut self, sensor: &SensorState, step: usize) -> Result<(Controller, SynthesisEvent), RuntimeError> {
        let start = Instant::now();
        let controller = self.solver.solve_reach_avoid(&self.spec.game)?;
        let mut forbidden = CellSet::empty(self.interp.domain_len());
        for i in crate::spec::active_signs(&self.interp, self.spec.obligations(), &sensor.known_signs) {
            forbidden.union_with(&self.interp.signs()[i].street);
        }
        let respected = self.solver.respected_region(&forbidden)?;
        let names: Vec<String> = self.spec.obligations().iter().map(|o| o.name.clone()).collect();
        for name in names {
            self.interp.set_temporal_extent(&name, respected.clone())?;
        }
        let event = SynthesisEvent {
            step,
            winning: controller.winning().len(),
            avoid: self.spec.game.avoid.len(),
            respected: respected.len(),
            elapsed: start.elapsed(),
        };
        log::info!(
            "step {step}: synthesized in {:.3} s, winning {} cells, avoid {} cells",
            event.elapsed.as_secs_f64(),
            event.winning,
            event.avoid
        );
        Ok((controller, event))
    }
}

/// Runs the closed loop from the scenario's initial state.
pub fn run_closed_loop(
    scenario: &Scenario,
    abs: &Abstraction,
    seed: u64,
    max_steps: usize,
) -> Result<RunResult, RuntimeError> {
    if !scenario.matches_abstraction(abs) {
        return Err(RuntimeError::AbstractionMismatch);
    }
    let sys = scenario.system();
    let grid = scenario.grid_x();
    let tau = sys.tau();
    let interp = scenario.interpretation()?;
    let spec = CompositeSpec::new(scenario.objective().clone(), &interp)?;
    let mut lp = Loop { interp, spec, solver: Solver::new(abs) };
    let mut sensor = SensorState::new(grid.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = sys.disturbance().clone();

    let mut x = scenario.file.initial_state.clone();
    grid.wrap(&mut x);
    let first = grid.quantize(&x).map_err(|_| RuntimeError::InitialStateOutsideDomain(x.clone()))?;
    let (mut controller, event) = lp.solve(&sensor, 0)?;
    let mut syntheses = vec![event];
    if !controller.is_winning(first) {
        return Err(RuntimeError::InitialStateNotWinning(first));
    }

    let mut steps = Vec::new();
    let mut outcome = Outcome::StepLimit;
    for i in 0..=max_steps {
        let cell = grid.quantize(&x).map_err(|e: GridError| {
            log::debug!("{e}");
            RuntimeError::LeftDomain { step: i, state: x.clone() }
        })?;
        let mut record = StepRecord {
            step: i,
            time: i as f64 * tau,
            state: x.clone(),
            cell,
            input: None,
            detected: Vec::new(),
            resynthesized: false,
        };
        if lp.spec.game.target.contains(cell) {
            outcome = Outcome::ReachedTarget;
            steps.push(record);
            break;
        }
        if lp.spec.game.avoid.contains(cell) {
            outcome = Outcome::EnteredAvoid;
            steps.push(record);
            break;
        }
        let newly = sensor_step(&lp.interp, lp.spec.obligations(), cell, &mut sensor, i)?;
        if !newly.is_empty() {
            log::info!("step {i}: detected {} new sign cells", newly.len());
            lp.spec.update(&lp.interp, &sensor.known_signs)?;
            let (k, event) = lp.solve(&sensor, i)?;
            controller = k;
            syntheses.push(event);
            record.resynthesized = true;
            record.detected = newly;
        }
        if i == max_steps {
            steps.push(record);
            break;
        }
        let Some(u_cell) = controller.policy(cell) else {
            outcome = Outcome::SynthesisFailed;
            log::warn!("step {i}: cell {cell} is not winning after re-synthesis");
            steps.push(record);
            break;
        };
        let u = abs.grid_u().center(u_cell).expect("policy input is a valid cell");
        let dist: Vec<f64> =
            w.lower.iter().zip(&w.upper).map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect();
        record.input = Some((u_cell, u.clone()));
        steps.push(record);
        x = sys.flow_disturbed(&x, &u, &dist, tau);
        grid.wrap(&mut x);
    }
    Ok(RunResult { trace: Trace { seed, tau, steps, outcome }, controller, syntheses, sensor })
}
