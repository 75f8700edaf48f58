//! Scenario sequencing and model comparison.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::continuous::{AlgebraicSolution, ContinuousModel, ContinuousState, HtcSnapshot};
use crate::discrete::{DiscreteModel, DiscreteState};
use crate::engine::{Event, EventKind, SolverOptions};
use crate::error::{Error, Result};
use crate::system::{OperatingInputs, Process, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Continuous,
    Discrete,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Continuous => "continuous",
            ModelKind::Discrete => "discrete",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(ModelKind::Continuous),
            "discrete" => Ok(ModelKind::Discrete),
            other => Err(Error::InvalidSpec(format!(
                "unknown model `{other}`; expected `continuous` or `discrete`"
            ))),
        }
    }
}

/// Per-step replacements for individual operating inputs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mdot_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mdot_sec: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_sec_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ref_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_ref_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_env: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioStep {
    pub mode: Process,
    /// Step length, s.
    pub duration: f64,
    #[serde(default)]
    pub inputs: InputOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// All PCM liquid at the melting point.
    Discharged,
    /// All PCM solid at the melting point.
    Charged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialState {
    pub condition: InitialCondition,
    /// Initial intermediate-fluid temperature; the melting point if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_int: Option<f64>,
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            condition: InitialCondition::Discharged,
            t_int: None,
        }
    }
}

/// Inputs a step starts from before its overrides apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NominalInputs {
    pub charge: OperatingInputs,
    pub discharge: OperatingInputs,
}

impl Default for NominalInputs {
    fn default() -> Self {
        Self {
            charge: OperatingInputs::nominal_charge(),
            discharge: OperatingInputs::nominal_discharge(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub system: SystemSpec,
    pub solver: SolverOptions,
    /// Output and integration step, s.
    pub dt: f64,
    /// Layer count of the discrete model.
    pub n_lay: usize,
    pub initial: InitialState,
    pub nominal: NominalInputs,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            system: SystemSpec::default(),
            solver: SolverOptions::default(),
            dt: 1.0,
            n_lay: 10,
            initial: InitialState::default(),
            nominal: NominalInputs::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidSpec(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_lay < 2 {
            return Err(Error::InvalidSpec(format!("n_lay must be at least 2, got {}", self.n_lay)));
        }
        let s = &self.solver;
        if !(s.event_tol > 0.0 && s.collapse_radius > 0.0 && s.newton.rel_tol > 0.0 && s.newton.max_iter > 0) {
            return Err(Error::InvalidSpec("solver tolerances and budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Operating inputs of a step: the nominal set for its mode, then the
/// step's overrides.
pub fn resolve_inputs(step: &ScenarioStep, nominal: &NominalInputs) -> Result<OperatingInputs> {
    let mut inputs = match step.mode {
        Process::Charge => nominal.charge,
        Process::Discharge => nominal.discharge,
        Process::Standby => OperatingInputs {
            mdot_ref: 0.0,
            mdot_sec: 0.0,
            ..nominal.charge
        },
    };
    let o = &step.inputs;
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut inputs.mdot_ref, o.mdot_ref);
    set(&mut inputs.mdot_sec, o.mdot_sec);
    set(&mut inputs.t_sec_in, o.t_sec_in);
    set(&mut inputs.t_ref_in, o.t_ref_in);
    set(&mut inputs.h_ref_in, o.h_ref_in);
    set(&mut inputs.t_env, o.t_env);
    inputs.validate()?;
    let bad = match step.mode {
        Process::Charge => inputs.mdot_sec != 0.0,
        Process::Discharge => inputs.mdot_ref != 0.0,
        Process::Standby => inputs.mdot_ref != 0.0 || inputs.mdot_sec != 0.0,
    };
    if bad {
        return Err(Error::InvalidSpec(format!(
            "{} step has inconsistent flows (mdot_ref = {}, mdot_sec = {})",
            step.mode.as_str(),
            inputs.mdot_ref,
            inputs.mdot_sec
        )));
    }
    if !(step.duration > 0.0 && step.duration.is_finite()) {
        return Err(Error::InvalidSpec(format!("step duration must be positive, got {}", step.duration)));
    }
    Ok(inputs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelState {
    Continuous(ContinuousState),
    Discrete(DiscreteState),
}

impl ModelState {
    pub fn t_int(&self) -> f64 {
        match self {
            ModelState::Continuous(s) => s.t_int,
            ModelState::Discrete(s) => s.t_int,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub t: f64,
    pub mode: Process,
    pub state: ModelState,
    pub gamma: f64,
    /// Energy stored in one capsule, J.
    pub capsule_energy: f64,
    pub solution: AlgebraicSolution,
    pub htc: HtcSnapshot,
}

/// Energy totals over a run or step, J. Heat flows are counted positive
/// when they leave the intermediate fluid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyTotals {
    /// ∫ n_pcm·Q_pcm dt.
    pub pcm: f64,
    /// ∫ n_ref·Q_ref dt.
    pub refrigerant: f64,
    /// ∫ n_sec·Q_sec dt.
    pub secondary: f64,
    /// Change of energy stored in all capsules.
    pub capsule_change: f64,
    /// Change of sensible energy of the intermediate fluid.
    pub intermediate_change: f64,
}

impl EnergyTotals {
    fn add(&mut self, o: &EnergyTotals) {
        self.pcm += o.pcm;
        self.refrigerant += o.refrigerant;
        self.secondary += o.secondary;
        self.capsule_change += o.capsule_change;
        self.intermediate_change += o.intermediate_change;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepSummary {
    pub index: usize,
    pub mode: Process,
    pub t_start: f64,
    pub t_end: f64,
    pub gamma_start: f64,
    pub gamma_end: f64,
    pub energy: EnergyTotals,
    /// Time from the step start until the capsules were fully converted,
    /// if that happened within the step, s.
    pub cycle_complete_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub model: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_lay: Option<usize>,
    pub dt: f64,
    pub final_time: f64,
    pub final_gamma: f64,
    pub final_t_int: f64,
    pub energy: EnergyTotals,
    pub steps: Vec<StepSummary>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub records: Vec<Record>,
    pub summary: RunSummary,
}

impl RunResult {
    /// Running total of ∫ n_pcm·Q_pcm dt at every record, J.
    pub fn cumulative_pcm_energy(&self, spec: &SystemSpec) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.records.len());
        let mut acc = 0.0;
        for (i, r) in self.records.iter().enumerate() {
            if i > 0 {
                let p = &self.records[i - 1];
                acc += 0.5 * (r.t - p.t) * spec.n_pcm() * (r.solution.q_pcm + p.solution.q_pcm);
            }
            out.push(acc);
        }
        out
    }
}

enum Sim {
    Continuous(ContinuousModel),
    Discrete(DiscreteModel),
}

impl Sim {
    fn build(model: ModelKind, cfg: &SimulationConfig) -> Result<Self> {
        let spec = cfg.system;
        let t0 = cfg.initial.t_int.unwrap_or(spec.pcm.t_lat);
        Ok(match model {
            ModelKind::Continuous => {
                let mut s = match cfg.initial.condition {
                    InitialCondition::Discharged => ContinuousState::discharged(&spec),
                    InitialCondition::Charged => ContinuousState::charged(&spec),
                };
                s.t_int = t0;
                Sim::Continuous(ContinuousModel::new(spec, cfg.solver, s))
            }
            ModelKind::Discrete => {
                let mut s = match cfg.initial.condition {
                    InitialCondition::Discharged => DiscreteState::discharged(&spec, cfg.n_lay)?,
                    InitialCondition::Charged => DiscreteState::charged(&spec, cfg.n_lay)?,
                };
                s.t_int = t0;
                Sim::Discrete(DiscreteModel::new(spec, cfg.solver, s)?)
            }
        })
    }

    fn begin_step(&mut self, process: Process) -> Result<()> {
        match self {
            Sim::Continuous(m) => m.begin_step(process),
            Sim::Discrete(_) => Ok(()),
        }
    }

    fn step(&mut self, inputs: &OperatingInputs, t0: f64, dt: f64) -> Result<Vec<Event>> {
        match self {
            Sim::Continuous(m) => m.step(inputs, t0, dt),
            Sim::Discrete(m) => m.step(inputs, t0, dt),
        }
    }

    fn evaluate(&mut self, inputs: &OperatingInputs) -> Result<(AlgebraicSolution, HtcSnapshot)> {
        match self {
            Sim::Continuous(m) => m.evaluate(inputs),
            Sim::Discrete(m) => m.evaluate(inputs),
        }
    }

    fn gamma(&self) -> f64 {
        match self {
            Sim::Continuous(m) => m.charge_ratio(),
            Sim::Discrete(m) => m.charge_ratio(),
        }
    }

    fn capsule_energy(&self) -> f64 {
        match self {
            Sim::Continuous(m) => m.capsule_energy(),
            Sim::Discrete(m) => m.capsule_energy(),
        }
    }

    fn state(&self) -> ModelState {
        match self {
            Sim::Continuous(m) => ModelState::Continuous(m.state),
            Sim::Discrete(m) => ModelState::Discrete(m.state.clone()),
        }
    }

    fn complete(&self, process: Process) -> bool {
        match self {
            Sim::Continuous(m) => process != Process::Standby && m.is_collapsed(),
            Sim::Discrete(m) => m.cycle_complete(process),
        }
    }
}

fn record(sim: &Sim, t: f64, mode: Process, sol: AlgebraicSolution, htc: HtcSnapshot) -> Record {
    Record {
        t,
        mode,
        state: sim.state(),
        gamma: sim.gamma(),
        capsule_energy: sim.capsule_energy(),
        solution: sol,
        htc,
    }
}

/// Runs a scenario with one model. Records are written every `cfg.dt`
/// seconds and at every step boundary.
pub fn run_scenario(scenario: &[ScenarioStep], model: ModelKind, cfg: &SimulationConfig) -> Result<RunResult> {
    cfg.validate()?;
    let inputs: Vec<OperatingInputs> = scenario
        .iter()
        .map(|s| resolve_inputs(s, &cfg.nominal))
        .collect::<Result<_>>()?;
    let spec = cfg.system;
    let mut sim = Sim::build(model, cfg)?;

    let first_mode = scenario.first().map_or(Process::Standby, |s| s.mode);
    let first_inputs = inputs.first().copied().unwrap_or(OperatingInputs {
        mdot_ref: 0.0,
        mdot_sec: 0.0,
        ..cfg.nominal.charge
    });
    sim.begin_step(first_mode)?;
    let (sol, htc) = sim.evaluate(&first_inputs)?;
    let mut records = vec![record(&sim, 0.0, first_mode, sol, htc)];

    let mut events = Vec::new();
    let mut steps = Vec::with_capacity(scenario.len());
    let mut totals = EnergyTotals::default();
    let mut t_start = 0.0;

    for (index, (step, inp)) in scenario.iter().zip(&inputs).enumerate() {
        sim.begin_step(step.mode)?;
        let gamma_start = sim.gamma();
        let (mut prev_sol, _) = sim.evaluate(inp)?;
        let mut prev_u = sim.capsule_energy();
        let mut prev_t = t_start;
        let mut prev_t_int = records.last().map_or(0.0, |r| r.state.t_int());
        let mut energy = EnergyTotals::default();
        let mut completed = if sim.complete(step.mode) { Some(0.0) } else { None };

        let n = ((step.duration / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
        let t_end = t_start + step.duration;
        for k in 1..=n {
            let t = if k == n { t_end } else { t_start + k as f64 * cfg.dt };
            let h = t - prev_t;
            let fired = sim.step(inp, prev_t, h)?;
            let (sol, htc) = sim.evaluate(inp)?;
            let u = sim.capsule_energy();
            let rec = record(&sim, t, step.mode, sol, htc);

            energy.pcm += 0.5 * h * spec.n_pcm() * (sol.q_pcm + prev_sol.q_pcm);
            energy.refrigerant += 0.5 * h * spec.n_ref() * (sol.q_ref + prev_sol.q_ref);
            energy.secondary += 0.5 * h * spec.n_sec() * (sol.q_sec + prev_sol.q_sec);
            energy.capsule_change += spec.n_pcm() * (u - prev_u);
            let t_int = rec.state.t_int();
            let cp = spec.intermediate(0.5 * (t_int + prev_t_int)).cp;
            energy.intermediate_change += spec.tank.m_int * cp * (t_int - prev_t_int);

            if completed.is_none() && sim.complete(step.mode) {
                let at = fired
                    .iter()
                    .filter(|e| {
                        matches!(
                            e.kind,
                            EventKind::FrontCollapse | EventKind::LayerFrozen { .. } | EventKind::LayerMelted { .. }
                        )
                    })
                    .map(|e| e.t)
                    .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))))
                    .unwrap_or(t);
                completed = Some(at - t_start);
            }
            events.extend(fired);
            prev_sol = sol;
            prev_u = u;
            prev_t = t;
            prev_t_int = t_int;
            records.push(rec);
        }
        totals.add(&energy);
        steps.push(StepSummary {
            index,
            mode: step.mode,
            t_start,
            t_end,
            gamma_start,
            gamma_end: sim.gamma(),
            energy,
            cycle_complete_after: completed,
        });
        t_start = t_end;
    }

    let last = records.last().expect("initial record present");
    let summary = RunSummary {
        model,
        n_lay: (model == ModelKind::Discrete).then_some(cfg.n_lay),
        dt: cfg.dt,
        final_time: last.t,
        final_gamma: last.gamma,
        final_t_int: last.state.t_int(),
        energy: totals,
        steps,
        events,
    };
    Ok(RunResult { records, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub n_lay: usize,
    /// Largest relative error of cumulative capsule energy up to the horizon.
    pub max_rel_error: f64,
    /// Relative error at the horizon.
    pub horizon_rel_error: f64,
    pub final_energy: f64,
    /// `(t, relative error)` pairs up to the horizon.
    pub series: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub mode: Process,
    /// End of the compared window: the continuous cycle-completion time,
    /// or the step end if the cycle did not complete, s.
    pub horizon: f64,
    pub continuous_final_energy: f64,
    pub entries: Vec<ComparisonEntry>,
    #[serde(skip)]
    pub continuous: Option<RunResult>,
    #[serde(skip)]
    pub discrete: Vec<RunResult>,
}

/// Relative error of `other` against `reference` at every shared record up
/// to `horizon`, skipping records where the reference is zero.
pub fn relative_error_series(reference: &[(f64, f64)], other: &[(f64, f64)], horizon: f64) -> Vec<(f64, f64)> {
    reference
        .iter()
        .zip(other)
        .filter(|((t, e), _)| *t <= horizon + 1e-9 && *e != 0.0)
        .map(|((t, e), (_, d))| (*t, ((d - e) / e).abs()))
        .collect()
}

/// Runs one full charge or discharge step with the continuous model and
/// with the discrete model at each layer count, concurrently.
pub fn compare_models(step: &ScenarioStep, cfg: &SimulationConfig, layers: &[usize]) -> Result<Comparison> {
    let expected = match step.mode {
        Process::Charge => InitialCondition::Discharged,
        Process::Discharge => InitialCondition::Charged,
        Process::Standby => {
            return Err(Error::InvalidSpec("model comparison needs a charge or discharge step".into()))
        }
    };
    if cfg.initial.condition != expected {
        return Err(Error::InvalidSpec(format!(
            "a full {} must start from the {:?} state",
            step.mode.as_str(),
            expected
        )));
    }
    let scenario = [*step];
    let (cont, disc) = std::thread::scope(|scope| {
        let c = scope.spawn(|| run_scenario(&scenario, ModelKind::Continuous, cfg));
        let d: Vec<_> = layers
            .iter()
            .map(|&n| {
                let local = SimulationConfig { n_lay: n, ..*cfg };
                scope.spawn(move || run_scenario(&scenario, ModelKind::Discrete, &local))
            })
            .collect();
        let c = c.join().expect("continuous run panicked");
        let d: Vec<_> = d.into_iter().map(|h| h.join().expect("discrete run panicked")).collect();
        (c, d)
    });
    let cont = cont?;
    let disc = disc.into_iter().collect::<Result<Vec<_>>>()?;

    let spec = &cfg.system;
    let horizon = cont.summary.steps[0]
        .cycle_complete_after
        .map_or(cont.summary.final_time, |t| t.min(cont.summary.final_time));
    let pair = |r: &RunResult| -> Vec<(f64, f64)> {
        r.records.iter().map(|x| x.t).zip(r.cumulative_pcm_energy(spec)).collect()
    };
    let reference = pair(&cont);
    let at_horizon = |s: &[(f64, f64)]| -> f64 {
        s.iter().rev().find(|(t, _)| *t <= horizon + 1e-9).map_or(0.0, |x| x.1)
    };
    let entries = disc
        .iter()
        .zip(layers)
        .map(|(d, &n)| {
            let other = pair(d);
            let series = relative_error_series(&reference, &other, horizon);
            let max_rel_error = series.iter().map(|x| x.1).fold(0.0, f64::max);
            let e_c = at_horizon(&reference);
            let e_d = at_horizon(&other);
            ComparisonEntry {
                n_lay: n,
                max_rel_error,
                horizon_rel_error: if e_c != 0.0 { ((e_d - e_c) / e_c).abs() } else { 0.0 },
                final_energy: d.summary.energy.pcm,
                series,
            }
        })
        .collect();
    Ok(Comparison {
        mode: step.mode,
        horizon,
        continuous_final_energy: cont.summary.energy.pcm,
        entries,
        continuous: Some(cont),
        discrete: disc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scenario_has_initial_record() {
        let cfg = SimulationConfig::default();
        for m in [ModelKind::Continuous, ModelKind::Discrete] {
            let r = run_scenario(&[], m, &cfg).unwrap();
            assert_eq!(r.records.len(), 1);
            assert_eq!(r.records[0].t, 0.0);
            assert!(r.summary.steps.is_empty());
        }
    }

    #[test]
    fn inconsistent_flows_rejected() {
        let nominal = NominalInputs::default();
        let mut step = ScenarioStep {
            mode: Process::Charge,
            duration: 10.0,
            inputs: InputOverrides { mdot_sec: Some(0.01), ..Default::default() },
        };
        assert!(resolve_inputs(&step, &nominal).is_err());
        step.mode = Process::Standby;
        step.inputs = InputOverrides { mdot_ref: Some(0.01), ..Default::default() };
        assert!(resolve_inputs(&step, &nominal).is_err());
        step.inputs = InputOverrides::default();
        step.duration = 0.0;
        assert!(resolve_inputs(&step, &nominal).is_err());
    }

    #[test]
    fn step_boundaries_keep_time() {
        let cfg = SimulationConfig::default();
        let steps = [
            ScenarioStep { mode: Process::Charge, duration: 2.5, inputs: Default::default() },
            ScenarioStep { mode: Process::Standby, duration: 1.25, inputs: Default::default() },
        ];
        let r = run_scenario(&steps, ModelKind::Continuous, &cfg).unwrap();
        assert_eq!(r.records.len(), 1 + 3 + 2);
        assert_eq!(r.summary.final_time, 3.75);
        assert!(r.records.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn overrides_apply() {
        let step = ScenarioStep {
            mode: Process::Discharge,
            duration: 1.0,
            inputs: InputOverrides { t_sec_in: Some(-15.0), ..Default::default() },
        };
        let i = resolve_inputs(&step, &NominalInputs::default()).unwrap();
        assert_eq!(i.t_sec_in, -15.0);
        assert_eq!(i.mdot_sec, 0.074);
        assert_eq!(i.mdot_ref, 0.0);
    }

    #[test]
    fn self_comparison_is_exact() {
        let s = [(0.0, 0.0), (1.0, -3.0), (2.0, -7.0)];
        let e = relative_error_series(&s, &s, 10.0);
        assert_eq!(e, vec![(1.0, 0.0), (2.0, 0.0)]);
    }
}
