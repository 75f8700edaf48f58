//! Numerical kernels and run orchestration shared by both capsule models.

pub mod newton;
pub mod rk4;
pub mod scenario;

use serde::{Deserialize, Serialize};

pub use newton::{newton_solve, NewtonOptions};
pub use rk4::{integrate_rk4, OdeSystem, StepOutcome};
pub use scenario::{
    compare_models, resolve_inputs, run_scenario, Comparison, ComparisonEntry, InitialCondition,
    InitialState, InputOverrides, ModelKind, ModelState, NominalInputs, Record, RunResult,
    RunSummary, ScenarioStep, SimulationConfig, StepSummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub newton: NewtonOptions,
    /// Width of the bracket an event time is bisected to, s.
    pub event_tol: f64,
    /// Front radius below which a capsule counts as fully converted, m.
    pub collapse_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            event_tol: 0.01,
            collapse_radius: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    FrontCollapse,
    ModeSwitch { to_mode: u8 },
    /// Layer enthalpy dropped below the liquid edge of the latent zone.
    LayerFreezeOnset { layer: usize },
    /// Layer enthalpy dropped below the solid edge of the latent zone.
    LayerFrozen { layer: usize },
    LayerMeltOnset { layer: usize },
    LayerMelted { layer: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Simulation time, s.
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}
