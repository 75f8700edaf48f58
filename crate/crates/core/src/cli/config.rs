use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{
    InitialState, ModelKind, NominalInputs, ScenarioStep, SimulationConfig, SolverOptions,
};
use crate::error::{Error, Result};
use crate::system::{Process, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    pub dir: PathBuf,
    /// Prefix of every output file.
    pub run_id: String,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            run_id: "run".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComparisonOptions {
    /// Layer counts of the discrete runs.
    pub layers: Vec<usize>,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self {
            layers: vec![10, 20, 50],
        }
    }
}

/// Everything one invocation needs. Every key is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelKind,
    pub n_lay: usize,
    pub dt: f64,
    pub scenario: Vec<ScenarioStep>,
    pub initial: InitialState,
    pub nominal: NominalInputs,
    pub system: SystemSpec,
    pub solver: SolverOptions,
    pub output: OutputOptions,
    pub comparison: ComparisonOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimulationConfig::default();
        Self {
            model: ModelKind::Continuous,
            n_lay: sim.n_lay,
            dt: sim.dt,
            scenario: vec![ScenarioStep {
                mode: Process::Charge,
                duration: 4.0 * 3600.0,
                inputs: Default::default(),
            }],
            initial: sim.initial,
            nominal: sim.nominal,
            system: sim.system,
            solver: sim.solver,
            output: OutputOptions::default(),
            comparison: ComparisonOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            system: self.system,
            solver: self.solver,
            dt: self.dt,
            n_lay: self.n_lay,
            initial: self.initial,
            nominal: self.nominal,
        }
    }

    /// Checks everything that can be checked before a simulation starts.
    pub fn validate(&self) -> Result<()> {
        self.simulation().validate()?;
        for (i, step) in self.scenario.iter().enumerate() {
            crate::engine::resolve_inputs(step, &self.nominal)
                .map_err(|e| Error::InvalidSpec(format!("scenario[{i}]: {e}")))?;
        }
        if self.comparison.layers.iter().any(|&n| n < 2) {
            return Err(Error::InvalidSpec("comparison layer counts must be at least 2".into()));
        }
        if self.output.run_id.is_empty() || self.output.run_id.contains(['/', '\\']) {
            return Err(Error::InvalidSpec(format!("invalid run id `{}`", self.output.run_id)));
        }
        Ok(())
    }
}

/// Parses a config from text. Blank text yields the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Config {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = parse_config(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
        assert_eq!(parse_config("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn override_reaches_resolved_config() {
        let cfg = parse_config(r#"{"nominal": {"charge": {"mdot_ref": 0.02}}}"#).unwrap();
        assert_eq!(cfg.nominal.charge.mdot_ref, 0.02);
        let echo = serde_json::to_string_pretty(&cfg).unwrap();
        assert!(echo.contains("0.02"));
        assert_eq!(parse_config(&echo).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_named() {
        let err = parse_config("{\n  \"nominal\": {\"charge\": {\"mdot_reff\": 0.02}}\n}").unwrap_err();
        match err {
            Error::Config { path, line, message, .. } => {
                assert!(message.contains("mdot_reff"), "{message}");
                assert!(path.starts_with("nominal.charge"), "{path}");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_type_has_path() {
        let err = parse_config(r#"{"dt": "fast"}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "dt"));
    }

    #[test]
    fn semantic_checks() {
        let mut cfg = RunConfig { dt: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.dt = 1.0;
        cfg.scenario[0].inputs.mdot_sec = Some(0.1);
        assert!(cfg.validate().is_err());
    }
}
