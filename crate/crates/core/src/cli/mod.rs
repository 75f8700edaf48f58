//! Command-line entry points: `run`, `compare` and `validate-config`.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::engine::{compare_models, run_scenario, RunResult};
use crate::error::{Error, Result};
use crate::system::Process;

pub use config::{load_config, parse_config, ComparisonOptions, OutputOptions, RunConfig};
pub use output::{emit_summary, emit_timeseries, write_timeseries};

#[derive(Debug, Parser)]
#[command(name = "pcm-tes", version, about = "PCM cold thermal-energy-storage simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured scenario.
    Run(RunArgs),
    /// Compare the continuous model against the discrete model.
    Compare(RunArgs),
    /// Load and check a config without simulating.
    ValidateConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = ["continuous", "discrete"])]
    pub model: Option<String>,
    /// Layer count of the discrete model.
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run a model comparison instead of a single run.
    #[arg(long)]
    pub compare: bool,
    /// Output file prefix.
    #[arg(long)]
    pub seed_run_id: Option<String>,
}

/// Loads the config file (or defaults) and applies flags on top.
pub fn resolve_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &args.model {
        cfg.model = m.parse()?;
    }
    if let Some(n) = args.layers {
        cfg.n_lay = n;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(id) = &args.seed_run_id {
        cfg.output.run_id = id.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(cfg: &RunConfig, suffix: &str) -> PathBuf {
    cfg.output.dir.join(format!("{}_{}", cfg.output.run_id, suffix))
}

fn describe_run(log: &mut String, r: &RunResult) {
    let s = &r.summary;
    let _ = writeln!(log, "model: {}{}", s.model.as_str(), s.n_lay.map(|n| format!(" (n_lay = {n})")).unwrap_or_default());
    for st in &s.steps {
        let _ = writeln!(
            log,
            "step {} {}: t = {:.1} .. {:.1} s, gamma {:.6} -> {:.6}, Q_pcm {:.6e} J, Q_ref {:.6e} J, Q_sec {:.6e} J{}",
            st.index,
            st.mode.as_str(),
            st.t_start,
            st.t_end,
            st.gamma_start,
            st.gamma_end,
            st.energy.pcm,
            st.energy.refrigerant,
            st.energy.secondary,
            st.cycle_complete_after.map(|t| format!(", complete after {t:.2} s")).unwrap_or_default()
        );
    }
    for e in &s.events {
        let _ = writeln!(log, "event t = {:.2} s: {:?}", e.t, e.kind);
    }
    let _ = writeln!(log, "final gamma {:.6}, final T_int {:.4} C", s.final_gamma, s.final_t_int);
}

fn write_run_outputs(cfg: &RunConfig, r: &RunResult, tag: &str, log: &mut String) -> Result<()> {
    let ts = out_path(cfg, &format!("{tag}timeseries.csv"));
    emit_timeseries(r, &cfg.system, &ts)?;
    let _ = writeln!(log, "wrote {}", ts.display());
    Ok(())
}

fn prepare(cfg: &RunConfig, config_path: Option<&Path>) -> Result<String> {
    std::fs::create_dir_all(&cfg.output.dir)?;
    let echo = out_path(cfg, "resolved_config.json");
    emit_summary(cfg, &echo)?;
    let mut log = String::new();
    let _ = writeln!(log, "pcm-tes {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        log,
        "config: {}",
        config_path.map_or("<defaults>".to_string(), |p| p.display().to_string())
    );
    let _ = writeln!(log, "resolved config: {}", echo.display());
    let _ = writeln!(log, "dt = {} s, {} scenario step(s)", cfg.dt, cfg.scenario.len());
    Ok(log)
}

pub fn run(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    if args.compare {
        return compare(&cfg, args.config.as_deref());
    }
    let mut log = prepare(&cfg, args.config.as_deref())?;
    let started = Instant::now();
    let result = run_scenario(&cfg.scenario, cfg.model, &cfg.simulation())?;
    let _ = writeln!(log, "wall time {:.2} s", started.elapsed().as_secs_f64());
    describe_run(&mut log, &result);
    write_run_outputs(&cfg, &result, "", &mut log)?;
    let summary = out_path(&cfg, "summary.json");
    emit_summary(&result.summary, &summary)?;
    let _ = writeln!(log, "wrote {}", summary.display());
    std::fs::write(out_path(&cfg, "run.log"), &log)?;
    log::info!("{}", log.trim_end());
    Ok(())
}

pub fn compare(cfg: &RunConfig, config_path: Option<&Path>) -> Result<()> {
    let step = match cfg.scenario.as_slice() {
        [s] if s.mode != Process::Standby => *s,
        _ => {
            return Err(Error::InvalidSpec(
                "compare needs a scenario of exactly one charge or discharge step".into(),
            ))
        }
    };
    let mut log = prepare(cfg, config_path)?;
    let started = Instant::now();
    let cmp = compare_models(&step, &cfg.simulation(), &cfg.comparison.layers)?;
    let _ = writeln!(log, "wall time {:.2} s", started.elapsed().as_secs_f64());
    let _ = writeln!(log, "comparison horizon {:.2} s", cmp.horizon);
    for e in &cmp.entries {
        let _ = writeln!(
            log,
            "n_lay {}: max relative error {:.4}%, at horizon {:.4}%",
            e.n_lay,
            100.0 * e.max_rel_error,
            100.0 * e.horizon_rel_error
        );
    }
    if let Some(c) = &cmp.continuous {
        describe_run(&mut log, c);
        write_run_outputs(cfg, c, "continuous_", &mut log)?;
    }
    for d in &cmp.discrete {
        describe_run(&mut log, d);
        let tag = format!("discrete_n{}_", d.summary.n_lay.unwrap_or(0));
        write_run_outputs(cfg, d, &tag, &mut log)?;
    }
    let series = out_path(cfg, "comparison.csv");
    output::emit_comparison_series(&cmp, &series)?;
    let summary = output::ComparisonSummary {
        comparison: &cmp,
        continuous: cmp.continuous.as_ref().map(|r| &r.summary),
        discrete: cmp.discrete.iter().map(|r| &r.summary).collect(),
    };
    emit_summary(&summary, &out_path(cfg, "summary.json"))?;
    std::fs::write(out_path(cfg, "run.log"), &log)?;
    log::info!("{}", log.trim_end());
    Ok(())
}

/// Parses `argv` and executes the chosen command.
pub fn main_with_args<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(Error::InvalidSpec(e.to_string())),
    };
    match cli.command {
        Command::Run(a) => run(&a),
        Command::Compare(a) => {
            let cfg = resolve_config(&a)?;
            compare(&cfg, a.config.as_deref())
        }
        Command::ValidateConfig { config } => {
            match &config {
                Some(p) => load_config(p)?,
                None => RunConfig::default(),
            };
            println!("config ok");
            Ok(())
        }
    }
}
