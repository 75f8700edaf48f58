//! Moving-boundary capsule model: one freezing or melting front per
//! capsule, PCM at the melting point, and the intermediate fluid as a
//! single lumped node.

pub mod capsule;
pub mod pipes;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::engine::rk4::{integrate_rk4, OdeSystem};
use crate::engine::{Event, EventKind, SolverOptions};
use crate::error::{Error, Result};
use crate::network::r_cond_spherical_shell;
use crate::properties::{CapsuleGeometry, PcmSpec};
use crate::system::{OperatingInputs, Process, SystemSpec};

use capsule::{capsule_exchange, CapsuleExchange};
use pipes::{refrigerant_submodel, secondary_submodel, PipeWarmStart, RefMode};

/// Which phase occupies the core enclosed by the front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontKind {
    /// Liquid core inside a growing solid shell.
    Freezing,
    /// Solid core inside a growing liquid shell.
    Melting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousState {
    pub cd: Process,
    /// Front layout; kept through standby so the last active form applies.
    pub front: FrontKind,
    /// Front radius, m.
    pub r: f64,
    /// Radius of the PCM content, m.
    pub r_pcm: f64,
    pub t_int: f64,
}

impl ContinuousState {
    /// All PCM liquid, intermediate fluid at the melting point.
    pub fn discharged(spec: &SystemSpec) -> Self {
        let r = spec.capsule.r_max;
        Self {
            cd: Process::Standby,
            front: FrontKind::Freezing,
            r,
            r_pcm: r,
            t_int: spec.pcm.t_lat,
        }
    }

    /// All PCM solid, intermediate fluid at the melting point.
    pub fn charged(spec: &SystemSpec) -> Self {
        let r = spec.capsule.r_min;
        Self {
            cd: Process::Standby,
            front: FrontKind::Melting,
            r,
            r_pcm: r,
            t_int: spec.pcm.t_lat,
        }
    }

    pub fn is_collapsed(&self, collapse_radius: f64) -> bool {
        self.r < collapse_radius
    }

    /// Mass of PCM in the capsule divided by 4π/3.
    pub fn mass_index(&self, pcm: &PcmSpec) -> f64 {
        let (rc, rs) = (self.r.powi(3), self.r_pcm.powi(3) - self.r.powi(3));
        match self.front {
            FrontKind::Freezing => pcm.rho_liquid * rc + pcm.rho_solid * rs,
            FrontKind::Melting => pcm.rho_solid * rc + pcm.rho_liquid * rs,
        }
    }
}

/// Per-step algebraic unknowns. Heat flows are per unit (one capsule or one
/// pipe) and positive into that unit from the intermediate fluid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgebraicSolution {
    pub t_int_consistency: f64,
    pub t_pcm: f64,
    pub t_pcm_wall: f64,
    pub t_ref_out: Option<f64>,
    pub h_ref_out: Option<f64>,
    pub t_ref2_wall: Option<f64>,
    pub t_refv_wall: Option<f64>,
    pub t_sec_out: Option<f64>,
    pub t_sec_wall: Option<f64>,
    pub r_echo: Option<f64>,
    pub r_pcm_echo: Option<f64>,
    pub zeta_ref: Option<f64>,
    pub q_pcm: f64,
    pub q_ref: f64,
    pub q_ref2: f64,
    pub q_refv: f64,
    pub q_sec: f64,
    pub q_env: f64,
    pub mode: Option<RefMode>,
    pub mode_margin: Option<f64>,
    /// Time derivative of the intermediate-fluid temperature, K/s.
    pub dt_int_dt: f64,
}

impl AlgebraicSolution {
    /// Total heat absorbed by all capsules, W.
    pub fn q_pcm_total(&self, spec: &SystemSpec) -> f64 {
        spec.n_pcm() * self.q_pcm
    }

    pub fn q_ref_total(&self, spec: &SystemSpec) -> f64 {
        spec.n_ref() * self.q_ref
    }

    pub fn q_sec_total(&self, spec: &SystemSpec) -> f64 {
        spec.n_sec() * self.q_sec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HtcSnapshot {
    pub alpha_pcm_ext: Option<f64>,
    pub alpha_ref2_int: Option<f64>,
    pub alpha_ref2_ext: Option<f64>,
    pub alpha_refv_int: Option<f64>,
    pub alpha_refv_ext: Option<f64>,
    pub alpha_sec_int: Option<f64>,
    pub alpha_sec_ext: Option<f64>,
}

/// Energy stored in one capsule, J, relative to the PCM enthalpy reference.
pub fn capsule_energy(state: &ContinuousState, pcm: &PcmSpec) -> f64 {
    let k = 4.0 / 3.0 * PI;
    let core = k * state.r.powi(3);
    let shell = k * (state.r_pcm.powi(3) - state.r.powi(3));
    let liq = pcm.rho_liquid * pcm.h_plus();
    let sol = pcm.rho_solid * pcm.h_minus();
    match state.front {
        FrontKind::Freezing => liq * core + sol * shell,
        FrontKind::Melting => sol * core + liq * shell,
    }
}

/// `(U_max − U) / (U_max − U_min)`, evaluated in a form free of the
/// cancellation between the two large stored-energy terms.
pub fn charge_ratio_continuous(state: &ContinuousState, pcm: &PcmSpec, geom: &CapsuleGeometry) -> f64 {
    let a = pcm.rho_liquid * pcm.h_plus();
    let b = pcm.rho_solid * pcm.h_minus();
    let big = geom.r_max.powi(3);
    let d = a * big - b * geom.r_min.powi(3);
    let r3 = state.r.powi(3);
    let rp3 = state.r_pcm.powi(3);
    let num = match state.front {
        FrontKind::Freezing => a * (big - r3) - b * (rp3 - r3),
        FrontKind::Melting => a * (big - (rp3 - r3)) - b * r3,
    };
    num / d
}

/// Front and content-radius rates for a heat flow `q_pcm` into one capsule.
/// A collapsed front (`r == 0`) does not move.
pub fn pcm_front_odes(state: &ContinuousState, q_pcm: f64, pcm: &PcmSpec) -> (f64, f64) {
    if state.r <= 0.0 || q_pcm == 0.0 {
        return (0.0, 0.0);
    }
    let area = 4.0 * PI * state.r * state.r;
    let shape = (state.r / state.r_pcm).powi(2);
    let drho = pcm.rho_solid - pcm.rho_liquid;
    match state.front {
        FrontKind::Freezing => {
            let dr = q_pcm / (pcm.rho_liquid * pcm.h_lat * area);
            (dr, drho / pcm.rho_solid * shape * dr)
        }
        FrontKind::Melting => {
            let dr = -q_pcm / (pcm.rho_solid * pcm.h_lat * area);
            (dr, -drho / pcm.rho_liquid * shape * dr)
        }
    }
}

/// Conduction from the front to the capsule inner wall, or `None` once the
/// front has collapsed.
fn front_resistance(spec: &SystemSpec, front: FrontKind, r: f64, r_pcm: f64, collapse: f64) -> Result<Option<f64>> {
    if r < collapse {
        return Ok(None);
    }
    if r >= r_pcm {
        return Ok(Some(0.0));
    }
    let kappa = match front {
        FrontKind::Freezing => spec.pcm.kappa_solid,
        FrontKind::Melting => spec.pcm.kappa_eff_liquid(),
    };
    r_cond_spherical_shell(r, r_pcm, kappa).map(Some)
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct TankWarmStart {
    pub capsule: Option<f64>,
    pub pipes: PipeWarmStart,
}

/// Closes the tank balance around a solved capsule exchange: solves the
/// pipe bundles and assembles the algebraic solution.
pub(crate) fn close_tank_balance(
    spec: &SystemSpec,
    inputs: &OperatingInputs,
    t_int: f64,
    t_pcm: f64,
    ex: &CapsuleExchange,
    warm: &mut TankWarmStart,
    solver: &SolverOptions,
) -> Result<(AlgebraicSolution, HtcSnapshot)> {
    let refr = refrigerant_submodel(spec, inputs, t_int, &mut warm.pipes, &solver.newton)?;
    let sec = secondary_submodel(spec, inputs, t_int, &mut warm.pipes, &solver.newton)?;
    let q_ref = refr.map_or(0.0, |s| s.q_total());
    let q_sec = sec.map_or(0.0, |s| s.q);
    let q_env = 0.0;
    let load = spec.n_ref() * q_ref + spec.n_sec() * q_sec + spec.n_pcm() * ex.q + q_env;
    let cp = spec.intermediate(t_int).cp;
    let sol = AlgebraicSolution {
        t_int_consistency: t_int,
        t_pcm,
        t_pcm_wall: ex.t_wall,
        t_ref_out: refr.map(|s| s.t_out),
        h_ref_out: refr.map(|s| s.h_out),
        t_ref2_wall: refr.and_then(|s| s.t_wall_two_phase),
        t_refv_wall: refr.and_then(|s| s.t_wall_vapour),
        t_sec_out: sec.map(|s| s.t_out),
        t_sec_wall: sec.map(|s| s.t_wall),
        r_echo: None,
        r_pcm_echo: None,
        zeta_ref: refr.map(|s| s.zeta),
        q_pcm: ex.q,
        q_ref,
        q_ref2: refr.map_or(0.0, |s| s.q_two_phase),
        q_refv: refr.map_or(0.0, |s| s.q_vapour),
        q_sec,
        q_env,
        mode: refr.map(|s| s.mode),
        mode_margin: refr.map(|s| s.mode_margin),
        dt_int_dt: -load / (spec.tank.m_int * cp),
    };
    let htc = HtcSnapshot {
        alpha_pcm_ext: Some(ex.alpha_ext),
        alpha_ref2_int: refr.and_then(|s| s.alpha_int_two_phase),
        alpha_ref2_ext: refr.and_then(|s| s.alpha_ext_two_phase),
        alpha_refv_int: refr.and_then(|s| s.alpha_int_vapour),
        alpha_refv_ext: refr.and_then(|s| s.alpha_ext_vapour),
        alpha_sec_int: sec.map(|s| s.alpha_int),
        alpha_sec_ext: sec.map(|s| s.alpha_ext),
    };
    Ok((sol, htc))
}

/// Solves every algebraic unknown for a given state and set of inputs.
pub fn solve_algebraic(
    state: &ContinuousState,
    inputs: &OperatingInputs,
    spec: &SystemSpec,
    solver: &SolverOptions,
) -> Result<(AlgebraicSolution, HtcSnapshot)> {
    let mut warm = TankWarmStart::default();
    solve_with_warm_start(state, inputs, spec, solver, &mut warm)
}

fn solve_with_warm_start(
    state: &ContinuousState,
    inputs: &OperatingInputs,
    spec: &SystemSpec,
    solver: &SolverOptions,
    warm: &mut TankWarmStart,
) -> Result<(AlgebraicSolution, HtcSnapshot)> {
    let r_in = front_resistance(spec, state.front, state.r, state.r_pcm, solver.collapse_radius)?;
    let t_pcm = spec.pcm.t_lat;
    let ex = capsule_exchange(spec, state.t_int, t_pcm, r_in, warm.capsule, &solver.newton)?;
    if ex.q != 0.0 {
        warm.capsule = Some(ex.dt_ext);
    }
    let (mut sol, htc) = close_tank_balance(spec, inputs, state.t_int, t_pcm, &ex, warm, solver)?;
    sol.r_echo = Some(state.r);
    sol.r_pcm_echo = Some(state.r_pcm);
    Ok((sol, htc))
}

/// Continuous model with its state and solver warm starts.
#[derive(Debug, Clone)]
pub struct ContinuousModel {
    pub spec: SystemSpec,
    pub solver: SolverOptions,
    pub state: ContinuousState,
    warm: TankWarmStart,
}

struct FrontSystem<'a> {
    spec: &'a SystemSpec,
    solver: &'a SolverOptions,
    inputs: &'a OperatingInputs,
    template: ContinuousState,
    warm: &'a mut TankWarmStart,
}

impl FrontSystem<'_> {
    fn at(&self, y: &[f64]) -> ContinuousState {
        let mut s = self.template;
        s.r = if y[0] < self.solver.collapse_radius { 0.0 } else { y[0] };
        s.r_pcm = y[1];
        s.t_int = y[2];
        s
    }
}

impl OdeSystem for FrontSystem<'_> {
    fn derivative(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        let s = self.at(y);
        let (sol, _) = solve_with_warm_start(&s, self.inputs, self.spec, self.solver, self.warm)?;
        let (mut dr, mut drp) = pcm_front_odes(&s, sol.q_pcm, &self.spec.pcm);
        if s.r >= s.r_pcm && dr > 0.0 {
            dr = 0.0;
            drp = 0.0;
        }
        Ok(vec![dr, drp, sol.dt_int_dt])
    }

    fn events(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        let collapse = if self.template.r < self.solver.collapse_radius {
            -1.0
        } else {
            y[0] - self.solver.collapse_radius
        };
        let mut g = vec![collapse];
        if let Some(r) = refrigerant_submodel(self.spec, self.inputs, y[2], &mut self.warm.pipes, &self.solver.newton)? {
            g.push(r.mode_margin);
        }
        Ok(g)
    }
}

impl ContinuousModel {
    pub fn new(spec: SystemSpec, solver: SolverOptions, state: ContinuousState) -> Self {
        Self {
            spec,
            solver,
            state,
            warm: TankWarmStart::default(),
        }
    }

    pub fn charge_ratio(&self) -> f64 {
        charge_ratio_continuous(&self.state, &self.spec.pcm, &self.spec.capsule)
    }

    pub fn capsule_energy(&self) -> f64 {
        capsule_energy(&self.state, &self.spec.pcm)
    }

    pub fn is_collapsed(&self) -> bool {
        self.state.is_collapsed(self.solver.collapse_radius)
    }

    /// Switches the front layout for a new process. Only a capsule that is
    /// entirely liquid or entirely solid can change layout.
    pub fn begin_step(&mut self, process: Process) -> Result<()> {
        self.state.cd = process;
        let wanted = match process {
            Process::Charge => FrontKind::Freezing,
            Process::Discharge => FrontKind::Melting,
            Process::Standby => return Ok(()),
        };
        if wanted == self.state.front {
            return Ok(());
        }
        let s = &mut self.state;
        let core_only = s.r >= s.r_pcm * (1.0 - 1e-12);
        if s.r < self.solver.collapse_radius {
            s.r = s.r_pcm;
        } else if core_only {
            s.r = 0.0;
        } else {
            return Err(Error::Unsupported(format!(
                "the continuous model cannot reverse a partial cycle (front at r = {:.4e} m of {:.4e} m); \
                 use the discrete model for partial sequences",
                s.r, s.r_pcm
            )));
        }
        s.front = wanted;
        Ok(())
    }

    pub fn evaluate(&mut self, inputs: &OperatingInputs) -> Result<(AlgebraicSolution, HtcSnapshot)> {
        solve_with_warm_start(&self.state, inputs, &self.spec, &self.solver, &mut self.warm)
    }

    /// Advances the state by `dt` seconds starting at time `t0`, stopping at
    /// events inside the step to apply them.
    pub fn step(&mut self, inputs: &OperatingInputs, t0: f64, dt: f64) -> Result<Vec<Event>> {
        if !(dt > 0.0) {
            return Err(Error::domain(format!("step length must be positive, got {dt}")));
        }
        let mut events = Vec::new();
        let mut elapsed = 0.0;
        while dt - elapsed > 1e-9 * dt {
            let y0 = [self.state.r, self.state.r_pcm, self.state.t_int];
            let mut sys = FrontSystem {
                spec: &self.spec,
                solver: &self.solver,
                inputs,
                template: self.state,
                warm: &mut self.warm,
            };
            let out = integrate_rk4(&mut sys, &y0, dt - elapsed, self.solver.event_tol)?;
            elapsed += out.dt_taken;
            let mode_before = self.state_mode(inputs)?;
            self.state.r = out.y[0].max(0.0);
            self.state.r_pcm = out.y[1];
            self.state.t_int = out.y[2];
            for idx in out.fired {
                if idx == 0 {
                    self.state.r = 0.0;
                    self.state.r_pcm = match self.state.front {
                        FrontKind::Freezing => self.spec.capsule.r_min,
                        FrontKind::Melting => self.spec.capsule.r_max,
                    };
                    events.push(Event {
                        t: t0 + elapsed,
                        kind: EventKind::FrontCollapse,
                    });
                } else {
                    let mode = self.state_mode(inputs)?;
                    if mode != mode_before {
                        if let Some(m) = mode {
                            events.push(Event {
                                t: t0 + elapsed,
                                kind: EventKind::ModeSwitch { to_mode: m.number() },
                            });
                        }
                    }
                }
            }
        }
        Ok(events)
    }

    fn state_mode(&mut self, inputs: &OperatingInputs) -> Result<Option<RefMode>> {
        Ok(refrigerant_submodel(&self.spec, inputs, self.state.t_int, &mut self.warm.pipes, &self.solver.newton)?
            .map(|r| r.mode))
    }
}
