//! Refrigerant and secondary pipe bundles immersed in the intermediate
//! fluid. All heat flows returned here are per pipe and positive when the
//! pipe fluid takes heat from the intermediate fluid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::correlations::{
    klimenko_two_phase_alpha, pipe_forced_convection, pipe_free_convection, TwoPhaseFlow,
};
use crate::engine::newton::{newton_solve, NewtonOptions};
use crate::error::{Error, Result};
use crate::network::{effectiveness, ntu, r_pipe_stack, r_pipe_wall, Arrangement};
use crate::properties::{FluidId, PipeSpec};
use crate::system::{OperatingInputs, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefMode {
    /// Evaporation completes inside the pipe; the tail superheats.
    Superheat,
    /// Two-phase mixture along the whole pipe.
    TwoPhase,
}

impl RefMode {
    pub fn number(self) -> u8 {
        match self {
            RefMode::Superheat => 1,
            RefMode::TwoPhase => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhaseZone {
    pub q: f64,
    pub t_out: f64,
    pub t_wall: f64,
    pub alpha_int: f64,
    pub alpha_ext: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefrigerantSolution {
    pub mode: RefMode,
    /// Fraction of the pipe length holding two-phase refrigerant.
    pub zeta: f64,
    pub q_two_phase: f64,
    pub q_vapour: f64,
    pub t_out: f64,
    pub h_out: f64,
    pub t_wall_two_phase: Option<f64>,
    pub t_wall_vapour: Option<f64>,
    pub alpha_int_two_phase: Option<f64>,
    pub alpha_ext_two_phase: Option<f64>,
    pub alpha_int_vapour: Option<f64>,
    pub alpha_ext_vapour: Option<f64>,
    /// Positive in the superheat mode, negative in the two-phase mode, zero
    /// at the switch.
    pub mode_margin: f64,
}

impl RefrigerantSolution {
    pub fn q_total(&self) -> f64 {
        self.q_two_phase + self.q_vapour
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipeWarmStart {
    pub ln_zeta: Option<f64>,
    pub dchi_two_phase: Option<f64>,
    pub vapour: Option<[f64; 2]>,
    pub secondary: Option<[f64; 2]>,
}

/// Single-phase flow along `frac` of a pipe bundle, exchanging with an
/// infinite reservoir at `t_int`. Unknowns are the outlet and wall
/// temperatures.
#[allow(clippy::too_many_arguments)]
pub fn single_phase_zone(
    spec: &SystemSpec,
    fluid: FluidId,
    pipe: &PipeSpec,
    mdot_total: f64,
    t_in: f64,
    t_int: f64,
    frac: f64,
    guess: Option<[f64; 2]>,
    opts: &NewtonOptions,
) -> Result<SinglePhaseZone> {
    let mdot_pipe = mdot_total / f64::from(pipe.count);
    let len = pipe.length * frac;
    let g = spec.tank.g;
    let p = spec.tank.p_int;
    let eval = |t_out: f64, t_wall: f64| -> Result<(SinglePhaseZone, f64)> {
        let t_mean = 0.5 * (t_in + t_out);
        let props = spec.properties.fluid_properties(fluid, t_mean, p);
        let c = mdot_pipe * props.cp;
        let (alpha_int, _) = pipe_forced_convection(&props, mdot_total, pipe, len)?;
        let film = spec.intermediate(0.5 * (t_wall + t_int));
        let (alpha_ext, _) = pipe_free_convection(&film, (t_int - t_wall).abs(), len, g)?;
        let stack = r_pipe_stack(alpha_int, alpha_ext, pipe, frac)?;
        let eps = effectiveness(ntu(stack.total(), c)?, 0.0, Arrangement::InfiniteReservoir)?;
        let q = eps * c * (t_int - t_in);
        let wall = t_mean + q * (stack.r_conv_int + stack.r_cond_wall);
        Ok((
            SinglePhaseZone {
                q,
                t_out: t_in + q / c,
                t_wall: wall,
                alpha_int,
                alpha_ext,
            },
            c,
        ))
    };
    let span = t_int - t_in;
    if span == 0.0 {
        let (z, _) = eval(t_in, t_in)?;
        return Ok(SinglePhaseZone { q: 0.0, t_out: t_in, t_wall: t_in, ..z });
    }
    let scale = span.abs();
    let x0 = guess.unwrap_or([t_in + 0.5 * span, t_in + 0.75 * span]);
    let x = newton_solve(
        |x| {
            let (z, _) = eval(x[0], x[1])?;
            Ok(vec![(z.t_out - x[0]) / scale, (z.t_wall - x[1]) / scale])
        },
        &x0,
        opts,
    )?;
    let (z, _) = eval(x[0], x[1])?;
    Ok(SinglePhaseZone { t_out: x[0], t_wall: x[1], ..z })
}

struct TwoPhaseEval {
    r_tot: f64,
    t_wall: f64,
    alpha_int: f64,
    alpha_ext: f64,
}

fn two_phase_eval(
    spec: &SystemSpec,
    inputs: &OperatingInputs,
    t_int: f64,
    zeta: f64,
    q2: f64,
) -> Result<TwoPhaseEval> {
    let pipe = &spec.refrigerant_pipe;
    let refr = &spec.refrigerant;
    let g = spec.tank.g;
    let liquid = spec
        .properties
        .fluid_properties(FluidId::RefrigerantSatLiquid, refr.t_sat, refr.p);
    let flow = TwoPhaseFlow {
        mdot_total: inputs.mdot_ref,
        q_two_phase: q2,
        zeta,
    };
    let alpha_int = klimenko_two_phase_alpha(&flow, pipe, refr, &liquid, pipe.kappa_wall, g)?;
    let r_int = 1.0 / (alpha_int * 2.0 * PI * pipe.r_inner * pipe.length * zeta);
    let t_wall = refr.t_sat + q2 * (r_int + r_pipe_wall(pipe, zeta)?);
    let film = spec.intermediate(0.5 * (t_wall + t_int));
    let (alpha_ext, _) = pipe_free_convection(&film, (t_int - t_wall).abs(), pipe.length * zeta, g)?;
    let stack = r_pipe_stack(alpha_int, alpha_ext, pipe, zeta)?;
    Ok(TwoPhaseEval {
        r_tot: stack.total(),
        t_wall,
        alpha_int,
        alpha_ext,
    })
}

/// Solves one refrigerant pipe against the intermediate fluid at `t_int`.
/// Returns `None` when no refrigerant flows.
pub fn refrigerant_submodel(
    spec: &SystemSpec,
    inputs: &OperatingInputs,
    t_int: f64,
    warm: &mut PipeWarmStart,
    opts: &NewtonOptions,
) -> Result<Option<RefrigerantSolution>> {
    if inputs.mdot_ref == 0.0 {
        return Ok(None);
    }
    let pipe = &spec.refrigerant_pipe;
    let refr = &spec.refrigerant;
    let mdot_pipe = inputs.mdot_ref / f64::from(pipe.count);
    let h_sv = refr.h_sat_vapour();
    let dt = t_int - inputs.t_ref_in;

    if inputs.h_ref_in >= h_sv {
        let z = single_phase_zone(
            spec,
            FluidId::RefrigerantVapour,
            pipe,
            inputs.mdot_ref,
            inputs.t_ref_in,
            t_int,
            1.0,
            warm.vapour,
            opts,
        )?;
        warm.vapour = Some([z.t_out, z.t_wall]);
        return Ok(Some(RefrigerantSolution {
            mode: RefMode::Superheat,
            zeta: 0.0,
            q_two_phase: 0.0,
            q_vapour: z.q,
            t_out: z.t_out,
            h_out: inputs.h_ref_in + z.q / mdot_pipe,
            t_wall_two_phase: None,
            t_wall_vapour: Some(z.t_wall),
            alpha_int_two_phase: None,
            alpha_ext_two_phase: None,
            alpha_int_vapour: Some(z.alpha_int),
            alpha_ext_vapour: Some(z.alpha_ext),
            mode_margin: 1.0,
        }));
    }

    let q2_full = mdot_pipe * (h_sv - inputs.h_ref_in);
    let superheat_possible =
        dt > 0.0 && q2_full * two_phase_eval(spec, inputs, t_int, 1.0, q2_full)?.r_tot < dt;

    if superheat_possible {
        let x0 = warm.ln_zeta.filter(|x| *x < 0.0).unwrap_or(0.2f64.ln());
        let x = newton_solve(
            |x| {
                if x[0] > 0.0 {
                    return Err(Error::domain("zeta above one"));
                }
                let e = two_phase_eval(spec, inputs, t_int, x[0].exp(), q2_full)?;
                Ok(vec![q2_full * e.r_tot / dt - 1.0])
            },
            &[x0],
            opts,
        )?;
        warm.ln_zeta = Some(x[0]);
        let zeta = x[0].exp();
        let e = two_phase_eval(spec, inputs, t_int, zeta, q2_full)?;
        let frac = 1.0 - zeta;
        let (q_v, t_out, wall_v, ai_v, ae_v) = if frac > 0.0 {
            let z = single_phase_zone(
                spec,
                FluidId::RefrigerantVapour,
                pipe,
                inputs.mdot_ref,
                refr.t_sat,
                t_int,
                frac,
                warm.vapour,
                opts,
            )?;
            warm.vapour = Some([z.t_out, z.t_wall]);
            (z.q, z.t_out, Some(z.t_wall), Some(z.alpha_int), Some(z.alpha_ext))
        } else {
            (0.0, refr.t_sat, None, None, None)
        };
        return Ok(Some(RefrigerantSolution {
            mode: RefMode::Superheat,
            zeta,
            q_two_phase: q2_full,
            q_vapour: q_v,
            t_out,
            h_out: h_sv + q_v / mdot_pipe,
            t_wall_two_phase: Some(e.t_wall),
            t_wall_vapour: wall_v,
            alpha_int_two_phase: Some(e.alpha_int),
            alpha_ext_two_phase: Some(e.alpha_ext),
            alpha_int_vapour: ai_v,
            alpha_ext_vapour: ae_v,
            mode_margin: frac,
        }));
    }

    let scale_q = mdot_pipe * refr.h_lat;
    let q2 = if dt == 0.0 {
        0.0
    } else {
        let x0 = match warm.dchi_two_phase {
            Some(d) if d != 0.0 && d.signum() == dt.signum() => d,
            _ => {
                let r0 = two_phase_eval(spec, inputs, t_int, 1.0, q2_full)?.r_tot;
                dt / r0 / scale_q
            }
        };
        let x = newton_solve(
            |x| {
                let q = x[0] * scale_q;
                let e = two_phase_eval(spec, inputs, t_int, 1.0, q)?;
                Ok(vec![(q * e.r_tot - dt) / dt.abs()])
            },
            &[x0],
            opts,
        )?;
        warm.dchi_two_phase = Some(x[0]);
        x[0] * scale_q
    };
    let e = two_phase_eval(spec, inputs, t_int, 1.0, q2)?;
    let h_out = inputs.h_ref_in + q2 / mdot_pipe;
    Ok(Some(RefrigerantSolution {
        mode: RefMode::TwoPhase,
        zeta: 1.0,
        q_two_phase: q2,
        q_vapour: 0.0,
        t_out: refr.t_sat,
        h_out,
        t_wall_two_phase: Some(e.t_wall),
        t_wall_vapour: None,
        alpha_int_two_phase: Some(e.alpha_int),
        alpha_ext_two_phase: Some(e.alpha_ext),
        alpha_int_vapour: None,
        alpha_ext_vapour: None,
        mode_margin: (h_out - h_sv) / refr.h_lat,
    }))
}

/// Solves one secondary pipe against the intermediate fluid at `t_int`.
/// Returns `None` when no secondary fluid flows.
pub fn secondary_submodel(
    spec: &SystemSpec,
    inputs: &OperatingInputs,
    t_int: f64,
    warm: &mut PipeWarmStart,
    opts: &NewtonOptions,
) -> Result<Option<SinglePhaseZone>> {
    if inputs.mdot_sec == 0.0 {
        return Ok(None);
    }
    let z = single_phase_zone(
        spec,
        FluidId::Secondary,
        &spec.secondary_pipe,
        inputs.mdot_sec,
        inputs.t_sec_in,
        t_int,
        1.0,
        warm.secondary,
        opts,
    )?;
    warm.secondary = Some([z.t_out, z.t_wall]);
    Ok(Some(z))
}
