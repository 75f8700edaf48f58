//! Heat exchange between one capsule and the intermediate fluid.

use std::f64::consts::PI;

use crate::correlations::sphere_free_convection;
use crate::engine::newton::{newton_solve, NewtonOptions};
use crate::error::Result;
use crate::network::r_cond_spherical_shell;
use crate::system::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapsuleExchange {
    /// Heat flow from the intermediate fluid into the capsule, W.
    pub q: f64,
    /// Outer capsule-wall temperature, °C.
    pub t_wall: f64,
    pub alpha_ext: f64,
    /// Intermediate minus wall temperature; reusable as a warm start.
    pub dt_ext: f64,
}

pub fn capsule_wall_resistance(spec: &SystemSpec) -> Result<f64> {
    let c = &spec.capsule;
    r_cond_spherical_shell(c.r_max, c.r_outer(), c.kappa_wall)
}

fn external_alpha(spec: &SystemSpec, t_int: f64, dt_ext: f64) -> Result<f64> {
    let film = t_int - 0.5 * dt_ext;
    let props = spec.intermediate(film);
    let d = 2.0 * spec.capsule.r_outer();
    sphere_free_convection(&props, dt_ext.abs(), d, spec.tank.g).map(|(a, _)| a)
}

/// Solves the capsule side for the heat flow between the intermediate fluid
/// at `t_int` and PCM at `t_inner`, separated by an internal conduction path
/// `r_inner` (K/W), the capsule wall and the external free-convection film.
///
/// `r_inner = None` marks an unreachable core; no heat flows.
pub fn capsule_exchange(
    spec: &SystemSpec,
    t_int: f64,
    t_inner: f64,
    r_inner: Option<f64>,
    guess: Option<f64>,
    opts: &NewtonOptions,
) -> Result<CapsuleExchange> {
    let area = 4.0 * PI * spec.capsule.r_outer().powi(2);
    let dt_tot = t_int - t_inner;
    let idle = |dt_ext: f64| -> Result<CapsuleExchange> {
        Ok(CapsuleExchange {
            q: 0.0,
            t_wall: t_int,
            alpha_ext: external_alpha(spec, t_int, dt_ext)?,
            dt_ext: 0.0,
        })
    };
    let Some(r_in) = r_inner else {
        return idle(0.0);
    };
    if dt_tot == 0.0 {
        return idle(0.0);
    }
    let r_cond = r_in + capsule_wall_resistance(spec)?;
    let x0 = match guess {
        Some(g) if g != 0.0 && g.signum() == dt_tot.signum() && g.abs() < dt_tot.abs() => g,
        _ => {
            let r_ext0 = 1.0 / (50.0 * area);
            dt_tot * r_ext0 / (r_ext0 + r_cond)
        }
    };
    let scale = dt_tot.abs();
    let sol = newton_solve(
        |x| {
            let a = external_alpha(spec, t_int, x[0])?;
            let q = a * area * x[0];
            Ok(vec![(dt_tot - x[0] - q * r_cond) / scale])
        },
        &[x0],
        opts,
    )?;
    let dt_ext = sol[0];
    let alpha_ext = external_alpha(spec, t_int, dt_ext)?;
    Ok(CapsuleExchange {
        q: alpha_ext * area * dt_ext,
        t_wall: t_int - dt_ext,
        alpha_ext,
        dt_ext,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn balance_closes() {
        let spec = SystemSpec::default();
        let r_in = 0.5;
        let ex = capsule_exchange(&spec, -20.0, -30.0, Some(r_in), None, &NewtonOptions::default()).unwrap();
        assert!(ex.q > 0.0);
        let area = 4.0 * PI * spec.capsule.r_outer().powi(2);
        let r_ext = 1.0 / (ex.alpha_ext * area);
        let r_tot = r_in + capsule_wall_resistance(&spec).unwrap() + r_ext;
        assert_relative_eq!(ex.q, (-20.0 - -30.0) / r_tot, max_relative = 1e-7);
    }

    #[test]
    fn zero_driving_force() {
        let spec = SystemSpec::default();
        let ex = capsule_exchange(&spec, -30.0, -30.0, Some(0.3), None, &NewtonOptions::default()).unwrap();
        assert_eq!(ex.q, 0.0);
        let ex = capsule_exchange(&spec, -30.0, -30.0, None, None, &NewtonOptions::default()).unwrap();
        assert_eq!(ex.q, 0.0);
    }

    #[test]
    fn equal_temperatures_give_churchill_floor() {
        let spec = SystemSpec::default();
        let ex = capsule_exchange(&spec, -30.0, -30.0, Some(0.3), None, &NewtonOptions::default()).unwrap();
        let props = spec.intermediate(-30.0);
        let d = 2.0 * spec.capsule.r_outer();
        assert_relative_eq!(ex.alpha_ext, 2.0 * props.kappa / d, max_relative = 1e-12);
    }
}
