use crate::error::Result;

/// Autonomous ODE system with optional event functions.
///
/// An event fires when the boolean `g > 0` changes value across a step.
pub trait OdeSystem {
    fn derivative(&mut self, y: &[f64]) -> Result<Vec<f64>>;

    fn events(&mut self, _y: &[f64]) -> Result<Vec<f64>> {
        Ok(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub y: Vec<f64>,
    /// Length of the step actually taken; shorter than requested when an
    /// event fired.
    pub dt_taken: f64,
    /// Indices of the events whose sign flipped at the end of the step.
    pub fired: Vec<usize>,
}

pub fn rk4_step<S: OdeSystem + ?Sized>(sys: &mut S, y: &[f64], dt: f64) -> Result<Vec<f64>> {
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(x, d)| x + s * d).collect()
    };
    let k1 = sys.derivative(y)?;
    let k2 = sys.derivative(&axpy(y, &k1, 0.5 * dt))?;
    let k3 = sys.derivative(&axpy(y, &k2, 0.5 * dt))?;
    let k4 = sys.derivative(&axpy(y, &k3, dt))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn flipped(g0: &[f64], g1: &[f64]) -> Vec<usize> {
    g0.iter()
        .zip(g1)
        .enumerate()
        .filter(|(_, (a, b))| (**a > 0.0) != (**b > 0.0))
        .map(|(i, _)| i)
        .collect()
}

/// One classical RK4 step of length `dt`. If any event flips during the
/// step, the crossing is bracketed by bisection to `event_tol` and the step
/// is truncated at the upper end of the bracket.
pub fn integrate_rk4<S: OdeSystem + ?Sized>(
    sys: &mut S,
    y: &[f64],
    dt: f64,
    event_tol: f64,
) -> Result<StepOutcome> {
    let g0 = sys.events(y)?;
    let y1 = rk4_step(sys, y, dt)?;
    let g1 = sys.events(&y1)?;
    let fired = flipped(&g0, &g1);
    if fired.is_empty() {
        return Ok(StepOutcome { y: y1, dt_taken: dt, fired });
    }
    let (mut lo, mut hi) = (0.0, dt);
    let (mut y_hi, mut g_hi) = (y1, g1);
    while hi - lo > event_tol {
        let mid = 0.5 * (lo + hi);
        let y_mid = rk4_step(sys, y, mid)?;
        let g_mid = sys.events(&y_mid)?;
        if flipped(&g0, &g_mid).is_empty() {
            lo = mid;
        } else {
            hi = mid;
            y_hi = y_mid;
            g_hi = g_mid;
        }
    }
    Ok(StepOutcome {
        fired: flipped(&g0, &g_hi),
        y: y_hi,
        dt_taken: hi,
    })
}
