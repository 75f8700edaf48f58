//! Layered capsule model: equal-mass spherical layers, each carrying a
//! specific enthalpy, coupled by conduction between layer centroids.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::continuous::capsule::{capsule_exchange, capsule_wall_resistance};
use crate::continuous::pipes::{refrigerant_submodel, RefMode};
use crate::continuous::{close_tank_balance, AlgebraicSolution, HtcSnapshot, TankWarmStart};
use crate::engine::rk4::{integrate_rk4, OdeSystem};
use crate::engine::{Event, EventKind, SolverOptions};
use crate::error::{Error, Result};
use crate::network::{r_cond_spherical_shell, r_conv_sphere_ext};
use crate::properties::{
    pcm_conductivity_of_enthalpy, pcm_density_of_enthalpy, pcm_temperature_of_enthalpy,
    sphere_volume, CapsuleGeometry, PcmSpec,
};
use crate::system::{OperatingInputs, Process, SystemSpec};

/// RK4 is stable on the negative real axis up to |λ·dt| ≈ 2.785; sub-steps
/// stay below that with some margin.
const RK4_STABLE_FACTOR: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteState {
    /// Specific enthalpy per layer, innermost first, J/kg.
    pub h_layers: Vec<f64>,
    pub t_int: f64,
}

impl DiscreteState {
    pub fn uniform(n_lay: usize, h: f64, t_int: f64) -> Result<Self> {
        if n_lay < 2 {
            return Err(Error::InvalidSpec(format!("n_lay must be at least 2, got {n_lay}")));
        }
        Ok(Self {
            h_layers: vec![h; n_lay],
            t_int,
        })
    }

    pub fn discharged(spec: &SystemSpec, n_lay: usize) -> Result<Self> {
        Self::uniform(n_lay, spec.pcm.h_plus(), spec.pcm.t_lat)
    }

    pub fn charged(spec: &SystemSpec, n_lay: usize) -> Result<Self> {
        Self::uniform(n_lay, spec.pcm.h_minus(), spec.pcm.t_lat)
    }

    pub fn n_lay(&self) -> usize {
        self.h_layers.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGeometry {
    /// Boundary radii `r_0 = 0, r_1, …, r_n`, m.
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    /// Volumetric-median radius of each layer, m.
    pub centroids: Vec<f64>,
}

pub fn layer_mass(spec: &PcmSpec, geom: &CapsuleGeometry, n_lay: usize) -> f64 {
    spec.rho_liquid * sphere_volume(geom.r_max) / n_lay as f64
}

pub fn layer_radii(h_layers: &[f64], spec: &PcmSpec, geom: &CapsuleGeometry) -> LayerGeometry {
    let n = h_layers.len();
    let m = layer_mass(spec, geom, n);
    let mut radii = Vec::with_capacity(n + 1);
    let mut volumes = Vec::with_capacity(n);
    let mut centroids = Vec::with_capacity(n);
    radii.push(0.0);
    let mut r3 = 0.0f64;
    for &h in h_layers {
        let v = m / pcm_density_of_enthalpy(h, spec);
        let next = r3 + 3.0 * v / (4.0 * PI);
        volumes.push(v);
        centroids.push((0.5 * (r3 + next)).cbrt());
        radii.push(next.cbrt());
        r3 = next;
    }
    LayerGeometry {
        radii,
        volumes,
        centroids,
    }
}

/// Conduction resistance from the centroid of layer `k` (0-based) to the
/// centroid of layer `k + 1`, or to the capsule inner wall for the
/// outermost layer.
pub fn layer_conduction_resistance(k: usize, geometry: &LayerGeometry, h_layers: &[f64], spec: &PcmSpec) -> Result<f64> {
    let n = h_layers.len();
    if k >= n {
        return Err(Error::domain(format!("layer index {k} out of range for {n} layers")));
    }
    let edge = geometry.radii[k + 1];
    let inner = r_cond_spherical_shell(
        geometry.centroids[k],
        edge,
        pcm_conductivity_of_enthalpy(h_layers[k], spec),
    )?;
    if k + 1 == n {
        return Ok(inner);
    }
    let outer = r_cond_spherical_shell(
        edge,
        geometry.centroids[k + 1],
        pcm_conductivity_of_enthalpy(h_layers[k + 1], spec),
    )?;
    Ok(inner + outer)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerFlows {
    /// Heat entering each layer through its outer boundary, W.
    pub q_ext: Vec<f64>,
    /// Heat leaving each layer through its inner boundary, W.
    pub q_int: Vec<f64>,
    pub q_pcm: f64,
}

/// Inter-layer flows plus the outermost coupling through the given resistance
/// to the intermediate fluid.
fn flows_with_outer(h_layers: &[f64], spec: &PcmSpec, geometry: &LayerGeometry, q_pcm: f64) -> Result<LayerFlows> {
    let n = h_layers.len();
    let temps: Vec<f64> = h_layers.iter().map(|&h| pcm_temperature_of_enthalpy(h, spec)).collect();
    let mut q_ext = vec![0.0; n];
    let mut q_int = vec![0.0; n];
    for k in 0..n - 1 {
        let dt = temps[k + 1] - temps[k];
        let q = if dt == 0.0 {
            0.0
        } else {
            dt / layer_conduction_resistance(k, geometry, h_layers, spec)?
        };
        q_ext[k] = q;
        q_int[k + 1] = q;
    }
    q_ext[n - 1] = q_pcm;
    Ok(LayerFlows { q_ext, q_int, q_pcm })
}

/// Layer flows for a prescribed external convection coefficient.
pub fn layer_heat_flows(state: &DiscreteState, spec: &SystemSpec, alpha_pcm_ext: f64) -> Result<LayerFlows> {
    let pcm = &spec.pcm;
    let geometry = layer_radii(&state.h_layers, pcm, &spec.capsule);
    let n = state.n_lay();
    let r_out = layer_conduction_resistance(n - 1, &geometry, &state.h_layers, pcm)?
        + capsule_wall_resistance(spec)?
        + r_conv_sphere_ext(alpha_pcm_ext, spec.capsule.r_outer())?;
    let t_n = pcm_temperature_of_enthalpy(state.h_layers[n - 1], pcm);
    flows_with_outer(&state.h_layers, pcm, &geometry, (state.t_int - t_n) / r_out)
}

pub fn charge_ratio_discrete(state: &DiscreteState, spec: &PcmSpec) -> f64 {
    let n = state.n_lay() as f64;
    let h_plus = spec.h_plus();
    state.h_layers.iter().map(|h| h_plus - h).sum::<f64>() / (n * spec.h_lat)
}

/// Energy stored in one capsule, J, on the PCM enthalpy reference.
pub fn capsule_energy_discrete(state: &DiscreteState, spec: &PcmSpec, geom: &CapsuleGeometry) -> f64 {
    layer_mass(spec, geom, state.n_lay()) * state.h_layers.iter().sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct DiscreteModel {
    pub spec: SystemSpec,
    pub solver: SolverOptions,
    pub state: DiscreteState,
    warm: TankWarmStart,
}

struct LayerSystem<'a> {
    spec: &'a SystemSpec,
    solver: &'a SolverOptions,
    inputs: &'a OperatingInputs,
    warm: &'a mut TankWarmStart,
    m_lay: f64,
}

fn solve_layers(
    h: &[f64],
    t_int: f64,
    spec: &SystemSpec,
    inputs: &OperatingInputs,
    solver: &SolverOptions,
    warm: &mut TankWarmStart,
) -> Result<(AlgebraicSolution, HtcSnapshot, LayerFlows)> {
    let pcm = &spec.pcm;
    let n = h.len();
    let geometry = layer_radii(h, pcm, &spec.capsule);
    let r_half = layer_conduction_resistance(n - 1, &geometry, h, pcm)?;
    let t_n = pcm_temperature_of_enthalpy(h[n - 1], pcm);
    let ex = capsule_exchange(spec, t_int, t_n, Some(r_half), warm.capsule, &solver.newton)?;
    if ex.q != 0.0 {
        warm.capsule = Some(ex.dt_ext);
    }
    let flows = flows_with_outer(h, pcm, &geometry, ex.q)?;
    let (sol, htc) = close_tank_balance(spec, inputs, t_int, t_n, &ex, warm, solver)?;
    Ok((sol, htc, flows))
}

impl OdeSystem for LayerSystem<'_> {
    fn derivative(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        let n = y.len() - 1;
        let (sol, _, flows) = solve_layers(&y[..n], y[n], self.spec, self.inputs, self.solver, self.warm)?;
        let mut d: Vec<f64> = (0..n).map(|k| (flows.q_ext[k] - flows.q_int[k]) / self.m_lay).collect();
        d.push(sol.dt_int_dt);
        Ok(d)
    }

    fn events(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        let n = y.len() - 1;
        let (lo, hi) = (self.spec.pcm.h_minus(), self.spec.pcm.h_plus());
        let mut g = Vec::with_capacity(2 * n + 1);
        for &h in &y[..n] {
            g.push(h - lo);
            g.push(h - hi);
        }
        if let Some(r) = refrigerant_submodel(self.spec, self.inputs, y[n], &mut self.warm.pipes, &self.solver.newton)? {
            g.push(r.mode_margin);
        }
        Ok(g)
    }
}

impl DiscreteModel {
    pub fn new(spec: SystemSpec, solver: SolverOptions, state: DiscreteState) -> Result<Self> {
        if state.n_lay() < 2 {
            return Err(Error::InvalidSpec(format!("n_lay must be at least 2, got {}", state.n_lay())));
        }
        Ok(Self {
            spec,
            solver,
            state,
            warm: TankWarmStart::default(),
        })
    }

    pub fn m_lay(&self) -> f64 {
        layer_mass(&self.spec.pcm, &self.spec.capsule, self.state.n_lay())
    }

    pub fn charge_ratio(&self) -> f64 {
        charge_ratio_discrete(&self.state, &self.spec.pcm)
    }

    pub fn capsule_energy(&self) -> f64 {
        capsule_energy_discrete(&self.state, &self.spec.pcm, &self.spec.capsule)
    }

    pub fn geometry(&self) -> LayerGeometry {
        layer_radii(&self.state.h_layers, &self.spec.pcm, &self.spec.capsule)
    }

    pub fn evaluate(&mut self, inputs: &OperatingInputs) -> Result<(AlgebraicSolution, HtcSnapshot)> {
        let (sol, htc, _) = solve_layers(
            &self.state.h_layers,
            self.state.t_int,
            &self.spec,
            inputs,
            &self.solver,
            &mut self.warm,
        )?;
        Ok((sol, htc))
    }

    pub fn layer_flows(&mut self, inputs: &OperatingInputs) -> Result<LayerFlows> {
        let (_, _, flows) = solve_layers(
            &self.state.h_layers,
            self.state.t_int,
            &self.spec,
            inputs,
            &self.solver,
            &mut self.warm,
        )?;
        Ok(flows)
    }

    /// True when every layer has left the latent zone on the side the
    /// process is driving towards.
    pub fn cycle_complete(&self, process: Process) -> bool {
        let pcm = &self.spec.pcm;
        match process {
            Process::Charge => self.state.h_layers.iter().all(|&h| h < pcm.h_minus()),
            Process::Discharge => self.state.h_layers.iter().all(|&h| h > pcm.h_plus()),
            Process::Standby => false,
        }
    }

    /// Sub-step length keeping explicit RK4 stable on the fastest layer
    /// conduction time constant.
    pub fn stable_substep(&self) -> Result<f64> {
        let pcm = &self.spec.pcm;
        let h = &self.state.h_layers;
        let n = h.len();
        let geometry = layer_radii(h, pcm, &self.spec.capsule);
        let mut g = Vec::with_capacity(n);
        for k in 0..n - 1 {
            g.push(1.0 / layer_conduction_resistance(k, &geometry, h, pcm)?);
        }
        g.push(1.0 / (layer_conduction_resistance(n - 1, &geometry, h, pcm)? + capsule_wall_resistance(&self.spec)?));
        let cp = pcm.cp_solid.min(pcm.cp_liquid);
        let m = self.m_lay();
        let tau = (0..n)
            .map(|k| {
                let inner = if k == 0 { 0.0 } else { g[k - 1] };
                m * cp / (inner + g[k])
            })
            .fold(f64::INFINITY, f64::min);
        Ok(RK4_STABLE_FACTOR * tau)
    }

    /// Advances the state by `dt` seconds starting at `t0`.
    pub fn step(&mut self, inputs: &OperatingInputs, t0: f64, dt: f64) -> Result<Vec<Event>> {
        if !(dt > 0.0) {
            return Err(Error::domain(format!("step length must be positive, got {dt}")));
        }
        let n = self.state.n_lay();
        let sub = self.stable_substep()?;
        let n_sub = (dt / sub).ceil().max(1.0);
        let h_sub = dt / n_sub;
        let m_lay = self.m_lay();
        let mut events = Vec::new();
        let mut elapsed = 0.0;
        while dt - elapsed > 1e-9 * dt {
            let span = h_sub.min(dt - elapsed);
            let mut y = self.state.h_layers.clone();
            y.push(self.state.t_int);
            let mode_before = self.mode(inputs, self.state.t_int)?;
            let mut sys = LayerSystem {
                spec: &self.spec,
                solver: &self.solver,
                inputs,
                warm: &mut self.warm,
                m_lay,
            };
            let out = integrate_rk4(&mut sys, &y, span, self.solver.event_tol)?;
            elapsed += out.dt_taken;
            let t = t0 + elapsed;
            for &idx in &out.fired {
                if idx < 2 * n {
                    let layer = idx / 2 + 1;
                    let rising = out.y[idx / 2] > y[idx / 2];
                    let kind = match (idx % 2 == 0, rising) {
                        (true, false) => EventKind::LayerFrozen { layer },
                        (true, true) => EventKind::LayerMeltOnset { layer },
                        (false, false) => EventKind::LayerFreezeOnset { layer },
                        (false, true) => EventKind::LayerMelted { layer },
                    };
                    events.push(Event { t, kind });
                } else {
                    let now = self.mode(inputs, out.y[n])?;
                    if now != mode_before {
                        if let Some(m) = now {
                            events.push(Event {
                                t,
                                kind: EventKind::ModeSwitch { to_mode: m.number() },
                            });
                        }
                    }
                }
            }
            self.state.h_layers.copy_from_slice(&out.y[..n]);
            self.state.t_int = out.y[n];
        }
        Ok(events)
    }

    fn mode(&mut self, inputs: &OperatingInputs, t_int: f64) -> Result<Option<RefMode>> {
        Ok(refrigerant_submodel(&self.spec, inputs, t_int, &mut self.warm.pipes, &self.solver.newton)?
            .map(|r| r.mode))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec() -> SystemSpec {
        SystemSpec::default()
    }

    #[test]
    fn radii_endpoints() {
        let s = spec();
        let liq = layer_radii(&[s.pcm.h_plus(); 10], &s.pcm, &s.capsule);
        assert_relative_eq!(*liq.radii.last().unwrap(), 0.0285, max_relative = 1e-12);
        let sol = layer_radii(&[s.pcm.h_minus(); 10], &s.pcm, &s.capsule);
        let oracle = (880.0f64 / 970.0).cbrt() * 0.0285;
        assert_relative_eq!(*sol.radii.last().unwrap(), oracle, max_relative = 1e-12);
        assert!((sol.radii.last().unwrap() - 0.02759).abs() / 0.02759 < 5e-4);
        assert_eq!(liq.radii[0], 0.0);
        assert!(liq.radii.windows(2).all(|w| w[1] > w[0]));
        let single = layer_radii(&[s.pcm.h_plus()], &s.pcm, &s.capsule);
        assert_relative_eq!(single.radii[1], (3.0 * single.volumes[0] / (4.0 * PI)).cbrt(), max_relative = 1e-12);
    }

    #[test]
    fn resistances_compose() {
        let s = spec();
        let h = vec![s.pcm.h_minus() - 1000.0; 10];
        let g = layer_radii(&h, &s.pcm, &s.capsule);
        let total: f64 = (0..10).map(|k| layer_conduction_resistance(k, &g, &h, &s.pcm).unwrap()).sum();
        let single = r_cond_spherical_shell(g.centroids[0], g.radii[10], s.pcm.kappa_solid).unwrap();
        assert_relative_eq!(total, single, max_relative = 1e-10);
    }

    #[test]
    fn resistance_split_by_layer_conductivity() {
        let s = spec();
        let pcm = s.pcm;
        let h = vec![pcm.h_minus() - 1000.0, pcm.h_minus() - 1000.0, pcm.h_plus() + 1000.0, pcm.h_plus() + 1000.0];
        let g = layer_radii(&h, &pcm, &s.capsule);
        let base = layer_conduction_resistance(1, &g, &h, &pcm).unwrap();
        let outer_half = r_cond_spherical_shell(g.radii[2], g.centroids[2], pcm.kappa_eff_liquid()).unwrap();
        let mut stiffer = pcm;
        stiffer.kappa_solid *= 2.0;
        let doubled = layer_conduction_resistance(1, &g, &h, &stiffer).unwrap();
        assert_relative_eq!(doubled - outer_half, (base - outer_half) / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn isothermal_and_latent_flows_vanish() {
        let s = spec();
        let st = DiscreteState::uniform(10, s.pcm.h_minus() + 0.5 * s.pcm.h_lat, s.pcm.t_lat).unwrap();
        let f = layer_heat_flows(&st, &s, 50.0).unwrap();
        assert!(f.q_ext.iter().chain(&f.q_int).all(|q| *q == 0.0));
        assert_eq!(f.q_pcm, 0.0);
        let mut mixed = st.clone();
        mixed.h_layers[3] = s.pcm.h_minus() + 10.0;
        mixed.h_layers[4] = s.pcm.h_plus() - 10.0;
        let f = layer_heat_flows(&mixed, &s, 50.0).unwrap();
        assert_eq!(f.q_ext[3], 0.0);
    }

    #[test]
    fn charging_draws_heat() {
        let s = spec();
        let mut st = DiscreteState::discharged(&s, 10).unwrap();
        st.t_int = -35.0;
        let f = layer_heat_flows(&st, &s, 50.0).unwrap();
        assert!(f.q_pcm < 0.0);
        for k in 0..9 {
            assert_eq!(f.q_ext[k], f.q_int[k + 1]);
        }
        assert_eq!(f.q_int[0], 0.0);
    }

    #[test]
    fn gamma_values() {
        let s = spec();
        let p = &s.pcm;
        assert_eq!(charge_ratio_discrete(&DiscreteState::discharged(&s, 10).unwrap(), p), 0.0);
        assert_eq!(charge_ratio_discrete(&DiscreteState::charged(&s, 10).unwrap(), p), 1.0);
        let mut half = DiscreteState::discharged(&s, 10).unwrap();
        for h in half.h_layers.iter_mut().take(5) {
            *h = p.h_minus();
        }
        assert_relative_eq!(charge_ratio_discrete(&half, p), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn latent_standby_is_fixed_point() {
        let s = spec();
        let st = DiscreteState::uniform(10, s.pcm.h_minus() + 0.3 * s.pcm.h_lat, s.pcm.t_lat).unwrap();
        let mut m = DiscreteModel::new(s, SolverOptions::default(), st.clone()).unwrap();
        m.step(&OperatingInputs::standby(), 0.0, 1.0).unwrap();
        assert_eq!(m.state, st);
    }

    #[test]
    fn too_few_layers_rejected() {
        assert!(DiscreteState::uniform(1, 0.0, -30.0).is_err());
    }

    #[test]
    fn energy_follows_capsule_flow() {
        let s = spec();
        let mut st = DiscreteState::discharged(&s, 10).unwrap();
        st.t_int = -33.0;
        let mut m = DiscreteModel::new(s, SolverOptions::default(), st).unwrap();
        let inputs = OperatingInputs::standby();
        let q0 = m.evaluate(&inputs).unwrap().0.q_pcm;
        let u0 = m.capsule_energy();
        m.step(&inputs, 0.0, 1.0).unwrap();
        let q1 = m.evaluate(&inputs).unwrap().0.q_pcm;
        let du = m.capsule_energy() - u0;
        assert_relative_eq!(du, 0.5 * (q0 + q1), max_relative = 1e-3);
    }

    proptest! {
        #[test]
        fn stuck_layer(n in 3usize..12, k in 1usize..10, f in 0.01f64..0.99, t in -40.0f64..-21.0) {
            prop_assume!(k + 1 < n);
            let s = spec();
            let p = s.pcm;
            let mut st = DiscreteState::uniform(n, p.h_minus() - 5000.0, t).unwrap();
            for j in k - 1..=k + 1 {
                st.h_layers[j] = p.h_minus() + f * p.h_lat * (0.5 + 0.2 * j as f64 / n as f64);
            }
            let flows = layer_heat_flows(&st, &s, 40.0).unwrap();
            prop_assert_eq!(flows.q_ext[k] - flows.q_int[k], 0.0);
        }

        #[test]
        fn radii_increase(hs in prop::collection::vec(-50_000.0f64..200_000.0, 2..30)) {
            let s = spec();
            let g = layer_radii(&hs, &s.pcm, &s.capsule);
            prop_assert!(g.radii.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(*g.radii.last().unwrap() <= s.capsule.r_max * (1.0 + 1e-6));
            prop_assert!(g.volumes.iter().all(|v| *v > 0.0));
        }
    }
}
