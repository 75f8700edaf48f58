//! Material constants and property evaluation.
//!
//! PCM state functions are indexed by specific enthalpy. The latent zone is
//! the closed interval `[h_minus, h_plus]`; inside it the temperature is pinned
//! at the melting point and density/conductivity blend linearly with the
//! layer charge ratio.
//!
//! Fluid properties come from a [`PropertyModel`]: each property varies
//! linearly in temperature across an operating window and is held constant
//! outside it.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermodynamic constants of the phase change material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcmSpec {
    /// J/(kg·K)
    pub cp_liquid: f64,
    /// J/(kg·K)
    pub cp_solid: f64,
    /// J/kg
    pub h_lat: f64,
    /// °C
    pub t_lat: f64,
    /// W/(m·K)
    pub kappa_liquid: f64,
    /// W/(m·K)
    pub kappa_solid: f64,
    /// Multiplier on `kappa_liquid` accounting for natural convection cells
    /// inside the molten region.
    pub kappa_eff_multiplier: f64,
    /// kg/m³
    pub rho_liquid: f64,
    /// kg/m³
    pub rho_solid: f64,
    /// Enthalpy at the solid edge of the latent zone, J/kg. Only a reference
    /// level.
    pub h_lat_minus_ref: f64,
}

impl Default for PcmSpec {
    fn default() -> Self {
        Self {
            cp_liquid: 1990.0,
            cp_solid: 1390.0,
            h_lat: 145_000.0,
            t_lat: -30.0,
            kappa_liquid: 0.15,
            kappa_solid: 0.25,
            kappa_eff_multiplier: 2.5,
            rho_liquid: 880.0,
            rho_solid: 970.0,
            h_lat_minus_ref: 0.0,
        }
    }
}

impl PcmSpec {
    pub fn h_minus(&self) -> f64 {
        self.h_lat_minus_ref
    }

    pub fn h_plus(&self) -> f64 {
        self.h_lat_minus_ref + self.h_lat
    }

    /// Effective conductivity of the molten PCM.
    pub fn kappa_eff_liquid(&self) -> f64 {
        self.kappa_eff_multiplier * self.kappa_liquid
    }

    /// True when `h` lies in the closed latent interval.
    pub fn is_latent(&self, h: f64) -> bool {
        h >= self.h_minus() && h <= self.h_plus()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cp_liquid", self.cp_liquid),
            ("cp_solid", self.cp_solid),
            ("h_lat", self.h_lat),
            ("kappa_liquid", self.kappa_liquid),
            ("kappa_solid", self.kappa_solid),
            ("rho_liquid", self.rho_liquid),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!("pcm.{name} must be positive, got {v}")));
            }
        }
        if self.rho_solid <= self.rho_liquid {
            return Err(Error::InvalidSpec(
                "pcm.rho_solid must exceed pcm.rho_liquid".into(),
            ));
        }
        if !(1.0..=3.0).contains(&self.kappa_eff_multiplier) {
            return Err(Error::InvalidSpec(format!(
                "pcm.kappa_eff_multiplier must lie in [1, 3], got {}",
                self.kappa_eff_multiplier
            )));
        }
        if !self.t_lat.is_finite() || !self.h_lat_minus_ref.is_finite() {
            return Err(Error::InvalidSpec("pcm temperatures must be finite".into()));
        }
        Ok(())
    }
}

/// Spherical capsule geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapsuleGeometry {
    /// PCM radius when fully molten, m.
    pub r_max: f64,
    /// PCM radius when fully frozen, m.
    pub r_min: f64,
    /// Polymer wall thickness, m.
    pub e_wall: f64,
    /// W/(m·K)
    pub kappa_wall: f64,
    pub n_capsules: u32,
}

impl Default for CapsuleGeometry {
    fn default() -> Self {
        Self {
            r_max: 0.0285,
            r_min: 0.02759,
            e_wall: 0.0036,
            kappa_wall: 0.2,
            n_capsules: 400,
        }
    }
}

impl CapsuleGeometry {
    /// Outer radius of the capsule wall.
    pub fn r_outer(&self) -> f64 {
        self.r_max + self.e_wall
    }

    /// Frozen radius implied by mass conservation of a sealed capsule.
    pub fn r_min_from_mass(&self, pcm: &PcmSpec) -> f64 {
        self.r_max * (pcm.rho_liquid / pcm.rho_solid).cbrt()
    }

    /// PCM mass in one capsule, kg.
    pub fn pcm_mass(&self, pcm: &PcmSpec) -> f64 {
        pcm.rho_liquid * sphere_volume(self.r_max)
    }

    pub fn validate(&self, pcm: &PcmSpec) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min < self.r_max) {
            return Err(Error::InvalidSpec("capsule requires 0 < r_min < r_max".into()));
        }
        if !(self.e_wall > 0.0 && self.kappa_wall > 0.0) {
            return Err(Error::InvalidSpec(
                "capsule.e_wall and capsule.kappa_wall must be positive".into(),
            ));
        }
        if self.n_capsules == 0 {
            return Err(Error::InvalidSpec("capsule.n_capsules must be positive".into()));
        }
        let implied = self.r_min_from_mass(pcm);
        if ((self.r_min - implied) / implied).abs() > 1e-3 {
            return Err(Error::InvalidSpec(format!(
                "capsule.r_min = {} disagrees with mass conservation ({implied:.6})",
                self.r_min
            )));
        }
        Ok(())
    }
}

/// A bundle of identical straight pipes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipeSpec {
    pub r_inner: f64,
    pub e_wall: f64,
    pub length: f64,
    pub count: u32,
    pub kappa_wall: f64,
}

impl Default for PipeSpec {
    fn default() -> Self {
        Self {
            r_inner: 0.0218,
            e_wall: 0.0036,
            length: 0.8,
            count: 50,
            kappa_wall: 45.0,
        }
    }
}

impl PipeSpec {
    pub fn validate(&self, name: &str) -> Result<()> {
        let ok = self.r_inner > 0.0
            && self.e_wall > 0.0
            && self.length > 0.0
            && self.count > 0
            && self.kappa_wall > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("{name}: all pipe fields must be positive")))
        }
    }
}

/// Saturation data of the refrigerant at the evaporating pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefrigerantSpec {
    /// Latent heat of vaporisation, J/kg.
    pub h_lat: f64,
    pub rho_sat_liquid: f64,
    pub rho_sat_vapour: f64,
    /// Surface tension, N/m.
    pub sigma: f64,
    /// Saturated-liquid enthalpy, J/kg.
    pub h_sat_liquid: f64,
    /// Mean vapour quality of the two-phase zone.
    pub chi_mean: f64,
    /// Evaporating pressure, Pa.
    pub p: f64,
    /// Saturation temperature, °C.
    pub t_sat: f64,
}

impl Default for RefrigerantSpec {
    fn default() -> Self {
        Self {
            h_lat: 197_770.0,
            rho_sat_liquid: 1291.60,
            rho_sat_vapour: 6.76,
            sigma: 0.01336,
            h_sat_liquid: 145_257.0,
            chi_mean: 0.7775,
            p: 126_500.0,
            t_sat: -41.08,
        }
    }
}

impl RefrigerantSpec {
    /// Saturated-vapour enthalpy, J/kg.
    pub fn h_sat_vapour(&self) -> f64 {
        self.h_sat_liquid + self.h_lat
    }

    pub fn quality(&self, h: f64) -> f64 {
        (h - self.h_sat_liquid) / self.h_lat
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.chi_mean) {
            return Err(Error::InvalidSpec("refrigerant.chi_mean must lie in [0, 1]".into()));
        }
        if !(self.rho_sat_liquid > self.rho_sat_vapour && self.rho_sat_vapour > 0.0) {
            return Err(Error::InvalidSpec(
                "refrigerant requires rho_sat_liquid > rho_sat_vapour > 0".into(),
            ));
        }
        if !(self.h_lat > 0.0 && self.sigma > 0.0 && self.p > 0.0) {
            return Err(Error::InvalidSpec(
                "refrigerant.h_lat, sigma and p must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Evaluated properties of a fluid at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidProps {
    pub rho: f64,
    pub cp: f64,
    pub kappa: f64,
    pub mu: f64,
    /// Volumetric expansion coefficient, 1/K.
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
}

/// Tank-level constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TankSpec {
    /// Intermediate fluid mass, kg.
    pub m_int: f64,
    /// Intermediate fluid pressure, Pa.
    pub p_int: f64,
    pub g: f64,
    /// °C; environmental exchange is neglected.
    pub t_env: f64,
}

impl Default for TankSpec {
    fn default() -> Self {
        Self {
            m_int: 56.37,
            p_int: 101_325.0,
            g: 9.81,
            t_env: 20.0,
        }
    }
}

impl TankSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m_int > 0.0 && self.g > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidSpec("tank.m_int and tank.g must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluidId {
    Intermediate,
    Secondary,
    RefrigerantVapour,
    RefrigerantSatLiquid,
}

impl std::str::FromStr for FluidId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intermediate" => Ok(FluidId::Intermediate),
            "secondary" => Ok(FluidId::Secondary),
            "refrigerant_vapour" => Ok(FluidId::RefrigerantVapour),
            "refrigerant_sat_liquid" => Ok(FluidId::RefrigerantSatLiquid),
            other => Err(Error::Config {
                path: "fluid".into(),
                line: 0,
                column: 0,
                message: format!("unknown fluid id `{other}`"),
            }),
        }
    }
}

/// Values at the low and high ends of the temperature window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearProperty {
    pub at_low: f64,
    pub at_high: f64,
}

impl LinearProperty {
    pub const fn new(at_low: f64, at_high: f64) -> Self {
        Self { at_low, at_high }
    }

    pub const fn constant(v: f64) -> Self {
        Self { at_low: v, at_high: v }
    }

    fn eval(&self, frac: f64) -> f64 {
        self.at_low + (self.at_high - self.at_low) * frac
    }

    fn is_positive(&self) -> bool {
        self.at_low > 0.0 && self.at_high > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidTable {
    pub rho: LinearProperty,
    pub cp: LinearProperty,
    pub kappa: LinearProperty,
    pub mu: LinearProperty,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<LinearProperty>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<LinearProperty>,
}

impl FluidTable {
    fn validate(&self, name: &str) -> Result<()> {
        let mut ok = self.rho.is_positive()
            && self.cp.is_positive()
            && self.kappa.is_positive()
            && self.mu.is_positive();
        ok &= self.beta.is_none_or(|b| b.is_positive());
        ok &= self.sigma.is_none_or(|s| s.is_positive());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("properties.{name}: values must be positive")))
        }
    }
}

/// Linear-in-temperature property model over `[t_low, t_high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropertyModel {
    pub t_low: f64,
    pub t_high: f64,
    pub intermediate: FluidTable,
    pub secondary: FluidTable,
    pub refrigerant_vapour: FluidTable,
    pub refrigerant_sat_liquid: FluidTable,
}

impl Default for PropertyModel {
    fn default() -> Self {
        Self {
            t_low: -41.08,
            t_high: -20.0,
            intermediate: FluidTable {
                rho: LinearProperty::new(1113.2, 1080.1),
                cp: LinearProperty::new(2720.2, 3159.6),
                kappa: LinearProperty::new(0.3905, 0.4213),
                mu: LinearProperty::new(0.1174, 0.066),
                beta: Some(LinearProperty::new(0.00044, 0.00057)),
                sigma: None,
            },
            secondary: FluidTable {
                rho: LinearProperty::new(1068.4, 1040.7),
                cp: LinearProperty::new(3411.4, 3567.1),
                kappa: LinearProperty::new(0.3624, 0.3692),
                mu: LinearProperty::new(0.2213, 0.0073),
                beta: None,
                sigma: None,
            },
            refrigerant_vapour: FluidTable {
                rho: LinearProperty::new(6.76, 6.40),
                cp: LinearProperty::new(803.19, 810.69),
                kappa: LinearProperty::new(0.0087, 0.0095),
                mu: LinearProperty::new(9.5e-6, 1.03e-5),
                beta: None,
                sigma: None,
            },
            refrigerant_sat_liquid: FluidTable {
                rho: LinearProperty::constant(1291.6),
                cp: LinearProperty::constant(1290.0),
                kappa: LinearProperty::constant(0.0866),
                mu: LinearProperty::constant(2.9e-4),
                beta: None,
                sigma: Some(LinearProperty::constant(0.01336)),
            },
        }
    }
}

static WINDOW_WARNED: AtomicBool = AtomicBool::new(false);

impl PropertyModel {
    pub fn table(&self, fluid: FluidId) -> &FluidTable {
        match fluid {
            FluidId::Intermediate => &self.intermediate,
            FluidId::Secondary => &self.secondary,
            FluidId::RefrigerantVapour => &self.refrigerant_vapour,
            FluidId::RefrigerantSatLiquid => &self.refrigerant_sat_liquid,
        }
    }

    /// Properties of `fluid` at temperature `t` (°C). Pressure is accepted
    /// for interface symmetry; the linear model is pressure independent.
    pub fn fluid_properties(&self, fluid: FluidId, t: f64, _p: f64) -> FluidProps {
        let span = self.t_high - self.t_low;
        let raw = (t - self.t_low) / span;
        let frac = raw.clamp(0.0, 1.0);
        if raw != frac {
            if WINDOW_WARNED.swap(true, Ordering::Relaxed) {
                log::debug!("{fluid:?} evaluated at {t:.3} °C outside property window; clamped");
            } else {
                log::warn!(
                    "{fluid:?} evaluated at {t:.3} °C outside property window [{}, {}]; clamped \
                     (further occurrences logged at debug level)",
                    self.t_low,
                    self.t_high
                );
            }
        }
        let tab = self.table(fluid);
        FluidProps {
            rho: tab.rho.eval(frac),
            cp: tab.cp.eval(frac),
            kappa: tab.kappa.eval(frac),
            mu: tab.mu.eval(frac),
            beta: tab.beta.map(|b| b.eval(frac)),
            sigma: tab.sigma.map(|s| s.eval(frac)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_high > self.t_low) {
            return Err(Error::InvalidSpec("properties.t_high must exceed t_low".into()));
        }
        self.intermediate.validate("intermediate")?;
        self.secondary.validate("secondary")?;
        self.refrigerant_vapour.validate("refrigerant_vapour")?;
        self.refrigerant_sat_liquid.validate("refrigerant_sat_liquid")?;
        if self.intermediate.beta.is_none() {
            return Err(Error::InvalidSpec(
                "properties.intermediate.beta is required for natural convection".into(),
            ));
        }
        Ok(())
    }
}

pub fn sphere_volume(r: f64) -> f64 {
    4.0 / 3.0 * std::f64::consts::PI * r * r * r
}

pub fn pcm_temperature_of_enthalpy(h: f64, spec: &PcmSpec) -> f64 {
    let (lo, hi) = (spec.h_minus(), spec.h_plus());
    if h < lo {
        spec.t_lat - (lo - h) / spec.cp_solid
    } else if h > hi {
        spec.t_lat + (h - hi) / spec.cp_liquid
    } else {
        spec.t_lat
    }
}

/// `(h_plus − h) / (h_plus − h_minus)`; unclamped.
pub fn layer_charge_ratio(h: f64, spec: &PcmSpec) -> f64 {
    (spec.h_plus() - h) / spec.h_lat
}

pub fn pcm_density_of_enthalpy(h: f64, spec: &PcmSpec) -> f64 {
    let g = layer_charge_ratio(h, spec).clamp(0.0, 1.0);
    spec.rho_liquid + (spec.rho_solid - spec.rho_liquid) * g
}

pub fn pcm_conductivity_of_enthalpy(h: f64, spec: &PcmSpec) -> f64 {
    let g = layer_charge_ratio(h, spec).clamp(0.0, 1.0);
    let k_liq = spec.kappa_eff_liquid();
    k_liq + (spec.kappa_solid - k_liq) * g
}
