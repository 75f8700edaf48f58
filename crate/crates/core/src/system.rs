//! Plant description shared by both capsule models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::properties::{
    CapsuleGeometry, FluidId, FluidProps, PcmSpec, PipeSpec, PropertyModel, RefrigerantSpec,
    TankSpec,
};

/// Every constant describing the tank, its capsules, pipes and fluids.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSpec {
    pub pcm: PcmSpec,
    pub capsule: CapsuleGeometry,
    pub refrigerant_pipe: PipeSpec,
    pub secondary_pipe: PipeSpec,
    pub refrigerant: RefrigerantSpec,
    pub tank: TankSpec,
    pub properties: PropertyModel,
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        self.pcm.validate()?;
        self.capsule.validate(&self.pcm)?;
        self.refrigerant_pipe.validate("refrigerant_pipe")?;
        self.secondary_pipe.validate("secondary_pipe")?;
        self.refrigerant.validate()?;
        self.tank.validate()?;
        self.properties.validate()
    }

    pub fn intermediate(&self, t: f64) -> FluidProps {
        self.properties.fluid_properties(FluidId::Intermediate, t, self.tank.p_int)
    }

    pub fn n_pcm(&self) -> f64 {
        f64::from(self.capsule.n_capsules)
    }

    pub fn n_ref(&self) -> f64 {
        f64::from(self.refrigerant_pipe.count)
    }

    pub fn n_sec(&self) -> f64 {
        f64::from(self.secondary_pipe.count)
    }
}

/// Boundary conditions applied to the tank during one scenario step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatingInputs {
    /// Total refrigerant mass flow, kg/s.
    pub mdot_ref: f64,
    /// Total secondary mass flow, kg/s.
    pub mdot_sec: f64,
    pub t_sec_in: f64,
    pub t_ref_in: f64,
    pub h_ref_in: f64,
    pub t_env: f64,
}

impl Default for OperatingInputs {
    fn default() -> Self {
        Self::nominal_charge()
    }
}

impl OperatingInputs {
    pub fn nominal_charge() -> Self {
        Self {
            mdot_ref: 0.00918,
            mdot_sec: 0.0,
            t_sec_in: -20.0,
            t_ref_in: -41.08,
            h_ref_in: 255_000.0,
            t_env: 20.0,
        }
    }

    pub fn nominal_discharge() -> Self {
        Self {
            mdot_ref: 0.0,
            mdot_sec: 0.074,
            ..Self::nominal_charge()
        }
    }

    pub fn standby() -> Self {
        Self {
            mdot_ref: 0.0,
            mdot_sec: 0.0,
            ..Self::nominal_charge()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mdot_ref >= 0.0 && self.mdot_sec >= 0.0) {
            return Err(Error::InvalidSpec("mass flows must be non-negative".into()));
        }
        let finite = [self.t_sec_in, self.t_ref_in, self.h_ref_in, self.t_env];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("operating inputs must be finite".into()));
        }
        Ok(())
    }
}

/// Operating regime of one scenario step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Charge,
    Discharge,
    Standby,
}

impl Process {
    pub fn as_str(self) -> &'static str {
        match self {
            Process::Charge => "charge",
            Process::Discharge => "discharge",
            Process::Standby => "standby",
        }
    }
}
