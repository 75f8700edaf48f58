//! Thermal resistances and effectiveness-NTU relations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::properties::PipeSpec;

/// Series resistances between a fluid and its surroundings, K/W.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResistanceStack {
    pub r_conv_int: f64,
    pub r_cond_wall: f64,
    pub r_conv_ext: f64,
    /// Conduction through a spherical PCM shell; zero for pipes.
    pub r_cond_internal_shell: f64,
}

impl ResistanceStack {
    pub fn total(&self) -> f64 {
        self.r_conv_int + self.r_cond_wall + self.r_conv_ext + self.r_cond_internal_shell
    }
}

/// Conduction through a spherical shell. Returns
/// [`Error::InfiniteResistance`] when `r_inner` is zero.
pub fn r_cond_spherical_shell(r_inner: f64, r_outer: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::domain(format!("spherical shell: kappa={kappa}")));
    }
    if r_inner == 0.0 {
        return Err(Error::InfiniteResistance);
    }
    if !(r_inner > 0.0) || r_inner > r_outer {
        return Err(Error::domain(format!(
            "spherical shell: need 0 < r_inner <= r_outer, got {r_inner}, {r_outer}"
        )));
    }
    Ok((1.0 / r_inner - 1.0 / r_outer) / (4.0 * PI * kappa))
}

pub fn r_conv_sphere_ext(alpha: f64, r_surface: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("sphere convection: alpha={alpha}")));
    }
    Ok(1.0 / (alpha * 4.0 * PI * r_surface * r_surface))
}

/// Wall conduction of a pipe section covering `zone_fraction` of its length.
pub fn r_pipe_wall(pipe: &PipeSpec, zone_fraction: f64) -> Result<f64> {
    if zone_fraction == 0.0 {
        return Err(Error::InfiniteResistance);
    }
    let r = pipe.r_inner;
    Ok(((r + pipe.e_wall) / r).ln() / (pipe.kappa_wall * 2.0 * PI * pipe.length * zone_fraction))
}

pub fn r_pipe_stack(
    alpha_int: f64,
    alpha_ext: f64,
    pipe: &PipeSpec,
    zone_fraction: f64,
) -> Result<ResistanceStack> {
    if zone_fraction == 0.0 {
        return Err(Error::InfiniteResistance);
    }
    if !(zone_fraction > 0.0) {
        return Err(Error::domain(format!("pipe stack: zone fraction {zone_fraction}")));
    }
    if !(alpha_int > 0.0 && alpha_ext > 0.0) {
        return Err(Error::domain(format!(
            "pipe stack: alphas must be positive, got {alpha_int}, {alpha_ext}"
        )));
    }
    let len = pipe.length * zone_fraction;
    let r = pipe.r_inner;
    Ok(ResistanceStack {
        r_conv_int: 1.0 / (alpha_int * 2.0 * PI * r * len),
        r_cond_wall: r_pipe_wall(pipe, zone_fraction)?,
        r_conv_ext: 1.0 / (alpha_ext * 2.0 * PI * (r + pipe.e_wall) * len),
        r_cond_internal_shell: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arrangement {
    Parallel,
    Counter,
    InfiniteReservoir,
}

pub fn effectiveness(ntu: f64, c_rat: f64, arrangement: Arrangement) -> Result<f64> {
    if !(ntu >= 0.0) || !(0.0..=1.0).contains(&c_rat) {
        return Err(Error::domain(format!("effectiveness: NTU={ntu}, C_rat={c_rat}")));
    }
    let eps = match arrangement {
        Arrangement::InfiniteReservoir => -(-ntu).exp_m1(),
        Arrangement::Parallel => -(-ntu * (1.0 + c_rat)).exp_m1() / (1.0 + c_rat),
        Arrangement::Counter => {
            if c_rat == 1.0 {
                ntu / (1.0 + ntu)
            } else {
                let e = (-ntu * (1.0 - c_rat)).exp();
                (1.0 - e) / (1.0 - c_rat * e)
            }
        }
    };
    Ok(eps)
}

pub fn ntu(resistance_total: f64, c_min: f64) -> Result<f64> {
    if !(resistance_total > 0.0 && c_min > 0.0) {
        return Err(Error::domain(format!("NTU: R={resistance_total}, C={c_min}")));
    }
    Ok(1.0 / (resistance_total * c_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn sphere_shell_values() {
        assert_eq!(r_cond_spherical_shell(0.0285, 0.0285, 0.2).unwrap(), 0.0);
        let oracle = (1.0 / 0.0285 - 1.0 / 0.0321) / (4.0 * PI * 0.2);
        let v = r_cond_spherical_shell(0.0285, 0.0321, 0.2).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
        assert!((v - 1.566).abs() < 1e-3);
        let v2 = r_cond_spherical_shell(0.0285, 0.0321, 0.4).unwrap();
        assert_relative_eq!(v2, v / 2.0, max_relative = 1e-12);
        assert!(matches!(r_cond_spherical_shell(0.0, 0.01, 0.2), Err(Error::InfiniteResistance)));
        assert!(matches!(r_cond_spherical_shell(0.02, 0.01, 0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn sphere_convection_values() {
        let v = r_conv_sphere_ext(100.0, 0.0321).unwrap();
        assert_relative_eq!(v, 1.0 / (100.0 * 4.0 * PI * 0.0321 * 0.0321), max_relative = 1e-12);
        assert!((v - 0.772).abs() < 1e-3);
        let big = r_conv_sphere_ext(100.0, 4.0 * 0.0321).unwrap();
        assert_relative_eq!(big, v / 16.0, max_relative = 1e-12);
        assert!(r_conv_sphere_ext(0.0, 0.03).is_err());
    }

    #[test]
    fn pipe_stack_values() {
        let p = PipeSpec::default();
        let full = r_pipe_stack(100.0, 50.0, &p, 1.0).unwrap();
        let half = r_pipe_stack(100.0, 50.0, &p, 0.5).unwrap();
        assert_relative_eq!(half.r_conv_int, 2.0 * full.r_conv_int, max_relative = 1e-12);
        assert_relative_eq!(half.r_cond_wall, 2.0 * full.r_cond_wall, max_relative = 1e-12);
        assert_relative_eq!(half.r_conv_ext, 2.0 * full.r_conv_ext, max_relative = 1e-12);
        let oracle = (0.0254f64 / 0.0218).ln() / (45.0 * 2.0 * PI * 0.8);
        assert_relative_eq!(full.r_cond_wall, oracle, max_relative = 1e-12);
        assert!((full.r_cond_wall - 6.757e-4).abs() < 1e-6);
        let same = r_pipe_stack(80.0, 80.0, &p, 1.0).unwrap();
        assert!(same.r_conv_int > same.r_conv_ext);
        assert!(matches!(r_pipe_stack(1.0, 1.0, &p, 0.0), Err(Error::InfiniteResistance)));
    }

    #[test]
    fn effectiveness_values() {
        for a in [Arrangement::Parallel, Arrangement::Counter, Arrangement::InfiniteReservoir] {
            assert_eq!(effectiveness(0.0, 0.5, a).unwrap(), 0.0);
        }
        assert_relative_eq!(
            effectiveness(2f64.ln(), 0.0, Arrangement::InfiniteReservoir).unwrap(),
            0.5,
            max_relative = 1e-12
        );
        assert_relative_eq!(effectiveness(1.0, 1.0, Arrangement::Counter).unwrap(), 0.5);
    }

    #[test]
    fn ntu_values() {
        assert_eq!(ntu(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(ntu(0.5, 4.0).unwrap(), 0.5);
        assert!(ntu(0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn effectiveness_monotone_bounded(n in 0.0f64..50.0, d in 1e-6f64..5.0, c in 0.0f64..1.0) {
            for a in [Arrangement::Parallel, Arrangement::Counter, Arrangement::InfiniteReservoir] {
                let e0 = effectiveness(n, c, a).unwrap();
                let e1 = effectiveness(n + d, c, a).unwrap();
                prop_assert!(e1 >= e0 - 1e-15);
                prop_assert!((0.0..=1.0).contains(&e0));
            }
        }

        #[test]
        fn small_c_rat_collapses(n in 0.0f64..20.0) {
            let inf = effectiveness(n, 0.0, Arrangement::InfiniteReservoir).unwrap();
            let par = effectiveness(n, 1e-12, Arrangement::Parallel).unwrap();
            let cnt = effectiveness(n, 1e-12, Arrangement::Counter).unwrap();
            prop_assert!((par - inf).abs() < 1e-9);
            prop_assert!((cnt - inf).abs() < 1e-9);
        }

        #[test]
        fn stack_terms_nonnegative(ai in 1.0f64..1e3, ae in 1.0f64..1e3, z in 0.01f64..1.0) {
            let s = r_pipe_stack(ai, ae, &PipeSpec::default(), z).unwrap();
            prop_assert!(s.r_conv_int >= 0.0 && s.r_cond_wall >= 0.0 && s.r_conv_ext >= 0.0);
            let sum = s.r_conv_int + s.r_cond_wall + s.r_conv_ext;
            prop_assert!((s.total() - sum).abs() <= 1e-15 * sum);
        }

        #[test]
        fn shell_inverse_in_kappa(ri in 0.001f64..0.02, dr in 0.0001f64..0.01, k in 0.05f64..5.0) {
            let a = r_cond_spherical_shell(ri, ri + dr, k).unwrap();
            let b = r_cond_spherical_shell(ri, ri + dr, 2.0 * k).unwrap();
            prop_assert!((a - 2.0 * b).abs() <= 1e-12 * a);
        }
    }
}
