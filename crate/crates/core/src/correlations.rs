//! Dimensionless groups and Nusselt-number correlations.
//!
//! External natural convection uses Churchill (spheres) and McAdams
//! (vertical pipes). Internal single-phase convection switches between the
//! Baehr developing-laminar form and Gnielinski at `Re = 3000`. Evaporating
//! flow uses Klimenko's generalised method.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::properties::{FluidProps, PipeSpec, RefrigerantSpec};

/// Laminar/turbulent boundary for internal flow (inclusive on the laminar side).
pub const RE_LAMINAR_MAX: f64 = 3000.0;
pub const MCADAMS_RA_MIN: f64 = 1e4;
pub const MCADAMS_RA_SPLIT: f64 = 1e9;
pub const MCADAMS_RA_MAX: f64 = 1e13;
pub const MCADAMS_RA_FLOOR: f64 = 1.0;
pub const KLIMENKO_PHI_BUBBLY: f64 = 12_000.0;
pub const KLIMENKO_PHI_ANNULAR: f64 = 20_000.0;

/// Groups describing one natural-convection evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DimensionlessSet {
    pub gr: f64,
    pub pr: f64,
    pub ra: f64,
    pub re: f64,
    pub gz: f64,
    pub nu: f64,
}

pub fn grashof(beta: f64, dt_abs: f64, l: f64, rho: f64, mu: f64, g: f64) -> Result<f64> {
    if !(mu > 0.0) || beta < 0.0 || dt_abs < 0.0 || l < 0.0 || rho < 0.0 || g < 0.0 {
        return Err(Error::domain(format!(
            "grashof: invalid inputs beta={beta}, dT={dt_abs}, L={l}, rho={rho}, mu={mu}, g={g}"
        )));
    }
    let nu = mu / rho;
    Ok(g * beta * dt_abs * l.powi(3) / (nu * nu))
}

pub fn prandtl(cp: f64, mu: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::domain(format!("prandtl: kappa must be positive, got {kappa}")));
    }
    Ok(cp * mu / kappa)
}

pub fn nusselt_sphere_churchill(ra: f64, pr: f64) -> Result<f64> {
    if !(ra >= 0.0) || !(pr > 0.0) {
        return Err(Error::domain(format!("churchill: Ra={ra}, Pr={pr}")));
    }
    let shape = (1.0 + (0.469 / pr).powf(9.0 / 16.0)).powf(4.0 / 9.0);
    Ok(2.0 + 0.589 * ra.powf(0.25) / shape)
}

static MCADAMS_WARNED: AtomicBool = AtomicBool::new(false);

/// McAdams correlation for a vertical cylinder. Outside `[1e4, 1e13]` the
/// nearest endpoint branch is extended; `Ra` is floored at
/// [`MCADAMS_RA_FLOOR`] so the coefficient stays positive.
pub fn nusselt_vertical_pipe_mcadams(ra: f64) -> f64 {
    let ra_eff = if ra.is_nan() { MCADAMS_RA_FLOOR } else { ra.max(MCADAMS_RA_FLOOR) };
    if !(MCADAMS_RA_MIN..=MCADAMS_RA_MAX).contains(&ra) {
        if MCADAMS_WARNED.swap(true, Ordering::Relaxed) {
            log::debug!("McAdams Ra={ra:e} outside [1e4, 1e13]; endpoint branch extended");
        } else {
            log::warn!(
                "McAdams Ra={ra:e} outside [1e4, 1e13]; endpoint branch extended \
                 (further occurrences logged at debug level)"
            );
        }
    }
    if ra_eff <= MCADAMS_RA_SPLIT {
        0.59 * ra_eff.powf(0.25)
    } else {
        0.10 * ra_eff.cbrt()
    }
}

pub fn friction_factor(re: f64) -> Result<f64> {
    if !(re > 0.0) {
        return Err(Error::domain(format!("friction factor: Re={re}")));
    }
    let bracket = 0.790 * re.ln() - 1.64;
    if !(bracket > 0.0) {
        return Err(Error::domain(format!("friction factor: non-positive bracket at Re={re}")));
    }
    Ok(bracket.powi(-2))
}

pub fn graetz(r: f64, l_effective: f64, pr: f64, re: f64) -> Result<f64> {
    if !(l_effective > 0.0) {
        return Err(Error::domain(format!("graetz: length must be positive, got {l_effective}")));
    }
    Ok(2.0 * r / l_effective * pr * re)
}

/// Baehr developing-laminar Nusselt number. `gz = 0` returns the
/// fully developed limit.
pub fn nusselt_baehr(pr: f64, gz: f64) -> f64 {
    if gz == 0.0 {
        return 3.66;
    }
    let a = 3.66 / (2.264 * gz.powf(-1.0 / 3.0) + 1.7 * gz.powf(-2.0 / 3.0)).tanh();
    let b = 0.0499 * gz * (1.0 / gz).tanh();
    let c = (2.432 * pr.powf(1.0 / 6.0) * gz.powf(-1.0 / 6.0)).tanh();
    (a + b) / c
}

pub fn nusselt_gnielinski(re: f64, pr: f64) -> Result<f64> {
    let f8 = friction_factor(re)? / 8.0;
    Ok(f8 * (re - 1000.0) * pr / (1.0 + 12.7 * f8.sqrt() * (pr.powf(2.0 / 3.0) - 1.0)))
}

pub fn nusselt_internal(re: f64, pr: f64, gz: f64) -> Result<f64> {
    if !(re >= 0.0) || !(pr > 0.0) || !(gz >= 0.0) {
        return Err(Error::domain(format!("internal Nu: Re={re}, Pr={pr}, Gz={gz}")));
    }
    if re <= RE_LAMINAR_MAX {
        Ok(nusselt_baehr(pr, gz))
    } else {
        nusselt_gnielinski(re, pr)
    }
}

fn phi_from_quality_change(
    zeta: f64,
    geom: &PipeSpec,
    chi: f64,
    dchi: f64,
    rho_l: f64,
    rho_v: f64,
) -> f64 {
    let bracket = 1.0 + chi * (rho_l / rho_v - 1.0);
    2.0 * geom.length * zeta / (geom.r_inner * dchi) * bracket * (rho_v / rho_l).cbrt()
}

/// Klimenko's φ in the mass-flux-free form.
pub fn klimenko_phi(
    zeta: f64,
    geom: &PipeSpec,
    chi: f64,
    chi_in: f64,
    chi_out: f64,
    rho_l: f64,
    rho_v: f64,
) -> Result<f64> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::domain(format!("klimenko phi: zeta={zeta} outside (0, 1]")));
    }
    if !(chi_out > chi_in) {
        return Err(Error::domain(format!(
            "klimenko phi: chi_out={chi_out} must exceed chi_in={chi_in}"
        )));
    }
    Ok(phi_from_quality_change(zeta, geom, chi, chi_out - chi_in, rho_l, rho_v))
}

/// Flow state of the evaporating zone of one pipe bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseFlow {
    /// Total mass flow over all pipes, kg/s.
    pub mdot_total: f64,
    /// Heat absorbed by the two-phase zone of one pipe, W.
    pub q_two_phase: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlimenkoBranch {
    Bubbly,
    Mixed,
    Annular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlimenkoDetail {
    pub phi: f64,
    pub branch: KlimenkoBranch,
    pub nu_bubbly: f64,
    pub nu_annular: f64,
    pub alpha_prime: f64,
    pub alpha_liquid: f64,
    pub alpha: f64,
}

pub fn klimenko_branch(phi: f64) -> KlimenkoBranch {
    if phi <= KLIMENKO_PHI_BUBBLY {
        KlimenkoBranch::Bubbly
    } else if phi <= KLIMENKO_PHI_ANNULAR {
        KlimenkoBranch::Mixed
    } else {
        KlimenkoBranch::Annular
    }
}

/// Cube-root blend of the two-phase and liquid-only coefficients.
pub fn cube_root_blend(alpha_prime: f64, alpha_liquid: f64) -> f64 {
    (alpha_prime.powi(3) + alpha_liquid.powi(3)).cbrt()
}

pub fn klimenko_detail(
    flow: &TwoPhaseFlow,
    geom: &PipeSpec,
    refr: &RefrigerantSpec,
    liquid: &FluidProps,
    kappa_wall: f64,
    g: f64,
) -> Result<KlimenkoDetail> {
    if !(flow.zeta > 0.0 && flow.zeta <= 1.0) {
        return Err(Error::domain(format!("klimenko: zeta={} outside (0, 1]", flow.zeta)));
    }
    if !(flow.mdot_total > 0.0) || geom.r_inner <= 0.0 || geom.length <= 0.0 || geom.count == 0 {
        return Err(Error::domain("klimenko: zero flow or degenerate geometry"));
    }
    let (rho_l, rho_v) = (refr.rho_sat_liquid, refr.rho_sat_vapour);
    let (kl, cpl, mul) = (liquid.kappa, liquid.cp, liquid.mu);
    let r = geom.r_inner;
    let mdot_pipe = flow.mdot_total / f64::from(geom.count);
    let chi = refr.chi_mean;

    let q = flow.q_two_phase.abs() / (2.0 * PI * r * geom.length * flow.zeta);
    let l_cap = (refr.sigma / (g * (rho_l - rho_v))).sqrt();
    let q_red = q * l_cap / (refr.h_lat * (rho_v / rho_l) * (kl / cpl));
    let p_red = refr.p * l_cap / refr.sigma;
    let bracket = 1.0 + chi * (rho_l / rho_v - 1.0);
    let re_prime = mdot_pipe * l_cap / (mul * PI * r * r) * bracket;
    let pr_l = prandtl(cpl, mul, kl)?;
    let wall_ratio = kappa_wall / kl;

    let nu_bubbly =
        0.0076 * q_red.powf(0.6) * p_red.sqrt() * pr_l.powf(-1.0 / 3.0) * wall_ratio.powf(0.15);
    let nu_annular = 0.087
        * re_prime.powf(0.6)
        * pr_l.powf(1.0 / 6.0)
        * (rho_v / rho_l).powf(0.2)
        * wall_ratio.powf(0.09);

    let dchi = flow.q_two_phase.abs() / (mdot_pipe * refr.h_lat);
    let phi = if dchi > 0.0 {
        phi_from_quality_change(flow.zeta, geom, chi, dchi, rho_l, rho_v)
    } else {
        f64::INFINITY
    };
    let branch = klimenko_branch(phi);
    let nu = match branch {
        KlimenkoBranch::Bubbly => nu_bubbly,
        KlimenkoBranch::Annular => nu_annular,
        KlimenkoBranch::Mixed => nu_bubbly.max(nu_annular),
    };
    let alpha_prime = kl / l_cap * nu;

    let re_liq = 2.0 * mdot_pipe / (mul * PI * r) * (1.0 - chi);
    let gz_liq = graetz(r, geom.length * flow.zeta, pr_l, re_liq)?;
    let alpha_liquid = kl / (2.0 * r) * nusselt_internal(re_liq, pr_l, gz_liq)?;

    Ok(KlimenkoDetail {
        phi,
        branch,
        nu_bubbly,
        nu_annular,
        alpha_prime,
        alpha_liquid,
        alpha: cube_root_blend(alpha_prime, alpha_liquid),
    })
}

/// Internal convective coefficient of the evaporating zone, W/(m²·K).
pub fn klimenko_two_phase_alpha(
    flow: &TwoPhaseFlow,
    geom: &PipeSpec,
    refr: &RefrigerantSpec,
    liquid: &FluidProps,
    kappa_wall: f64,
    g: f64,
) -> Result<f64> {
    klimenko_detail(flow, geom, refr, liquid, kappa_wall, g).map(|d| d.alpha)
}

/// Natural convection from a vertical pipe section of length `l` into a
/// fluid with properties `props`, W/(m²·K).
pub fn pipe_free_convection(props: &FluidProps, dt_abs: f64, l: f64, g: f64) -> Result<(f64, DimensionlessSet)> {
    let beta = props.beta.ok_or_else(|| Error::domain("free convection needs beta"))?;
    let gr = grashof(beta, dt_abs, l, props.rho, props.mu, g)?;
    let pr = prandtl(props.cp, props.mu, props.kappa)?;
    let ra = gr * pr;
    let nu = nusselt_vertical_pipe_mcadams(ra);
    let set = DimensionlessSet { gr, pr, ra, nu, ..Default::default() };
    Ok((props.kappa / l * nu, set))
}

/// Natural convection from a sphere of outer diameter `d`, W/(m²·K).
pub fn sphere_free_convection(props: &FluidProps, dt_abs: f64, d: f64, g: f64) -> Result<(f64, DimensionlessSet)> {
    let beta = props.beta.ok_or_else(|| Error::domain("free convection needs beta"))?;
    let gr = grashof(beta, dt_abs, d, props.rho, props.mu, g)?;
    let pr = prandtl(props.cp, props.mu, props.kappa)?;
    let ra = gr * pr;
    let nu = nusselt_sphere_churchill(ra, pr)?;
    let set = DimensionlessSet { gr, pr, ra, nu, ..Default::default() };
    Ok((props.kappa / d * nu, set))
}

/// Forced convection inside a pipe carrying `mdot_total` split over
/// `geom.count` pipes, over a heated length `l`, W/(m²·K).
pub fn pipe_forced_convection(
    props: &FluidProps,
    mdot_total: f64,
    geom: &PipeSpec,
    l: f64,
) -> Result<(f64, DimensionlessSet)> {
    let r = geom.r_inner;
    let re = 2.0 * mdot_total / (props.mu * PI * r * f64::from(geom.count));
    let pr = prandtl(props.cp, props.mu, props.kappa)?;
    let gz = graetz(r, l, pr, re)?;
    let nu = nusselt_internal(re, pr, gz)?;
    let set = DimensionlessSet { pr, re, gz, nu, ..Default::default() };
    Ok((props.kappa / (2.0 * r) * nu, set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grashof_values() {
        assert_eq!(grashof(5e-4, 0.0, 0.057, 1100.0, 0.09, 9.81).unwrap(), 0.0);
        let a = grashof(5e-4, 5.0, 0.057, 1100.0, 0.09, 9.81).unwrap();
        let b = grashof(5e-4, 5.0, 0.114, 1100.0, 0.09, 9.81).unwrap();
        assert_relative_eq!(b / a, 8.0, max_relative = 1e-12);
        // 9.81·5e-4·5·0.057³ / (0.09/1100)²
        let oracle = 9.81 * 5e-4 * 5.0 * 0.057f64.powi(3) / (0.09f64 / 1100.0).powi(2);
        assert_relative_eq!(a, oracle, max_relative = 1e-12);
        assert!((a - 679.0).abs() < 1.0);
    }

    #[test]
    fn prandtl_values() {
        assert_eq!(prandtl(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(prandtl(2940.0, 0.09, 0.40).unwrap(), 661.5, max_relative = 1e-12);
        assert_eq!(prandtl(2940.0, 0.0, 0.40).unwrap(), 0.0);
        assert!(prandtl(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn churchill_values() {
        assert_eq!(nusselt_sphere_churchill(0.0, 661.5).unwrap(), 2.0);
        let oracle = 2.0 + 0.589 * 1e6f64.powf(0.25) / (1.0 + (0.0469f64).powf(0.5625)).powf(4.0 / 9.0);
        let v = nusselt_sphere_churchill(1e6, 10.0).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
        assert!((v - 19.31).abs() < 0.01);
        assert!(nusselt_sphere_churchill(-1.0, 1.0).is_err());
    }

    #[test]
    fn mcadams_values() {
        assert_relative_eq!(nusselt_vertical_pipe_mcadams(1e8), 59.0, max_relative = 1e-12);
        assert_relative_eq!(nusselt_vertical_pipe_mcadams(1e12), 1000.0, max_relative = 1e-12);
        assert_relative_eq!(nusselt_vertical_pipe_mcadams(1e9), 0.59 * 1e9f64.powf(0.25), max_relative = 1e-12);
        assert_relative_eq!(nusselt_vertical_pipe_mcadams(10.0), 0.59 * 10f64.powf(0.25), max_relative = 1e-12);
        assert_relative_eq!(nusselt_vertical_pipe_mcadams(1e15), 0.10 * 1e5, max_relative = 1e-12);
        assert_eq!(nusselt_vertical_pipe_mcadams(0.0), 0.59);
        assert_eq!(nusselt_vertical_pipe_mcadams(f64::NAN), 0.59);
    }

    #[test]
    fn friction_values() {
        assert!((friction_factor(1e4).unwrap() - 0.03148).abs() < 1e-5);
        assert!((friction_factor(1e5).unwrap() - 0.01799).abs() < 1e-5);
        let re = (2.64f64 / 0.790).exp();
        assert_relative_eq!(friction_factor(re).unwrap(), 1.0, max_relative = 1e-12);
        assert!(friction_factor(1.0).is_err());
    }

    #[test]
    fn graetz_values() {
        assert_eq!(graetz(0.0218, 0.8, 10.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(graetz(0.0218, 0.8, 10.0, 100.0).unwrap(), 54.5, max_relative = 1e-12);
        let a = graetz(0.0218, 0.8, 10.0, 100.0).unwrap();
        let b = graetz(0.0218, 0.4, 10.0, 100.0).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
        assert!(graetz(0.0218, 0.0, 10.0, 100.0).is_err());
    }

    #[test]
    fn internal_branches() {
        let nu = nusselt_internal(100.0, 5.0, 1e-7).unwrap();
        assert!((nu - 3.66).abs() / 3.66 < 1e-3);
        // Re = 3000 is laminar: result depends on Gz.
        let a = nusselt_internal(3000.0, 5.0, 1.0).unwrap();
        let b = nusselt_internal(3000.0, 5.0, 100.0).unwrap();
        assert!(a != b);
        // Gnielinski oracle evaluated by hand.
        let f: f64 = (0.790 * 1e4f64.ln() - 1.64).powi(-2);
        let oracle = f / 8.0 * 9000.0 * 5.0 / (1.0 + 12.7 * (f / 8.0).sqrt() * (5f64.powf(2.0 / 3.0) - 1.0));
        let v = nusselt_internal(1e4, 5.0, 123.0).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
        assert!((v - 69.91).abs() < 0.01);
    }

    #[test]
    fn phi_values() {
        let g = PipeSpec::default();
        let a = klimenko_phi(0.5, &g, 0.7775, 0.5549, 1.0, 1291.6, 6.76).unwrap();
        let b = klimenko_phi(1.0, &g, 0.7775, 0.5549, 1.0, 1291.6, 6.76).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
        let d = klimenko_phi(1.0, &g, 0.7775, 0.5549, 1.0, 5.0, 5.0).unwrap();
        assert_relative_eq!(d, 2.0 * 0.8 / (0.0218 * 0.4451), max_relative = 1e-12);
        let oracle = 2.0 * 0.8 / (0.0218 * 0.4451)
            * (1.0 + 0.7775 * (1291.6 / 6.76 - 1.0))
            * (6.76f64 / 1291.6).powf(1.0 / 3.0);
        assert_relative_eq!(b, oracle, max_relative = 1e-12);
        assert!((b - 4259.4).abs() < 1.0);
        assert!(klimenko_phi(1.0, &g, 0.7775, 0.6, 0.6, 1291.6, 6.76).is_err());
    }

    #[test]
    fn branch_thresholds() {
        assert_eq!(klimenko_branch(12_000.0), KlimenkoBranch::Bubbly);
        assert_eq!(klimenko_branch(12_000.1), KlimenkoBranch::Mixed);
        assert_eq!(klimenko_branch(20_000.0), KlimenkoBranch::Mixed);
        assert_eq!(klimenko_branch(20_000.1), KlimenkoBranch::Annular);
    }

    #[test]
    fn blend_identities() {
        assert_eq!(cube_root_blend(0.0, 7.5), 7.5);
        assert_relative_eq!(cube_root_blend(3.0, 3.0), 3.0 * 2f64.cbrt(), max_relative = 1e-12);
    }

    fn nominal_liquid() -> FluidProps {
        FluidProps { rho: 1291.6, cp: 1290.0, kappa: 0.0866, mu: 2.9e-4, beta: None, sigma: Some(0.01336) }
    }

    #[test]
    fn klimenko_nominal_in_range() {
        let g = PipeSpec::default();
        let r = RefrigerantSpec::default();
        let q2 = 0.00918 / 50.0 * (r.h_sat_vapour() - 255_000.0);
        for zeta in [0.15, 0.25, 0.4, 0.6] {
            let flow = TwoPhaseFlow { mdot_total: 0.00918, q_two_phase: q2, zeta };
            let d = klimenko_detail(&flow, &g, &r, &nominal_liquid(), 45.0, 9.81).unwrap();
            assert_eq!(d.branch, KlimenkoBranch::Bubbly);
            assert!(d.alpha > 78.1 * 0.8 && d.alpha < 429.4 * 1.2, "zeta {zeta}: {}", d.alpha);
        }
    }

    proptest! {
        #[test]
        fn churchill_at_least_two_and_increasing(ra in 0.0f64..1e10, d in 1e-3f64..1e6, pr in 0.1f64..1e4) {
            let a = nusselt_sphere_churchill(ra, pr).unwrap();
            let b = nusselt_sphere_churchill(ra + d, pr).unwrap();
            prop_assert!(a >= 2.0);
            prop_assert!(b > a);
        }

        #[test]
        fn friction_decreasing(re in 29.0f64..1e7, f in 1.001f64..10.0) {
            prop_assert!(friction_factor(re * f).unwrap() < friction_factor(re).unwrap());
        }

        #[test]
        fn mixed_band_is_max_of_branches(zeta in 0.01f64..1.0, q in 1.0f64..60.0) {
            let g = PipeSpec::default();
            let r = RefrigerantSpec::default();
            let flow = TwoPhaseFlow { mdot_total: 0.00918, q_two_phase: q, zeta };
            let d = klimenko_detail(&flow, &g, &r, &nominal_liquid(), 45.0, 9.81).unwrap();
            let l_cap = (r.sigma / (9.81 * (r.rho_sat_liquid - r.rho_sat_vapour))).sqrt();
            let nu = d.alpha_prime * l_cap / 0.0866;
            let expect = match d.branch {
                KlimenkoBranch::Bubbly => d.nu_bubbly,
                KlimenkoBranch::Annular => d.nu_annular,
                KlimenkoBranch::Mixed => d.nu_bubbly.max(d.nu_annular),
            };
            prop_assert!((nu - expect).abs() <= 1e-9 * expect);
            let m = d.alpha_prime.max(d.alpha_liquid);
            prop_assert!(d.alpha >= m * 2f64.powf(-2.0 / 3.0) - 1e-9);
            prop_assert!(d.alpha <= m * 2f64.cbrt() + 1e-9);
        }

        #[test]
        fn baehr_continuous_in_gz(pr in 0.5f64..1000.0, gz in 1e-3f64..1e4) {
            let a = nusselt_baehr(pr, gz);
            let b = nusselt_baehr(pr, gz * (1.0 + 1e-9));
            prop_assert!((a - b).abs() <= 1e-6 * a);
        }
    }
}
