//! Doppler-induced asymmetry of the resonance and the resulting shift of a
//! two-point-sampled line centre.
//!
//! To first order in the damping `g` the evolved Gaussian moments change by
//! `dM_p/dg = -p_0 t + alpha t^2/2`, `dgamma_pp/dg = -2 gamma_pp t - D t^2`
//! and `dgamma_xp/dg = -gamma_xp t`; the overlap follows by the chain rule.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::bloch::PulseParams;
use crate::error::{Error, Result};
use crate::metrology::find_working_point;
use crate::numerics::derivative;
use crate::phasespace::{evolve_gaussian, overlap_gaussian, FPParams, GaussianProbe, GaussianState};
use crate::recoil_coeffs::{diffusion, drift, drift_slope};

/// Largest `|g tbar|` accepted by the first-order expansion.
pub const PERTURBATIVE_LIMIT: f64 = 0.1;
/// `|dP/dDelta| Gamma` below this is treated as a flat flank.
pub const FLAT_FLANK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricOverlap {
    pub p_sym: f64,
    /// First-order change of `P` caused by `g`.
    pub delta_p: f64,
    /// `delta_p = (g tbar / 2) c p_sym`.
    pub c: f64,
}

/// `dP/dg` at `g = 0` for the self-overlap of `state`.
fn overlap_g_derivative(state: &GaussianState, fp: &FPParams) -> Result<(f64, f64)> {
    let undamped = FPParams { g: 0.0, ..*fp };
    let evolved = evolve_gaussian(state, &undamped)?;
    let sum = state.cov + evolved.cov;
    let inv = sum.try_inverse().ok_or(Error::SingularMatrix("covariance sum"))?;
    let d = state.mean - evolved.mean;
    let u = inv * d;
    let p = (-0.5 * d.dot(&u)).exp() / sum.determinant().sqrt();
    let t = fp.tbar;
    let dm_p = -state.mean[1] * t + 0.5 * fp.alpha * t * t;
    let dg_pp = -2.0 * state.cov[(1, 1)] * t - fp.d * t * t;
    let dg_xp = -state.cov[(0, 1)] * t;
    let g_mat: Matrix2<f64> = -0.5 * inv + 0.5 * u * u.transpose();
    let dlog = u[1] * dm_p + g_mat[(1, 1)] * dg_pp + 2.0 * g_mat[(0, 1)] * dg_xp;
    Ok((p, p * dlog))
}

/// Symmetric overlap and its first-order Doppler correction.
pub fn asymmetric_overlap(state: &GaussianState, fp: &FPParams) -> Result<AsymmetricOverlap> {
    fp.validate()?;
    let gt = (fp.g * fp.tbar).abs();
    if gt > PERTURBATIVE_LIMIT {
        return Err(Error::PerturbativeRegime { gt, limit: PERTURBATIVE_LIMIT });
    }
    let (p_sym, dp_dg) = overlap_g_derivative(state, fp)?;
    let c = if fp.tbar > 0.0 && p_sym > 0.0 { 2.0 * dp_dg / (fp.tbar * p_sym) } else { 0.0 };
    Ok(AsymmetricOverlap { p_sym, delta_p: fp.g * dp_dg, c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftOptions {
    pub p0: f64,
    /// Include the momentum diffusion; `false` gives the drift-only model.
    pub diffusion: bool,
    /// Force `g = 0` (no asymmetry).
    pub no_damping: bool,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self { p0: 0.5, diffusion: true, no_damping: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftResult {
    /// `delta P` on the positive flank.
    pub delta_p_asym: f64,
    pub c_const: f64,
    /// Mean of the two flank shifts, rad/s.
    pub shift: f64,
    pub shift_plus: f64,
    pub shift_minus: f64,
    /// `eta nu / (2 sqrt(ln(1/P0)))`, rad/s.
    pub shift_analytic: f64,
    pub tstar: f64,
    pub p_sym: f64,
    pub g: f64,
    /// `dP/dDelta` on the positive flank, s/rad.
    pub slope: f64,
    /// `dalpha/dDelta` on the positive flank, s/rad.
    pub drift_slope: f64,
    /// `|dP/dDelta| / (tbar* |dalpha/dDelta|)`.
    pub s_abs: f64,
}

impl ShiftResult {
    /// `|g| |c| / (4 |dalpha/dDelta|)`, which equals `|shift| |S|` at `P0 = 1/2`.
    pub fn inverse_law(&self) -> f64 {
        (self.g * self.c_const).abs() / (4.0 * self.drift_slope.abs())
    }
}

struct Flank {
    delta_p: f64,
    c: f64,
    p_sym: f64,
    g: f64,
    slope: f64,
    drift_slope: f64,
}

fn coefficients_at(pulse: &PulseParams, opts: &ShiftOptions) -> Result<(f64, f64)> {
    let a = drift(pulse)?;
    let d = if opts.diffusion { diffusion(pulse)? } else { 0.0 };
    Ok((a, d))
}

fn flank(state: &GaussianState, pulse: &PulseParams, tstar: f64, opts: &ShiftOptions) -> Result<Flank> {
    let (a, d) = coefficients_at(pulse, opts)?;
    let aslope = drift_slope(pulse)?;
    let g = if opts.no_damping { 0.0 } else { pulse.scaled_lamb_dicke() * pulse.mode_freq() * aslope };
    let asym = asymmetric_overlap(state, &FPParams::new(a, d, g, tstar)?)?;
    let p_of = |delta: f64| -> Result<f64> {
        let (a, d) = coefficients_at(&pulse.with_detuning(delta)?, opts)?;
        overlap_gaussian(state, &evolve_gaussian(state, &FPParams::new(a, d, 0.0, tstar)?)?)
    };
    let gamma = pulse.linewidth();
    let slope = derivative(p_of, pulse.detuning(), 1e-3 * gamma, 1e-6, 1e-3 / gamma, "dP/dDelta")?;
    if slope.abs() * gamma < FLAT_FLANK {
        return Err(Error::FlatFlank { slope });
    }
    Ok(Flank { delta_p: asym.delta_p, c: asym.c, p_sym: asym.p_sym, g, slope, drift_slope: aslope })
}

/// Shift of the line centre found by sampling both flanks at `P = p0`; the
/// pulse detuning selects the flank `|Delta_0|`.
pub fn two_point_shift(state: &GaussianState, pulse: &PulseParams, opts: &ShiftOptions) -> Result<ShiftResult> {
    if !(opts.p0 > 0.0 && opts.p0 < 1.0) {
        return Err(Error::invalid("p0", "working point must lie in (0, 1)"));
    }
    let d0 = pulse.detuning().abs();
    if d0 == 0.0 {
        return Err(Error::invalid("detuning", "two-point sampling needs a flank detuning"));
    }
    let plus = pulse.with_detuning(d0)?;
    let minus = pulse.with_detuning(-d0)?;
    let (a, d) = coefficients_at(&plus, opts)?;
    let wp = find_working_point(&GaussianProbe::self_overlap(*state), a, d, opts.p0)?;
    let fp_ = flank(state, &plus, wp.tstar, opts)?;
    let fm = flank(state, &minus, wp.tstar, opts)?;
    let shift_plus = -fp_.delta_p / fp_.slope;
    let shift_minus = -fm.delta_p / fm.slope;
    Ok(ShiftResult {
        delta_p_asym: fp_.delta_p,
        c_const: fp_.c,
        shift: 0.5 * (shift_plus + shift_minus),
        shift_plus,
        shift_minus,
        shift_analytic: pulse.lamb_dicke() * pulse.mode_freq() / (2.0 * (1.0 / opts.p0).ln().sqrt()),
        tstar: wp.tstar,
        p_sym: fp_.p_sym,
        g: fp_.g,
        slope: fp_.slope,
        drift_slope: fp_.drift_slope,
        s_abs: fp_.slope.abs() / (wp.tstar * fp_.drift_slope.abs()),
    })
}

/// Symmetric resonance value and Doppler asymmetry at one detuning for a
/// fixed interaction time.
pub fn resonance_point(state: &GaussianState, pulse: &PulseParams, tbar: f64, opts: &ShiftOptions) -> Result<AsymmetricOverlap> {
    let (a, d) = coefficients_at(pulse, opts)?;
    let g = if opts.no_damping {
        0.0
    } else {
        pulse.scaled_lamb_dicke() * pulse.mode_freq() * drift_slope(pulse)?
    };
    let fp = FPParams::new(a, d, g, tbar)?;
    if opts.no_damping {
        let (p_sym, _) = overlap_g_derivative(state, &fp)?;
        return Ok(AsymmetricOverlap { p_sym, delta_p: 0.0, c: 0.0 });
    }
    asymmetric_overlap(state, &fp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_damping_no_asymmetry() {
        let s = GaussianState::momentum_squeezed(0.7).unwrap();
        let fp = FPParams::new(0.02, 0.003, 0.0, 20.0).unwrap();
        let a = asymmetric_overlap(&s, &fp).unwrap();
        assert_eq!(a.delta_p, 0.0);
        let exact = overlap_gaussian(&s, &evolve_gaussian(&s, &fp).unwrap()).unwrap();
        assert!((a.p_sym - exact).abs() < 1e-15);
    }

    #[test]
    fn vacuum_without_diffusion_has_unit_constant() {
        let fp = FPParams::new(0.03, 0.0, 1e-3, 30.0).unwrap();
        let a = asymmetric_overlap(&GaussianState::vacuum(), &fp).unwrap();
        assert!((a.c - 1.0).abs() < 1e-12, "{}", a.c);
    }

    #[test]
    fn perturbative_regime_enforced() {
        let fp = FPParams::new(0.03, 0.0, 0.01, 20.0).unwrap();
        assert!(matches!(
            asymmetric_overlap(&GaussianState::vacuum(), &fp),
            Err(Error::PerturbativeRegime { .. })
        ));
    }

    #[test]
    fn derivative_matches_exact_damped_solution() {
        let s = GaussianState::squeezed(0.9, 1.3).unwrap();
        let fp = FPParams::new(0.02, 0.004, 1e-4, 25.0).unwrap();
        let (_, dpdg) = overlap_g_derivative(&s, &fp).unwrap();
        let h = 1e-6;
        let p = |g: f64| overlap_gaussian(&s, &evolve_gaussian(&s, &FPParams { g, ..fp }).unwrap()).unwrap();
        let fd = (p(h) - p(-h)) / (2.0 * h);
        assert!((dpdg - fd).abs() < 1e-6 * fd.abs().max(1.0), "{dpdg} vs {fd}");
    }

    #[test]
    fn resonance_without_damping() {
        let p = PulseParams::mg_ca_example();
        let opts = ShiftOptions { no_damping: true, ..Default::default() };
        let r = resonance_point(&GaussianState::vacuum(), &p, 30.0, &opts).unwrap();
        assert_eq!(r.delta_p, 0.0);
        assert!(r.p_sym < 1.0);
    }

    fn exact_constant(s: &GaussianState, fp: &FPParams) -> f64 {
        let h = 1e-7;
        let p = |g: f64| overlap_gaussian(s, &evolve_gaussian(s, &FPParams { g, ..*fp }).unwrap()).unwrap();
        (p(h) - p(-h)) / (h * fp.tbar * p(0.0))
    }

    #[test]
    fn constant_is_one_for_centred_states() {
        let fp = FPParams::new(0.02, 0.003, 1e-4, 10.0).unwrap();
        for s in [
            GaussianState::vacuum(),
            GaussianState::momentum_squeezed(1.44).unwrap(),
            GaussianState::squeezed(1.44, 1.2).unwrap(),
            GaussianState::coherent(1.0, 0.0),
        ] {
            let a = asymmetric_overlap(&s, &fp).unwrap();
            assert!((a.c - 1.0).abs() < 1e-9, "{}", a.c);
            assert!((exact_constant(&s, &fp) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn momentum_displacement_changes_constant() {
        let fp = FPParams::new(0.02, 0.003, 1e-4, 10.0).unwrap();
        let s = GaussianState::coherent(0.0, 1.0);
        let a = asymmetric_overlap(&s, &fp).unwrap();
        let exact = exact_constant(&s, &fp);
        assert!((a.c - exact).abs() < 1e-6, "{} vs {exact}", a.c);
        assert!((a.c - 1.0).abs() > 0.1);
    }
}
