//! Fokker-Planck drift and diffusion coefficients per pulse, Doppler damping
//! and the mean absorbed photon number.
//!
//! All coefficients are dimensionless and refer to one pulse; `tbar` counts
//! pulses. The drift is reported as a positive magnitude: the momentum kick
//! itself points along `-p` (see [`crate::phasespace`]).

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::bloch::{BlochSolver, PulseParams, DEFAULT_NODES};
use crate::error::{Error, Result};
use crate::numerics::derivative;
use crate::quadrature::gauss_legendre;

/// Relative change allowed when the node count is doubled.
pub const QUADRATURE_RTOL: f64 = 1e-6;
/// Convergence target of the Richardson tableau for `d alpha / d Delta`.
pub const DERIVATIVE_RTOL: f64 = 1e-5;
/// Initial finite-difference step in units of the linewidth.
pub const DERIVATIVE_STEP: f64 = 1e-3;
/// Cap of the adaptive node doubling.
pub const MAX_NODES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftDiffusion {
    pub alpha_x: f64,
    pub alpha_p: f64,
    pub d_xx: f64,
    pub d_pp: f64,
    pub d_xp: f64,
    pub g: f64,
    pub n1: f64,
    /// `d_pp / alpha_p`, zero when there is no drift.
    pub epsilon: f64,
    /// Pulse repetition period in seconds, used by [`DriftDiffusion::per_second`].
    pub mode_period: f64,
}

/// The same coefficients as rates per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRates {
    pub alpha_x: f64,
    pub alpha_p: f64,
    pub d_xx: f64,
    pub d_pp: f64,
    pub d_xp: f64,
    pub g: f64,
    pub n1: f64,
}

impl DriftDiffusion {
    pub fn per_second(&self) -> CoefficientRates {
        let r = 1.0 / self.mode_period;
        CoefficientRates {
            alpha_x: self.alpha_x * r,
            alpha_p: self.alpha_p * r,
            d_xx: self.d_xx * r,
            d_pp: self.d_pp * r,
            d_xp: self.d_xp * r,
            g: self.g * r,
            n1: self.n1 * r,
        }
    }

    /// `d_xx d_pp - d_xp^2`; non-negative for a physical diffusion matrix.
    pub fn diffusion_determinant(&self) -> f64 {
        self.d_xx * self.d_pp - self.d_xp * self.d_xp
    }
}

/// Quadrature settings for the pulse integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientConfig {
    pub nodes: usize,
    /// Keep doubling the nodes until two successive rules agree to
    /// [`QUADRATURE_RTOL`].
    pub check_convergence: bool,
    /// Largest rule tried before giving up.
    pub max_nodes: usize,
    /// Evaluate `g` (costs a Richardson tableau of extra evaluations).
    pub with_damping: bool,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self { nodes: DEFAULT_NODES, check_convergence: true, max_nodes: MAX_NODES, with_damping: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Raw {
    alpha_x: f64,
    alpha_p: f64,
    d_xx: f64,
    d_pp: f64,
    d_xp: f64,
    n1: f64,
}

/// Single and triangular double integrals on one Gauss-Legendre rule.
///
/// The inner integral over `t' in [0, t]` uses the same rule rescaled to
/// `[0, t]` for each outer node, so the kink of the correlation at `t' = t`
/// sits on the boundary of every inner panel.
fn raw_coefficients(p: &PulseParams, nodes: usize) -> Result<Raw> {
    let solver = BlochSolver::new(p)?;
    let unit = gauss_legendre(nodes);
    let outer = unit.mapped(0.0, p.pulse_duration());
    let nu = p.mode_freq();
    let (mut ix, mut ip, mut iy) = (0.0, 0.0, 0.0);
    let (mut kxx, mut kpp, mut kxp) = (0.0, 0.0, 0.0);
    for (&t, &w) in outer.nodes.iter().zip(&outer.weights) {
        let sy = solver.sigma_y(t);
        let (s, c) = (nu * t).sin_cos();
        iy += w * sy;
        ip += w * c * sy;
        ix += w * s * sy;
        let half = 0.5 * t;
        let (mut a_cc, mut a_ss, mut a_sc) = (0.0, 0.0, 0.0);
        for (&(tp, _, corr), &wu) in solver.regression_samples(t, &unit.nodes).iter().zip(&unit.weights) {
            let wt = wu * half * corr;
            let (sp, cp) = (nu * tp).sin_cos();
            a_cc += wt * cp;
            a_ss += wt * sp;
            a_sc += wt * (s * cp - c * sp);
        }
        kpp += w * c * a_cc;
        kxx += w * s * a_ss;
        kxp += w * a_sc;
    }
    let pref = p.lamb_dicke() * p.rabi() / SQRT_2;
    let alpha_p = pref * ip;
    let alpha_x = -pref * ix;
    let amp = (p.lamb_dicke() * p.rabi()).powi(2);
    Ok(Raw {
        alpha_x,
        alpha_p,
        d_xx: amp * kxx - alpha_x * alpha_x,
        d_pp: amp * kpp - alpha_p * alpha_p,
        d_xp: -0.5 * amp * kxp - alpha_x * alpha_p,
        n1: 0.5 * p.rabi() * iy,
    })
}

fn rel_change(a: f64, b: f64, scale: f64) -> f64 {
    let denom = scale.max(b.abs());
    if denom > 0.0 {
        (a - b).abs() / denom
    } else {
        0.0
    }
}

fn first_disagreement(coarse: &Raw, fine: &Raw) -> Option<(&'static str, f64)> {
    let drift_scale = fine.alpha_x.abs().max(fine.alpha_p.abs());
    let diff_scale = fine.d_xx.abs().max(fine.d_pp.abs()).max(fine.d_xp.abs());
    let checks = [
        ("alpha_x", coarse.alpha_x, fine.alpha_x, drift_scale),
        ("alpha_p", coarse.alpha_p, fine.alpha_p, drift_scale),
        ("d_xx", coarse.d_xx, fine.d_xx, diff_scale),
        ("d_pp", coarse.d_pp, fine.d_pp, diff_scale),
        ("d_xp", coarse.d_xp, fine.d_xp, diff_scale),
        ("n1", coarse.n1, fine.n1, 0.0),
    ];
    checks
        .into_iter()
        .map(|(q, a, b, scale)| (q, rel_change(a, b, scale)))
        .find(|(_, change)| *change > QUADRATURE_RTOL)
}

/// Coefficients and the node count of the accepted rule.
fn converged_coefficients(p: &PulseParams, cfg: &CoefficientConfig) -> Result<(Raw, usize)> {
    if cfg.nodes < 2 {
        return Err(Error::invalid("nodes", "need at least two quadrature nodes"));
    }
    let mut n = cfg.nodes;
    let mut coarse = raw_coefficients(p, n)?;
    if !cfg.check_convergence {
        return Ok((coarse, n));
    }
    loop {
        let fine = raw_coefficients(p, 2 * n)?;
        match first_disagreement(&coarse, &fine) {
            None => return Ok((fine, 2 * n)),
            Some((quantity, change)) if 4 * n > cfg.max_nodes => {
                return Err(Error::QuadratureNonConvergence { quantity, change });
            }
            Some(_) => {
                coarse = fine;
                n *= 2;
            }
        }
    }
}

/// All coefficients with the default quadrature.
pub fn compute_coefficients(p: &PulseParams) -> Result<DriftDiffusion> {
    compute_coefficients_with(p, &CoefficientConfig::default())
}

pub fn compute_coefficients_with(p: &PulseParams, cfg: &CoefficientConfig) -> Result<DriftDiffusion> {
    let (raw, nodes) = converged_coefficients(p, cfg)?;
    let g = if cfg.with_damping { damping_with(p, nodes)? } else { 0.0 };
    Ok(DriftDiffusion {
        alpha_x: raw.alpha_x,
        alpha_p: raw.alpha_p,
        d_xx: raw.d_xx,
        d_pp: raw.d_pp,
        d_xp: raw.d_xp,
        g,
        n1: raw.n1,
        epsilon: if raw.alpha_p != 0.0 { raw.d_pp / raw.alpha_p } else { 0.0 },
        mode_period: p.mode_period(),
    })
}

/// Drift per pulse at the pulse's detuning, without convergence check.
pub fn drift(p: &PulseParams) -> Result<f64> {
    Ok(raw_coefficients(p, DEFAULT_NODES)?.alpha_p)
}

/// Momentum diffusion per pulse at the pulse's detuning, without
/// convergence check.
pub fn diffusion(p: &PulseParams) -> Result<f64> {
    Ok(raw_coefficients(p, DEFAULT_NODES)?.d_pp)
}

fn slope_of(p: &PulseParams, nodes: usize, pick: fn(&Raw) -> f64, quantity: &'static str) -> Result<f64> {
    let f = |delta: f64| -> Result<f64> { Ok(pick(&raw_coefficients(&p.with_detuning(delta)?, nodes)?)) };
    let scale = pick(&raw_coefficients(p, nodes)?).abs() / p.linewidth();
    derivative(f, p.detuning(), DERIVATIVE_STEP * p.linewidth(), DERIVATIVE_RTOL, scale, quantity)
}

/// `d alpha_p / d Delta` in seconds per radian.
pub fn drift_slope(p: &PulseParams) -> Result<f64> {
    slope_of(p, DEFAULT_NODES, |r| r.alpha_p, "d alpha / d Delta")
}

/// `d D_pp / d Delta` in seconds per radian.
pub fn diffusion_slope(p: &PulseParams) -> Result<f64> {
    slope_of(p, DEFAULT_NODES, |r| r.d_pp, "d D / d Delta")
}

fn damping_with(p: &PulseParams, nodes: usize) -> Result<f64> {
    Ok(p.scaled_lamb_dicke() * p.mode_freq() * slope_of(p, nodes, |r| r.alpha_p, "g")?)
}

/// Doppler damping per pulse, `g = sqrt(2) eta nu d alpha / d Delta`.
pub fn doppler_damping(p: &PulseParams) -> Result<f64> {
    damping_with(p, DEFAULT_NODES)
}

/// Mean number of photons absorbed during one pulse.
pub fn mean_photons_per_pulse(p: &PulseParams) -> Result<f64> {
    let cfg = CoefficientConfig { with_damping: false, ..Default::default() };
    Ok(converged_coefficients(p, &cfg)?.0.n1)
}
