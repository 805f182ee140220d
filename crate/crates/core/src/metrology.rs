//! Working points, recoil sensitivity and Fisher-information bounds.
//!
//! With constant coefficients the overlap depends on `theta = alpha tbar` and
//! `kappa = D tbar = epsilon theta` only, so the working point is found in
//! `theta` and `tbar* = theta* / alpha`. The scaled sensitivity
//! `|S| = (1/tbar*) |dP/dalpha|` then reduces to `|dP/dtheta|` (drift-only)
//! or `|dP/dtheta + epsilon dP/dkappa|` (extended, `dD/dDelta = epsilon
//! dalpha/dDelta`).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::brent;
use crate::phasespace::{GaussianProbe, GaussianState, SignalModel};

pub const DEFAULT_P0: f64 = 0.5;
/// Largest diffusion-to-drift ratio accepted unless overridden.
pub const EPSILON_LIMIT: f64 = 0.3;
/// Required accuracy of `P(tbar*) = p0`.
pub const WORKING_POINT_TOL: f64 = 1e-10;

const SCAN_POINTS_PER_DECADE: usize = 240;
const SCAN_DECADES: f64 = 6.0;
const BRACKET_EXPANSIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityMode {
    /// Only the drift carries the signal; `D` is held fixed.
    DriftOnly,
    /// `D` follows the detuning with `dD/dDelta = epsilon dalpha/dDelta`.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkingPoint {
    pub p0: f64,
    pub tstar: f64,
    /// Detuning of the coefficients, when known.
    pub delta0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub working_point: WorkingPoint,
    pub s_abs: f64,
    /// `dP/dtheta` at the working point.
    pub s_drift_term: f64,
    /// `epsilon dP/dkappa`; zero in drift-only mode.
    pub s_diff_term: f64,
    /// Binary-measurement Fisher information in units of `(dalpha/dDelta)^2`.
    pub fisher: f64,
    /// Upper bound on `|S|` from the QFI, when available.
    pub qfi_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityOptions {
    pub p0: f64,
    pub mode: SensitivityMode,
    /// `None` lifts the restriction on `epsilon`.
    pub epsilon_limit: Option<f64>,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        Self { p0: DEFAULT_P0, mode: SensitivityMode::DriftOnly, epsilon_limit: Some(EPSILON_LIMIT) }
    }
}

impl SensitivityOptions {
    pub fn mode(mode: SensitivityMode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn unrestricted(mut self) -> Self {
        self.epsilon_limit = None;
        self
    }
}

fn check_p0(p0: f64) -> Result<()> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::invalid("p0", "working point must lie in (0, 1)"));
    }
    Ok(())
}

/// Smallest `theta > 0` with `P(theta, epsilon theta) = p0` (first downward
/// crossing).
fn working_theta(model: &dyn SignalModel, epsilon: f64, p0: f64) -> Result<f64> {
    let f = |th: f64| -> Result<f64> { Ok(model.overlap(th, epsilon * th)?.p - p0) };
    let base = 10.0 * (0.5 * model.qfi()).sqrt().max(1.0) * (2.0 * (1.0 / p0).ln()).sqrt();
    // P >= 1 - m2 (theta^2 + epsilon theta) / 2 with m2 = -P''(0), so no
    // crossing can occur below the root of that bound
    let h = 1e-7 * base;
    let m2 = -model.overlap(h, 0.0)?.d_theta / h;
    let floor = base * 10f64.powf(-SCAN_DECADES);
    let start = if m2 > 0.0 {
        let q = 2.0 * (1.0 - p0) / m2;
        let lb = 0.5 * (-epsilon + (epsilon * epsilon + 4.0 * q).sqrt());
        (0.9 * lb).max(floor)
    } else {
        floor
    };
    let mut lo_end = 0.0;
    let mut f_lo = 1.0 - p0;
    let mut hi = base.max(2.0 * start);
    for _ in 0..=BRACKET_EXPANSIONS {
        // geometric scan resolves squeezed states at small theta and the
        // first fringe of oscillating overlaps alike
        let from = if lo_end > 0.0 { lo_end } else { start };
        let n = (SCAN_POINTS_PER_DECADE as f64 * (hi / from).log10()).ceil().max(1.0) as usize;
        let ratio = (hi / from).powf(1.0 / n as f64);
        let mut prev = (lo_end, f_lo);
        let mut th = from;
        for _ in 0..=n {
            let v = f(th)?;
            if v <= 0.0 && prev.1 > 0.0 {
                return refine(model, epsilon, p0, prev.0, th);
            }
            prev = (th, v);
            th *= ratio;
        }
        lo_end = hi;
        f_lo = prev.1;
        hi *= 4.0;
    }
    Err(Error::NoCrossing { p0, bracket_end: lo_end })
}

fn refine(model: &dyn SignalModel, epsilon: f64, p0: f64, a: f64, b: f64) -> Result<f64> {
    let failure = std::cell::Cell::new(None);
    let g = |th: f64| match model.overlap(th, epsilon * th) {
        Ok(o) => o.p - p0,
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    };
    let root = brent(g, a, b, 1e-15 * b);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let root = root.ok_or(Error::NoCrossing { p0, bracket_end: b })?;
    let resid = (model.overlap(root, epsilon * root)?.p - p0).abs();
    if resid > WORKING_POINT_TOL {
        return Err(Error::NoCrossing { p0, bracket_end: b });
    }
    Ok(root)
}

/// Working point for drift `alpha` and diffusion `d` per pulse.
pub fn find_working_point(model: &dyn SignalModel, alpha: f64, d: f64, p0: f64) -> Result<WorkingPoint> {
    check_p0(p0)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", "drift must be positive"));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::invalid("d", "diffusion must be non-negative"));
    }
    let theta = working_theta(model, d / alpha, p0)?;
    Ok(WorkingPoint { p0, tstar: theta / alpha, delta0: None })
}

/// Scaled recoil sensitivity at the working point for drift `alpha` and
/// diffusion `epsilon alpha`.
pub fn recoil_sensitivity(
    model: &dyn SignalModel,
    alpha: f64,
    epsilon: f64,
    opts: &SensitivityOptions,
) -> Result<SensitivityResult> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", "must be finite and non-negative"));
    }
    if let Some(limit) = opts.epsilon_limit {
        if epsilon > limit {
            return Err(Error::invalid("epsilon", format!("{epsilon} exceeds the limit {limit}; lift it explicitly")));
        }
    }
    let wp = find_working_point(model, alpha, epsilon * alpha, opts.p0)?;
    let theta = wp.tstar * alpha;
    let kappa = epsilon * theta;
    let o = model.overlap(theta, kappa)?;
    let (drift_term, diff_term, rate) = match opts.mode {
        SensitivityMode::DriftOnly => (o.d_theta, 0.0, 0.0),
        SensitivityMode::Extended => (o.d_theta, epsilon * o.d_kappa, epsilon),
    };
    let slope = drift_term + diff_term;
    let fisher = (wp.tstar * slope).powi(2) / (o.p * (1.0 - o.p));
    let qfi_bound = match model.gaussian_qfi(theta, kappa, rate) {
        Some(q) => Some(0.5 * q.sqrt()),
        None if opts.mode == SensitivityMode::DriftOnly => Some(0.5 * model.qfi().sqrt()),
        None => None,
    };
    Ok(SensitivityResult {
        working_point: wp,
        s_abs: slope.abs(),
        s_drift_term: drift_term,
        s_diff_term: diff_term,
        fisher,
        qfi_bound,
    })
}

/// `|dP/dDelta| / sqrt(p0 (1 - p0) / N)`.
pub fn snr(slope: f64, p0: f64, n: u64) -> Result<f64> {
    check_p0(p0)?;
    if n == 0 {
        return Err(Error::invalid("n", "need at least one measurement"));
    }
    Ok(slope.abs() / (p0 * (1.0 - p0) / n as f64).sqrt())
}

/// `(dP/dDelta)^2 / (P (1 - P))`.
pub fn fisher_binary(p: f64, slope: f64) -> Result<f64> {
    fisher_imperfect(p, slope, 0.0)
}

/// Measured probability with symmetric detection error `eta`.
pub fn measured_probability(p: f64, eta: f64) -> f64 {
    (1.0 - 2.0 * eta) * p + eta
}

/// Fisher information of the binary measurement with detection error
/// `eta`, in terms of the ideal `P` and its slope:
/// `slope^2 / (P (1 - P) + eta (1 - eta) / (1 - 2 eta)^2)`.
pub fn fisher_imperfect(p: f64, slope: f64, eta: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::invalid("eta", "detection error must lie in [0, 1/2)"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", "probability must lie in [0, 1]"));
    }
    let denom = p * (1.0 - p) + eta * (1.0 - eta) / (1.0 - 2.0 * eta).powi(2);
    if denom == 0.0 {
        if slope == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::invalid("p", "Fisher information diverges at P in {0, 1}"));
    }
    Ok(slope * slope / denom)
}

/// Pure-state QFI for momentum displacements.
pub fn qfi(state: &crate::phasespace::MotionalState) -> f64 {
    state.qfi()
}

/// `(1 / 2 tbar*) |dalpha/dDelta|^{-1} sqrt(F_Q)` with `F_Q` the QFI with
/// respect to the detuning.
pub fn qfi_sensitivity_bound(qfi: f64, tstar: f64, drift_slope: f64) -> Result<f64> {
    if !(tstar > 0.0) {
        return Err(Error::invalid("tstar", "must be positive"));
    }
    if !(qfi >= 0.0) {
        return Err(Error::invalid("qfi", "must be non-negative"));
    }
    Ok(qfi.sqrt() / (2.0 * tstar * drift_slope.abs()))
}

/// Sensitivity of a momentum-squeezed probe read out with a projector
/// squeezed at phase `pi/2 - dphi`.
pub fn phase_mismatch_sensitivity(
    r: f64,
    dphi: f64,
    alpha: f64,
    epsilon: f64,
    opts: &SensitivityOptions,
) -> Result<SensitivityResult> {
    let probe = GaussianProbe {
        initial: GaussianState::squeezed(r, FRAC_PI_2)?,
        projector: GaussianState::squeezed(r, FRAC_PI_2 - dphi)?,
    };
    recoil_sensitivity(&probe, alpha, epsilon, opts)
}
