use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Vector2};
use super::{FPParams, Moments, OverlapGrad, SignalModel};
use crate::error::{Error, Result};

/// Gaussian state given by its mean `M` and covariance `gamma`
/// (vacuum: `gamma = diag(1/2, 1/2)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub(crate) mean: Vector2<f64>,
    pub(crate) cov: Matrix2<f64>,
}

impl GaussianState {
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>) -> Result<Self> {
        if !(mean.iter().all(|v| v.is_finite()) && cov.iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("gaussian", "moments must be finite"));
        }
        if (cov[(0, 1)] - cov[(1, 0)]).abs() > 1e-12 * cov.norm() {
            return Err(Error::invalid("cov", "covariance must be symmetric"));
        }
        if cov[(0, 0)] <= 0.0 || cov.determinant() < 0.25 * (1.0 - 1e-12) {
            return Err(Error::invalid("cov", "violates the uncertainty relation det(gamma) >= 1/4"));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum() -> Self {
        Self { mean: Vector2::zeros(), cov: Matrix2::identity() * 0.5 }
    }

    pub fn coherent(x: f64, p: f64) -> Self {
        Self { mean: Vector2::new(x, p), ..Self::vacuum() }
    }

    /// Squeezed vacuum `|r, phi>`; `phi = pi/2` squeezes momentum, `phi = 0`
    /// squeezes position.
    pub fn squeezed(r: f64, phi: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::invalid("r", "squeezing must be finite and non-negative"));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi", "phase must be finite"));
        }
        let (s, c) = (phi - FRAC_PI_2).sin_cos();
        let rot = Matrix2::new(c, -s, s, c);
        let diag = Matrix2::new(0.5 * (2.0 * r).exp(), 0.0, 0.0, 0.5 * (-2.0 * r).exp());
        let mut cov = rot * diag * rot.transpose();
        let off = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
        cov[(0, 1)] = off;
        cov[(1, 0)] = off;
        Ok(Self { mean: Vector2::zeros(), cov })
    }

    pub fn momentum_squeezed(r: f64) -> Result<Self> {
        Self::squeezed(r, FRAC_PI_2)
    }

    pub fn mean(&self) -> &Vector2<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix2<f64> {
        &self.cov
    }

    /// Mean phonon number `(gamma_xx + gamma_pp - 1)/2 + |M|^2 / 2`.
    pub fn nbar(&self) -> f64 {
        0.5 * (self.cov.trace() - 1.0) + 0.5 * self.mean.norm_squared()
    }

    /// `tr(rho^2) = 1 / (2 sqrt(det gamma))`.
    pub fn purity(&self) -> f64 {
        0.5 / self.cov.determinant().sqrt()
    }

    pub fn moments(&self) -> Moments {
        Moments { mean_x: self.mean[0], mean_p: self.mean[1], var_x: self.cov[(0, 0)], var_p: self.cov[(1, 1)] }
    }

    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let d = Vector2::new(x, p) - self.mean;
        let det = self.cov.determinant();
        let inv = Matrix2::new(self.cov[(1, 1)], -self.cov[(0, 1)], -self.cov[(1, 0)], self.cov[(0, 0)]) / det;
        (-0.5 * d.dot(&(inv * d))).exp() / (2.0 * PI * det.sqrt())
    }

    /// Undamped drift and diffusion by accumulated amounts.
    pub(crate) fn shifted(&self, theta: f64, kappa: f64) -> Self {
        let mut out = *self;
        out.mean[1] -= theta;
        out.cov[(1, 1)] += kappa;
        out
    }
}

/// `(1 - e^{-g t}) / g`, continuous at `g = 0`.
fn relax(g: f64, t: f64) -> f64 {
    if g == 0.0 {
        t
    } else {
        -(-g * t).exp_m1() / g
    }
}

/// Moments after time `tbar`, exact for any damping `g`.
///
/// Damping (`g > 0`) with too little diffusion contracts the momentum
/// variance below the uncertainty bound; such moments are returned as is.
pub fn evolve_gaussian(s: &GaussianState, fp: &FPParams) -> Result<GaussianState> {
    fp.validate()?;
    let (g, t) = (fp.g, fp.tbar);
    let decay = (-g * t).exp();
    let mut out = *s;
    out.mean[1] = s.mean[1] * decay - fp.alpha * relax(g, t);
    out.cov[(1, 1)] = s.cov[(1, 1)] * decay * decay + fp.d * relax(2.0 * g, t);
    out.cov[(0, 1)] = s.cov[(0, 1)] * decay;
    out.cov[(1, 0)] = out.cov[(0, 1)];
    Ok(out)
}

/// `tr(rho_a rho_b)` for Gaussian states.
pub fn overlap_gaussian(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    let sum = a.cov + b.cov;
    let inv = sum.try_inverse().ok_or(Error::SingularMatrix("covariance sum"))?;
    let d = a.mean - b.mean;
    Ok((-0.5 * d.dot(&(inv * d))).exp() / sum.determinant().sqrt())
}

/// Evolved Gaussian state measured by projecting onto a (possibly different)
/// Gaussian pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProbe {
    pub initial: GaussianState,
    pub projector: GaussianState,
}

impl GaussianProbe {
    pub fn self_overlap(state: GaussianState) -> Self {
        Self { initial: state, projector: state }
    }
}

impl SignalModel for GaussianProbe {
    fn overlap(&self, theta: f64, kappa: f64) -> Result<OverlapGrad> {
        let evolved = self.initial.shifted(theta, kappa);
        let sum = self.projector.cov + evolved.cov;
        let inv = sum.try_inverse().ok_or(Error::SingularMatrix("covariance sum"))?;
        let d = self.projector.mean - evolved.mean;
        let u = inv * d;
        let p = (-0.5 * d.dot(&u)).exp() / sum.determinant().sqrt();
        Ok(OverlapGrad { p, d_theta: -p * u[1], d_kappa: 0.5 * p * (u[1] * u[1] - inv[(1, 1)]) })
    }

    fn qfi(&self) -> f64 {
        4.0 * self.initial.cov[(0, 0)]
    }

    /// QFI of the evolved mixed state for the one-parameter family moving
    /// by `(1, kappa_rate)` in `(theta, kappa)`.
    fn gaussian_qfi(&self, theta: f64, kappa: f64, kappa_rate: f64) -> Option<f64> {
        let st = self.initial.shifted(theta, kappa);
        // quadratures with unit vacuum variance
        let sigma = st.cov * 2.0;
        let inv = sigma.try_inverse()?;
        let mu = 1.0 / sigma.determinant().sqrt();
        let dsigma = Matrix2::new(0.0, 0.0, 0.0, 2.0 * kappa_rate);
        let a = inv * dsigma;
        let dmu = -0.5 * mu * a.trace();
        let purity_term = if dmu == 0.0 {
            0.0
        } else if mu >= 1.0 - 1e-12 {
            return None;
        } else {
            2.0 * dmu * dmu / (1.0 - mu.powi(4))
        };
        let dd = Vector2::new(0.0, -std::f64::consts::SQRT_2);
        Some(0.5 * (a * a).trace() / (1.0 + mu * mu) + purity_term + dd.dot(&(inv * dd)))
    }
}
