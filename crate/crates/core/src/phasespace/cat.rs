use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::{FPParams, Moments, OverlapGrad, SignalModel};
use crate::error::{Error, Result};

/// Even cat `N (|beta> + |-beta>)` with real `beta`, separated along `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatState {
    beta: f64,
}

impl CatState {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::invalid("beta", "amplitude must be finite and non-negative"));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `N = (2 + 2 e^{-2 beta^2})^{-1/2}`.
    pub fn normalization(&self) -> f64 {
        (2.0 + 2.0 * (-2.0 * self.beta * self.beta).exp()).powf(-0.5)
    }

    /// `beta^2 tanh(beta^2)`.
    pub fn nbar(&self) -> f64 {
        let b2 = self.beta * self.beta;
        b2 * b2.tanh()
    }

    pub fn moments(&self) -> Moments {
        let b2 = self.beta * self.beta;
        let n = self.nbar();
        Moments { mean_x: 0.0, mean_p: 0.0, var_x: 0.5 + n + b2, var_p: 0.5 + n - b2 }
    }

    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let x0 = SQRT_2 * self.beta;
        let g = |c: f64| (-(x - c).powi(2) - p * p).exp() / PI;
        let n2 = self.normalization().powi(2);
        n2 * (g(x0) + g(-x0) + 2.0 * (-x * x - p * p).exp() * (2.0 * p * x0).cos() / PI)
    }
}

impl SignalModel for CatState {
    /// Closed form in `s = 1 / (1 + kappa)`:
    /// `P = A sqrt(s) e^{-theta^2 s / 2} B`, with
    /// `B = 1 + 2e^{-4b^2} + e^{-4b^2(1-s)} cos(2 sqrt2 b theta s)
    ///      + 4 e^{-b^2(3-s)} cos(sqrt2 b theta s)`.
    fn overlap(&self, theta: f64, kappa: f64) -> Result<OverlapGrad> {
        if !(kappa >= 0.0) {
            return Err(Error::invalid("kappa", "accumulated diffusion must be non-negative"));
        }
        let b = self.beta;
        let b2 = b * b;
        let s = 1.0 / (1.0 + kappa);
        let a = 0.5 / (1.0 + (-2.0 * b2).exp()).powi(2);
        let e1 = (-4.0 * b2 * (1.0 - s)).exp();
        let e2 = (-b2 * (3.0 - s)).exp();
        let w1 = 2.0 * SQRT_2 * b;
        let w2 = SQRT_2 * b;
        let (s1, c1) = (w1 * theta * s).sin_cos();
        let (s2, c2) = (w2 * theta * s).sin_cos();
        let big_b = 1.0 + 2.0 * (-4.0 * b2).exp() + e1 * c1 + 4.0 * e2 * c2;
        let b_theta = -e1 * s1 * w1 * s - 4.0 * e2 * s2 * w2 * s;
        let b_s = e1 * (4.0 * b2 * c1 - s1 * w1 * theta) + 4.0 * e2 * (b2 * c2 - s2 * w2 * theta);
        let c = a * s.sqrt() * (-0.5 * theta * theta * s).exp();
        let p = c * big_b;
        let d_theta = c * (b_theta - theta * s * big_b);
        let d_s = c * ((0.5 / s - 0.5 * theta * theta) * big_b + b_s);
        Ok(OverlapGrad { p, d_theta, d_kappa: -s * s * d_s })
    }

    fn qfi(&self) -> f64 {
        4.0 * self.moments().var_x
    }
}

/// Closed-form overlap of a cat with its undamped evolved copy.
pub fn evolve_and_overlap_cat(c: &CatState, fp: &FPParams) -> Result<f64> {
    fp.validate()?;
    fp.require_undamped("cat")?;
    Ok(c.overlap(fp.theta(), fp.kappa())?.p)
}
