//! Motional states of the trap mode and their propagation under the
//! one-dimensional Fokker-Planck dynamics
//! `dW/dtbar = alpha dW/dp + (d/2) d^2W/dp^2 (+ g d(pW)/dp)`.
//!
//! Units: `x = (a + a^dag)/sqrt 2`, vacuum variance 1/2. The drift displaces
//! states along `-p`; only `|M_p|` enters any overlap so the choice is
//! conventional. With `g = 0` every overlap depends on the accumulated
//! displacement `theta = alpha tbar` and variance `kappa = d tbar` only.

mod cat;
mod fock;
mod gaussian;
pub mod pde;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cat::{evolve_and_overlap_cat, CatState};
pub use fock::{evolve_and_overlap_fock, FockKernel, FockMarginal, FockSuperposition, FOCK_NODES, MAX_FOCK};
pub use gaussian::{evolve_gaussian, overlap_gaussian, GaussianProbe, GaussianState};
pub use pde::{pde_oracle, OracleConfig, OracleResult, PhaseGrid, WignerGrid};

/// Fokker-Planck coefficients together with the interaction time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FPParams {
    pub alpha: f64,
    pub d: f64,
    pub g: f64,
    pub tbar: f64,
}

impl FPParams {
    pub fn new(alpha: f64, d: f64, g: f64, tbar: f64) -> Result<Self> {
        let fp = Self { alpha, d, g, tbar };
        fp.validate()?;
        Ok(fp)
    }

    /// Pure drift and diffusion with the given accumulated displacement and
    /// variance, at unit time.
    pub fn from_totals(theta: f64, kappa: f64) -> Result<Self> {
        Self::new(theta, kappa, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.alpha, self.d, self.g, self.tbar].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("fp", "coefficients must be finite"));
        }
        if self.d < 0.0 {
            return Err(Error::invalid("d", "diffusion must be non-negative"));
        }
        if self.tbar < 0.0 {
            return Err(Error::invalid("tbar", "time must be non-negative"));
        }
        Ok(())
    }

    /// `alpha tbar`.
    pub fn theta(&self) -> f64 {
        self.alpha * self.tbar
    }

    /// `d tbar`.
    pub fn kappa(&self) -> f64 {
        self.d * self.tbar
    }

    pub(crate) fn require_undamped(&self, family: &'static str) -> Result<()> {
        if self.g != 0.0 {
            return Err(Error::UnsupportedDamping { family, g: self.g });
        }
        Ok(())
    }
}

/// Overlap probability and its partial derivatives with respect to the
/// accumulated displacement `theta` and momentum variance `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapGrad {
    pub p: f64,
    pub d_theta: f64,
    pub d_kappa: f64,
}

/// Anything that yields `P(theta, kappa)` for undamped dynamics.
pub trait SignalModel: Sync {
    fn overlap(&self, theta: f64, kappa: f64) -> Result<OverlapGrad>;

    /// Quantum Fisher information of the pure initial state for momentum
    /// displacements, `4 Var(x)`.
    fn qfi(&self) -> f64;

    /// Gaussian models can evaluate the mixed-state QFI along a direction in
    /// `(theta, kappa)`.
    fn gaussian_qfi(&self, _theta: f64, _kappa: f64, _kappa_rate: f64) -> Option<f64> {
        None
    }
}

/// First and second quadrature moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
}

/// Tagged union of the supported probe states.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionalState {
    Gaussian(GaussianState),
    Cat(CatState),
    Fock(FockSuperposition),
}

impl MotionalState {
    pub fn vacuum() -> Self {
        Self::Gaussian(GaussianState::vacuum())
    }

    /// Momentum-squeezed vacuum.
    pub fn squeezed(r: f64) -> Result<Self> {
        Ok(Self::Gaussian(GaussianState::momentum_squeezed(r)?))
    }

    pub fn cat(beta: f64) -> Result<Self> {
        Ok(Self::Cat(CatState::new(beta)?))
    }

    pub fn fock(n: usize) -> Result<Self> {
        Ok(Self::Fock(FockSuperposition::basis(n)?))
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Gaussian(_) => "gaussian",
            Self::Cat(_) => "cat",
            Self::Fock(_) => "fock",
        }
    }

    pub fn nbar(&self) -> f64 {
        match self {
            Self::Gaussian(s) => s.nbar(),
            Self::Cat(c) => c.nbar(),
            Self::Fock(f) => f.nbar(),
        }
    }

    pub fn moments(&self) -> Moments {
        match self {
            Self::Gaussian(s) => s.moments(),
            Self::Cat(c) => c.moments(),
            Self::Fock(f) => f.moments(),
        }
    }

    /// Pure-state QFI for momentum displacements, `4 Var(x)`.
    pub fn qfi(&self) -> f64 {
        4.0 * self.moments().var_x
    }

    /// Wigner function at `(x, p)`.
    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        match self {
            Self::Gaussian(s) => s.wigner(x, p),
            Self::Cat(c) => c.wigner(x, p),
            Self::Fock(f) => f.wigner(x, p),
        }
    }

    /// Overlap with the undamped evolved copy of itself.
    pub fn signal_model(&self) -> Result<Box<dyn SignalModel + Send>> {
        Ok(match self {
            Self::Gaussian(s) => Box::new(GaussianProbe::self_overlap(*s)),
            Self::Cat(c) => Box::new(*c),
            Self::Fock(f) => Box::new(FockKernel::for_state(f)?.marginal(f.coeffs())?),
        })
    }

    /// `P = tr(rho_0 rho_tbar)` after evolution with `fp`.
    pub fn evolve_and_overlap(&self, fp: &FPParams) -> Result<f64> {
        match self {
            Self::Gaussian(s) => overlap_gaussian(s, &evolve_gaussian(s, fp)?),
            Self::Cat(c) => evolve_and_overlap_cat(c, fp),
            Self::Fock(f) => evolve_and_overlap_fock(f, fp),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp_validation() {
        assert!(FPParams::new(0.1, -1.0, 0.0, 1.0).is_err());
        assert!(FPParams::new(0.1, 0.0, 0.0, -1.0).is_err());
        assert!(FPParams::new(f64::NAN, 0.0, 0.0, 1.0).is_err());
        let fp = FPParams::new(0.2, 0.03, 0.0, 5.0).unwrap();
        assert!((fp.theta() - 1.0).abs() < 1e-15 && (fp.kappa() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn qfi_closed_forms() {
        assert!((MotionalState::vacuum().qfi() - 2.0).abs() < 1e-14);
        let r: f64 = 0.8;
        assert!((MotionalState::squeezed(r).unwrap().qfi() - 2.0 * (2.0 * r).exp()).abs() < 1e-12);
        for n in 0..6 {
            let q = MotionalState::fock(n).unwrap().qfi();
            assert!((q - 2.0 * (2 * n + 1) as f64).abs() < 1e-12);
        }
        let cat = CatState::new(2.0).unwrap();
        let n2 = cat.normalization().powi(2);
        assert!((MotionalState::Cat(cat).qfi() - 2.0 * (1.0 + 32.0 * n2)).abs() < 1e-12);
    }

    #[test]
    fn damping_rejected_for_non_gaussian() {
        let fp = FPParams::new(0.1, 0.0, 0.01, 1.0).unwrap();
        for s in [MotionalState::cat(1.0).unwrap(), MotionalState::fock(2).unwrap()] {
            assert!(matches!(s.evolve_and_overlap(&fp), Err(Error::UnsupportedDamping { .. })));
        }
    }
}
