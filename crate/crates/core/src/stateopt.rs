//! Energy-constrained optimization of Fock superpositions and the squeezing
//! budget for spectroscopy with a single absorbed photon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::PulseParams;
use crate::error::{Error, Result};
use crate::metrology::{recoil_sensitivity, SensitivityMode, SensitivityOptions};
use crate::numerics::{brent, first_crossing};
use crate::optim::{bfgs, BfgsOptions};
use crate::phasespace::{FockKernel, GaussianProbe, GaussianState, SignalModel};
use crate::recoil_coeffs::{compute_coefficients, DriftDiffusion};

pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_SEED: u64 = 0;
/// Gradient norm a restart must reach to count as converged.
pub const OPTIMIZER_GTOL: f64 = 1e-5;
/// Allowed relative violation of the energy bound in the returned state.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Penalty weight of the augmented Lagrangian for the energy bound.
const PENALTY: f64 = 1e3;
const MULTIPLIER_UPDATES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub basis: Vec<usize>,
    pub nbar_max: f64,
    pub epsilon: f64,
    pub p0: f64,
    pub mode: SensitivityMode,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizationProblem {
    fn default() -> Self {
        Self {
            basis: vec![2, 4],
            nbar_max: 4.0,
            epsilon: 0.0,
            p0: 0.5,
            mode: SensitivityMode::DriftOnly,
            restarts: DEFAULT_RESTARTS,
            seed: DEFAULT_SEED,
        }
    }
}

impl OptimizationProblem {
    fn validate(&self) -> Result<()> {
        if self.basis.is_empty() {
            return Err(Error::invalid("basis", "empty Fock basis"));
        }
        let mut b = self.basis.clone();
        b.sort_unstable();
        b.dedup();
        if b.len() != self.basis.len() {
            return Err(Error::invalid("basis", "indices must be distinct"));
        }
        if !(self.nbar_max > 0.0) {
            return Err(Error::invalid("nbar_max", "energy bound must be positive"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be finite and non-negative"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts", "need at least one start"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockOptimum {
    /// `(n, c_n)` in basis order, normalized, with a non-negative leading
    /// amplitude.
    pub coeffs: Vec<(usize, f64)>,
    pub s_abs: f64,
    pub nbar: f64,
    /// `nbar_max - nbar`.
    pub slack: f64,
    pub qfi: f64,
    pub grad_norm: f64,
    pub converged_restarts: usize,
}

/// Unit vector from hyperspherical angles.
fn sphere(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut s = 1.0;
    for a in angles {
        out.push(s * a.cos());
        s *= a.sin();
    }
    out.push(s);
    out
}

fn full_vector(basis: &[usize], c: &[f64]) -> Vec<num_complex::Complex64> {
    let top = basis.iter().max().copied().unwrap_or(0);
    let mut v = vec![num_complex::Complex64::new(0.0, 0.0); top + 1];
    for (&n, &a) in basis.iter().zip(c) {
        v[n] = a.into();
    }
    v
}

struct Evaluator<'a> {
    prob: &'a OptimizationProblem,
    kernel: FockKernel,
    opts: SensitivityOptions,
}

impl Evaluator<'_> {
    fn sensitivity(&self, c: &[f64]) -> Result<(f64, f64)> {
        let m = self.kernel.marginal(&full_vector(&self.prob.basis, c))?;
        let s = recoil_sensitivity(&m, 1.0, self.prob.epsilon, &self.opts)?;
        Ok((s.s_abs, m.qfi()))
    }

    fn nbar(&self, c: &[f64]) -> f64 {
        self.prob.basis.iter().zip(c).map(|(&n, a)| n as f64 * a * a).sum()
    }

    /// Augmented Lagrangian of `-|S|` with the bound `nbar <= nbar_max`;
    /// infeasible evaluations map to infinity.
    fn objective(&self, angles: &[f64], lambda: f64) -> f64 {
        let c = sphere(angles);
        let viol = self.nbar(&c) - self.prob.nbar_max;
        let shifted = (lambda / PENALTY + viol).max(0.0);
        match self.sensitivity(&c) {
            Ok((s, _)) => -s + 0.5 * PENALTY * shifted * shifted - 0.5 * lambda * lambda / PENALTY,
            Err(_) => f64::INFINITY,
        }
    }
}

/// Maximizes `|S|` over real superpositions on `prob.basis` with
/// `nbar <= prob.nbar_max`.
pub fn optimize_fock_superposition(prob: &OptimizationProblem) -> Result<FockOptimum> {
    prob.validate()?;
    let ev = Evaluator {
        prob,
        kernel: FockKernel::new(&prob.basis)?,
        opts: SensitivityOptions { p0: prob.p0, mode: prob.mode, epsilon_limit: None },
    };
    let dim = prob.basis.len() - 1;
    let bfgs_opts = BfgsOptions { max_iter: 200, gtol: 1e-8, fd_step: 1e-6 };
    let runs: Vec<Option<(Vec<f64>, f64)>> = (0..prob.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(prob.seed.wrapping_add(i as u64));
            let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..std::f64::consts::PI)).collect();
            let mut grad = f64::INFINITY;
            let mut lambda = 0.0;
            for _ in 0..MULTIPLIER_UPDATES {
                let out = bfgs(|a| ev.objective(a, lambda), &x, &bfgs_opts);
                x = out.x;
                grad = out.grad_norm;
                let viol = ev.nbar(&sphere(&x)) - prob.nbar_max;
                let next = (lambda + PENALTY * viol).max(0.0);
                let settled = (next - lambda).abs() <= 1e-10 * lambda.max(1.0);
                lambda = next;
                if settled && viol <= FEASIBILITY_TOL * prob.nbar_max {
                    break;
                }
            }
            let c = sphere(&x);
            let feasible = ev.nbar(&c) <= prob.nbar_max * (1.0 + FEASIBILITY_TOL);
            (feasible && ev.sensitivity(&c).is_ok()).then_some((x, grad))
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut converged = 0;
    for (x, grad) in runs.into_iter().flatten() {
        if grad <= OPTIMIZER_GTOL {
            converged += 1;
        }
        let (s, _) = ev.sensitivity(&sphere(&x))?;
        if best.as_ref().is_none_or(|b| s > b.0 + 1e-12) {
            best = Some((s, x, grad));
        }
    }
    let Some((s_abs, x, grad)) = best else {
        return Err(Error::OptimizerNonConvergence { grad_norm: f64::INFINITY });
    };
    if converged == 0 && dim > 0 {
        return Err(Error::OptimizerNonConvergence { grad_norm: grad });
    }
    let mut c = sphere(&x);
    if c[0] < 0.0 || (c[0] == 0.0 && c.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0)) {
        c.iter_mut().for_each(|v| *v = -*v);
    }
    let (_, qfi) = ev.sensitivity(&c)?;
    let nbar = ev.nbar(&c);
    Ok(FockOptimum {
        coeffs: prob.basis.iter().copied().zip(c).collect(),
        s_abs,
        nbar,
        slack: prob.nbar_max - nbar,
        qfi,
        grad_norm: if dim == 0 { 0.0 } else { grad },
        converged_restarts: converged,
    })
}

/// `10 log10(e^{2r})`.
pub fn squeezing_db(r: f64) -> f64 {
    20.0 * r / std::f64::consts::LN_10
}

pub fn squeezing_from_db(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 20.0
}

/// `sinh^2 r`.
pub fn squeezed_nbar(r: f64) -> f64 {
    r.sinh().powi(2)
}

/// Squeezing with `sinh^2 r = nbar`.
pub fn squeezing_for_nbar(nbar: f64) -> f64 {
    nbar.sqrt().asinh()
}

/// `beta^2 tanh(beta^2)` for the even cat.
pub fn cat_nbar(beta: f64) -> f64 {
    let b2 = beta * beta;
    b2 * b2.tanh()
}

/// Amplitude of the even cat with mean phonon number `nbar`.
pub fn cat_beta_for_nbar(nbar: f64) -> Result<f64> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::invalid("nbar", "must be finite and non-negative"));
    }
    if nbar == 0.0 {
        return Ok(0.0);
    }
    let b2 = brent(|b2| b2 * b2.tanh() - nbar, 0.0, nbar + 1.0, 1e-15).ok_or(Error::NoSolution { p0: nbar })?;
    Ok(b2.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinglePhotonBudget {
    pub pulse: PulseParams,
    pub coeffs: DriftDiffusion,
    /// Pulses needed for one absorbed photon on average.
    pub tstar: f64,
    pub r_required: f64,
    pub squeezing_db: f64,
    pub nbar: f64,
    /// `|S|(r) / |S|(vacuum)`, drift-only sensitivities.
    pub enhancement: f64,
    /// The same ratio with `dD/dDelta = epsilon dalpha/dDelta`.
    pub enhancement_extended: f64,
    /// `|S|(r)` in drift-only mode.
    pub s_squeezed: f64,
    pub s_vacuum: f64,
}

/// Squeezing needed to reach `P = p0` after the pulses that absorb one
/// photon on average.
pub fn single_photon_budget(pulse: &PulseParams, p0: f64) -> Result<SinglePhotonBudget> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::invalid("p0", "working point must lie in (0, 1)"));
    }
    let coeffs = compute_coefficients(pulse)?;
    if !(coeffs.n1 > 0.0 && coeffs.alpha_p > 0.0) {
        return Err(Error::invalid("pulse", "pulse absorbs no photons"));
    }
    let tstar = 1.0 / coeffs.n1;
    let theta = coeffs.alpha_p * tstar;
    let kappa = coeffs.d_pp * tstar;
    let p_of = |r: f64| -> f64 {
        let probe = GaussianProbe::self_overlap(GaussianState::momentum_squeezed(r).expect("r >= 0"));
        probe.overlap(theta, kappa).map(|o| o.p).unwrap_or(f64::NAN)
    };
    const R_MAX: f64 = 20.0;
    let r_required = if p_of(0.0) <= p0 {
        0.0
    } else {
        first_crossing(|r| p_of(r) - p0, 0.0, R_MAX, 4000, 1e-14).ok_or(Error::NoSolution { p0 })?
    };
    let eps = coeffs.epsilon;
    let squeezed = GaussianProbe::self_overlap(GaussianState::momentum_squeezed(r_required)?);
    let vacuum = GaussianProbe::self_overlap(GaussianState::vacuum());
    let sens = |m: &GaussianProbe, mode| {
        recoil_sensitivity(m, coeffs.alpha_p, eps, &SensitivityOptions { p0, mode, epsilon_limit: None })
    };
    let sq = sens(&squeezed, SensitivityMode::DriftOnly)?;
    let vac = sens(&vacuum, SensitivityMode::DriftOnly)?;
    let sq_e = sens(&squeezed, SensitivityMode::Extended)?;
    let vac_e = sens(&vacuum, SensitivityMode::Extended)?;
    Ok(SinglePhotonBudget {
        pulse: *pulse,
        coeffs,
        tstar,
        r_required,
        squeezing_db: squeezing_db(r_required),
        nbar: squeezed_nbar(r_required),
        enhancement: sq.s_abs / vac.s_abs,
        enhancement_extended: sq_e.s_abs / vac_e.s_abs,
        s_squeezed: sq.s_abs,
        s_vacuum: vac.s_abs,
    })
}
