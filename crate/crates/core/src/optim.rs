//! Small dense quasi-Newton minimizer for the few-dimensional state
//! optimizations.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    pub gtol: f64,
    /// Central-difference step for the gradient.
    pub fd_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 200, gtol: 1e-7, fd_step: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

fn gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DVector<f64> {
    let mut xp = x.to_vec();
    DVector::from_fn(x.len(), |i, _| {
        let orig = xp[i];
        xp[i] = orig + h;
        let a = f(&xp);
        xp[i] = orig - h;
        let b = f(&xp);
        xp[i] = orig;
        (a - b) / (2.0 * h)
    })
}

/// BFGS with finite-difference gradients and Armijo backtracking.
/// Non-finite objective values are treated as infeasible and backtracked.
pub fn bfgs(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: &BfgsOptions) -> BfgsOutcome {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    let mut g = gradient(&f, x.as_slice(), opts.fd_step);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    while iterations < opts.max_iter && g.norm() > opts.gtol {
        iterations += 1;
        let mut dir = -(&h * &g);
        if dir.dot(&g) >= 0.0 {
            h = DMatrix::identity(n, n);
            dir = -g.clone();
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn = &x + &dir * step;
            let fnew = f(xn.as_slice());
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else { break };
        let stalled = fx - fnew <= 1e-15 * fx.abs().max(1e-300);
        let gn = gradient(&f, xn.as_slice(), opts.fd_step);
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-16 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let left = &i - &s * y.transpose() * rho;
            let right = &i - &y * s.transpose() * rho;
            h = &left * &h * &right + &s * s.transpose() * rho;
        }
        x = xn;
        fx = fnew;
        g = gn;
        if stalled {
            break;
        }
    }
    BfgsOutcome { x: x.iter().copied().collect(), f: fx, grad_norm: g.norm(), iterations }
}
