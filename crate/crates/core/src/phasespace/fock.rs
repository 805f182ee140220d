use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64 as C64;

use super::{FPParams, Moments, OverlapGrad, SignalModel};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite_unit_variance, laguerre, ln_factorial};

/// Highest Fock index accepted in a superposition.
pub const MAX_FOCK: usize = 64;
/// Gauss-Hermite nodes per axis; the check grid uses twice as many.
pub const FOCK_NODES: usize = 80;
/// Allowed change of `P` between the two quadrature grids.
pub const FOCK_QUADRATURE_TOL: f64 = 1e-8;

/// Cached matrix elements are dropped above this many complex entries.
const CACHE_LIMIT: usize = 4 << 20;

/// Finite superposition `sum_n c_n |n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSuperposition {
    coeffs: Vec<C64>,
}

impl FockSuperposition {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("coeffs", "need at least one amplitude"));
        }
        if coeffs.len() > MAX_FOCK + 1 {
            return Err(Error::invalid("coeffs", format!("Fock index exceeds the truncation {MAX_FOCK}")));
        }
        if !coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::invalid("coeffs", "amplitudes must be finite"));
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("coeffs", format!("squared norm is {norm}, expected 1")));
        }
        Ok(Self { coeffs })
    }

    /// Rescales to unit norm before validating.
    pub fn normalized(coeffs: Vec<C64>) -> Result<Self> {
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::invalid("coeffs", "zero vector cannot be normalized"));
        }
        Self::new(coeffs.into_iter().map(|c| c / norm).collect())
    }

    pub fn basis(n: usize) -> Result<Self> {
        Self::from_real(&[(n, 1.0)])
    }

    /// Real amplitudes on selected Fock indices, e.g. `[(2, 0.5), (4, 0.866)]`.
    pub fn from_real(components: &[(usize, f64)]) -> Result<Self> {
        let top = components.iter().map(|c| c.0).max().unwrap_or(0);
        if top > MAX_FOCK {
            return Err(Error::invalid("coeffs", format!("Fock index exceeds the truncation {MAX_FOCK}")));
        }
        let mut v = vec![C64::new(0.0, 0.0); top + 1];
        for &(n, c) in components {
            v[n] += c;
        }
        Self::new(v)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Indices with non-zero amplitude.
    pub fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&n| self.coeffs[n] != C64::new(0.0, 0.0)).collect()
    }

    pub fn nbar(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
    }

    pub fn moments(&self) -> Moments {
        let c = &self.coeffs;
        let mut a1 = C64::new(0.0, 0.0);
        let mut a2 = C64::new(0.0, 0.0);
        for n in 1..c.len() {
            a1 += c[n - 1].conj() * c[n] * (n as f64).sqrt();
            if n >= 2 {
                a2 += c[n - 2].conj() * c[n] * ((n * (n - 1)) as f64).sqrt();
            }
        }
        let nb = self.nbar();
        let (mx, mp) = (SQRT_2 * a1.re, SQRT_2 * a1.im);
        Moments {
            mean_x: mx,
            mean_p: mp,
            var_x: a2.re + nb + 0.5 - mx * mx,
            var_p: -a2.re + nb + 0.5 - mp * mp,
        }
    }

    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let r2 = x * x + p * p;
        let z = C64::new(SQRT_2 * x, -SQRT_2 * p);
        let c = &self.coeffs;
        let mut acc = 0.0;
        for m in 0..c.len() {
            for n in 0..=m {
                if c[m] == C64::new(0.0, 0.0) || c[n] == C64::new(0.0, 0.0) {
                    continue;
                }
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let k = m - n;
                let mag = (0.5 * (ln_factorial(n) - ln_factorial(m)) - r2).exp();
                let w = z.powu(k as u32) * (sign * mag * laguerre(n, k as f64, 2.0 * r2) / PI);
                let term = c[m] * c[n].conj() * w;
                acc += if m == n { term.re } else { 2.0 * term.re };
            }
        }
        acc
    }
}

/// `<a| D(xi) |b>` including the Gaussian factor `e^{-|xi|^2/2}`.
fn displacement_element(a: usize, b: usize, xi: C64) -> C64 {
    let x = xi.norm_sqr();
    let (lo, hi) = (a.min(b), a.max(b));
    let k = hi - lo;
    let base = if a >= b { xi } else { -xi.conj() };
    if k > 0 && x == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let log_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + 0.5 * k as f64 * x.ln().max(f64::MIN) - 0.5 * x;
    let log_mag = if k == 0 { 0.5 * (ln_factorial(lo) - ln_factorial(hi)) - 0.5 * x } else { log_mag };
    let phase = if k == 0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, k as f64 * base.arg()) };
    phase * (log_mag.exp() * laguerre(lo, k as f64, x))
}

#[derive(Debug, Clone)]
struct KernelGrid {
    k: Vec<f64>,
    /// Gauss-Hermite weights times `e^{k^2/2}`: plain `dk` weights.
    w: Vec<f64>,
    /// Per `k_2` node, the Hermitian form `sum_i w_i M_ab(i, j) conj(M_cd(i, j))`
    /// laid out as `[j s^4 + (a s + b) s^2 + c s + d]`.
    forms: Option<Vec<C64>>,
}

/// Characteristic-function quadrature for superpositions on a fixed Fock
/// basis; reusable across amplitude vectors.
#[derive(Debug, Clone)]
pub struct FockKernel {
    basis: Vec<usize>,
    grids: [KernelGrid; 2],
}

fn xi_at(k1: f64, k2: f64) -> C64 {
    C64::new(-k2, k1) / SQRT_2
}

impl FockKernel {
    pub fn new(basis: &[usize]) -> Result<Self> {
        Self::with_nodes(basis, FOCK_NODES)
    }

    pub fn with_nodes(basis: &[usize], nodes: usize) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::invalid("basis", "empty Fock basis"));
        }
        if basis.iter().any(|&n| n > MAX_FOCK) {
            return Err(Error::invalid("basis", format!("Fock index exceeds the truncation {MAX_FOCK}")));
        }
        let mut sorted = basis.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != basis.len() {
            return Err(Error::invalid("basis", "indices must be distinct"));
        }
        let make = |n: usize| {
            let rule = gauss_hermite_unit_variance(n);
            let w: Vec<f64> = rule.nodes.iter().zip(&rule.weights).map(|(k, w)| w * (0.5 * k * k).exp()).collect();
            let s = basis.len();
            let s2 = s * s;
            let forms = (n * s2 * s2 <= CACHE_LIMIT).then(|| {
                let mut v = vec![C64::new(0.0, 0.0); n * s2 * s2];
                let mut m = vec![C64::new(0.0, 0.0); s2];
                for (j, &k2) in rule.nodes.iter().enumerate() {
                    let form = &mut v[j * s2 * s2..(j + 1) * s2 * s2];
                    for (&k1, &wi) in rule.nodes.iter().zip(&w) {
                        let xi = xi_at(k1, k2);
                        for (ai, &a) in basis.iter().enumerate() {
                            for (bi, &b) in basis.iter().enumerate() {
                                m[ai * s + bi] = displacement_element(a, b, xi);
                            }
                        }
                        for (x, mx) in m.iter().enumerate() {
                            let row = &mut form[x * s2..(x + 1) * s2];
                            for (r, my) in row.iter_mut().zip(&m) {
                                *r += wi * mx * my.conj();
                            }
                        }
                    }
                }
                v
            });
            KernelGrid { k: rule.nodes, w, forms }
        };
        Ok(Self { basis: basis.to_vec(), grids: [make(nodes), make(2 * nodes)] })
    }

    pub fn for_state(f: &FockSuperposition) -> Result<Self> {
        Self::new(&f.support())
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    /// Integrates `|chi_0|^2` over `k_1` for the amplitudes `full[n]`
    /// (indices outside the basis are ignored).
    pub fn marginal(&self, full: &[C64]) -> Result<FockMarginal> {
        let amps: Vec<C64> = self.basis.iter().map(|&n| full.get(n).copied().unwrap_or_default()).collect();
        let s = amps.len();
        let rho: Vec<C64> = (0..s * s).map(|ab| amps[ab % s] * amps[ab / s].conj()).collect();
        let grids = self.grids.each_ref().map(|g| {
            let n = g.k.len();
            let s2 = s * s;
            let mut weight = vec![0.0; n];
            match &g.forms {
                Some(forms) => {
                    for (j, wj) in weight.iter_mut().enumerate() {
                        let form = &forms[j * s2 * s2..(j + 1) * s2 * s2];
                        let mut acc = C64::new(0.0, 0.0);
                        for (x, rx) in rho.iter().enumerate() {
                            let row: C64 = form[x * s2..(x + 1) * s2].iter().zip(&rho).map(|(q, ry)| q * ry.conj()).sum();
                            acc += rx * row;
                        }
                        *wj = acc.re;
                    }
                }
                None => {
                    for (i, &wi) in g.w.iter().enumerate() {
                        for (j, wj) in weight.iter_mut().enumerate() {
                            let xi = xi_at(g.k[i], g.k[j]);
                            let mut chi = C64::new(0.0, 0.0);
                            for (ai, &a) in self.basis.iter().enumerate() {
                                for (bi, &b) in self.basis.iter().enumerate() {
                                    chi += rho[ai * s + bi] * displacement_element(a, b, xi);
                                }
                            }
                            *wj += wi * chi.norm_sqr();
                        }
                    }
                }
            }
            for (wj, gw) in weight.iter_mut().zip(&g.w) {
                *wj *= gw / (2.0 * PI);
            }
            (g.k.clone(), weight)
        });
        let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>();
        if !(norm > 0.0) {
            return Err(Error::invalid("coeffs", "no amplitude on the kernel basis"));
        }
        let qfi = {
            let mut full_vec = vec![C64::new(0.0, 0.0); self.basis.iter().max().copied().unwrap_or(0) + 1];
            for (&n, &c) in self.basis.iter().zip(&amps) {
                full_vec[n] = c / norm.sqrt();
            }
            4.0 * FockSuperposition { coeffs: full_vec }.moments().var_x
        };
        Ok(FockMarginal { grids, qfi })
    }
}

/// Momentum-direction marginal of `|chi_0|^2` on two Gauss-Hermite grids.
#[derive(Debug, Clone)]
pub struct FockMarginal {
    grids: [(Vec<f64>, Vec<f64>); 2],
    qfi: f64,
}

impl FockMarginal {
    fn eval(grid: &(Vec<f64>, Vec<f64>), theta: f64, kappa: f64) -> OverlapGrad {
        let (mut p, mut dt, mut dk) = (0.0, 0.0, 0.0);
        for (&k, &w) in grid.0.iter().zip(&grid.1) {
            let env = w * (-0.5 * kappa * k * k).exp();
            let (s, c) = (k * theta).sin_cos();
            p += env * c;
            dt -= env * k * s;
            dk -= 0.5 * env * k * k * c;
        }
        OverlapGrad { p, d_theta: dt, d_kappa: dk }
    }
}

impl SignalModel for FockMarginal {
    fn overlap(&self, theta: f64, kappa: f64) -> Result<OverlapGrad> {
        if !(kappa >= 0.0) {
            return Err(Error::invalid("kappa", "accumulated diffusion must be non-negative"));
        }
        let coarse = Self::eval(&self.grids[0], theta, kappa);
        let fine = Self::eval(&self.grids[1], theta, kappa);
        let change = (coarse.p - fine.p).abs();
        if change > FOCK_QUADRATURE_TOL {
            return Err(Error::QuadratureNonConvergence { quantity: "Fock overlap", change });
        }
        Ok(fine)
    }

    fn qfi(&self) -> f64 {
        self.qfi
    }
}

/// Overlap of a Fock superposition with its undamped evolved copy.
pub fn evolve_and_overlap_fock(f: &FockSuperposition, fp: &FPParams) -> Result<f64> {
    fp.validate()?;
    fp.require_undamped("fock")?;
    let m = FockKernel::for_state(f)?.marginal(f.coeffs())?;
    Ok(m.overlap(fp.theta(), fp.kappa())?.p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_four() -> FockSuperposition {
        FockSuperposition::from_real(&[(2, 0.5), (4, 0.75f64.sqrt())]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(FockSuperposition::new(vec![C64::new(0.5, 0.0)]).is_err());
        assert!(FockSuperposition::new(vec![C64::new(1.0, 0.0); 1]).is_ok());
        assert!(FockSuperposition::basis(MAX_FOCK + 1).is_err());
        assert!(FockKernel::new(&[2, 2]).is_err());
        let s = FockSuperposition::normalized(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]).unwrap();
        assert!((s.coeffs()[1].im - 0.8).abs() < 1e-15);
    }

    #[test]
    fn vacuum_matches_gaussian_closed_form() {
        let v = FockSuperposition::basis(0).unwrap();
        for (t, k) in [(0.3f64, 0.0f64), (1.2, 0.1), (2.0, 0.3)] {
            let p = evolve_and_overlap_fock(&v, &FPParams::from_totals(t, k).unwrap()).unwrap();
            let e = (1.0 + k).powf(-0.5) * (-0.5 * t * t / (1.0 + k)).exp();
            assert!((p - e).abs() < 1e-10, "{p} vs {e}");
        }
    }

    #[test]
    fn number_states_have_unit_overlap_at_rest() {
        for n in [1, 3, 10] {
            let f = FockSuperposition::basis(n).unwrap();
            let p = evolve_and_overlap_fock(&f, &FPParams::from_totals(0.0, 0.0).unwrap()).unwrap();
            assert!((p - 1.0).abs() < 1e-10, "n={n}: {p}");
        }
        let p = evolve_and_overlap_fock(&two_four(), &FPParams::from_totals(0.0, 0.0).unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-10);
    }

    #[test]
    fn displaced_number_state_overlap() {
        // |<1|D(i theta / sqrt2)|1>|^2 = e^{-theta^2/2} (1 - theta^2/2)^2
        let f = FockSuperposition::basis(1).unwrap();
        let t: f64 = 0.8;
        let p = evolve_and_overlap_fock(&f, &FPParams::from_totals(t, 0.0).unwrap()).unwrap();
        let e = (-0.5 * t * t).exp() * (1.0 - 0.5 * t * t).powi(2);
        assert!((p - e).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let f = two_four();
        let m = FockKernel::for_state(&f).unwrap().marginal(f.coeffs()).unwrap();
        let (t, k, h) = (0.3, 0.03, 1e-5);
        let g = m.overlap(t, k).unwrap();
        let ft = (m.overlap(t + h, k).unwrap().p - m.overlap(t - h, k).unwrap().p) / (2.0 * h);
        let fk = (m.overlap(t, k + h).unwrap().p - m.overlap(t, k - h).unwrap().p) / (2.0 * h);
        assert!((g.d_theta - ft).abs() < 1e-7 && (g.d_kappa - fk).abs() < 1e-7);
    }

    #[test]
    fn moments_of_two_four() {
        let q = 4.0 * two_four().moments().var_x;
        assert!((q - 22.0).abs() < 1e-12, "{q}");
        assert!((two_four().nbar() - 3.5).abs() < 1e-14);
    }

    #[test]
    fn wigner_is_normalized_and_matches_moments() {
        let f = FockSuperposition::normalized(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.3, 0.2)]).unwrap();
        let h = 0.05;
        let (mut mass, mut mx, mut mp) = (0.0, 0.0, 0.0);
        for i in -200..=200 {
            for j in -200..=200 {
                let (x, p) = (i as f64 * h, j as f64 * h);
                let w = f.wigner(x, p) * h * h;
                mass += w;
                mx += x * w;
                mp += p * w;
            }
        }
        let m = f.moments();
        assert!((mass - 1.0).abs() < 1e-10);
        assert!((mx - m.mean_x).abs() < 1e-10 && (mp - m.mean_p).abs() < 1e-10);
    }
}
