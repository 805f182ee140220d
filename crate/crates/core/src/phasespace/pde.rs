//! Grid solver for the momentum Fokker-Planck equation, used to validate the
//! closed-form overlaps.
//!
//! Crank-Nicolson in `p` with fourth-order central stencils; `x` is only a
//! parameter of the one-dimensional dynamics. The sampled Wigner function is
//! compressed by an SVD so that only a handful of `p`-profiles are evolved.
//! Runs with `N` and `2N` steps are combined by Richardson extrapolation.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{FPParams, MotionalState};
use crate::error::{Error, Result};

/// Lowest admissible total mass on the grid.
pub const MASS_FLOOR: f64 = 1.0 - 1e-6;

/// Uniform grid on a rectangle of phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

const DEFAULT_HALF_WIDTH: f64 = 10.0;
const DEFAULT_NX: usize = 128;
const DEFAULT_NP: usize = 1024;

impl PhaseGrid {
    pub fn new(x_range: (f64, f64), nx: usize, p_range: (f64, f64), np: usize) -> Result<Self> {
        if !(x_range.1 > x_range.0 && p_range.1 > p_range.0) {
            return Err(Error::invalid("grid", "ranges must be increasing"));
        }
        if nx < 5 || np < 5 {
            return Err(Error::invalid("grid", "need at least five points per axis"));
        }
        Ok(Self { x_min: x_range.0, x_max: x_range.1, nx, p_min: p_range.0, p_max: p_range.1, np })
    }

    /// `+-10` zero-point widths with 128 x 1024 points.
    pub fn standard() -> Self {
        let h = DEFAULT_HALF_WIDTH;
        Self { x_min: -h, x_max: h, nx: DEFAULT_NX, p_min: -h, p_max: h, np: DEFAULT_NP }
    }

    /// Standard resolution, enlarged to contain six standard deviations of
    /// the initial and the evolved state.
    pub fn covering(state: &MotionalState, fp: &FPParams) -> Self {
        let m = state.moments();
        let sx = m.var_x.sqrt();
        let sp0 = m.var_p.sqrt();
        let sp1 = (m.var_p + fp.kappa()).sqrt();
        let end = m.mean_p - fp.theta();
        let xh = DEFAULT_HALF_WIDTH.max(m.mean_x.abs() + 6.0 * sx);
        let p_lo = (-DEFAULT_HALF_WIDTH).min(m.mean_p - 6.0 * sp0).min(end - 6.0 * sp1);
        let p_hi = DEFAULT_HALF_WIDTH.max(m.mean_p + 6.0 * sp0).max(end + 6.0 * sp1);
        let dx0 = 2.0 * DEFAULT_HALF_WIDTH / (DEFAULT_NX - 1) as f64;
        let dp0 = 2.0 * DEFAULT_HALF_WIDTH / (DEFAULT_NP - 1) as f64;
        Self {
            x_min: -xh,
            x_max: xh,
            nx: (2.0 * xh / dx0).ceil() as usize + 1,
            p_min: p_lo,
            p_max: p_hi,
            np: ((p_hi - p_lo) / dp0).ceil() as usize + 1,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    fn trapezoid(n: usize, h: f64) -> Vec<f64> {
        let mut w = vec![h; n];
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
        w
    }
}

/// Wigner function sampled on a [`PhaseGrid`], row-major in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn sample(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.nx * grid.np);
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.np {
                values.push(f(x, grid.p(j)));
            }
        }
        Self { grid, values }
    }

    pub fn of_state(state: &MotionalState, grid: PhaseGrid) -> Self {
        Self::sample(grid, |x, p| state.wigner(x, p))
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.np + j]
    }

    /// Trapezoidal `int W dx dp`.
    pub fn mass(&self) -> f64 {
        let wx = PhaseGrid::trapezoid(self.grid.nx, self.grid.dx());
        let wp = PhaseGrid::trapezoid(self.grid.np, self.grid.dp());
        let mut acc = 0.0;
        for (i, row) in self.values.chunks(self.grid.np).enumerate() {
            acc += wx[i] * row.iter().zip(&wp).map(|(v, w)| v * w).sum::<f64>();
        }
        acc
    }

    /// Trapezoidal `tr(rho_a rho_b) = 2 pi int W_a W_b dx dp` on a shared
    /// grid (normalized Wigner functions, `[x, p] = i`).
    pub fn overlap(&self, other: &WignerGrid) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("grid", "overlap needs identical grids"));
        }
        let wx = PhaseGrid::trapezoid(self.grid.nx, self.grid.dx());
        let wp = PhaseGrid::trapezoid(self.grid.np, self.grid.dp());
        let np = self.grid.np;
        let mut acc = 0.0;
        for i in 0..self.grid.nx {
            let a = &self.values[i * np..(i + 1) * np];
            let b = &other.values[i * np..(i + 1) * np];
            acc += wx[i] * a.iter().zip(b).zip(&wp).map(|((u, v), w)| u * v * w).sum::<f64>();
        }
        Ok(2.0 * PI * acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Time steps of the coarse run; chosen from the drift when `None`.
    pub steps: Option<usize>,
    /// Combine `N` and `2N` step runs.
    pub richardson: bool,
    /// Singular values below this fraction of the largest are dropped.
    pub rank_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { steps: None, richardson: true, rank_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub evolved: WignerGrid,
    /// `2 pi int W_0 W_tbar`.
    pub overlap: f64,
    pub mass: f64,
    pub steps: usize,
    pub rank: usize,
}

/// Pentadiagonal matrix stored by diagonals `a[i][k] = A[i][i + k - 2]`.
#[derive(Debug, Clone)]
struct Band5 {
    a: Vec<[f64; 5]>,
}

impl Band5 {
    fn identity_plus(n: usize, scale: f64, op: &Band5) -> Band5 {
        let mut a = op.a.clone();
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
            row[2] += 1.0;
        }
        let _ = n;
        Band5 { a }
    }

    fn mul(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..5 {
                let j = i as isize + k as isize - 2;
                if j >= 0 && (j as usize) < n {
                    acc += self.a[i][k] * v[j as usize];
                }
            }
            out[i] = acc;
        }
    }

    /// In-place LU without pivoting; the Crank-Nicolson matrix has a
    /// positive definite symmetric part.
    fn factor(mut self) -> Result<Band5> {
        let n = self.a.len();
        for i in 0..n {
            let piv = self.a[i][2];
            if piv.abs() < 1e-300 {
                return Err(Error::SingularMatrix("Crank-Nicolson system"));
            }
            for r in i + 1..(i + 3).min(n) {
                // A[r][i] lives at a[r][i - r + 2]
                let l = self.a[r][i + 2 - r] / piv;
                self.a[r][i + 2 - r] = l;
                for c in i + 1..(i + 3).min(n) {
                    self.a[r][c + 2 - r] -= l * self.a[i][c + 2 - i];
                }
            }
        }
        Ok(self)
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for r in 0..n {
            let mut acc = b[r];
            for i in r.saturating_sub(2)..r {
                acc -= self.a[r][i + 2 - r] * b[i];
            }
            b[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = b[r];
            for c in r + 1..(r + 3).min(n) {
                acc -= self.a[r][c + 2 - r] * b[c];
            }
            b[r] = acc / self.a[r][2];
        }
    }
}

/// `L = alpha D1 + (d/2) D2 + g D1 diag(p)` on the momentum grid.
fn generator(grid: &PhaseGrid, fp: &FPParams) -> Band5 {
    let n = grid.np;
    let h = grid.dp();
    let d1 = [1.0, -8.0, 0.0, 8.0, -1.0].map(|c| c / (12.0 * h));
    let d2 = [-1.0, 16.0, -30.0, 16.0, -1.0].map(|c| c / (12.0 * h * h));
    let mut a = vec![[0.0; 5]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for k in 0..5 {
            let j = i as isize + k as isize - 2;
            if j < 0 || j as usize >= n {
                continue;
            }
            let pj = grid.p(j as usize);
            row[k] = fp.alpha * d1[k] + 0.5 * fp.d * d2[k] + fp.g * d1[k] * pj;
        }
    }
    Band5 { a }
}

fn default_steps(fp: &FPParams) -> usize {
    let theta = fp.theta().abs();
    let gt = (fp.g * fp.tbar).abs();
    64 + (100.0 * theta + 200.0 * fp.kappa() + 400.0 * gt).ceil() as usize
}

/// Evolves every column profile through `steps` Crank-Nicolson steps.
fn propagate(profiles: &[Vec<f64>], grid: &PhaseGrid, fp: &FPParams, steps: usize) -> Result<Vec<Vec<f64>>> {
    let l = generator(grid, fp);
    let dt = fp.tbar / steps as f64;
    let lhs = Band5::identity_plus(grid.np, -0.5 * dt, &l).factor()?;
    let rhs = Band5::identity_plus(grid.np, 0.5 * dt, &l);
    let mut scratch = vec![0.0; grid.np];
    Ok(profiles
        .iter()
        .map(|v0| {
            let mut v = v0.clone();
            for _ in 0..steps {
                rhs.mul(&v, &mut scratch);
                lhs.solve(&mut scratch);
                std::mem::swap(&mut v, &mut scratch);
            }
            v
        })
        .collect())
}

/// Evolves a sampled Wigner function and returns the overlap with the
/// initial one.
pub fn pde_oracle(w0: &WignerGrid, fp: &FPParams, cfg: &OracleConfig) -> Result<OracleResult> {
    fp.validate()?;
    let grid = w0.grid;
    if w0.values.len() != grid.nx * grid.np {
        return Err(Error::invalid("w0", "sample count does not match the grid"));
    }
    let mass0 = w0.mass();
    if mass0 < MASS_FLOOR {
        return Err(Error::GridUnderflow { mass: mass0 });
    }
    let m = DMatrix::from_row_slice(grid.nx, grid.np, &w0.values);
    let svd = m.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let s_max = svd.singular_values.max();
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&r| svd.singular_values[r] > cfg.rank_tol * s_max).collect();
    let profiles: Vec<Vec<f64>> = keep.iter().map(|&r| vt.row(r).iter().copied().collect()).collect();

    let steps = cfg.steps.unwrap_or_else(|| default_steps(fp)).max(1);
    let coarse = propagate(&profiles, &grid, fp, steps)?;
    let evolved_profiles = if cfg.richardson {
        let fine = propagate(&profiles, &grid, fp, 2 * steps)?;
        fine.iter()
            .zip(&coarse)
            .map(|(f, c)| f.iter().zip(c).map(|(a, b)| (4.0 * a - b) / 3.0).collect())
            .collect()
    } else {
        coarse
    };

    let mut values = vec![0.0; grid.nx * grid.np];
    for (idx, &r) in keep.iter().enumerate() {
        let s = svd.singular_values[r];
        for i in 0..grid.nx {
            let c = s * u[(i, r)];
            let row = &mut values[i * grid.np..(i + 1) * grid.np];
            for (v, e) in row.iter_mut().zip(&evolved_profiles[idx]) {
                *v += c * e;
            }
        }
    }
    let evolved = WignerGrid { grid, values };
    let mass = evolved.mass();
    if mass < MASS_FLOOR {
        return Err(Error::GridUnderflow { mass });
    }
    let overlap = w0.overlap(&evolved)?;
    Ok(OracleResult { evolved, overlap, mass, steps, rank: keep.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::{GaussianState, MotionalState};

    #[test]
    fn no_dynamics_leaves_grid_unchanged() {
        let s = MotionalState::cat(1.5).unwrap();
        let fp = FPParams::new(0.0, 0.0, 0.0, 3.0).unwrap();
        let w0 = WignerGrid::of_state(&s, PhaseGrid::covering(&s, &fp));
        let out = pde_oracle(&w0, &fp, &OracleConfig::default()).unwrap();
        let err = w0.values.iter().zip(&out.evolved.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn vacuum_half_overlap() {
        let s = MotionalState::vacuum();
        let fp = FPParams::from_totals((2.0 * 2f64.ln()).sqrt(), 0.0).unwrap();
        let w0 = WignerGrid::of_state(&s, PhaseGrid::covering(&s, &fp));
        let out = pde_oracle(&w0, &fp, &OracleConfig::default()).unwrap();
        assert!((out.overlap - 0.5).abs() < 1e-4, "{}", out.overlap);
        assert!((out.mass - 1.0).abs() < 1e-6);
        assert_eq!(out.rank, 1);
    }

    #[test]
    fn damped_gaussian_moments() {
        let s0 = GaussianState::momentum_squeezed(0.5).unwrap();
        let s = MotionalState::Gaussian(s0);
        let fp = FPParams::new(0.1, 0.02, 0.05, 5.0).unwrap();
        let w0 = WignerGrid::of_state(&s, PhaseGrid::covering(&s, &fp));
        let out = pde_oracle(&w0, &fp, &OracleConfig::default()).unwrap();
        let exact = crate::phasespace::evolve_gaussian(&s0, &fp).unwrap();
        let want = WignerGrid::of_state(&MotionalState::Gaussian(exact), w0.grid);
        let p_exact = crate::phasespace::overlap_gaussian(&s0, &exact).unwrap();
        assert!((out.overlap - p_exact).abs() < 1e-5, "{} vs {p_exact}", out.overlap);
        let err = want.values.iter().zip(&out.evolved.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn truncated_grid_underflows() {
        let s = MotionalState::vacuum();
        let grid = PhaseGrid::new((-10.0, 10.0), 64, (-2.0, 10.0), 512).unwrap();
        let w0 = WignerGrid::of_state(&s, grid);
        let fp = FPParams::from_totals(1.0, 0.0).unwrap();
        assert!(matches!(pde_oracle(&w0, &fp, &OracleConfig::default()), Err(Error::GridUnderflow { .. })));
    }
}
