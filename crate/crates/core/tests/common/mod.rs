//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::Matrix2;
use num_complex::Complex64 as C;

/// Adaptive Dormand-Prince 5(4) integration of `y' = f(t, y)` from `t0` to `t1`.
pub fn rk45(f: impl Fn(f64, &[f64]) -> Vec<f64>, t0: f64, t1: f64, y0: &[f64], rtol: f64, atol: f64) -> Vec<f64> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const C_: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = (t1 - t0) * 1e-4;
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let mut k: Vec<Vec<f64>> = vec![f(t, &y)];
        for s in 0..6 {
            let ys: Vec<f64> = (0..n).map(|i| y[i] + h * (0..=s).map(|j| A[s][j] * k[j][i]).sum::<f64>()).collect();
            k.push(f(t + C_[s] * h, &ys));
        }
        let y5: Vec<f64> = (0..n).map(|i| y[i] + h * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>()).collect();
        let err = (0..n)
            .map(|i| {
                let e = h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>();
                let sc = atol + rtol * y[i].abs().max(y5[i].abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / n as f64;
        let err = err.sqrt();
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    y
}

/// Classical fixed-step RK4.
pub fn rk4(f: impl Fn(f64, &[f64]) -> Vec<f64>, t0: f64, t1: f64, y0: &[f64], steps: usize) -> Vec<f64> {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.to_vec();
    let add = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + h / 2.0, &add(&y, &k1, h / 2.0));
        let k3 = f(t + h / 2.0, &add(&y, &k2, h / 2.0));
        let k4 = f(t + h, &add(&y, &k3, h));
        for j in 0..y.len() {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y
}

/// Plain bisection on a sign-changing bracket.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    assert!(fa * f(b) <= 0.0, "bracket does not change sign");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= 1e-16 * b.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Two-level ion in the `(|e>, |g>)` basis with `H = Delta/2 sz + Omega/2 sx`
/// and spontaneous decay at rate `gamma`.
pub struct TwoLevel {
    pub delta: f64,
    pub omega: f64,
    pub gamma: f64,
}

pub type Op = Matrix2<C>;

pub fn sigma_y() -> Op {
    Op::new(C::new(0.0, 0.0), C::new(0.0, -1.0), C::new(0.0, 1.0), C::new(0.0, 0.0))
}

pub fn sigma_x() -> Op {
    Op::new(C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0))
}

pub fn sigma_z() -> Op {
    Op::new(C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0))
}

pub fn ground() -> Op {
    Op::new(C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0))
}

fn flatten(m: &Op) -> Vec<f64> {
    m.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn unflatten(v: &[f64]) -> Op {
    Op::from_iterator((0..4).map(|i| C::new(v[2 * i], v[2 * i + 1])))
}

impl TwoLevel {
    /// Lindblad generator applied to an arbitrary operator.
    pub fn liouvillian(&self, rho: &Op) -> Op {
        let i = C::new(0.0, 1.0);
        let h = sigma_z() * C::from(self.delta / 2.0) + sigma_x() * C::from(self.omega / 2.0);
        let lower = Op::new(C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0));
        let raise = lower.adjoint();
        let n = raise * lower;
        -(h * rho - rho * h) * i + (lower * rho * raise - (n * rho + rho * n) * C::from(0.5)) * C::from(self.gamma)
    }

    pub fn evolve(&self, rho: &Op, t: f64) -> Op {
        if t == 0.0 {
            return *rho;
        }
        let f = |_t: f64, y: &[f64]| flatten(&self.liouvillian(&unflatten(y)));
        unflatten(&rk45(f, 0.0, t, &flatten(rho), 1e-13, 1e-15))
    }

    pub fn expect(op: &Op, rho: &Op) -> C {
        (op * rho).trace()
    }
}

/// Drift/diffusion integrals from one augmented density-matrix integration:
/// the regression operators `X_c(t) = int_0^t cos(nu t') e^{L(t-t')}(sigma_y rho(t')) dt'`
/// (and `X_s`) obey `X' = L X + cos(nu t) sigma_y rho`.
#[derive(Debug, Clone, Copy)]
pub struct OdeCoefficients {
    pub alpha_x: f64,
    pub alpha_p: f64,
    pub d_xx: f64,
    pub d_pp: f64,
    pub d_xp: f64,
    pub n1: f64,
}

pub fn ode_coefficients(ion: &TwoLevel, eta: f64, nu: f64, tau: f64) -> OdeCoefficients {
    let sy = sigma_y();
    let f = |t: f64, y: &[f64]| -> Vec<f64> {
        let rho = unflatten(&y[0..8]);
        let xc = unflatten(&y[8..16]);
        let xs = unflatten(&y[16..24]);
        let (s, c) = (nu * t).sin_cos();
        let syv = TwoLevel::expect(&sy, &rho).re;
        let src = sy * rho;
        let cc = TwoLevel::expect(&sy, &xc).re;
        let cs = TwoLevel::expect(&sy, &xs).re;
        let mut out = flatten(&ion.liouvillian(&rho));
        out.extend(flatten(&(ion.liouvillian(&xc) + src * C::from(c))));
        out.extend(flatten(&(ion.liouvillian(&xs) + src * C::from(s))));
        out.extend([syv, c * syv, s * syv, c * cc, s * cs, s * cc - c * cs]);
        out
    };
    let mut y0 = flatten(&ground());
    y0.extend(vec![0.0; 22]);
    let y = rk45(f, 0.0, tau, &y0, 1e-12, 1e-16);
    let (iy, ic, is, kcc, kss, kxp) = (y[24], y[25], y[26], y[27], y[28], y[29]);
    let pref = eta * ion.omega / std::f64::consts::SQRT_2;
    let alpha_p = pref * ic;
    let alpha_x = -pref * is;
    let amp = (eta * ion.omega).powi(2);
    OdeCoefficients {
        alpha_x,
        alpha_p,
        d_xx: amp * kss - alpha_x * alpha_x,
        d_pp: amp * kcc - alpha_p * alpha_p,
        d_xp: -0.5 * amp * kxp - alpha_x * alpha_p,
        n1: 0.5 * ion.omega * iy,
    }
}
