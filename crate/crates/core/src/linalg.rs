//! Small dense linear algebra for the 3x3 Bloch generator.
//!
//! The matrix exponential is evaluated from the spectral decomposition of the
//! generator (eigenvalues from the characteristic cubic, Frobenius covariants
//! from Sylvester's formula). When two eigenvalues come too close the
//! covariants lose precision, and [`Expm3`] switches to Pade scaling and
//! squaring for every evaluation.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;

/// Relative eigenvalue gap below which the spectral route is abandoned.
pub const DEGENERACY_GAP: f64 = 1e-5;

type CMatrix3 = Matrix3<C64>;

/// Precomputed exponential `t -> exp(M t)` for a fixed real 3x3 matrix.
#[derive(Debug, Clone)]
pub struct Expm3 {
    generator: Matrix3<f64>,
    spectral: Option<([C64; 3], [CMatrix3; 3])>,
}

impl Expm3 {
    pub fn new(generator: Matrix3<f64>) -> Self {
        let eig = eigenvalues3(&generator);
        let scale = eig.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let mut min_gap = f64::INFINITY;
        for i in 0..3 {
            for j in (i + 1)..3 {
                min_gap = min_gap.min((eig[i] - eig[j]).norm());
            }
        }
        let spectral = if scale > 0.0 && min_gap > DEGENERACY_GAP * scale {
            let m = generator.map(|x| C64::new(x, 0.0));
            let id = CMatrix3::identity();
            let mut covariants = [CMatrix3::zeros(); 3];
            for k in 0..3 {
                let mut p = id;
                for j in 0..3 {
                    if j != k {
                        p = p * (m - id * eig[j]) / (eig[k] - eig[j]);
                    }
                }
                covariants[k] = p;
            }
            Some((eig, covariants))
        } else {
            None
        };
        Self { generator, spectral }
    }

    /// Whether the closed-form spectral route is in use.
    pub fn is_spectral(&self) -> bool {
        self.spectral.is_some()
    }

    pub fn generator(&self) -> &Matrix3<f64> {
        &self.generator
    }

    pub fn at(&self, t: f64) -> Matrix3<f64> {
        match &self.spectral {
            Some((eig, cov)) => {
                let mut acc = CMatrix3::zeros();
                for k in 0..3 {
                    acc += cov[k] * (eig[k] * t).exp();
                }
                acc.map(|z| z.re)
            }
            None => expm_pade(&(self.generator * t)),
        }
    }

    /// `exp(M t) v`.
    pub fn apply(&self, t: f64, v: &Vector3<f64>) -> Vector3<f64> {
        self.at(t) * v
    }

    /// `exp(M t) v` for a complex vector.
    pub fn apply_complex(&self, t: f64, v: &Vector3<C64>) -> Vector3<C64> {
        let e = self.at(t).map(|x| C64::new(x, 0.0));
        e * v
    }
}

/// Eigenvalues of a real 3x3 matrix from its characteristic cubic, polished
/// by Newton iteration.
pub fn eigenvalues3(m: &Matrix3<f64>) -> [C64; 3] {
    let tr = m.trace();
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
        + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)];
    let det = m.determinant();
    // lambda^3 + a lambda^2 + b lambda + c
    let (a, b, c) = (-tr, minors, -det);
    let mut roots = cubic_roots(a, b, c);
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let p = ((*r + a) * *r + b) * *r + c;
            let dp = (3.0 * *r + 2.0 * a) * *r + b;
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            *r -= step;
            if step.norm() <= 1e-16 * r.norm().max(1.0) {
                break;
            }
        }
    }
    roots
}

fn cubic_roots(a: f64, b: f64, c: f64) -> [C64; 3] {
    // depressed cubic y^3 + p y + q with lambda = y - a/3
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = C64::new(q * q / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let u3a = C64::new(-q / 2.0, 0.0) + disc;
    let u3b = C64::new(-q / 2.0, 0.0) - disc;
    let u3 = if u3a.norm() >= u3b.norm() { u3a } else { u3b };
    let omega = C64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut out = [C64::new(0.0, 0.0); 3];
    if u3.norm() == 0.0 {
        out = [C64::new(-shift, 0.0); 3];
        return out;
    }
    let u = u3.cbrt();
    let mut uk = u;
    for root in out.iter_mut() {
        let v = -p / (3.0 * uk);
        *root = uk + v - shift;
        uk *= omega;
    }
    out
}

/// Matrix exponential by [6/6] Pade approximant with scaling and squaring.
pub fn expm_pade(a: &Matrix3<f64>) -> Matrix3<f64> {
    let norm = a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as i32;
    }
    let scaled = a / 2f64.powi(squarings);
    // c_k = (2q - k)! q! / ((2q)! k! (q - k)!) with q = 6
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let id = Matrix3::<f64>::identity();
    let mut num = id;
    let mut den = id;
    let mut power = id;
    for (k, ck) in C.iter().enumerate().skip(1) {
        power *= scaled;
        num += power * *ck;
        den += power * (*ck * if k % 2 == 0 { 1.0 } else { -1.0 });
    }
    let mut e = den.lu().solve(&num).expect("Pade denominator is nonsingular after scaling");
    for _ in 0..squarings {
        e = e * e;
    }
    e
}
