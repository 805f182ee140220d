//! Scalar root finding and finite-difference derivatives.

use crate::error::{Error, Result};

/// Brent's method for a sign-changing bracket `[a, b]`.
pub fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
    }
    Some(b)
}

/// First sign change of `f` scanning `[lo, hi]` in `steps` uniform cells,
/// refined with Brent. Returns `None` if `f` keeps its sign.
pub fn first_crossing(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize, xtol: f64) -> Option<f64> {
    let h = (hi - lo) / steps as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=steps {
        let x1 = lo + h * i as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            return Some(x0);
        }
        if f0.signum() != f1.signum() {
            return brent(&f, x0, x1, xtol);
        }
        x0 = x1;
        f0 = f1;
    }
    None
}

/// Central-difference derivative with Richardson extrapolation (Ridders'
/// tableau). Step halves each round until the extrapolated estimate changes
/// by less than `rtol` relative to `scale.max(|estimate|)`.
pub fn derivative(
    f: impl Fn(f64) -> Result<f64>,
    x: f64,
    h0: f64,
    rtol: f64,
    scale: f64,
    quantity: &'static str,
) -> Result<f64> {
    const ROUNDS: usize = 8;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(ROUNDS);
    let mut h = h0;
    let mut best = f64::NAN;
    let mut last_change = f64::INFINITY;
    for i in 0..ROUNDS {
        let d0 = (f(x + h)? - f(x - h)?) / (2.0 * h);
        let mut row = vec![d0];
        let mut fac = 4.0;
        for j in 1..=i {
            let prev = &table[i - 1][j - 1];
            let v = (fac * row[j - 1] - prev) / (fac - 1.0);
            row.push(v);
            fac *= 4.0;
        }
        if i > 0 {
            let cur = row[i];
            let change = (cur - best).abs();
            let denom = scale.max(cur.abs());
            last_change = if denom > 0.0 { change / denom } else { 0.0 };
            best = cur;
            if last_change <= rtol {
                return Ok(best);
            }
        } else {
            best = row[0];
        }
        table.push(row);
        h *= 0.5;
    }
    Err(Error::DerivativeNonConvergence { quantity, change: last_change })
}
