//! Gauss-Legendre and Gauss-Hermite rules, plus the orthogonal polynomials the
//! phase-space code needs.

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// Nodes and weights of a Gauss rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affine map of a Legendre rule from [-1, 1] onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Gauss-Legendre rule on [-1, 1] with `n` nodes (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Gauss-Hermite rule for the weight `exp(-x^2)` with `n` nodes.
///
/// Eigenvalues of the Jacobi matrix give starting points; each node is then
/// polished by Newton steps on the orthonormal recurrence, which also yields
/// the weight without overflow for large `n`.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(f64::total_cmp);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for (i, &z0) in guesses.iter().enumerate() {
        let mut z = z0;
        let mut pp = 0.0;
        for _ in 0..50 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = 2.0 / (pp * pp);
    }
    // enforce exact symmetry
    for i in 0..n / 2 {
        let z = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        let w = 0.5 * (weights[n - 1 - i] + weights[i]);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Gauss-Hermite rule rescaled to the weight `exp(-k^2 / 2)`.
pub fn gauss_hermite_unit_variance(n: usize) -> Rule {
    let r = gauss_hermite(n);
    let s = 2f64.sqrt();
    Rule {
        nodes: r.nodes.iter().map(|x| x * s).collect(),
        weights: r.weights.iter().map(|w| w * s).collect(),
    }
}

/// Generalized Laguerre polynomial `L_n^(a)(x)`.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut l0 = 1.0;
    let mut l1 = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + a - x) * l1 - (kf + a) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// log(n!) for small integer arguments.
pub fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let r = gauss_legendre(8);
        // degree 15 is the highest exact degree
        let exact = 2.0 / 15.0;
        assert!((r.integrate(|x| x.powi(14)) - exact).abs() < 1e-14);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m = r.mapped(0.0, 3.0);
        assert!((m.integrate(|x| x * x) - 9.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_moments() {
        for n in [1usize, 2, 5, 20, 80, 160, 320] {
            let r = gauss_hermite(n);
            assert!((r.weights.iter().sum::<f64>() - PI.sqrt()).abs() < 1e-12, "n={n}");
            if n >= 3 {
                assert!((r.integrate(|x| x * x) - PI.sqrt() / 2.0).abs() < 1e-12, "n={n}");
            }
        }
        let r = gauss_hermite(40);
        let exact = PI.sqrt() * (-0.25f64).exp();
        assert!((r.integrate(|x| x.cos()) - exact).abs() < 1e-14);
    }

    #[test]
    fn laguerre_known_values() {
        // L_2(x) = (x^2 - 4x + 2) / 2, L_1^(2)(x) = 3 - x
        assert!((laguerre(2, 0.0, 1.5) - (2.25 - 6.0 + 2.0) / 2.0).abs() < 1e-15);
        assert!((laguerre(1, 2.0, 0.7) - 2.3).abs() < 1e-15);
        // L_3^(1)(x) = (-x^3 + 12x^2 - 36x + 24) / 6
        let x = 0.9f64;
        let exact = (-x.powi(3) + 12.0 * x * x - 36.0 * x + 24.0) / 6.0;
        assert!((laguerre(3, 1.0, x) - exact).abs() < 1e-14);
    }
}
