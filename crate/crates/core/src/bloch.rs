//! Optical Bloch equations of the driven, damped two-level spectroscopy ion
//! during one rectangular pulse.
//!
//! All frequencies are angular (rad/s). The Bloch vector obeys
//! `d<sigma>/dt = M <sigma> + Gamma m` with `m = (0, 0, -1)` and the
//! Doppler-shifted detuning `Delta_p = Delta - sqrt(2) eta nu p` entering `M`.

use std::f64::consts::{SQRT_2, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Expm3;
use crate::quadrature::gauss_legendre;

/// Default number of Gauss-Legendre nodes per pulse.
pub const DEFAULT_NODES: usize = 64;

/// Laser and trap parameters of one spectroscopy pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    rabi: f64,
    linewidth: f64,
    detuning: f64,
    lamb_dicke: f64,
    mode_freq: f64,
    pulse_duration: f64,
}

impl PulseParams {
    /// All frequencies in rad/s, duration in seconds.
    pub fn new(
        rabi: f64,
        linewidth: f64,
        detuning: f64,
        lamb_dicke: f64,
        mode_freq: f64,
        pulse_duration: f64,
    ) -> Result<Self> {
        let finite = [rabi, linewidth, detuning, lamb_dicke, mode_freq, pulse_duration];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("pulse", "all parameters must be finite"));
        }
        if linewidth <= 0.0 {
            return Err(Error::invalid("linewidth", "decay rate must be positive"));
        }
        if pulse_duration <= 0.0 {
            return Err(Error::invalid("pulse_duration", "must be positive"));
        }
        if mode_freq <= 0.0 {
            return Err(Error::invalid("mode_freq", "must be positive"));
        }
        if lamb_dicke < 0.0 {
            return Err(Error::invalid("lamb_dicke", "must be non-negative"));
        }
        Ok(Self { rabi, linewidth, detuning, lamb_dicke, mode_freq, pulse_duration })
    }

    /// Same as [`PulseParams::new`] but with frequencies given in Hz.
    pub fn from_hz(
        rabi_hz: f64,
        linewidth_hz: f64,
        detuning_hz: f64,
        lamb_dicke: f64,
        mode_freq_hz: f64,
        pulse_duration: f64,
    ) -> Result<Self> {
        Self::new(TAU * rabi_hz, TAU * linewidth_hz, TAU * detuning_hz, lamb_dicke, TAU * mode_freq_hz, pulse_duration)
    }

    /// The 25Mg+/40Ca+ dipole-transition example: eta = 0.108,
    /// nu = 2 pi 1.92 MHz, Omega = 2 pi 5.6 MHz, Gamma = 2 pi 34 MHz,
    /// 50 ns pulses at Delta = Gamma / 2.
    pub fn mg_ca_example() -> Self {
        Self::from_hz(5.6e6, 34e6, 17e6, 0.108, 1.92e6, 50e-9).expect("valid constants")
    }

    pub fn rabi(&self) -> f64 {
        self.rabi
    }
    pub fn linewidth(&self) -> f64 {
        self.linewidth
    }
    pub fn detuning(&self) -> f64 {
        self.detuning
    }
    pub fn lamb_dicke(&self) -> f64 {
        self.lamb_dicke
    }
    pub fn mode_freq(&self) -> f64 {
        self.mode_freq
    }
    pub fn pulse_duration(&self) -> f64 {
        self.pulse_duration
    }

    /// `sqrt(2) eta`, the recoil kick in zero-point momentum units.
    pub fn scaled_lamb_dicke(&self) -> f64 {
        SQRT_2 * self.lamb_dicke
    }

    /// Trap oscillation period, also the pulse repetition period.
    pub fn mode_period(&self) -> f64 {
        TAU / self.mode_freq
    }

    /// Detuning seen by an ion with dimensionless momentum `p`.
    pub fn doppler_detuning(&self, p: f64) -> f64 {
        self.detuning - self.scaled_lamb_dicke() * self.mode_freq * p
    }

    pub fn with_detuning(&self, detuning: f64) -> Result<Self> {
        Self::new(self.rabi, self.linewidth, detuning, self.lamb_dicke, self.mode_freq, self.pulse_duration)
    }

    pub fn with_rabi(&self, rabi: f64) -> Result<Self> {
        Self::new(rabi, self.linewidth, self.detuning, self.lamb_dicke, self.mode_freq, self.pulse_duration)
    }

    pub fn with_lamb_dicke(&self, lamb_dicke: f64) -> Result<Self> {
        Self::new(self.rabi, self.linewidth, self.detuning, lamb_dicke, self.mode_freq, self.pulse_duration)
    }

    pub fn with_pulse_duration(&self, pulse_duration: f64) -> Result<Self> {
        Self::new(self.rabi, self.linewidth, self.detuning, self.lamb_dicke, self.mode_freq, pulse_duration)
    }
}

/// Expectation values of the Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl BlochVector {
    pub const GROUND: BlochVector = BlochVector { sx: 0.0, sy: 0.0, sz: -1.0 };

    pub fn norm(&self) -> f64 {
        (self.sx * self.sx + self.sy * self.sy + self.sz * self.sz).sqrt()
    }

    /// Population of the excited state, `(1 + sz) / 2`.
    pub fn excited_population(&self) -> f64 {
        0.5 * (1.0 + self.sz)
    }

    fn from_vec(v: &Vector3<f64>) -> Self {
        Self { sx: v[0], sy: v[1], sz: v[2] }
    }

    fn to_vec(self) -> Vector3<f64> {
        Vector3::new(self.sx, self.sy, self.sz)
    }
}

/// Bloch generator `M` and drive vector `m` for an ion with momentum `p`.
pub fn bloch_matrix(p: &PulseParams, doppler_momentum: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let g = p.linewidth;
    let dp = p.doppler_detuning(doppler_momentum);
    let om = p.rabi;
    #[rustfmt::skip]
    let m = Matrix3::new(
        -0.5 * g, -dp,       0.0,
        dp,       -0.5 * g,  -om,
        0.0,      om,        -g,
    );
    (m, Vector3::new(0.0, 0.0, -1.0))
}

/// Closed-form propagator of the Bloch equations for one parameter set.
#[derive(Debug, Clone)]
pub struct BlochSolver {
    params: PulseParams,
    expm: Expm3,
    /// `-Gamma M^-1 m`, the steady state.
    steady: Vector3<f64>,
    ground: Vector3<f64>,
}

impl BlochSolver {
    pub fn new(params: &PulseParams) -> Result<Self> {
        Self::with_momentum(params, 0.0)
    }

    pub fn with_momentum(params: &PulseParams, doppler_momentum: f64) -> Result<Self> {
        let (m, drive) = bloch_matrix(params, doppler_momentum);
        let inv = m.try_inverse().ok_or(Error::SingularMatrix("Bloch generator"))?;
        let steady = -(inv * drive) * params.linewidth;
        Ok(Self { params: *params, expm: Expm3::new(m), steady, ground: drive })
    }

    pub fn params(&self) -> &PulseParams {
        &self.params
    }

    pub fn steady_state(&self) -> BlochVector {
        BlochVector::from_vec(&self.steady)
    }

    /// Bloch vector at time `t >= 0` after switching on the drive with the ion
    /// in the ground state. `t` may exceed the pulse duration.
    pub fn bloch_vector(&self, t: f64) -> Result<BlochVector> {
        if !(t >= 0.0) {
            return Err(Error::invalid("t", format!("time must be non-negative, got {t}")));
        }
        Ok(BlochVector::from_vec(&self.bloch_vec_unchecked(t)))
    }

    fn bloch_vec_unchecked(&self, t: f64) -> Vector3<f64> {
        self.expm.apply(t, &(self.ground - self.steady)) + self.steady
    }

    /// `Re <sigma_y(t) sigma_y(t')>` for `t >= t'` via the quantum regression
    /// theorem.
    pub fn correlation_yy(&self, t: f64, t_prime: f64) -> Result<f64> {
        if !(t_prime >= 0.0) {
            return Err(Error::invalid("t_prime", format!("time must be non-negative, got {t_prime}")));
        }
        if t_prime > t {
            return Err(Error::TimeOrdering { t, t_prime });
        }
        let s = self.bloch_vec_unchecked(t_prime);
        Ok(self.correlation_from(t - t_prime, s[1]))
    }

    /// Regression solution for lag `tau` given `<sigma_y(t')>`.
    ///
    /// The initial vector `(i sz, 1, -i sx)` has real part `(0, 1, 0)`; since
    /// the propagator is real only that part survives in `Re`.
    fn correlation_from(&self, tau: f64, sy_prime: f64) -> f64 {
        let init = Vector3::new(0.0, 1.0, 0.0) - self.steady * sy_prime;
        self.expm.apply(tau, &init)[1] + sy_prime * self.steady[1]
    }

    /// Samples `<sigma_y>` and its two-time correlation on the pulse's
    /// Gauss-Legendre grid.
    pub fn trajectory(&self, nodes: usize) -> BlochTrajectory {
        let rule = gauss_legendre(nodes).mapped(0.0, self.params.pulse_duration);
        let values: Vec<BlochVector> =
            rule.nodes.iter().map(|&t| BlochVector::from_vec(&self.bloch_vec_unchecked(t))).collect();
        let corr_yy = (0..nodes)
            .map(|i| {
                (0..=i)
                    .map(|j| self.correlation_from(rule.nodes[i] - rule.nodes[j], values[j].sy))
                    .collect()
            })
            .collect();
        BlochTrajectory { grid: rule.nodes, weights: rule.weights, values, corr_yy }
    }

    /// Inner-rule evaluation used by the drift/diffusion quadrature: for
    /// outer time `t` and Legendre abscissae `u` in [-1, 1] rescaled to
    /// `[0, t]`, returns `(t', <sigma_y(t')>, Re<sigma_y(t) sigma_y(t')>)`.
    pub(crate) fn regression_samples(&self, t: f64, unit_nodes: &[f64]) -> Vec<(f64, f64, f64)> {
        unit_nodes
            .iter()
            .map(|u| {
                let tp = 0.5 * t * (u + 1.0);
                let sy = self.bloch_vec_unchecked(tp)[1];
                (tp, sy, self.correlation_from(t - tp, sy))
            })
            .collect()
    }

    pub(crate) fn sigma_y(&self, t: f64) -> f64 {
        self.bloch_vec_unchecked(t)[1]
    }
}

/// Time-sampled Bloch solution on a Gauss-Legendre grid over `[0, tau_p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochTrajectory {
    pub grid: Vec<f64>,
    /// Quadrature weights belonging to `grid`.
    pub weights: Vec<f64>,
    pub values: Vec<BlochVector>,
    /// Row `i` holds `Re<sigma_y(t_i) sigma_y(t_j)>` for `j <= i`.
    pub corr_yy: Vec<Vec<f64>>,
}

impl BlochTrajectory {
    /// Symmetric lookup of the correlation matrix.
    pub fn corr(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.corr_yy[i][j]
        } else {
            self.corr_yy[j][i]
        }
    }
}

/// Bloch vector at time `t` in `[0, tau_p]` for an ion at rest.
pub fn solve_bloch(p: &PulseParams, t: f64) -> Result<BlochVector> {
    if t > p.pulse_duration * (1.0 + 1e-12) {
        return Err(Error::invalid("t", format!("time {t} exceeds the pulse duration")));
    }
    BlochSolver::new(p)?.bloch_vector(t)
}

/// `Re <sigma_y(t) sigma_y(t')>` for an ion at rest, `0 <= t' <= t`.
pub fn correlation_yy(p: &PulseParams, t: f64, t_prime: f64) -> Result<f64> {
    BlochSolver::new(p)?.correlation_yy(t, t_prime)
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        let v = v.to_vec();
        [v[0], v[1], v[2]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> PulseParams {
        PulseParams::mg_ca_example()
    }

    #[test]
    fn undriven_matrix_is_pure_decay() {
        let p = example().with_rabi(0.0).unwrap().with_detuning(0.0).unwrap();
        let (m, drive) = bloch_matrix(&p, 0.0);
        let g = p.linewidth();
        assert_eq!(m, Matrix3::from_diagonal(&Vector3::new(-g / 2.0, -g / 2.0, -g)));
        assert_eq!(drive, Vector3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn doppler_detuning_definition() {
        let p = example();
        assert_eq!(p.doppler_detuning(0.0), p.detuning());
        let expected = p.detuning() - SQRT_2 * 0.108 * TAU * 1.92e6;
        assert!((p.doppler_detuning(1.0) - expected).abs() < 1e-6);
        let (m, _) = bloch_matrix(&p, 1.0);
        assert!((m[(1, 0)] - expected).abs() < 1e-6);
        assert!((m[(0, 1)] + expected).abs() < 1e-6);
    }

    #[test]
    fn zero_linewidth_is_rejected() {
        let err = PulseParams::new(1.0, 0.0, 0.0, 0.1, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "linewidth", .. }));
        assert!(PulseParams::new(1.0, 1.0, 0.0, -0.1, 1.0, 1.0).is_err());
        assert!(PulseParams::new(1.0, 1.0, 0.0, 0.1, 0.0, 1.0).is_err());
        assert!(PulseParams::new(1.0, 1.0, 0.0, 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn initial_condition_and_undriven_ground_state() {
        let p = example();
        assert_eq!(solve_bloch(&p, 0.0).unwrap(), BlochVector::GROUND);
        let dark = p.with_rabi(0.0).unwrap();
        for t in [0.0, 1e-8, 3e-8, 5e-8] {
            let v = solve_bloch(&dark, t).unwrap();
            assert!(v.sx.abs() < 1e-15 && v.sy.abs() < 1e-15 && (v.sz + 1.0).abs() < 1e-15);
        }
        assert!(solve_bloch(&p, 1e-6).is_err());
    }

    #[test]
    fn equal_time_correlation_is_one() {
        let s = BlochSolver::new(&example()).unwrap();
        for t in [0.0, 1e-8, 4.9e-8] {
            assert!((s.correlation_yy(t, t).unwrap() - 1.0).abs() < 1e-13);
        }
        assert!(matches!(s.correlation_yy(1e-8, 2e-8), Err(Error::TimeOrdering { .. })));
    }

    #[test]
    fn undriven_correlation_is_free_decay() {
        let p = example().with_rabi(0.0).unwrap();
        let s = BlochSolver::new(&p).unwrap();
        let (m, _) = bloch_matrix(&p, 0.0);
        for tau in [1e-9, 1e-8, 3e-8] {
            let expected = (crate::linalg::expm_pade(&(m * tau)) * Vector3::new(0.0, 1.0, 0.0))[1];
            let c = s.correlation_yy(4e-8, 4e-8 - tau).unwrap();
            assert!((c - expected).abs() < 1e-13, "tau={tau}: {c} vs {expected}");
        }
    }

    fn residual(s: &BlochSolver, t: f64) -> f64 {
        let ss = s.steady_state();
        let v = s.bloch_vector(t).unwrap();
        ((v.sx - ss.sx).powi(2) + (v.sy - ss.sy).powi(2) + (v.sz - ss.sz).powi(2)).sqrt()
    }

    #[test]
    fn long_times_relax_to_steady_state() {
        // strong resonant drive: sx decouples and the y-z block decays at 3 Gamma / 4
        let p = example().with_detuning(0.0).unwrap();
        let p = p.with_rabi(p.linewidth()).unwrap();
        let s = BlochSolver::new(&p).unwrap();
        assert!(residual(&s, 20.0 / p.linewidth()) < 1e-6);
        // off resonance the coherences decay at Gamma / 2 only
        let p = example();
        let s = BlochSolver::new(&p).unwrap();
        assert!(residual(&s, 30.0 / p.linewidth()) < 1e-6);
        let mut last = f64::INFINITY;
        for k in 4..=30 {
            let r = residual(&s, k as f64 / p.linewidth());
            assert!(r <= last * (1.0 + 1e-12), "k={k}");
            last = r;
        }
    }

    #[test]
    fn steady_state_population_is_even_in_detuning() {
        let base = example();
        for d in [0.1, 0.5, 1.3, 3.0] {
            let dd = d * base.linewidth();
            let a = BlochSolver::new(&base.with_detuning(dd).unwrap()).unwrap().steady_state();
            let b = BlochSolver::new(&base.with_detuning(-dd).unwrap()).unwrap().steady_state();
            assert!((a.excited_population() - b.excited_population()).abs() < 1e-10);
        }
    }

    #[test]
    fn trajectory_grid_properties() {
        let s = BlochSolver::new(&example()).unwrap();
        let tr = s.trajectory(16);
        assert!(tr.grid.windows(2).all(|w| w[1] > w[0]));
        for i in 0..16 {
            assert!((tr.corr(i, i) - 1.0).abs() < 1e-13);
            for j in 0..=i {
                assert!(tr.corr(i, j).abs() <= 1.0 + 1e-12);
                assert_eq!(tr.corr(i, j), tr.corr(j, i));
            }
        }
        let w: f64 = tr.weights.iter().sum();
        assert!((w - 50e-9).abs() < 1e-20);
    }
}
