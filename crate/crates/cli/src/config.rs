//! Run configuration: one TOML file with a `[pulse]` table and one table per
//! subcommand. Every field has a default, so an empty file is a valid run of
//! the 25Mg+/40Ca+ example. Frequencies are given in Hz.

use std::f64::consts::TAU;
use std::path::Path;

use prs_core::metrology::SensitivityMode;
use prs_core::phasespace::{FockSuperposition, GaussianState, MotionalState};
use prs_core::stateopt::{cat_beta_for_nbar, squeezing_for_nbar, squeezing_from_db};
use prs_core::PulseParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub pulse: PulseConfig,
    pub coeffs: CoeffsConfig,
    pub resonance: ResonanceConfig,
    pub sensitivity: SensitivityConfig,
    pub shift: ShiftConfig,
    pub optimize: OptimizeConfig,
    pub budget: BudgetConfig,
    pub oracle_check: OracleCheckConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    pub rabi_hz: f64,
    pub linewidth_hz: f64,
    pub detuning_hz: f64,
    pub lamb_dicke: f64,
    pub mode_freq_hz: f64,
    pub pulse_duration_s: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            rabi_hz: 5.6e6,
            linewidth_hz: 34e6,
            detuning_hz: 17e6,
            lamb_dicke: 0.108,
            mode_freq_hz: 1.92e6,
            pulse_duration_s: 50e-9,
        }
    }
}

impl PulseConfig {
    pub fn params(&self) -> CliResult<PulseParams> {
        PulseParams::from_hz(
            self.rabi_hz,
            self.linewidth_hz,
            self.detuning_hz,
            self.lamb_dicke,
            self.mode_freq_hz,
            self.pulse_duration_s,
        )
        .map_err(|e| CliError::core("pulse", e))
    }

    /// Same pulse at another detuning given in Hz.
    pub fn params_at(&self, detuning_hz: f64) -> CliResult<PulseParams> {
        self.params()?.with_detuning(TAU * detuning_hz).map_err(|e| CliError::core("pulse", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

/// A sweep axis: a single value, an explicit list, or an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Single(f64),
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default = "linear")]
        spacing: Spacing,
    },
}

fn linear() -> Spacing {
    Spacing::Linear
}

impl Grid {
    pub fn values(&self, name: &str) -> CliResult<Vec<f64>> {
        let v = match self {
            Grid::Single(x) => vec![*x],
            Grid::Values(v) => v.clone(),
            Grid::Range { start, stop, points, spacing } => {
                let n = *points;
                if n == 0 {
                    return Err(CliError::Config(format!("{name}: range needs at least one point")));
                }
                let at = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                match spacing {
                    Spacing::Linear => (0..n).map(|i| start + (stop - start) * at(i)).collect(),
                    Spacing::Log => {
                        if !(*start > 0.0 && *stop > 0.0) {
                            return Err(CliError::Config(format!("{name}: log spacing needs positive bounds")));
                        }
                        let (a, b) = (start.ln(), stop.ln());
                        (0..n).map(|i| (a + (b - a) * at(i)).exp()).collect()
                    }
                }
            }
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("{name}: grid is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("{name}: grid values must be finite")));
        }
        Ok(v)
    }
}

/// Probe state. Squeezed and cat states can be given by their own parameter
/// or by mean phonon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum StateSpec {
    Vacuum,
    Squeezed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        db: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nbar: Option<f64>,
    },
    Coherent {
        x: f64,
        p: f64,
    },
    Cat {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nbar: Option<f64>,
    },
    /// Real amplitudes `[n, c_n]`, normalized on use.
    Fock {
        components: Vec<(usize, f64)>,
    },
}

fn exactly_one(name: &str, given: &[Option<f64>]) -> CliResult<()> {
    if given.iter().filter(|x| x.is_some()).count() != 1 {
        return Err(CliError::Config(format!("{name}: give exactly one parameter")));
    }
    Ok(())
}

impl StateSpec {
    pub fn squeezed_r(&self) -> CliResult<Option<f64>> {
        match self {
            StateSpec::Squeezed { r, db, nbar } => {
                exactly_one("squeezed state", &[*r, *db, *nbar])?;
                Ok(Some(r.or(db.map(squeezing_from_db)).unwrap_or_else(|| squeezing_for_nbar(nbar.unwrap()))))
            }
            _ => Ok(None),
        }
    }

    pub fn state(&self) -> CliResult<MotionalState> {
        let e = |err| CliError::core(self.label(), err);
        Ok(match self {
            StateSpec::Vacuum | StateSpec::Squeezed { .. } | StateSpec::Coherent { .. } => {
                MotionalState::Gaussian(self.gaussian()?)
            }
            StateSpec::Cat { beta, nbar } => {
                exactly_one("cat state", &[*beta, *nbar])?;
                let beta = match (beta, nbar) {
                    (Some(b), _) => *b,
                    (None, Some(n)) => cat_beta_for_nbar(*n).map_err(e)?,
                    _ => unreachable!(),
                };
                MotionalState::cat(beta).map_err(e)?
            }
            StateSpec::Fock { components } => {
                let norm: f64 = components.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
                if !(norm > 0.0) {
                    return Err(CliError::Config(format!("{}: amplitudes vanish", self.label())));
                }
                let scaled: Vec<(usize, f64)> = components.iter().map(|(n, c)| (*n, c / norm)).collect();
                MotionalState::Fock(FockSuperposition::from_real(&scaled).map_err(e)?)
            }
        })
    }

    /// Gaussian states only; the Doppler analysis needs the damped solution.
    pub fn gaussian(&self) -> CliResult<GaussianState> {
        let e = |err| CliError::core(self.label(), err);
        match self {
            StateSpec::Vacuum => Ok(GaussianState::vacuum()),
            StateSpec::Squeezed { .. } => GaussianState::momentum_squeezed(self.squeezed_r()?.unwrap()).map_err(e),
            StateSpec::Coherent { x, p } => Ok(GaussianState::coherent(*x, *p)),
            _ => Err(CliError::Config(format!("{}: only Gaussian states are supported here", self.label()))),
        }
    }

    /// Short deterministic name used in output rows.
    pub fn label(&self) -> String {
        let opt = |k: &str, v: &Option<f64>| v.map(|v| format!("{k}={v}"));
        match self {
            StateSpec::Vacuum => "vacuum".into(),
            StateSpec::Squeezed { r, db, nbar } => {
                let args: Vec<String> =
                    [opt("r", r), opt("db", db), opt("nbar", nbar)].into_iter().flatten().collect();
                format!("squeezed({})", args.join(","))
            }
            StateSpec::Coherent { x, p } => format!("coherent(x={x},p={p})"),
            StateSpec::Cat { beta, nbar } => {
                let args: Vec<String> = [opt("beta", beta), opt("nbar", nbar)].into_iter().flatten().collect();
                format!("cat({})", args.join(","))
            }
            StateSpec::Fock { components } => {
                let args: Vec<String> = components.iter().map(|(n, c)| format!("{n}:{c}")).collect();
                format!("fock({})", args.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    /// Detunings in Hz; the pulse detuning when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_hz: Option<Grid>,
    pub nodes: usize,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        Self { detuning_hz: None, nodes: prs_core::bloch::DEFAULT_NODES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceConfig {
    pub state: StateSpec,
    pub detuning_hz: Grid,
    /// Interaction time in pulses; the working point at the pulse detuning
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tbar: Option<f64>,
    pub p0: f64,
    pub diffusion: bool,
    pub no_damping: bool,
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        Self {
            state: StateSpec::Vacuum,
            detuning_hz: Grid::Range { start: -68e6, stop: 68e6, points: 41, spacing: Spacing::Linear },
            tbar: None,
            p0: 0.5,
            diffusion: true,
            no_damping: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Squeezed,
    Cat,
    /// Optimized superposition of the configured Fock basis at `nbar_max = nbar`.
    Fock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbarSweep {
    pub families: Vec<Family>,
    pub nbar: Grid,
    pub fock_basis: Vec<usize>,
}

impl Default for NbarSweep {
    fn default() -> Self {
        Self {
            families: vec![Family::Squeezed, Family::Cat],
            nbar: Grid::Range { start: 0.25, stop: 16.0, points: 7, spacing: Spacing::Log },
            fock_basis: vec![0, 2, 4, 6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub mode: SensitivityMode,
    pub p0: f64,
    pub epsilon: Grid,
    pub states: Vec<StateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar_sweep: Option<NbarSweep>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            mode: SensitivityMode::DriftOnly,
            p0: 0.5,
            epsilon: Grid::Values(vec![1e-3, 1e-2, 0.1, 0.3, 1.0]),
            states: vec![
                StateSpec::Vacuum,
                StateSpec::Squeezed { r: None, db: None, nbar: Some(4.0) },
                StateSpec::Cat { beta: None, nbar: Some(4.0) },
            ],
            nbar_sweep: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftConfig {
    pub states: Vec<StateSpec>,
    pub p0: f64,
    pub diffusion: bool,
    pub no_damping: bool,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        Self {
            states: vec![StateSpec::Vacuum, StateSpec::Squeezed { r: Some(1.44), db: None, nbar: None }],
            p0: 0.5,
            diffusion: true,
            no_damping: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub basis: Vec<usize>,
    pub nbar_max: f64,
    pub epsilon: Grid,
    pub mode: SensitivityMode,
    pub p0: f64,
    pub restarts: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            basis: vec![2, 4],
            nbar_max: 4.0,
            epsilon: Grid::Single(1e-6),
            mode: SensitivityMode::DriftOnly,
            p0: 0.5,
            restarts: prs_core::stateopt::DEFAULT_RESTARTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub p0: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self { p0: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCheckConfig {
    pub states: Vec<StateSpec>,
    pub theta: Grid,
    pub kappa: Grid,
    pub tolerance: f64,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            states: vec![
                StateSpec::Squeezed { r: Some(1.44), db: None, nbar: None },
                StateSpec::Cat { beta: Some(2.0), nbar: None },
                StateSpec::Fock { components: vec![(2, 0.5), (4, 0.75f64.sqrt())] },
            ],
            theta: Grid::Range { start: 0.0, stop: 2.0, points: 5, spacing: Spacing::Linear },
            kappa: Grid::Range { start: 0.0, stop: 0.3, points: 4, spacing: Spacing::Linear },
            tolerance: 1e-4,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_example() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.pulse.params().unwrap(), PulseParams::mg_ca_example());
    }

    #[test]
    fn hz_inputs_become_angular() {
        let c = RunConfig::from_toml("[pulse]\ndetuning_hz = 1.0\n").unwrap();
        assert!((c.pulse.params().unwrap().detuning() - TAU).abs() < 1e-15);
    }

    #[test]
    fn grids() {
        let g: Grid = toml::from_str::<toml::Table>("g = { start = 1.0, stop = 100.0, points = 3, spacing = \"log\" }")
            .unwrap()["g"]
            .clone()
            .try_into()
            .unwrap();
        let v = g.values("g").unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(Grid::Single(2.0).values("g").unwrap(), vec![2.0]);
        assert!(Grid::Values(vec![]).values("g").is_err());
        let lin = Grid::Range { start: 0.0, stop: 1.0, points: 5, spacing: Spacing::Linear };
        assert_eq!(lin.values("g").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("[pulse]\nrabi = 1.0\n").is_err());
        assert!(RunConfig::from_toml("[budget]\np0 = 0.5\nextra = 1\n").is_err());
    }

    #[test]
    fn states_parse_and_resolve() {
        let c = RunConfig::from_toml(
            r#"
            [sensitivity]
            states = [
                { family = "vacuum" },
                { family = "squeezed", nbar = 4.0 },
                { family = "cat", beta = 2.0 },
                { family = "fock", components = [[2, 1.0], [4, 1.0]] },
            ]
            "#,
        )
        .unwrap();
        let s = &c.sensitivity.states;
        assert_eq!(s.len(), 4);
        assert!((s[1].state().unwrap().nbar() - 4.0).abs() < 1e-12);
        assert!((s[3].state().unwrap().nbar() - 3.0).abs() < 1e-12);
        assert!(s[2].gaussian().is_err());
        assert_eq!(s[3].label(), "fock(2:1,4:1)");
    }

    #[test]
    fn ambiguous_squeezing_rejected() {
        let s = StateSpec::Squeezed { r: Some(1.0), db: Some(3.0), nbar: None };
        assert!(matches!(s.state(), Err(CliError::Config(_))));
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }
}
