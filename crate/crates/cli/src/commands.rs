//! One function per subcommand, each turning the resolved config into a table.
//! Cells of a sweep are computed in parallel and collected in grid order.

use std::f64::consts::TAU;

use prs_core::doppler::{resonance_point, two_point_shift, ShiftOptions};
use prs_core::metrology::{find_working_point, recoil_sensitivity, SensitivityMode, SensitivityOptions, SensitivityResult};
use prs_core::phasespace::{
    pde_oracle, FPParams, FockSuperposition, GaussianProbe, MotionalState, OracleConfig, PhaseGrid, SignalModel,
    WignerGrid,
};
use prs_core::recoil_coeffs::{compute_coefficients_with, diffusion, drift, CoefficientConfig};
use prs_core::stateopt::{
    cat_beta_for_nbar, optimize_fock_superposition, single_photon_budget, squeezing_for_nbar, FockOptimum,
    OptimizationProblem,
};
use rayon::prelude::*;

use crate::config::{Family, RunConfig, StateSpec};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

fn mode_name(mode: SensitivityMode) -> &'static str {
    match mode {
        SensitivityMode::DriftOnly => "drift-only",
        SensitivityMode::Extended => "extended",
    }
}

pub fn cmd_coeffs(cfg: &RunConfig) -> CliResult<Table> {
    let detunings = match &cfg.coeffs.detuning_hz {
        Some(g) => g.values("coeffs.detuning_hz")?,
        None => vec![cfg.pulse.detuning_hz],
    };
    let qcfg = CoefficientConfig { nodes: cfg.coeffs.nodes, ..CoefficientConfig::default() };
    if qcfg.nodes == 0 {
        return Err(CliError::Config("coeffs.nodes must be positive".into()));
    }
    let rows: Vec<CliResult<Vec<Cell>>> = detunings
        .par_iter()
        .map(|&d| {
            let p = cfg.pulse.params_at(d)?;
            let c = compute_coefficients_with(&p, &qcfg).map_err(|e| CliError::core(format!("detuning {d} Hz"), e))?;
            Ok(vec![
                d.into(),
                (d / cfg.pulse.linewidth_hz).into(),
                c.alpha_p.into(),
                c.d_pp.into(),
                c.epsilon.into(),
                c.g.into(),
                c.n1.into(),
                c.alpha_x.into(),
                c.d_xx.into(),
                c.d_xp.into(),
            ])
        })
        .collect();
    let mut t =
        Table::new(&["delta_hz", "delta_over_gamma", "alpha", "d_pp", "epsilon", "g", "n1", "alpha_x", "d_xx", "d_xp"]);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

pub fn cmd_resonance(cfg: &RunConfig) -> CliResult<Table> {
    let rc = &cfg.resonance;
    let state = rc.state.gaussian()?;
    let pulse = cfg.pulse.params()?;
    let opts = ShiftOptions { p0: rc.p0, diffusion: rc.diffusion, no_damping: rc.no_damping };
    let tbar = match rc.tbar {
        Some(t) if t >= 0.0 && t.is_finite() => t,
        Some(_) => return Err(CliError::Config("resonance.tbar must be finite and non-negative".into())),
        None => {
            let a = drift(&pulse)?;
            let d = if rc.diffusion { diffusion(&pulse)? } else { 0.0 };
            find_working_point(&GaussianProbe::self_overlap(state), a, d, rc.p0)?.tstar
        }
    };
    let detunings = rc.detuning_hz.values("resonance.detuning_hz")?;
    let rows: Vec<CliResult<Vec<Cell>>> = detunings
        .par_iter()
        .map(|&d| {
            let p = cfg.pulse.params_at(d)?;
            let r = resonance_point(&state, &p, tbar, &opts).map_err(|e| CliError::core(format!("detuning {d} Hz"), e))?;
            Ok(vec![d.into(), tbar.into(), r.p_sym.into(), r.delta_p.into(), r.c.into()])
        })
        .collect();
    let mut t = Table::new(&["delta_hz", "tbar", "p_sym", "delta_p", "c"]);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

/// What a sensitivity cell evaluates.
#[derive(Clone, Copy)]
enum Probe {
    /// Index into the prepared signal models.
    Model(usize),
    /// Fock superposition optimized at this photon-number bound.
    FockOpt(f64),
}

struct SensCell {
    label: String,
    family: &'static str,
    nbar: f64,
    epsilon: f64,
    probe: Probe,
}

fn family_state(f: Family, nbar: f64) -> CliResult<StateSpec> {
    Ok(match f {
        Family::Squeezed => StateSpec::Squeezed { r: Some(squeezing_for_nbar(nbar)), db: None, nbar: None },
        Family::Cat => StateSpec::Cat { beta: Some(cat_beta_for_nbar(nbar)?), nbar: None },
        Family::Fock => unreachable!("optimized per cell"),
    })
}

fn optimize(basis: &[usize], nbar_max: f64, epsilon: f64, mode: SensitivityMode, p0: f64, seed: u64) -> prs_core::Result<FockOptimum> {
    optimize_fock_superposition(&OptimizationProblem {
        basis: basis.to_vec(),
        nbar_max,
        epsilon,
        mode,
        p0,
        seed,
        ..OptimizationProblem::default()
    })
}

pub fn cmd_sensitivity(cfg: &RunConfig) -> CliResult<Table> {
    let sc = &cfg.sensitivity;
    let eps = sc.epsilon.values("sensitivity.epsilon")?;
    if let Some(e) = eps.iter().find(|e| !(**e >= 0.0)) {
        return Err(CliError::Config(format!("sensitivity.epsilon: {e} is negative")));
    }
    let opts = SensitivityOptions { p0: sc.p0, mode: sc.mode, epsilon_limit: None };

    let mut states: Vec<(String, &'static str, MotionalState)> = Vec::new();
    for s in &sc.states {
        let st = s.state()?;
        states.push((s.label(), st.family(), st));
    }
    let mut cells = Vec::new();
    for (i, (label, family, st)) in states.iter().enumerate() {
        for &e in &eps {
            cells.push(SensCell { label: label.clone(), family, nbar: st.nbar(), epsilon: e, probe: Probe::Model(i) });
        }
    }
    let mut basis: &[usize] = &[];
    if let Some(sw) = &sc.nbar_sweep {
        basis = &sw.fock_basis;
        for &f in &sw.families {
            for n in sw.nbar.values("sensitivity.nbar_sweep.nbar")? {
                if !(n > 0.0) {
                    return Err(CliError::Config(format!("sensitivity.nbar_sweep.nbar: {n} must be positive")));
                }
                let (label, family, probe) = if f == Family::Fock {
                    (format!("fock-opt(nbar<={n})"), "fock", Probe::FockOpt(n))
                } else {
                    let spec = family_state(f, n)?;
                    let st = spec.state()?;
                    states.push((spec.label(), st.family(), st));
                    (format!("{f:?}(nbar={n})").to_lowercase(), states.last().unwrap().1, Probe::Model(states.len() - 1))
                };
                for &e in &eps {
                    cells.push(SensCell { label: label.clone(), family, nbar: n, epsilon: e, probe });
                }
            }
        }
    }

    let models: Vec<Box<dyn SignalModel + Send>> =
        states.iter().map(|(l, _, s)| s.signal_model().map_err(|e| CliError::core(l, e))).collect::<CliResult<_>>()?;
    let vacuum = MotionalState::vacuum().signal_model()?;
    let vac: Vec<prs_core::Result<SensitivityResult>> =
        eps.par_iter().map(|&e| recoil_sensitivity(vacuum.as_ref(), 1.0, e, &opts)).collect();

    let results: Vec<(f64, prs_core::Result<SensitivityResult>)> = cells
        .par_iter()
        .map(|c| match c.probe {
            Probe::Model(i) => (c.nbar, recoil_sensitivity(models[i].as_ref(), 1.0, c.epsilon, &opts)),
            Probe::FockOpt(n) => {
                let run = || -> prs_core::Result<(f64, SensitivityResult)> {
                    let opt = optimize(basis, n, c.epsilon, sc.mode, sc.p0, cfg.seed)?;
                    let st = MotionalState::Fock(FockSuperposition::from_real(&opt.coeffs)?);
                    Ok((opt.nbar, recoil_sensitivity(st.signal_model()?.as_ref(), 1.0, c.epsilon, &opts)?))
                };
                match run() {
                    Ok((nbar, r)) => (nbar, Ok(r)),
                    Err(e) => (n, Err(e)),
                }
            }
        })
        .collect();

    let mut t = Table::new(&[
        "state", "family", "nbar", "epsilon", "mode", "theta_star", "s_abs", "s_vacuum", "ratio", "qfi_bound", "fisher",
        "diagnostic",
    ]);
    for (c, (nbar, r)) in cells.iter().zip(results) {
        let ie = eps.iter().position(|e| *e == c.epsilon).unwrap();
        let s_vac = match &vac[ie] {
            Ok(v) => Some(v.s_abs),
            Err(e) if e.is_numerical() => None,
            Err(e) => return Err(CliError::core("vacuum reference", e.clone())),
        };
        let mut row: Vec<Cell> =
            vec![c.label.clone().into(), c.family.into(), nbar.into(), c.epsilon.into(), mode_name(sc.mode).into()];
        match r {
            Ok(r) => row.extend([
                r.working_point.tstar.into(),
                r.s_abs.into(),
                s_vac.into(),
                s_vac.map(|v| r.s_abs / v).into(),
                r.qfi_bound.into(),
                r.fisher.into(),
                Cell::Empty,
            ]),
            Err(e) if e.is_numerical() => {
                row.extend([Cell::Empty, Cell::Empty, s_vac.into(), Cell::Empty, Cell::Empty, Cell::Empty]);
                row.push(e.to_string().into());
            }
            Err(e) => return Err(CliError::core(&c.label, e)),
        }
        t.push(row);
    }
    Ok(t)
}

pub fn cmd_shift(cfg: &RunConfig) -> CliResult<Table> {
    let sc = &cfg.shift;
    let pulse = cfg.pulse.params()?;
    let opts = ShiftOptions { p0: sc.p0, diffusion: sc.diffusion, no_damping: sc.no_damping };
    let states: Vec<_> = sc.states.iter().map(|s| Ok((s.label(), s.gaussian()?))).collect::<CliResult<_>>()?;
    let rows: Vec<CliResult<Vec<Cell>>> = states
        .par_iter()
        .map(|(label, s)| {
            let r = two_point_shift(s, &pulse, &opts).map_err(|e| CliError::core(label, e))?;
            Ok(vec![
                label.clone().into(),
                r.shift.into(),
                (r.shift / TAU).into(),
                (r.shift_plus / TAU).into(),
                (r.shift_minus / TAU).into(),
                r.delta_p_asym.into(),
                r.c_const.into(),
                r.g.into(),
                r.tstar.into(),
                r.s_abs.into(),
                r.inverse_law().into(),
                (r.shift_analytic / TAU).into(),
            ])
        })
        .collect();
    let mut t = Table::new(&[
        "state",
        "shift_rad_s",
        "shift_hz",
        "shift_plus_hz",
        "shift_minus_hz",
        "delta_p_asym",
        "c",
        "g",
        "tstar",
        "s_abs",
        "inverse_law_rad_s",
        "shift_analytic_hz",
    ]);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

pub fn cmd_optimize(cfg: &RunConfig) -> CliResult<Table> {
    let oc = &cfg.optimize;
    let eps = oc.epsilon.values("optimize.epsilon")?;
    let mut columns: Vec<String> =
        ["epsilon", "mode", "s_abs", "qfi", "nbar", "slack", "grad_norm", "converged_restarts"].map(String::from).to_vec();
    columns.extend(oc.basis.iter().map(|n| format!("c{n}")));
    let mut t = Table { columns, rows: Vec::new() };
    for e in eps {
        let prob = OptimizationProblem {
            basis: oc.basis.clone(),
            nbar_max: oc.nbar_max,
            epsilon: e,
            mode: oc.mode,
            p0: oc.p0,
            restarts: oc.restarts,
            seed: cfg.seed,
        };
        let opt = optimize_fock_superposition(&prob).map_err(|err| CliError::core(format!("epsilon {e}"), err))?;
        let mut row: Vec<Cell> = vec![
            e.into(),
            mode_name(oc.mode).into(),
            opt.s_abs.into(),
            opt.qfi.into(),
            opt.nbar.into(),
            opt.slack.into(),
            opt.grad_norm.into(),
            opt.converged_restarts.into(),
        ];
        for n in &oc.basis {
            row.push(opt.coeffs.iter().find(|(k, _)| k == n).map(|(_, c)| *c).into());
        }
        t.push(row);
    }
    Ok(t)
}

pub fn cmd_budget(cfg: &RunConfig) -> CliResult<Table> {
    let b = single_photon_budget(&cfg.pulse.params()?, cfg.budget.p0)?;
    let mut t = Table::new(&[
        "p0",
        "alpha",
        "d_pp",
        "epsilon",
        "n1",
        "tstar",
        "r",
        "squeezing_db",
        "nbar",
        "enhancement",
        "enhancement_extended",
        "s_squeezed",
        "s_vacuum",
    ]);
    t.push(vec![
        cfg.budget.p0.into(),
        b.coeffs.alpha_p.into(),
        b.coeffs.d_pp.into(),
        b.coeffs.epsilon.into(),
        b.coeffs.n1.into(),
        b.tstar.into(),
        b.r_required.into(),
        b.squeezing_db.into(),
        b.nbar.into(),
        b.enhancement.into(),
        b.enhancement_extended.into(),
        b.s_squeezed.into(),
        b.s_vacuum.into(),
    ]);
    Ok(t)
}

/// The table plus the number of grid points outside the tolerance.
pub fn cmd_oracle_check(cfg: &RunConfig) -> CliResult<(Table, usize)> {
    let oc = &cfg.oracle_check;
    let thetas = oc.theta.values("oracle_check.theta")?;
    let kappas = oc.kappa.values("oracle_check.kappa")?;
    let states: Vec<_> = oc.states.iter().map(|s| Ok((s.label(), s.state()?))).collect::<CliResult<_>>()?;
    let mut cells = Vec::new();
    for (i, _) in states.iter().enumerate() {
        for &th in &thetas {
            for &k in &kappas {
                cells.push((i, th, k));
            }
        }
    }
    let rows: Vec<CliResult<(Vec<Cell>, bool)>> = cells
        .par_iter()
        .map(|&(i, th, k)| {
            let (label, st) = &states[i];
            let ctx = |e| CliError::core(format!("{label} theta={th} kappa={k}"), e);
            let fp = FPParams::from_totals(th, k).map_err(ctx)?;
            let analytic = st.evolve_and_overlap(&fp).map_err(ctx)?;
            let w0 = WignerGrid::of_state(st, PhaseGrid::covering(st, &fp));
            let pde = pde_oracle(&w0, &fp, &OracleConfig::default()).map_err(ctx)?.overlap;
            let err = (pde - analytic).abs();
            let pass = err <= oc.tolerance;
            Ok((vec![label.clone().into(), th.into(), k.into(), analytic.into(), pde.into(), err.into(), pass.to_string().into()], pass))
        })
        .collect();
    let mut t = Table::new(&["state", "theta", "kappa", "analytic", "pde", "abs_err", "pass"]);
    let mut failed = 0;
    for r in rows {
        let (row, pass) = r?;
        failed += usize::from(!pass);
        t.push(row);
    }
    Ok((t, failed))
}
