//! Self-check run by `dgate verify`: the structural invariants of every module
//! evaluated at the configured parameters.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::dfs::{
    analytic_dfs_reference, analytic_effective_hamiltonian, dfs_basis, effective_hamiltonian, subspace_residual,
    verify_dfs, DfsOptions,
};
use crate::error::Result;
use crate::evolve::{p0_trace, propagator, reference_step, rk4_evolve};
use crate::gates::{effective_gate_check, CnotRun, GateSpec, QubitInput};
use crate::hamiltonian::{build_h_cond, build_h_laser, build_h_total, RabiMatrix};
use crate::hilbert::{HilbertSpace, State};
use crate::linalg::{max_abs, projector};
use crate::stats::{min_repeats, p_no_result};
use crate::trajectory::JumpConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn bound(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), passed: value <= tol, detail: format!("{value:.3e} <= {tol:.0e}") }
    }
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> State {
    State::from_fn(dim, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).normalize()
}

pub fn invariant_suite(config: &RunConfig) -> Result<Vec<Check>> {
    let space = HilbertSpace::new(config.n_max)?;
    let params = config.params.with_omega(RabiMatrix::zero());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::new();

    let h_cond = build_h_cond(&space, &params);
    let options = DfsOptions { tol_real: config.dfs.tol_real, tol_trunc: config.dfs.tol_trunc, ..Default::default() };
    let d = dfs_basis(&h_cond, &space, &options)?;
    out.push(Check {
        name: "dfs dimension".into(),
        passed: d.dfs_basis.len() == config.n_max + 5,
        detail: format!("{} (expected {})", d.dfs_basis.len(), config.n_max + 5),
    });
    let reference = projector(&analytic_dfs_reference(&space), space.dim());
    out.push(Check::bound("dfs projector vs analytic list", subspace_residual(&d.projector, &reference), 1e-10));
    let worst = d.dfs_indices.iter().map(|&i| d.eigenvalues[i].norm()).fold(0.0, f64::max);
    out.push(Check::bound("dfs eigenvalues vanish", worst, 1e-10));
    out.push(Check::bound("eigenbasis biorthogonality", d.biorthogonality_defect(), 1e-8));
    let report = verify_dfs(&d, &h_cond, config.dfs.verify_t_max, config.dfs.verify_samples, config.seed)?;
    out.push(Check {
        name: "dfs no-photon traces".into(),
        passed: report.passed(),
        detail: format!(
            "{} dfs samples, {} decaying eigenvectors, {} failures",
            report.dfs_checks.len(),
            report.decaying_checks.len(),
            report.failures().count()
        ),
    });

    let mut heff_err: f64 = 0.0;
    for _ in 0..20 {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for z in m.iter_mut().flatten() {
            *z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.02;
        }
        let omega = RabiMatrix(m);
        let laser = build_h_laser(&space, &params.with_omega(omega));
        let projected = effective_hamiltonian(&laser, &d.projector);
        heff_err = heff_err.max(max_abs(&(projected - analytic_effective_hamiltonian(&space, &omega))));
    }
    out.push(Check::bound("projected drive vs closed form (20 draws)", heff_err, 1e-10));

    let spec = GateSpec::cnot(&params, config.cnot.omega)?;
    let eff = effective_gate_check(&spec, &space)?;
    out.push(Check::bound("effective dynamics is CNOT", eff.effective_error, 1e-12));

    let h_total = build_h_total(&space, &spec.params);
    let jumps = JumpConfig::standard(&space, &params, config.trajectories.destination_level, 1, config.seed, 1.0)?;
    let residual = match jumps.check_consistency(&h_total) {
        Ok(()) => 0.0,
        Err(crate::error::Error::JumpConsistency { residual }) => residual,
        Err(e) => return Err(e),
    };
    out.push(Check::bound("jump operators match decay", residual, 1e-12));

    let mut increases = 0;
    for _ in 0..100 {
        let psi = random_state(&mut rng, space.dim());
        let (_, p0) = p0_trace(&h_total, &psi, spec.pulse_time, 32)?;
        let mut prev = 1.0 + 1e-12;
        for &p in &p0 {
            if p > prev + 1e-12 {
                increases += 1;
            }
            prev = p;
        }
    }
    out.push(Check { name: "P0 non-increasing (100 inputs)".into(), passed: increases == 0, detail: format!("{increases} increases") });

    let mut rk_err: f64 = 0.0;
    for _ in 0..3 {
        let psi = random_state(&mut rng, space.dim());
        let exact = propagator(&h_total, 2.0)? * &psi;
        let rk = rk4_evolve(&h_total, &psi, 2.0, reference_step(&spec.params));
        rk_err = rk_err.max((exact - rk).norm());
    }
    out.push(Check::bound("propagator vs RK4", rk_err, 1e-8));

    let run = CnotRun::new(&spec, &space)?;
    let mut in_range = true;
    for input in QubitInput::reporting_set() {
        let r = run.metrics(&input)?;
        in_range &= (0.0..=1.0).contains(&r.p0) && (0.0..=1.0).contains(&r.fidelity);
    }
    out.push(Check { name: "gate metrics are probabilities".into(), passed: in_range, detail: String::new() });

    let p = p_no_result(0.95, 50, 50)?;
    let m = min_repeats(0.95, 50, 0.98)?;
    out.push(Check {
        name: "repeat-until-success bookkeeping".into(),
        passed: (0.015..=0.020).contains(&p) && m <= 50 && p_no_result(0.95, 50, m)? <= 0.02,
        detail: format!("p_no_result = {p:.5}, min_repeats = {m}"),
    });
    Ok(out)
}
