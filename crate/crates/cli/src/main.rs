//! `dgate`: batch driver for the dissipative-gates simulator.
//!
//! Every flag can also be set through an environment variable with the
//! `DGATE_` prefix (`DGATE_CONFIG`, `DGATE_OUT`, `DGATE_SEED`, `DGATE_N_MAX`,
//! `DGATE_THREADS`). Log verbosity follows `DGATE_LOG` (default `warn`).
//!
//! Exit status: 0 on success, 1 for invalid input, 2 for numerical failure
//! or a failed check.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use dissipative_gates::config::{parse_config, RunConfig};
use dissipative_gates::dfs::{dfs_basis, verify_dfs, DfsOptions};
use dissipative_gates::error::{Error, Result};
use dissipative_gates::evolve::{evolve_on_grid, no_photon_probability};
use dissipative_gates::gates::{effective_gate_check, sweep_gamma, sweep_rabi, CnotRun, GateSpec, QubitInput};
use dissipative_gates::hamiltonian::{build_h_cond, build_h_total, RabiMatrix};
use dissipative_gates::hilbert::{HilbertSpace, State};
use dissipative_gates::output;
use dissipative_gates::stats::campaign_table;
use dissipative_gates::suite::invariant_suite;
use dissipative_gates::trajectory::{restart_protocol_estimate, run_trajectories, JumpConfig};

#[derive(Parser, Debug)]
#[command(name = "dgate", version, about = "Dissipation-assisted two-ion gate simulator")]
struct Cli {
    /// JSON run configuration; omitted keys take their defaults
    #[arg(long, global = true, env = "DGATE_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, global = true, env = "DGATE_OUT")]
    out: Option<PathBuf>,
    /// Master RNG seed, overrides the config
    #[arg(long, global = true, env = "DGATE_SEED")]
    seed: Option<u64>,
    /// Phonon cutoff, overrides the config
    #[arg(long = "n-max", global = true, env = "DGATE_N_MAX")]
    n_max: Option<usize>,
    /// Worker threads for sweeps and trajectories
    #[arg(long, global = true, env = "DGATE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Eigenvalues of the conditional Hamiltonian and the DFS basis
    DfsReport,
    /// No-photon evolution of one state on a time grid
    Evolve,
    /// CNOT metrics at a single Rabi frequency
    Cnot,
    /// CNOT metrics over a grid of Rabi frequencies
    SweepRabi,
    /// CNOT metrics over a grid of decay rates with g3 = gamma3
    SweepGamma,
    /// Quantum-jump Monte Carlo estimate of the no-photon probability
    Trajectories,
    /// Repeat-until-success table for grids of (p0, N, M)
    RepeatStats,
    /// Run the invariant suite
    Verify,
}

enum Outcome {
    Done,
    ChecksFailed,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => parse_config(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.n_max {
        config.n_max = n;
    }
    config.validate()?;
    Ok(config)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    log::info!("writing {}", path.display());
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn initial_state(label: &str, space: &HilbertSpace) -> Result<State> {
    if label == "a" {
        space.antisymmetric_state(0)
    } else {
        Ok(QubitInput::parse(label)?.embed(space))
    }
}

fn inputs(labels: &[String]) -> Result<Vec<QubitInput>> {
    labels.iter().map(|l| QubitInput::parse(l)).collect()
}

fn dfs_report(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let space = HilbertSpace::new(config.n_max)?;
    let params = config.params.with_omega(RabiMatrix::zero());
    let h = build_h_cond(&space, &params);
    let options = DfsOptions { tol_real: config.dfs.tol_real, tol_trunc: config.dfs.tol_trunc, ..Default::default() };
    let d = dfs_basis(&h, &space, &options)?;
    output::write_eigenvalues(create(out, "eigenvalues.csv")?, &d)?;
    write_json(out, "dfs_basis.json", &output::dfs_basis_json(&d))?;
    let report = verify_dfs(&d, &h, config.dfs.verify_t_max, config.dfs.verify_samples, config.seed)?;
    let failures: Vec<String> = report.failures().map(|c| c.label.clone()).collect();
    write_json(
        out,
        "dfs_report.json",
        &json!({
            "n_max": config.n_max,
            "dim": space.dim(),
            "dfs_dimension": d.dfs_basis.len(),
            "truncation_artifacts": d.truncation_artifacts().len(),
            "tol_real": d.tol_real,
            "verification_passed": report.passed(),
            "verification_failures": failures,
        }),
    )?;
    println!(
        "DFS dimension {} (dim {}, {} truncation artifacts removed); verification {}",
        d.dfs_basis.len(),
        space.dim(),
        d.truncation_artifacts().len(),
        if report.passed() { "passed" } else { "FAILED" }
    );
    Ok(if report.passed() { Outcome::Done } else { Outcome::ChecksFailed })
}

fn evolve(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let space = HilbertSpace::new(config.n_max)?;
    let e = &config.evolve;
    let psi0 = match &e.amplitudes_file {
        Some(path) => output::read_amplitudes(File::open(path)?, &space)?,
        None => initial_state(&e.initial_state, &space)?,
    };
    let params = match e.cnot_omega {
        Some(w) => config.params.with_omega(RabiMatrix::cnot(w)),
        None => config.params,
    };
    let h = build_h_total(&space, &params);
    let states = evolve_on_grid(&h, &psi0, &e.t_grid)?;
    output::write_evolution(create(out, "evolve.csv")?, &space, &e.t_grid, &states, &e.track)?;
    let last = states.last().expect("t_grid is non-empty").norm_squared();
    println!("P0({}) = {last:.6}", e.t_grid[e.t_grid.len() - 1]);
    Ok(Outcome::Done)
}

fn cnot(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let space = HilbertSpace::new(config.n_max)?;
    let spec = GateSpec::cnot(&config.params, config.cnot.omega)?;
    let run = CnotRun::new(&spec, &space)?;
    let records = inputs(&config.cnot.initial_states)?.iter().map(|i| run.metrics(i)).collect::<Result<Vec<_>>>()?;
    let mut sorted = records.clone();
    sorted.sort_by(|a, b| a.initial_label.cmp(&b.initial_label));
    output::write_gate_records(create(out, "cnot.csv")?, &sorted)?;
    let check = effective_gate_check(&spec, &space)?;
    write_json(
        out,
        "cnot_check.json",
        &json!({
            "omega": spec.omega,
            "pulse_time": spec.pulse_time,
            "effective_error": check.effective_error,
            "effective_leakage": check.effective_leakage,
            "full_deviation": check.full_deviation,
        }),
    )?;
    for r in &sorted {
        println!("{:>6}  p0 = {:.6}  F = {:.6}", r.initial_label, r.p0, r.fidelity);
    }
    Ok(Outcome::Done)
}

fn sweep_rabi_cmd(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let space = HilbertSpace::new(config.n_max)?;
    let s = &config.sweep_rabi;
    let records = sweep_rabi(&config.params, &space, &s.omega_grid, &inputs(&s.initial_states)?)?;
    output::write_gate_records(create(out, "sweep_rabi.csv")?, &records)?;
    println!("{} rows written", records.len());
    Ok(Outcome::Done)
}

fn sweep_gamma_cmd(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let space = HilbertSpace::new(config.n_max)?;
    let s = &config.sweep_gamma;
    let records = sweep_gamma(&space, &s.gamma_grid, s.omega, &inputs(&s.initial_states)?)?;
    output::write_gate_records(create(out, "sweep_gamma.csv")?, &records)?;
    println!("{} rows written", records.len());
    Ok(Outcome::Done)
}

fn trajectories(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let space = HilbertSpace::new(config.n_max)?;
    let t = &config.trajectories;
    let params = if t.omega > 0.0 { config.params.with_omega(RabiMatrix::cnot(t.omega)) } else { config.params };
    let t_final = t.t_final.unwrap_or(if t.omega > 0.0 {
        std::f64::consts::TAU / t.omega
    } else {
        10.0 / config.params.gamma3
    });
    let h = build_h_total(&space, &params);
    let psi0 = initial_state(&t.initial_state, &space)?;
    let jumps = JumpConfig::standard(&space, &params, t.destination_level, t.n_traj, config.seed, t_final)?
        .with_bins(t.n_bins);
    let stats = run_trajectories(&h, &jumps, &psi0)?;
    let exact = no_photon_probability(&h, &psi0, t_final)?;
    let mut summary = json!({
        "seed": config.seed,
        "initial_state": t.initial_state,
        "omega": t.omega,
        "t_final": t_final,
        "n_traj": stats.n_traj,
        "n_no_jump": stats.n_no_jump,
        "n_aborted": stats.n_aborted,
        "p0_estimate": stats.p0_estimate,
        "stderr": stats.std_error,
        "p0_deterministic": exact,
    });
    if t.histogram {
        output::write_histogram(create(out, "jump_times.csv")?, &stats.jump_time_histogram)?;
    }
    if t.restart_runs > 0 {
        let spec = GateSpec::cnot(&config.params, t.omega)?;
        let input = QubitInput::parse(&t.initial_state)?;
        let r = restart_protocol_estimate(&spec, &space, &input, &jumps, t.restart_runs)?;
        summary["restart"] = json!({
            "n_runs": r.n_runs,
            "mean_attempts": r.mean_attempts,
            "variance": r.variance,
            "p0_estimate": r.p0_estimate,
        });
    }
    write_json(out, "trajectories.json", &summary)?;
    println!(
        "p0 estimate {:.5} ± {:.5} ({} of {} without a jump); deterministic {:.5}",
        stats.p0_estimate, stats.std_error, stats.n_no_jump, stats.n_traj, exact
    );
    Ok(Outcome::Done)
}

fn repeat_stats(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let r = &config.repeat_stats;
    let rows = campaign_table(&r.p0, &r.n_gates, &r.m_runs, r.target_success)?;
    output::write_campaign(create(out, "repeat_stats.csv")?, &rows)?;
    println!("{:>8} {:>6} {:>6} {:>14} {:>10} {:>10}", "p0", "N", "M", "P(no result)", "rel.err", "M*");
    for row in &rows {
        let m = row.min_repeats.map(|m| m.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{:>8.4} {:>6} {:>6} {:>14.6e} {:>10.3e} {:>10}",
            row.p0, row.n_gates, row.m_runs, row.p_no_result, row.relative_error, m
        );
    }
    Ok(Outcome::Done)
}

fn verify(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let checks = invariant_suite(config)?;
    for c in &checks {
        println!("{} {}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    write_json(out, "verify.json", &serde_json::to_value(&checks)?)?;
    Ok(if checks.iter().all(|c| c.passed) { Outcome::Done } else { Outcome::ChecksFailed })
}

fn run(cli: &Cli) -> Result<Outcome> {
    let config = load_config(cli)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter { name: "threads", reason: e.to_string() })?;
    }
    let out = cli.out.clone().or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    match cli.command {
        Command::DfsReport => dfs_report(&config, &out),
        Command::Evolve => evolve(&config, &out),
        Command::Cnot => cnot(&config, &out),
        Command::SweepRabi => sweep_rabi_cmd(&config, &out),
        Command::SweepGamma => sweep_gamma_cmd(&config, &out),
        Command::Trajectories => trajectories(&config, &out),
        Command::RepeatStats => repeat_stats(&config, &out),
        Command::Verify => verify(&config, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("DGATE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => {
            eprintln!("dgate: checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("dgate: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
