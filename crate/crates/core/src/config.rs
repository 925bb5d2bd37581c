//! JSON run configuration shared by all subcommands. Every key is optional;
//! `{}` gives the standard parameter set with `n_max = 2`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::QubitInput;
use crate::hamiltonian::SystemParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: SystemParams,
    pub n_max: usize,
    pub seed: u64,
    /// Output directory; the CLI `--out` flag takes precedence.
    pub output: Option<PathBuf>,
    pub dfs: DfsBlock,
    pub evolve: EvolveBlock,
    pub cnot: CnotBlock,
    pub sweep_rabi: SweepRabiBlock,
    pub sweep_gamma: SweepGammaBlock,
    pub trajectories: TrajectoryBlock,
    pub repeat_stats: RepeatBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            n_max: 2,
            seed: 0,
            output: None,
            dfs: DfsBlock::default(),
            evolve: EvolveBlock::default(),
            cnot: CnotBlock::default(),
            sweep_rabi: SweepRabiBlock::default(),
            sweep_gamma: SweepGammaBlock::default(),
            trajectories: TrajectoryBlock::default(),
            repeat_stats: RepeatBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DfsBlock {
    pub tol_trunc: f64,
    pub tol_real: Option<f64>,
    /// Propagation window for the dark-state verification.
    pub verify_t_max: f64,
    pub verify_samples: usize,
}

impl Default for DfsBlock {
    fn default() -> Self {
        Self { tol_trunc: 1e-10, tol_real: None, verify_t_max: 100.0, verify_samples: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveBlock {
    /// A qubit label (`00`, `01`, `10`, `11`, `10-11`) or `a` for the
    /// antisymmetric state. Ignored when `amplitudes_file` is set.
    pub initial_state: String,
    /// JSON array of `dim` amplitudes, each a number or `[re, im]`.
    pub amplitudes_file: Option<PathBuf>,
    pub t_grid: Vec<f64>,
    /// Basis kets `[l1, l2, n]` whose amplitudes are written out.
    pub track: Vec<[usize; 3]>,
    /// Apply the CNOT drive of this strength instead of `params.omega`.
    pub cnot_omega: Option<f64>,
}

impl Default for EvolveBlock {
    fn default() -> Self {
        Self {
            initial_state: "10".into(),
            amplitudes_file: None,
            t_grid: (0..=64).map(|k| k as f64 * std::f64::consts::TAU / 0.2 / 64.0).collect(),
            track: vec![[0, 0, 0], [0, 1, 0], [1, 0, 0], [1, 1, 0], [1, 2, 0], [2, 1, 0]],
            cnot_omega: Some(0.2),
        }
    }
}

fn reporting_labels() -> Vec<String> {
    QubitInput::reporting_set().into_iter().map(|q| q.label).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CnotBlock {
    pub omega: f64,
    pub initial_states: Vec<String>,
}

impl Default for CnotBlock {
    fn default() -> Self {
        Self { omega: 0.2, initial_states: reporting_labels() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepRabiBlock {
    pub omega_grid: Vec<f64>,
    pub initial_states: Vec<String>,
}

impl Default for SweepRabiBlock {
    fn default() -> Self {
        Self {
            omega_grid: vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5],
            initial_states: QubitInput::rabi_figure_set().into_iter().map(|q| q.label).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGammaBlock {
    pub gamma_grid: Vec<f64>,
    pub omega: f64,
    pub initial_states: Vec<String>,
}

impl Default for SweepGammaBlock {
    fn default() -> Self {
        Self { gamma_grid: vec![0.1, 1.0, 5.0, 10.0, 20.0], omega: 0.01, initial_states: reporting_labels() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryBlock {
    pub n_traj: usize,
    pub initial_state: String,
    /// CNOT drive strength; `0` runs the undriven conditional Hamiltonian.
    pub omega: f64,
    /// Defaults to the pulse time `2π/Ω`, or `10/Γ3` without drive.
    pub t_final: Option<f64>,
    pub destination_level: usize,
    pub n_bins: usize,
    pub histogram: bool,
    /// Also simulate this many repeat-until-no-emission runs (0 disables).
    pub restart_runs: usize,
}

impl Default for TrajectoryBlock {
    fn default() -> Self {
        Self {
            n_traj: 5000,
            initial_state: "10".into(),
            omega: 0.2,
            t_final: None,
            destination_level: 1,
            n_bins: 50,
            histogram: true,
            restart_runs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RepeatBlock {
    pub p0: Vec<f64>,
    pub n_gates: Vec<u64>,
    pub m_runs: Vec<u64>,
    pub target_success: f64,
}

impl Default for RepeatBlock {
    fn default() -> Self {
        Self { p0: vec![0.73, 0.9, 0.95, 0.99], n_gates: vec![1, 10, 50, 100], m_runs: vec![1, 10, 50], target_success: 0.98 }
    }
}

fn config_err(path: &str, reason: impl Into<String>) -> Error {
    Error::Config { path: path.into(), reason: reason.into() }
}

fn positive(path: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(config_err(path, format!("must be positive, got {x}")))
    }
}

fn ascending<T: PartialOrd + std::fmt::Debug>(path: &str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(config_err(path, "must not be empty"));
    }
    if let Some(w) = grid.windows(2).find(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(config_err(path, format!("must be sorted ascending ({:?} before {:?})", w[0], w[1])));
    }
    Ok(())
}

fn labels(path: &str, list: &[String]) -> Result<()> {
    if list.is_empty() {
        return Err(config_err(path, "must not be empty"));
    }
    for (k, l) in list.iter().enumerate() {
        QubitInput::parse(l).map_err(|e| config_err(&format!("{path}[{k}]"), e.to_string()))?;
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        positive("params.g3", self.params.g3)?;
        positive("params.gamma3", self.params.gamma3)?;
        self.params.validate().map_err(|e| config_err("params.omega", e.to_string()))?;
        if self.n_max == 0 {
            return Err(config_err("n_max", "must be at least 1"));
        }

        positive("dfs.tol_trunc", self.dfs.tol_trunc)?;
        if let Some(t) = self.dfs.tol_real {
            positive("dfs.tol_real", t)?;
        }
        positive("dfs.verify_t_max", self.dfs.verify_t_max)?;

        let e = &self.evolve;
        if e.amplitudes_file.is_none() && e.initial_state != "a" {
            QubitInput::parse(&e.initial_state).map_err(|err| config_err("evolve.initial_state", err.to_string()))?;
        }
        ascending("evolve.t_grid", &e.t_grid)?;
        if e.t_grid[0] < 0.0 {
            return Err(config_err("evolve.t_grid", "times must be non-negative"));
        }
        for (k, &[l1, l2, n]) in e.track.iter().enumerate() {
            if l1 > 3 || l2 > 3 || n > self.n_max {
                return Err(config_err(&format!("evolve.track[{k}]"), format!("[{l1}, {l2}, {n}] is outside the basis")));
            }
        }
        if let Some(w) = e.cnot_omega {
            positive("evolve.cnot_omega", w)?;
        }

        positive("cnot.omega", self.cnot.omega)?;
        labels("cnot.initial_states", &self.cnot.initial_states)?;

        ascending("sweep_rabi.omega_grid", &self.sweep_rabi.omega_grid)?;
        for &w in &self.sweep_rabi.omega_grid {
            if !(w > 0.0 && w <= 0.5) {
                return Err(config_err("sweep_rabi.omega_grid", format!("values must lie in (0, 0.5], got {w}")));
            }
        }
        labels("sweep_rabi.initial_states", &self.sweep_rabi.initial_states)?;

        ascending("sweep_gamma.gamma_grid", &self.sweep_gamma.gamma_grid)?;
        for &g in &self.sweep_gamma.gamma_grid {
            if !(g > 0.0 && g <= 50.0) {
                return Err(config_err("sweep_gamma.gamma_grid", format!("values must lie in (0, 50], got {g}")));
            }
        }
        positive("sweep_gamma.omega", self.sweep_gamma.omega)?;
        labels("sweep_gamma.initial_states", &self.sweep_gamma.initial_states)?;

        let t = &self.trajectories;
        if t.n_traj == 0 {
            return Err(config_err("trajectories.n_traj", "must be at least 1"));
        }
        if t.initial_state != "a" {
            QubitInput::parse(&t.initial_state).map_err(|err| config_err("trajectories.initial_state", err.to_string()))?;
        }
        if !(t.omega.is_finite() && t.omega >= 0.0) {
            return Err(config_err("trajectories.omega", format!("must be non-negative, got {}", t.omega)));
        }
        if let Some(tf) = t.t_final {
            positive("trajectories.t_final", tf)?;
        }
        if t.destination_level > 2 {
            return Err(config_err("trajectories.destination_level", "must be 0, 1 or 2"));
        }
        if t.n_bins == 0 {
            return Err(config_err("trajectories.n_bins", "must be at least 1"));
        }
        if t.restart_runs > 0 && t.omega == 0.0 {
            return Err(config_err("trajectories.restart_runs", "needs a gate drive (omega > 0)"));
        }

        let r = &self.repeat_stats;
        ascending("repeat_stats.p0", &r.p0)?;
        if let Some(p) = r.p0.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(config_err("repeat_stats.p0", format!("values must lie in (0, 1], got {p}")));
        }
        ascending("repeat_stats.n_gates", &r.n_gates)?;
        ascending("repeat_stats.m_runs", &r.m_runs)?;
        if r.n_gates[0] == 0 {
            return Err(config_err("repeat_stats.n_gates", "values must be at least 1"));
        }
        if r.m_runs[0] == 0 {
            return Err(config_err("repeat_stats.m_runs", "values must be at least 1"));
        }
        if !(r.target_success > 0.0 && r.target_success < 1.0) {
            return Err(config_err("repeat_stats.target_success", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Parses and validates a JSON configuration. Errors carry the dotted key
/// path of the offending entry.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(&path, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}
