//! Quantum-jump Monte Carlo unraveling of the decay of level 3.
//!
//! Each trajectory uses the waiting-time algorithm: draw `r` uniform in
//! (0, 1), evolve the unnormalized state under the conditional Hamiltonian
//! until `‖ψ‖² = r`, apply a jump operator chosen with weight `‖Jᵢψ‖²`,
//! renormalize and repeat until `t_final`.
//!
//! Because `‖ψ(t)‖²` is non-increasing, the crossing time can be located by
//! bisection on a ladder of precomputed propagators `U(Δ/2ᵏ)` without any
//! further matrix exponentials. The crossing time is resolved to
//! `t_final / (COARSE_STEPS · 2^REFINE_LEVELS)`.
//!
//! RNG scheme: trajectory `k` of a run with master seed `s` uses
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `k`. Trajectories are
//! therefore independent of execution order and thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{check_normalized, propagator};
use crate::gates::{GateSpec, QubitInput};
use crate::hamiltonian::{build_h_total, SystemParams};
use crate::hilbert::{HilbertSpace, Operator, State, N_IONS};
use crate::linalg::max_abs;

const COARSE_STEPS: usize = 64;
const REFINE_LEVELS: usize = 24;
const CONSISTENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct JumpConfig {
    pub jump_ops: Vec<Operator>,
    /// Level that level 3 decays into. Only affects post-jump dynamics.
    pub destination_level: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub t_final: f64,
    pub n_bins: usize,
}

impl JumpConfig {
    /// `√Γ3 |d⟩ᵢ⟨3|` for both ions.
    pub fn standard(
        space: &HilbertSpace,
        params: &SystemParams,
        destination_level: usize,
        n_traj: usize,
        seed: u64,
        t_final: f64,
    ) -> Result<Self> {
        if destination_level > 2 {
            return Err(Error::Parameter {
                name: "destination_level",
                reason: format!("level 3 must decay into 0, 1 or 2, got {destination_level}"),
            });
        }
        let rate = params.gamma3.sqrt();
        let jump_ops = (1..=N_IONS)
            .map(|ion| space.transition_op(ion, destination_level, 3).map(|op| op * Complex64::from(rate)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { jump_ops, destination_level, n_traj, seed, t_final, n_bins: 50 })
    }

    pub fn with_bins(mut self, n_bins: usize) -> Self {
        self.n_bins = n_bins;
        self
    }

    /// `Σ J†J` must equal `i(H − H†)`.
    pub fn check_consistency(&self, h: &Operator) -> Result<()> {
        let mut sum = Operator::zeros(h.nrows(), h.ncols());
        for j in &self.jump_ops {
            if j.shape() != h.shape() {
                return Err(Error::Dimension { expected: h.nrows(), got: j.nrows() });
            }
            sum += j.adjoint() * j;
        }
        let anti = (h - h.adjoint()) * Complex64::i();
        let residual = max_abs(&(sum - anti));
        if residual > CONSISTENCY_TOL {
            return Err(Error::JumpConsistency { residual });
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::Parameter { name: "n_traj", reason: "must be at least 1".into() });
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::Parameter { name: "t_final", reason: format!("must be positive, got {}", self.t_final) });
        }
        if self.n_bins == 0 {
            return Err(Error::Parameter { name: "n_bins", reason: "must be at least 1".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub jumps: Vec<JumpEvent>,
    /// Set when a jump was due but every channel had zero rate.
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(t_final: f64, n_bins: usize) -> Self {
        let edges = (0..=n_bins).map(|k| t_final * k as f64 / n_bins as f64).collect();
        Self { edges, counts: vec![0; n_bins] }
    }

    fn add(&mut self, t: f64) {
        let n = self.counts.len();
        let t_final = self.edges[n];
        let k = ((t / t_final) * n as f64) as usize;
        self.counts[k.min(n - 1)] += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub n_traj: usize,
    pub n_no_jump: usize,
    pub n_aborted: usize,
    pub p0_estimate: f64,
    pub std_error: f64,
    /// All jump times of all trajectories.
    pub jump_time_histogram: Histogram,
    /// Time of the first jump of each trajectory that jumped, in trajectory
    /// order.
    pub first_jump_times: Vec<f64>,
}

/// Precomputed propagator ladder for a fixed Hamiltonian and horizon.
pub struct JumpEngine<'a> {
    ladder: Vec<Operator>,
    steps: Vec<f64>,
    jump_ops: &'a [Operator],
    t_final: f64,
}

impl<'a> JumpEngine<'a> {
    pub fn new(h: &Operator, jump_ops: &'a [Operator], t_final: f64) -> Result<Self> {
        let coarse = t_final / COARSE_STEPS as f64;
        let steps: Vec<f64> = (0..=REFINE_LEVELS).map(|k| coarse / 2f64.powi(k as i32)).collect();
        let ladder = steps.iter().map(|&dt| propagator(h, dt)).collect::<Result<Vec<_>>>()?;
        Ok(Self { ladder, steps, jump_ops, t_final })
    }

    /// Evolves `psi` from `t` towards `t_end` until `‖ψ‖²` would drop to `r`
    /// or below. Returns the reached time and whether the threshold was hit.
    fn advance(&self, psi: &mut State, mut t: f64, t_end: f64, r: f64) -> (f64, bool) {
        let slack = self.steps[REFINE_LEVELS] * 0.5;
        let mut crossed = false;
        for (u, &dt) in self.ladder.iter().zip(&self.steps) {
            crossed = false;
            while t + dt <= t_end + slack {
                let next = u * &*psi;
                if next.norm_squared() > r {
                    *psi = next;
                    t += dt;
                } else {
                    crossed = true;
                    break;
                }
            }
        }
        if crossed {
            (t + 0.5 * self.steps[REFINE_LEVELS], true)
        } else {
            (t_end, false)
        }
    }

    /// Time of the first jump before `t_final`, or `None`.
    pub fn first_jump<R: Rng>(&self, psi0: &State, rng: &mut R) -> Option<f64> {
        let mut psi = psi0.clone();
        let r: f64 = rng.random();
        let (t, jumped) = self.advance(&mut psi, 0.0, self.t_final, r);
        jumped.then_some(t)
    }

    pub fn simulate<R: Rng>(&self, psi0: &State, rng: &mut R) -> TrajectoryOutcome {
        let mut psi = psi0.clone();
        let mut t = 0.0;
        let mut jumps = Vec::new();
        loop {
            let r: f64 = rng.random();
            let (t_new, jumped) = self.advance(&mut psi, t, self.t_final, r);
            t = t_new;
            if !jumped {
                return TrajectoryOutcome { jumps, aborted: false };
            }
            let candidates: Vec<State> = self.jump_ops.iter().map(|j| j * &psi).collect();
            let weights: Vec<f64> = candidates.iter().map(|c| c.norm_squared()).collect();
            let total: f64 = weights.iter().sum();
            if total.is_nan() || total <= 0.0 {
                return TrajectoryOutcome { jumps, aborted: true };
            }
            let mut pick = rng.random::<f64>() * total;
            let mut channel = weights.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if pick < *w {
                    channel = k;
                    break;
                }
                pick -= w;
            }
            let next = &candidates[channel];
            psi = next.normalize();
            jumps.push(JumpEvent { time: t, channel });
        }
    }
}

/// RNG for trajectory `index` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn run_trajectories(h: &Operator, config: &JumpConfig, psi0: &State) -> Result<TrajectoryStats> {
    config.validate()?;
    if psi0.len() != h.nrows() {
        return Err(Error::Dimension { expected: h.nrows(), got: psi0.len() });
    }
    check_normalized(psi0)?;
    config.check_consistency(h)?;
    let engine = JumpEngine::new(h, &config.jump_ops, config.t_final)?;
    let outcomes: Vec<TrajectoryOutcome> = (0..config.n_traj as u64)
        .into_par_iter()
        .map(|k| engine.simulate(psi0, &mut trajectory_rng(config.seed, k)))
        .collect();

    let mut histogram = Histogram::new(config.t_final, config.n_bins);
    let mut first_jump_times = Vec::new();
    let mut n_no_jump = 0;
    let mut n_aborted = 0;
    for o in &outcomes {
        if o.aborted {
            n_aborted += 1;
            log::warn!("trajectory aborted: zero total jump rate at a jump event");
        }
        match o.jumps.first() {
            None if !o.aborted => n_no_jump += 1,
            None => {}
            Some(e) => first_jump_times.push(e.time),
        }
        for e in &o.jumps {
            histogram.add(e.time);
        }
    }
    let n = config.n_traj as f64;
    let p = n_no_jump as f64 / n;
    Ok(TrajectoryStats {
        n_traj: config.n_traj,
        n_no_jump,
        n_aborted,
        p0_estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        jump_time_histogram: histogram,
        first_jump_times,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartStats {
    pub n_runs: usize,
    /// Number of gate attempts each run needed until a pulse with no photon.
    pub attempts: Vec<u64>,
    pub mean_attempts: f64,
    pub variance: f64,
    /// Fraction of attempts that succeeded.
    pub p0_estimate: f64,
}

/// Upper bound on attempts per run; reaching it is reported as an error.
pub const MAX_ATTEMPTS: u64 = 1_000_000;

/// Simulates repeat-until-no-emission of a single gate pulse. Run `k` draws
/// from stream `k` of `config.seed`; `config.t_final` and `config.n_traj` are
/// ignored in favor of the pulse time and `n_runs`.
pub fn restart_protocol_estimate(
    spec: &GateSpec,
    space: &HilbertSpace,
    input: &QubitInput,
    config: &JumpConfig,
    n_runs: usize,
) -> Result<RestartStats> {
    if n_runs == 0 {
        return Err(Error::Parameter { name: "n_runs", reason: "must be at least 1".into() });
    }
    let h = build_h_total(space, &spec.params);
    config.check_consistency(&h)?;
    let engine = JumpEngine::new(&h, &config.jump_ops, spec.pulse_time)?;
    let psi0 = input.embed(space);
    let attempts: Vec<u64> = (0..n_runs as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = trajectory_rng(config.seed, k);
            let mut n = 1;
            while engine.first_jump(&psi0, &mut rng).is_some() {
                n += 1;
                if n > MAX_ATTEMPTS {
                    return Err(Error::Parameter {
                        name: "n_runs",
                        reason: format!("no successful attempt within {MAX_ATTEMPTS} tries"),
                    });
                }
            }
            Ok(n)
        })
        .collect::<Result<_>>()?;
    let m = n_runs as f64;
    let mean = attempts.iter().sum::<u64>() as f64 / m;
    let variance = if n_runs > 1 {
        attempts.iter().map(|&a| (a as f64 - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(RestartStats { n_runs, attempts, mean_attempts: mean, variance, p0_estimate: 1.0 / mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::no_photon_probability;
    use crate::gates::QubitInput;
    use crate::hamiltonian::{build_h_cond, RabiMatrix};

    fn setup() -> (HilbertSpace, SystemParams) {
        (HilbertSpace::new(2).unwrap(), SystemParams::default())
    }

    #[test]
    fn standard_channels_are_consistent() {
        let (s, p) = setup();
        let h = build_h_cond(&s, &p);
        for d in 0..3 {
            JumpConfig::standard(&s, &p, d, 1, 0, 1.0).unwrap().check_consistency(&h).unwrap();
        }
        assert!(JumpConfig::standard(&s, &p, 3, 1, 0, 1.0).is_err());
        let mut bad = JumpConfig::standard(&s, &p, 1, 1, 0, 1.0).unwrap();
        bad.jump_ops.pop();
        assert!(matches!(bad.check_consistency(&h), Err(Error::JumpConsistency { .. })));
    }

    #[test]
    fn dark_input_never_jumps() {
        let (s, p) = setup();
        let h = build_h_cond(&s, &p);
        let cfg = JumpConfig::standard(&s, &p, 1, 200, 3, 50.0).unwrap();
        let psi = s.antisymmetric_state(0).unwrap();
        let st = run_trajectories(&h, &cfg, &psi).unwrap();
        assert_eq!(st.n_no_jump, 200);
        assert_eq!(st.p0_estimate, 1.0);
        assert_eq!(st.std_error, 0.0);
        assert!(st.jump_time_histogram.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn seed_determinism() {
        let (s, p) = setup();
        let h = build_h_total(&s, &p.with_omega(RabiMatrix::cnot(0.2)));
        let cfg = JumpConfig::standard(&s, &p, 1, 300, 42, 31.4).unwrap();
        let psi = QubitInput::basis(1, 0).embed(&s);
        let a = run_trajectories(&h, &cfg, &psi).unwrap();
        let b = run_trajectories(&h, &cfg, &psi).unwrap();
        assert_eq!(a, b);
        let other = JumpConfig { seed: 43, ..cfg };
        assert_ne!(run_trajectories(&h, &other, &psi).unwrap().first_jump_times, a.first_jump_times);
    }

    #[test]
    fn estimate_tracks_deterministic_p0() {
        let (s, p) = setup();
        let h = build_h_total(&s, &p.with_omega(RabiMatrix::cnot(0.2)));
        let t = std::f64::consts::TAU / 0.2;
        let cfg = JumpConfig::standard(&s, &p, 1, 2000, 7, t).unwrap();
        let psi = QubitInput::basis(1, 0).embed(&s);
        let st = run_trajectories(&h, &cfg, &psi).unwrap();
        let exact = no_photon_probability(&h, &psi, t).unwrap();
        assert!((st.p0_estimate - exact).abs() < 4.0 * st.std_error, "{} vs {exact}", st.p0_estimate);
    }

    #[test]
    fn rejects_bad_input() {
        let (s, p) = setup();
        let h = build_h_cond(&s, &p);
        let cfg = JumpConfig::standard(&s, &p, 1, 0, 0, 1.0).unwrap();
        assert!(run_trajectories(&h, &cfg, &s.basis_state(0, 0, 0).unwrap()).is_err());
        let cfg = JumpConfig::standard(&s, &p, 1, 1, 0, 1.0).unwrap();
        assert!(matches!(run_trajectories(&h, &cfg, &s.zero_state()), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn restart_with_certain_success() {
        let (s, p) = setup();
        let spec = GateSpec::cnot(&p, 0.01).unwrap();
        let cfg = JumpConfig::standard(&s, &p, 1, 1, 5, 1.0).unwrap();
        let st = restart_protocol_estimate(&spec, &s, &QubitInput::basis(0, 1), &cfg, 50).unwrap();
        assert!(st.attempts.iter().all(|&a| a == 1));
        assert_eq!(st.mean_attempts, 1.0);
    }

    #[test]
    fn histogram_binning() {
        let mut h = Histogram::new(10.0, 5);
        for t in [0.0, 1.9, 2.0, 9.99, 10.0] {
            h.add(t);
        }
        assert_eq!(h.counts, vec![2, 1, 0, 0, 2]);
        assert_eq!(h.edges.len(), 6);
    }
}
