//! No-photon (conditional) time evolution under a time-independent,
//! generally non-Hermitian Hamiltonian.
//!
//! `U_cond(t) = exp(−i H t)`; the squared norm of `U_cond(t)|ψ⟩` is the
//! probability `P0` that no photon was emitted in `(0, t)`, and the
//! normalized vector is the state conditioned on that record.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{Operator, State};
use crate::linalg::expm;

/// Inputs must be normalized to this tolerance.
pub const NORM_TOL: f64 = 1e-10;
/// Below this no-photon probability the conditional state is undefined.
pub const MIN_P0: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub t: f64,
    pub p0: f64,
    pub final_state_unnormalized: State,
    pub final_state_normalized: State,
}

/// `exp(−i h t)` for `t ≥ 0`.
pub fn propagator(h: &Operator, t: f64) -> Result<Operator> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Parameter { name: "t", reason: format!("must be finite and non-negative, got {t}") });
    }
    if t == 0.0 {
        return Ok(Operator::identity(h.nrows(), h.ncols()));
    }
    expm(&(h * Complex64::new(0.0, -t)))
}

pub fn check_normalized(psi: &State) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

fn check_dims(h: &Operator, psi: &State) -> Result<()> {
    if h.ncols() != psi.len() {
        return Err(Error::Dimension { expected: h.ncols(), got: psi.len() });
    }
    Ok(())
}

/// `P0(t, ψ) = ‖U_cond(t)|ψ⟩‖²`.
pub fn no_photon_probability(h: &Operator, psi0: &State, t: f64) -> Result<f64> {
    check_dims(h, psi0)?;
    check_normalized(psi0)?;
    let out = propagator(h, t)? * psi0;
    Ok(out.norm_squared())
}

/// Conditional state after `t` given no emission, with its probability.
pub fn conditional_state(h: &Operator, psi0: &State, t: f64) -> Result<PropagationResult> {
    check_dims(h, psi0)?;
    check_normalized(psi0)?;
    let u = propagator(h, t)?;
    condition(&u, psi0, t)
}

/// Applies a precomputed propagator for time `t`.
pub fn condition(u: &Operator, psi0: &State, t: f64) -> Result<PropagationResult> {
    let out = u * psi0;
    let p0 = out.norm_squared();
    if p0 < MIN_P0 {
        return Err(Error::VanishingProbability { p0 });
    }
    let normalized = &out / Complex64::new(p0.sqrt(), 0.0);
    Ok(PropagationResult { t, p0, final_state_unnormalized: out, final_state_normalized: normalized })
}

/// Unnormalized conditional states on an arbitrary non-negative time grid.
pub fn evolve_on_grid(h: &Operator, psi0: &State, times: &[f64]) -> Result<Vec<State>> {
    check_dims(h, psi0)?;
    check_normalized(psi0)?;
    times.iter().map(|&t| Ok(propagator(h, t)? * psi0)).collect()
}

/// `P0` sampled on `n` equally spaced times in `(0, t_max]`, built by
/// repeated application of one short-time propagator.
pub fn p0_trace(h: &Operator, psi0: &State, t_max: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(h, psi0)?;
    let n = n.max(1);
    let dt = t_max / n as f64;
    let step = propagator(h, dt)?;
    let mut psi = psi0.clone();
    let mut times = Vec::with_capacity(n);
    let mut p0 = Vec::with_capacity(n);
    for k in 1..=n {
        psi = &step * psi;
        times.push(dt * k as f64);
        p0.push(psi.norm_squared());
    }
    Ok((times, p0))
}

/// Fixed-step classical Runge–Kutta integration of `dψ/dt = −i H ψ`.
///
/// Shares no code with the exponential path; used as the reference when
/// checking propagators.
pub fn rk4_evolve(h: &Operator, psi0: &State, t: f64, max_step: f64) -> State {
    let steps = (t / max_step).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let minus_i = Complex64::new(0.0, -1.0);
    let rhs = |psi: &State| -> State { (h * psi) * minus_i };
    let half = Complex64::new(dt / 2.0, 0.0);
    let full = Complex64::new(dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut psi = psi0.clone();
    for _ in 0..steps {
        let k1 = rhs(&psi);
        let k2 = rhs(&(&psi + &k1 * half));
        let k3 = rhs(&(&psi + &k2 * half));
        let k4 = rhs(&(&psi + &k3 * full));
        psi += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    psi
}

/// Default RK4 step: `1e-3 / max(Γ3, g2, g3)`.
pub fn reference_step(params: &crate::hamiltonian::SystemParams) -> f64 {
    1e-3 / params.gamma3.max(crate::hamiltonian::G2).max(params.g3)
}
