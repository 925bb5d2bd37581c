//! Single-pulse CNOT between the two ions and the sweeps over drive strength
//! and decay rate.
//!
//! The gate drives the 1-2 transition of ion 1 and the 0-2 transition of
//! ion 2 with the same real Rabi frequency `Ω` for `T = 2π/Ω`. In the Zeno
//! limit the dynamics is governed by
//!
//! ```text
//! H_eff = Ω/(2√2) (|10⟩ − |11⟩)⟨a| + h.c.
//! ```
//!
//! which rotates `|B⟩ = (|10⟩ − |11⟩)/√2` through `|a⟩` and back, picking up
//! a sign; `(|10⟩ + |11⟩)/√2`, `|00⟩` and `|01⟩` are untouched, so `|10⟩`
//! and `|11⟩` are exchanged.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dfs::analytic_effective_hamiltonian;
use crate::error::{Error, Result};
use crate::evolve::{condition, propagator};
use crate::hamiltonian::{build_h_total, RabiMatrix, SystemParams};
use crate::hilbert::{HilbertSpace, Operator, State, ONE, ZERO};
use crate::linalg::{max_abs, norm_2};

/// Two-qubit input state on levels {0, 1} of each ion, phonon vacuum.
/// Amplitudes are ordered `|00⟩, |01⟩, |10⟩, |11⟩` with ion 1 first.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitInput {
    pub label: String,
    pub amplitudes: [Complex64; 4],
}

impl QubitInput {
    pub fn basis(l1: usize, l2: usize) -> Self {
        assert!(l1 < 2 && l2 < 2, "qubit levels are 0 and 1");
        let mut amplitudes = [ZERO; 4];
        amplitudes[2 * l1 + l2] = ONE;
        Self { label: format!("{l1}{l2}"), amplitudes }
    }

    /// `(|10⟩ − |11⟩)/√2`.
    pub fn minus_10_11() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { label: "10-11".into(), amplitudes: [ZERO, ZERO, s, -s] }
    }

    /// Accepts `00`, `01`, `10`, `11` and `10-11`.
    pub fn parse(label: &str) -> Result<Self> {
        match label {
            "00" => Ok(Self::basis(0, 0)),
            "01" => Ok(Self::basis(0, 1)),
            "10" => Ok(Self::basis(1, 0)),
            "11" => Ok(Self::basis(1, 1)),
            "10-11" => Ok(Self::minus_10_11()),
            other => Err(Error::Parameter { name: "initial_state", reason: format!("unknown qubit input `{other}`") }),
        }
    }

    /// The four inputs plotted against the Rabi frequency: `|00⟩`, `|10⟩`,
    /// `|11⟩` and `(|10⟩ − |11⟩)/√2`.
    pub fn rabi_figure_set() -> Vec<Self> {
        vec![Self::basis(0, 0), Self::basis(1, 0), Self::basis(1, 1), Self::minus_10_11()]
    }

    /// The figure set plus `|01⟩`.
    pub fn reporting_set() -> Vec<Self> {
        let mut v = Self::rabi_figure_set();
        v.insert(1, Self::basis(0, 1));
        v
    }

    pub fn embed(&self, space: &HilbertSpace) -> State {
        let mut psi = space.zero_state();
        for (k, &a) in self.amplitudes.iter().enumerate() {
            psi[space.encode(k / 2, k % 2, 0).expect("qubit levels are valid")] = a;
        }
        psi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSpec {
    pub params: SystemParams,
    pub omega: f64,
    pub pulse_time: f64,
}

impl GateSpec {
    /// CNOT drive of strength `omega` on top of `base` (whose own drive is
    /// replaced). `T = 2π/Ω`.
    pub fn cnot(base: &SystemParams, omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Parameter { name: "omega", reason: format!("must be positive, got {omega}") });
        }
        base.validate()?;
        Ok(Self { params: base.with_omega(RabiMatrix::cnot(omega)), omega, pulse_time: TAU / omega })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub initial_label: String,
    pub p0: f64,
    pub fidelity: f64,
    pub omega: f64,
    pub gamma3: f64,
    pub g3: f64,
}

/// Ideal CNOT: exchanges `|10⟩|0⟩` and `|11⟩|0⟩`, identity on every other
/// basis ket.
pub fn ideal_cnot(space: &HilbertSpace) -> Operator {
    let mut u = space.identity();
    let a = space.encode(1, 0, 0).expect("valid");
    let b = space.encode(1, 1, 0).expect("valid");
    u[(a, a)] = ZERO;
    u[(b, b)] = ZERO;
    u[(a, b)] = ONE;
    u[(b, a)] = ONE;
    u
}

/// The 4x4 CNOT on `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn ideal_cnot_qubit() -> DMatrix<Complex64> {
    let mut u = DMatrix::zeros(4, 4);
    u[(0, 0)] = ONE;
    u[(1, 1)] = ONE;
    u[(2, 3)] = ONE;
    u[(3, 2)] = ONE;
    u
}

/// `dim x 4` isometry embedding the qubit space with the phonon vacuum.
pub fn qubit_embedding(space: &HilbertSpace) -> Operator {
    let mut q = Operator::zeros(space.dim(), 4);
    for k in 0..4 {
        q[(space.encode(k / 2, k % 2, 0).expect("valid"), k)] = ONE;
    }
    q
}

/// Conditional propagator for one gate pulse, reusable across inputs.
#[derive(Debug, Clone)]
pub struct CnotRun {
    pub spec: GateSpec,
    pub space: HilbertSpace,
    pub propagator: Operator,
}

impl CnotRun {
    pub fn new(spec: &GateSpec, space: &HilbertSpace) -> Result<Self> {
        let h = build_h_total(space, &spec.params);
        let propagator = propagator(&h, spec.pulse_time)?;
        Ok(Self { spec: *spec, space: *space, propagator })
    }

    /// Success probability and conditional fidelity
    /// `F = |⟨U_gate ψ0 | ψ(T)⟩|²` with `ψ(T)` the normalized no-photon
    /// state.
    pub fn metrics(&self, input: &QubitInput) -> Result<GateRecord> {
        let psi0 = input.embed(&self.space);
        let out = condition(&self.propagator, &psi0, self.spec.pulse_time)?;
        let target = ideal_cnot(&self.space) * &psi0;
        let fidelity = target.dotc(&out.final_state_normalized).norm_sqr();
        Ok(GateRecord {
            initial_label: input.label.clone(),
            p0: out.p0,
            fidelity: fidelity.min(1.0),
            omega: self.spec.omega,
            gamma3: self.spec.params.gamma3,
            g3: self.spec.params.g3,
        })
    }

    /// Conditional propagator restricted to the qubit space (4x4,
    /// non-unitary).
    pub fn qubit_block(&self) -> DMatrix<Complex64> {
        let q = qubit_embedding(&self.space);
        q.adjoint() * &self.propagator * q
    }
}

pub fn gate_metrics(spec: &GateSpec, space: &HilbertSpace, input: &QubitInput) -> Result<GateRecord> {
    CnotRun::new(spec, space)?.metrics(input)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGateReport {
    pub omega: f64,
    /// `max |(exp(−i H_eff T))_qubit − U_gate|` using the closed-form `H_eff`.
    pub effective_error: f64,
    /// Weight `exp(−i H_eff T)` moves out of the qubit space.
    pub effective_leakage: f64,
    /// Amplitude of `exp(−i H_eff T)|a⟩` on `−|a⟩` (should be 1).
    pub antisymmetric_phase: Complex64,
    /// Operator-norm distance between the full conditional propagator on the
    /// qubit space and `U_gate`.
    pub full_deviation: f64,
}

/// Compares the ideal Zeno dynamics and the full no-photon dynamics with the
/// target CNOT.
pub fn effective_gate_check(spec: &GateSpec, space: &HilbertSpace) -> Result<EffectiveGateReport> {
    let heff = analytic_effective_hamiltonian(space, &RabiMatrix::cnot(spec.omega));
    let u_eff = propagator(&heff, spec.pulse_time)?;
    let q = qubit_embedding(space);
    let block = q.adjoint() * &u_eff * &q;
    let target = ideal_cnot_qubit();
    let effective_error = max_abs(&(&block - &target));
    let outside = (space.identity() - &q * q.adjoint()) * &u_eff * &q;
    let a = space.antisymmetric_state(0)?;
    let antisymmetric_phase = -a.dotc(&(&u_eff * &a));

    let run = CnotRun::new(spec, space)?;
    let full_deviation = norm_2(&(run.qubit_block() - target));
    Ok(EffectiveGateReport {
        omega: spec.omega,
        effective_error,
        effective_leakage: outside.norm(),
        antisymmetric_phase,
        full_deviation,
    })
}

fn sort_records(records: &mut [GateRecord], key: impl Fn(&GateRecord) -> f64) {
    records.sort_by(|a, b| key(a).total_cmp(&key(b)).then_with(|| a.initial_label.cmp(&b.initial_label)));
}

fn check_grid(name: &'static str, grid: &[f64], upper: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Parameter { name, reason: "grid is empty".into() });
    }
    if let Some(x) = grid.iter().find(|&&x| !(x > 0.0 && x <= upper)) {
        return Err(Error::Parameter { name, reason: format!("value {x} outside (0, {upper}]") });
    }
    Ok(())
}

/// CNOT metrics over a grid of Rabi frequencies. Rows are ordered by
/// `(omega, initial_label)`.
pub fn sweep_rabi(
    base: &SystemParams,
    space: &HilbertSpace,
    omega_grid: &[f64],
    inputs: &[QubitInput],
) -> Result<Vec<GateRecord>> {
    check_grid("omega_grid", omega_grid, 0.5)?;
    let chunks: Vec<Vec<GateRecord>> = omega_grid
        .par_iter()
        .map(|&w| {
            let run = CnotRun::new(&GateSpec::cnot(base, w)?, space)?;
            inputs.iter().map(|i| run.metrics(i)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<GateRecord> = chunks.into_iter().flatten().collect();
    sort_records(&mut records, |r| r.omega);
    Ok(records)
}

/// CNOT metrics over a grid of decay rates with `g3 = Γ3`. Rows are ordered
/// by `(gamma3, initial_label)`.
///
/// In the overdamped regime the non-DF population is damped at roughly
/// `g3²/Γ3`, which equals `Γ3` on this line.
pub fn sweep_gamma(
    space: &HilbertSpace,
    gamma_grid: &[f64],
    omega: f64,
    inputs: &[QubitInput],
) -> Result<Vec<GateRecord>> {
    check_grid("gamma_grid", gamma_grid, 50.0)?;
    let chunks: Vec<Vec<GateRecord>> = gamma_grid
        .par_iter()
        .map(|&g| {
            let base = SystemParams::new(g, g, RabiMatrix::zero())?;
            let run = CnotRun::new(&GateSpec::cnot(&base, omega)?, space)?;
            inputs.iter().map(|i| run.metrics(i)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<GateRecord> = chunks.into_iter().flatten().collect();
    sort_records(&mut records, |r| r.gamma3);
    Ok(records)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> HilbertSpace {
        HilbertSpace::new(2).unwrap()
    }

    #[test]
    fn ideal_gate_action() {
        let s = space();
        let u = ideal_cnot(&s);
        let ket = |a, b| s.basis_state(a, b, 0).unwrap();
        assert_eq!(&u * ket(1, 0), ket(1, 1));
        assert_eq!(&u * ket(1, 1), ket(1, 0));
        assert_eq!(&u * ket(0, 1), ket(0, 1));
        assert_eq!(&u * ket(0, 0), ket(0, 0));
        assert_eq!(&u * &u, s.identity());
        let q = ideal_cnot_qubit();
        assert_eq!(&q * &q, DMatrix::identity(4, 4));
        assert_eq!(q.adjoint() * &q, DMatrix::identity(4, 4));
    }

    #[test]
    fn input_parsing() {
        for l in ["00", "01", "10", "11", "10-11"] {
            let q = QubitInput::parse(l).unwrap();
            assert_eq!(q.label, l);
            assert!((q.embed(&space()).norm() - 1.0).abs() < 1e-15);
        }
        assert!(QubitInput::parse("12").is_err());
        assert_eq!(QubitInput::reporting_set().len(), 5);
    }

    #[test]
    fn pulse_time() {
        let spec = GateSpec::cnot(&SystemParams::default(), 0.2).unwrap();
        assert_eq!(spec.pulse_time * spec.omega, TAU);
        assert!(GateSpec::cnot(&SystemParams::default(), 0.0).is_err());
        assert!(GateSpec::cnot(&SystemParams::default(), -0.1).is_err());
    }

    #[test]
    fn uncoupled_input_is_perfect() {
        let s = space();
        let spec = GateSpec::cnot(&SystemParams::default(), 0.01).unwrap();
        let r = gate_metrics(&spec, &s, &QubitInput::basis(0, 1)).unwrap();
        assert!((r.p0 - 1.0).abs() < 1e-6);
        assert!((r.fidelity - 1.0).abs() < 1e-6);
    }

    #[test]
    fn effective_dynamics_is_exact_cnot() {
        let s = space();
        for w in [0.001, 0.01, 0.2] {
            let spec = GateSpec::cnot(&SystemParams::default(), w).unwrap();
            let r = effective_gate_check(&spec, &s).unwrap();
            assert!(r.effective_error <= 1e-12, "{w}: {}", r.effective_error);
            assert!(r.effective_leakage <= 1e-12);
            assert!((r.antisymmetric_phase - ONE).norm() <= 1e-12);
        }
    }

    #[test]
    fn full_deviation_shrinks_with_omega() {
        let s = space();
        let devs: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&w| effective_gate_check(&GateSpec::cnot(&SystemParams::default(), w).unwrap(), &s).unwrap().full_deviation)
            .collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2]);
        assert!(devs[2] < 1e-2);
    }

    #[test]
    fn sweep_order_and_validation() {
        let s = space();
        let inputs = vec![QubitInput::basis(1, 1), QubitInput::basis(0, 0)];
        let recs = sweep_rabi(&SystemParams::default(), &s, &[0.05, 0.01], &inputs).unwrap();
        let keys: Vec<(f64, &str)> = recs.iter().map(|r| (r.omega, r.initial_label.as_str())).collect();
        assert_eq!(keys, vec![(0.01, "00"), (0.01, "11"), (0.05, "00"), (0.05, "11")]);
        assert!(sweep_rabi(&SystemParams::default(), &s, &[], &inputs).is_err());
        assert!(sweep_rabi(&SystemParams::default(), &s, &[0.6], &inputs).is_err());
        assert!(sweep_gamma(&s, &[0.0], 0.01, &inputs).is_err());
        let g = sweep_gamma(&s, &[1.0], 0.01, &inputs).unwrap();
        assert!(g.iter().all(|r| r.g3 == r.gamma3));
    }

    #[test]
    fn superposition_is_not_an_average() {
        let s = space();
        let run = CnotRun::new(&GateSpec::cnot(&SystemParams::default(), 0.2).unwrap(), &s).unwrap();
        let b = run.metrics(&QubitInput::basis(1, 0)).unwrap();
        let c = run.metrics(&QubitInput::basis(1, 1)).unwrap();
        let d = run.metrics(&QubitInput::minus_10_11()).unwrap();
        // P0 of the superposition follows from the propagator, including
        // interference between the two branches
        let psi = QubitInput::minus_10_11().embed(&s);
        let expected = (&run.propagator * psi).norm_squared();
        assert!((d.p0 - expected).abs() < 1e-14);
        assert!((d.p0 - 0.5 * (b.p0 + c.p0)).abs() > 1e-6);
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((log_log_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
