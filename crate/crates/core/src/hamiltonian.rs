//! Conditional (no-photon) Hamiltonian of the two-ion system and the weak
//! laser drive. Units: ħ = 1 and every rate is a multiple of the 1-2
//! sideband coupling `g2`, which is fixed to 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, Operator};

/// Sideband coupling of the 1-2 transition; the unit of every rate.
pub const G2: f64 = 1.0;

/// Weak Rabi frequencies `Ω_j^(i)`: `rabi[i - 1][j]` drives the `j`-2
/// transition of ion `i` (`j ∈ {0, 1}`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "RabiRepr", into = "RabiRepr")]
pub struct RabiMatrix(pub [[Complex64; 2]; 2]);

impl RabiMatrix {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Real Rabi frequencies `[[Ω_0^(1), Ω_1^(1)], [Ω_0^(2), Ω_1^(2)]]`.
    pub fn real(values: [[f64; 2]; 2]) -> Self {
        Self(values.map(|row| row.map(|x| Complex64::new(x, 0.0))))
    }

    /// Drive pattern of the single-pulse CNOT: `Ω_1^(1) = Ω_0^(2) = Ω`.
    pub fn cnot(omega: f64) -> Self {
        Self::real([[0.0, omega], [omega, 0.0]])
    }

    /// `Ω_j^(i)` for ion `i ∈ {1, 2}` and transition `j ∈ {0, 1}`.
    pub fn get(&self, ion: usize, j: usize) -> Complex64 {
        self.0[ion - 1][j]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ComplexRepr {
    Real(f64),
    Pair([f64; 2]),
}

#[derive(Serialize, Deserialize)]
struct RabiRepr([[ComplexRepr; 2]; 2]);

impl From<RabiRepr> for RabiMatrix {
    fn from(r: RabiRepr) -> Self {
        Self(r.0.map(|row| {
            row.map(|z| match z {
                ComplexRepr::Real(re) => Complex64::new(re, 0.0),
                ComplexRepr::Pair([re, im]) => Complex64::new(re, im),
            })
        }))
    }
}

impl From<RabiMatrix> for RabiRepr {
    fn from(m: RabiMatrix) -> Self {
        Self(m.0.map(|row| {
            row.map(|z| {
                if z.im == 0.0 {
                    ComplexRepr::Real(z.re)
                } else {
                    ComplexRepr::Pair([z.re, z.im])
                }
            })
        }))
    }
}

/// Physical constants, all in units of `g2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Sideband coupling of the 1-3 (cooling) transition.
    #[serde(default = "default_g3")]
    pub g3: f64,
    /// Spontaneous decay rate of level 3.
    #[serde(default = "default_gamma3")]
    pub gamma3: f64,
    /// Weak drive; zero unless a gate is being applied.
    #[serde(default)]
    pub omega: RabiMatrix,
}

fn default_g3() -> f64 {
    std::f64::consts::SQRT_2
}

fn default_gamma3() -> f64 {
    2.0 * 37f64.sqrt()
}

impl Default for SystemParams {
    /// `g3 = √2`, `Γ3 = 2√37`, no drive.
    fn default() -> Self {
        Self { g3: default_g3(), gamma3: default_gamma3(), omega: RabiMatrix::zero() }
    }
}

/// Drive strength beyond which the weak-drive (Zeno) regime is considered
/// violated, as a fraction of `min(g2, g3, Γ3)`.
pub const WEAK_DRIVE_RATIO: f64 = 0.3;

impl SystemParams {
    pub fn new(g3: f64, gamma3: f64, omega: RabiMatrix) -> Result<Self> {
        let p = Self { g3, gamma3, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn with_omega(self, omega: RabiMatrix) -> Self {
        Self { omega, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g3.is_finite() && self.g3 > 0.0) {
            return Err(Error::Parameter { name: "g3", reason: format!("must be positive, got {}", self.g3) });
        }
        if !(self.gamma3.is_finite() && self.gamma3 > 0.0) {
            return Err(Error::Parameter {
                name: "gamma3",
                reason: format!("must be positive, got {}", self.gamma3),
            });
        }
        if self.omega.0.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::Parameter { name: "omega", reason: "entries must be finite".into() });
        }
        Ok(())
    }

    /// `max|Ω| / min(g2, g3, Γ3)`.
    pub fn drive_ratio(&self) -> f64 {
        self.omega.max_abs() / G2.min(self.g3).min(self.gamma3)
    }

    pub fn is_weak_drive(&self) -> bool {
        self.drive_ratio() <= WEAK_DRIVE_RATIO
    }
}

/// `D = Σ_i |3⟩_i⟨3|`, the operator whose expectation value sets the
/// emission rate.
pub fn decay_operator(space: &HilbertSpace) -> Operator {
    space.transition_op(1, 3, 3).expect("valid indices") + space.transition_op(2, 3, 3).expect("valid indices")
}

/// Conditional Hamiltonian of the strong sideband lasers and the cooling
/// decay:
///
/// ```text
/// H_cond = Σ_i i[g2 |1⟩_i⟨2| b† + g3 |1⟩_i⟨3| b† − h.c.] − (i/2) Γ3 Σ_i |3⟩_i⟨3|
/// ```
pub fn build_h_cond(space: &HilbertSpace, params: &SystemParams) -> Operator {
    let bd = space.creation_op();
    let i = Complex64::i();
    let mut h = Operator::zeros(space.dim(), space.dim());
    for ion in 1..=2 {
        let raise = space.transition_op(ion, 1, 2).expect("valid indices") * Complex64::new(G2, 0.0)
            + space.transition_op(ion, 1, 3).expect("valid indices") * Complex64::new(params.g3, 0.0);
        let x = raise * &bd * i;
        h += &x + x.adjoint();
    }
    h - decay_operator(space) * Complex64::new(0.0, 0.5 * params.gamma3)
}

/// Weak laser drive `Σ_i Σ_j ½ Ω_j^(i) |j⟩_i⟨2| + h.c.`; Hermitian and
/// diagonal in the phonon number.
pub fn build_h_laser(space: &HilbertSpace, params: &SystemParams) -> Operator {
    let mut h = Operator::zeros(space.dim(), space.dim());
    for ion in 1..=2 {
        for j in 0..2 {
            let w = params.omega.get(ion, j);
            if w == Complex64::new(0.0, 0.0) {
                continue;
            }
            let x = space.transition_op(ion, j, 2).expect("valid indices") * (w * 0.5);
            h += &x + x.adjoint();
        }
    }
    h
}

/// `H_cond + H_laser`.
pub fn build_h_total(space: &HilbertSpace, params: &SystemParams) -> Operator {
    if !params.is_weak_drive() {
        log::warn!(
            "drive outside the weak regime: max|Ω| = {:.3} exceeds {} x min(g2, g3, Γ3)",
            params.omega.max_abs(),
            WEAK_DRIVE_RATIO
        );
    }
    build_h_cond(space, params) + build_h_laser(space, params)
}
