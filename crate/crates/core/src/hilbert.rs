//! Composite Hilbert space of two four-level ions sharing one vibrational
//! mode, truncated at `n_max` phonons.
//!
//! # Index ordering
//!
//! Basis kets `|l1, l2⟩ ⊗ |n⟩` are laid out with the ion-1 level slowest and
//! the phonon number fastest:
//!
//! ```text
//! index(l1, l2, n) = (4 * l1 + l2) * (n_max + 1) + n
//! ```
//!
//! This ordering is frozen; state dumps and CSV outputs depend on it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense operator on the composite space.
pub type Operator = DMatrix<Complex64>;
/// Dense state vector on the composite space (possibly unnormalized).
pub type State = DVector<Complex64>;

pub const N_IONS: usize = 2;
pub const N_LEVELS: usize = 4;
const INTERNAL_DIM: usize = N_LEVELS * N_LEVELS;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    n_max: usize,
}

/// Decoded basis label `(l1, l2, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub l1: usize,
    pub l2: usize,
    pub n: usize,
}

impl std::fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{}{}>|{}>", self.l1, self.l2, self.n)
    }
}

impl HilbertSpace {
    /// Two ions, four levels each, phonons `0..=n_max`. `n_max = 0` is
    /// rejected since the gate needs at least one phonon excitation.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::PhononCutoff(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_phonon_states(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        INTERNAL_DIM * self.n_phonon_states()
    }

    pub fn encode(&self, l1: usize, l2: usize, n: usize) -> Result<usize> {
        check_level(l1)?;
        check_level(l2)?;
        if n > self.n_max {
            return Err(Error::Phonon { n, n_max: self.n_max });
        }
        Ok((N_LEVELS * l1 + l2) * self.n_phonon_states() + n)
    }

    pub fn decode(&self, index: usize) -> Result<BasisLabel> {
        if index >= self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: index });
        }
        let np = self.n_phonon_states();
        let n = index % np;
        let internal = index / np;
        Ok(BasisLabel { l1: internal / N_LEVELS, l2: internal % N_LEVELS, n })
    }

    /// Labels in flat-index order.
    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        let np = self.n_phonon_states();
        (0..self.dim()).map(move |k| BasisLabel {
            l1: k / np / N_LEVELS,
            l2: (k / np) % N_LEVELS,
            n: k % np,
        })
    }

    pub fn basis_state(&self, l1: usize, l2: usize, n: usize) -> Result<State> {
        let k = self.encode(l1, l2, n)?;
        let mut psi = State::zeros(self.dim());
        psi[k] = ONE;
        Ok(psi)
    }

    pub fn zero_state(&self) -> State {
        State::zeros(self.dim())
    }

    pub fn identity(&self) -> Operator {
        Operator::identity(self.dim(), self.dim())
    }

    /// `|j⟩_ion⟨k|` tensored with the identity on the other ion and on the
    /// phonon mode. Ions are numbered 1 and 2.
    pub fn transition_op(&self, ion: usize, j: usize, k: usize) -> Result<Operator> {
        check_ion(ion)?;
        check_level(j)?;
        check_level(k)?;
        let np = self.n_phonon_states();
        let mut op = Operator::zeros(self.dim(), self.dim());
        for other in 0..N_LEVELS {
            let (row_int, col_int) = match ion {
                1 => (N_LEVELS * j + other, N_LEVELS * k + other),
                _ => (N_LEVELS * other + j, N_LEVELS * other + k),
            };
            for n in 0..np {
                op[(row_int * np + n, col_int * np + n)] = ONE;
            }
        }
        Ok(op)
    }

    /// Phonon annihilation operator `b`, identity on both ions. The ladder is
    /// hard-truncated, so `b†` (its adjoint) annihilates `|n_max⟩` and
    /// `[b, b†]` equals the identity everywhere except on the top layer.
    pub fn annihilation_op(&self) -> Operator {
        let np = self.n_phonon_states();
        let mut op = Operator::zeros(self.dim(), self.dim());
        for internal in 0..INTERNAL_DIM {
            for n in 1..np {
                op[(internal * np + n - 1, internal * np + n)] =
                    Complex64::new((n as f64).sqrt(), 0.0);
            }
        }
        op
    }

    pub fn creation_op(&self) -> Operator {
        self.annihilation_op().adjoint()
    }

    pub fn number_op(&self) -> Operator {
        let np = self.n_phonon_states();
        Operator::from_fn(self.dim(), self.dim(), |r, c| {
            if r == c {
                Complex64::new((r % np) as f64, 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Diagonal projector onto the basis kets with exactly `n` phonons.
    pub fn phonon_layer_projector(&self, n: usize) -> Result<Operator> {
        if n > self.n_max {
            return Err(Error::Phonon { n, n_max: self.n_max });
        }
        let np = self.n_phonon_states();
        Ok(Operator::from_fn(self.dim(), self.dim(), |r, c| {
            if r == c && r % np == n {
                ONE
            } else {
                ZERO
            }
        }))
    }

    /// Total population of `psi` on the `n`-phonon layer.
    pub fn phonon_layer_population(&self, psi: &State, n: usize) -> f64 {
        let np = self.n_phonon_states();
        psi.iter()
            .enumerate()
            .filter(|(k, _)| k % np == n)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Embeds a two-ion internal state (16 amplitudes indexed `4*l1 + l2`)
    /// into the composite space with `n` phonons.
    pub fn embed_internal(&self, internal: &[Complex64; INTERNAL_DIM], n: usize) -> Result<State> {
        if n > self.n_max {
            return Err(Error::Phonon { n, n_max: self.n_max });
        }
        let np = self.n_phonon_states();
        let mut psi = self.zero_state();
        for (i, &a) in internal.iter().enumerate() {
            psi[i * np + n] = a;
        }
        Ok(psi)
    }

    /// Antisymmetric state `(|12⟩ − |21⟩)/√2` of the two ions, with `n`
    /// phonons.
    pub fn antisymmetric_state(&self, n: usize) -> Result<State> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ok(self.basis_state(1, 2, n)? * Complex64::new(s, 0.0)
            - self.basis_state(2, 1, n)? * Complex64::new(s, 0.0))
    }

    pub fn check_state(&self, psi: &State) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: psi.len() });
        }
        Ok(())
    }

    pub fn check_operator(&self, op: &Operator) -> Result<()> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: op.nrows().max(op.ncols()),
            });
        }
        Ok(())
    }
}

fn check_level(l: usize) -> Result<()> {
    if l >= N_LEVELS {
        Err(Error::Level(l))
    } else {
        Ok(())
    }
}

fn check_ion(ion: usize) -> Result<()> {
    if ion == 0 || ion > N_IONS {
        Err(Error::Ion(ion))
    } else {
        Ok(())
    }
}
