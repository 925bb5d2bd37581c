//! Two trapped ions sharing one phonon mode, with a rapidly decaying
//! auxiliary level watched by a photon detector.
//!
//! While no photon is seen the system evolves under a non-Hermitian
//! conditional Hamiltonian; strong decay confines it to a decoherence-free
//! subspace in which a weak laser pulse implements a CNOT. The modules
//! follow that pipeline:
//!
//! * [`hilbert`]: basis `|l1 l2⟩|n⟩` and elementary operators
//! * [`hamiltonian`]: conditional and laser Hamiltonians
//! * [`dfs`]: eigen-analysis, decoherence-free subspace, projected drive
//! * [`evolve`]: no-photon propagation and `P0`
//! * [`trajectory`]: quantum-jump Monte Carlo
//! * [`gates`]: CNOT metrics and parameter sweeps
//! * [`stats`]: repeat-until-success bookkeeping
//! * [`config`], [`output`], [`suite`]: plumbing for the `dgate` binary
//!
//! Rates are in units of `g2` and `ħ = 1`.

pub mod config;
pub mod dfs;
pub mod error;
pub mod evolve;
pub mod gates;
pub mod hamiltonian;
pub mod hilbert;
pub mod linalg;
pub mod output;
pub mod stats;
pub mod suite;
pub mod trajectory;
