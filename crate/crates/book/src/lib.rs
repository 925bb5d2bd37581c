//! Holds no code. Each chapter of `book/src` is attached to a module so that
//! `cargo test` runs its Rust snippets as doctests against the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/hilbert-space.md")]
pub mod hilbert_space {}
#[doc = include_str!("../../../book/src/conditional-hamiltonian.md")]
pub mod conditional_hamiltonian {}
#[doc = include_str!("../../../book/src/dfs.md")]
pub mod dfs {}
#[doc = include_str!("../../../book/src/no-photon.md")]
pub mod no_photon {}
#[doc = include_str!("../../../book/src/quantum-jumps.md")]
pub mod quantum_jumps {}
#[doc = include_str!("../../../book/src/cnot.md")]
pub mod cnot {}
#[doc = include_str!("../../../book/src/repeat-until-success.md")]
pub mod repeat_until_success {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
