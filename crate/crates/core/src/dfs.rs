//! Decoherence-free subspace (DFS) of the conditional Hamiltonian.
//!
//! A state is decoherence free when its no-photon probability stays at one
//! forever, i.e. when it lies in the span of eigenvectors of `H_cond` with
//! real eigenvalues. Because `H_cond` is not normal, its eigenvectors are not
//! orthogonal; the decomposition keeps the reciprocal (dual) basis
//! `⟨λ^j|λ_i⟩ = δ_ij` alongside the right eigenvectors so that
//!
//! ```text
//! H_cond = Σ_i λ_i |λ_i⟩⟨λ^i|
//! ```
//!
//! Hard truncation of the phonon ladder makes `b†` annihilate `|n_max⟩`,
//! which fabricates extra real-eigenvalue eigenvectors living on the top
//! phonon layer (for instance `|22⟩|n_max⟩`). Those are filtered: a real
//! eigenvector is kept only if its `n_max`-layer population is below
//! `tol_trunc`, or if it is the genuinely uncoupled `|00⟩|n_max⟩`.

use nalgebra::SVD;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::RabiMatrix;
use crate::hilbert::{HilbertSpace, Operator, State};
use crate::linalg::{self, norm_2, orthonormalize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfsOptions {
    /// `|Im λ|` at or below this counts as real. `None` means
    /// `1e-9 · ‖H_cond‖₂`.
    pub tol_real: Option<f64>,
    /// Maximum `n_max`-layer population of a retained eigenvector.
    pub tol_trunc: f64,
    /// Pivot threshold of the rank-revealing orthonormalization.
    pub pivot_tol: f64,
}

impl Default for DfsOptions {
    fn default() -> Self {
        Self { tol_real: None, tol_trunc: 1e-10, pivot_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct DfsDecomposition {
    pub space: HilbertSpace,
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm right eigenvectors `|λ_i⟩` as columns.
    pub eigenvectors: Operator,
    /// Reciprocal vectors `|λ^j⟩` as columns: `reciprocal† · eigenvectors = I`.
    pub reciprocal: Operator,
    /// Population of each eigenvector on the `n_max` phonon layer.
    pub trunc_population: Vec<f64>,
    pub dfs_indices: Vec<usize>,
    /// Orthonormal basis of the DFS.
    pub dfs_basis: Vec<State>,
    /// Hermitian projector onto the DFS.
    pub projector: Operator,
    pub tol_real: f64,
}

impl DfsDecomposition {
    pub fn dim(&self) -> usize {
        self.dfs_basis.len()
    }

    pub fn is_dfs(&self, index: usize) -> bool {
        self.dfs_indices.binary_search(&index).is_ok()
    }

    pub fn eigenvector(&self, index: usize) -> State {
        self.eigenvectors.column(index).into_owned()
    }

    /// `Σ_i λ_i |λ_i⟩⟨λ^i|`.
    pub fn reconstruct(&self) -> Operator {
        let lambda = Operator::from_diagonal(&State::from_vec(self.eigenvalues.clone()));
        &self.eigenvectors * lambda * self.reciprocal.adjoint()
    }

    /// Largest `|⟨λ^j|λ_i⟩ − δ_ij|`.
    pub fn biorthogonality_defect(&self) -> f64 {
        let g = self.reciprocal.adjoint() * &self.eigenvectors;
        let n = g.nrows();
        linalg::max_abs(&(g - Operator::identity(n, n)))
    }

    /// Indices whose eigenvalue decays (`Im λ < −tol_real`).
    pub fn decaying_indices(&self) -> Vec<usize> {
        (0..self.eigenvalues.len()).filter(|&i| self.eigenvalues[i].im.abs() > self.tol_real).collect()
    }

    /// Real-eigenvalue eigenvectors rejected by the truncation filter.
    pub fn truncation_artifacts(&self) -> Vec<usize> {
        (0..self.eigenvalues.len())
            .filter(|&i| self.eigenvalues[i].im.abs() <= self.tol_real && !self.is_dfs(i))
            .collect()
    }
}

/// Eigen-decomposition of a diagonalizable dense matrix.
///
/// Eigenvalues come from a complex Schur form. Numerically coincident
/// eigenvalues are clustered, and each cluster's eigenspace is taken as the
/// null space of `H − μ I` (trailing right singular vectors), which stays
/// well conditioned for the heavily degenerate spectra of symmetric two-ion
/// systems. Returns eigenvalues, unit eigenvectors (columns) and the cluster
/// each eigenvalue belongs to.
pub fn eigen_decompose(h: &Operator) -> Result<(Vec<Complex64>, Operator, Vec<Vec<usize>>)> {
    let n = h.nrows();
    let scale = norm_2(h).max(1.0);
    let schur = nalgebra::Schur::try_new(h.clone(), f64::EPSILON, 100 * n.max(10)).ok_or(Error::EigenConvergence)?;
    let (_, t) = schur.unpack();
    let raw: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();

    let cluster_tol = 1e-7 * scale;
    let clusters = cluster(&raw, cluster_tol);

    let mut eigenvalues = vec![Complex64::new(0.0, 0.0); n];
    let mut vectors = Operator::zeros(n, n);
    let defect_tol = 1e-8 * scale;
    for members in &clusters {
        let k = members.len();
        let mu = members.iter().map(|&i| raw[i]).sum::<Complex64>() / k as f64;
        let shifted = h - Operator::identity(n, n) * mu;
        let svd = SVD::new(shifted, false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        // singular values come sorted in descending order
        let residual = svd.singular_values[n - k];
        if residual > defect_tol {
            return Err(Error::Defective { eigenvalue: mu, multiplicity: k, residual });
        }
        for (slot, &i) in members.iter().enumerate() {
            let row = n - k + slot;
            let v = v_t.row(row).adjoint();
            vectors.set_column(i, &v);
            eigenvalues[i] = mu;
        }
    }
    // nearly parallel eigenvectors from different clusters signal a
    // defective (or numerically defective) matrix
    let smallest = SVD::new(vectors.clone(), false, false).singular_values.min();
    if smallest < 1e-8 {
        return Err(Error::Defective {
            eigenvalue: Complex64::new(f64::NAN, f64::NAN),
            multiplicity: 0,
            residual: smallest,
        });
    }
    Ok((eigenvalues, vectors, clusters))
}

/// Single-linkage clustering of eigenvalues closer than `tol`.
fn cluster(values: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = i;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

/// Decomposes `h_cond` (undriven, `Ω = 0`) and extracts its DFS.
pub fn dfs_basis(h_cond: &Operator, space: &HilbertSpace, options: &DfsOptions) -> Result<DfsDecomposition> {
    space.check_operator(h_cond)?;
    let n = space.dim();
    let tol_real = options.tol_real.unwrap_or(1e-9 * norm_2(h_cond));
    let (eigenvalues, mut vectors, clusters) = eigen_decompose(h_cond)?;

    let top = space.n_max();
    let uncoupled_top = space.basis_state(0, 0, top)?;
    let mut top_layer = space.phonon_layer_projector(top)?;
    let e_idx = space.encode(0, 0, top)?;
    top_layer[(e_idx, e_idx)] = Complex64::new(0.0, 0.0);

    // Rotate each real eigenspace so that the truncation filter sees a
    // basis-independent split: vectors with no top-layer weight, the
    // uncoupled |00⟩|n_max⟩, and the remaining artifacts.
    for members in clusters.iter().filter(|m| eigenvalues[m[0]].im.abs() <= tol_real) {
        let k = members.len();
        let block = Operator::from_columns(&members.iter().map(|&i| vectors.column(i).into_owned()).collect::<Vec<_>>());
        let svd = SVD::new(&top_layer * &block, false, true);
        let w = svd.v_t.expect("requested right singular vectors").adjoint();
        let rotated = &block * w;
        let sigma = &svd.singular_values;

        let (mut clean, mut artifacts): (Vec<State>, Vec<State>) = (Vec::new(), Vec::new());
        for j in 0..k {
            let v = rotated.column(j).into_owned();
            if sigma[j] * sigma[j] <= options.tol_trunc {
                clean.push(v);
            } else {
                artifacts.push(v);
            }
        }

        let overlap = (block.adjoint() * &uncoupled_top).norm_squared();
        let mut ordered: Vec<State> = Vec::with_capacity(k);
        if overlap >= 1.0 - options.tol_trunc && !clean.is_empty() {
            let deflated: Vec<State> = clean
                .iter()
                .map(|v| v - &uncoupled_top * uncoupled_top.dotc(v))
                .collect();
            let rest = orthonormalize(&deflated, options.pivot_tol);
            ordered.push(uncoupled_top.clone());
            ordered.extend(rest);
        } else {
            ordered.extend(clean);
        }
        ordered.extend(artifacts);
        debug_assert_eq!(ordered.len(), k);
        for (slot, &i) in members.iter().enumerate() {
            vectors.set_column(i, &ordered[slot]);
        }
    }

    let inverse = vectors.clone().try_inverse().ok_or(Error::Defective {
        eigenvalue: Complex64::new(0.0, 0.0),
        multiplicity: 0,
        residual: f64::INFINITY,
    })?;
    let reciprocal = inverse.adjoint();

    let trunc_population: Vec<f64> =
        (0..n).map(|i| space.phonon_layer_population(&vectors.column(i).into_owned(), top)).collect();

    let dfs_indices: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = vectors.column(i);
            let is_uncoupled = uncoupled_top.dotc(&v).norm_sqr() >= 1.0 - options.tol_trunc;
            eigenvalues[i].im.abs() <= tol_real && (trunc_population[i] <= options.tol_trunc || is_uncoupled)
        })
        .collect();
    let retained: Vec<State> = dfs_indices.iter().map(|&i| vectors.column(i).into_owned()).collect();
    let basis = orthonormalize(&retained, options.pivot_tol);
    let projector = linalg::projector(&basis, n);

    let decomp = DfsDecomposition {
        space: *space,
        eigenvalues,
        eigenvectors: vectors,
        reciprocal,
        trunc_population,
        dfs_indices,
        dfs_basis: basis,
        projector,
        tol_real,
    };

    let rebuilt = decomp.reconstruct();
    let rel = (&rebuilt - h_cond).norm() / h_cond.norm().max(f64::MIN_POSITIVE);
    if rel > 1e-8 {
        return Err(Error::Defective { eigenvalue: Complex64::new(f64::NAN, f64::NAN), multiplicity: 0, residual: rel });
    }
    Ok(decomp)
}

/// Hermitian projector onto the DFS.
pub fn dfs_projector(decomp: &DfsDecomposition) -> Operator {
    linalg::projector(&decomp.dfs_basis, decomp.space.dim())
}

/// `P H P`. With `h` the full driven Hamiltonian the strong-laser part drops
/// out (it annihilates the DFS), so passing either `H_laser` or
/// `H_cond + H_laser` yields the same effective Hamiltonian.
pub fn effective_hamiltonian(h: &Operator, projector: &Operator) -> Operator {
    projector * h * projector
}

/// Closed-form DFS-projected drive:
///
/// ```text
/// H_eff = 1/(2√2) [ −Ω_0^(1)|01⟩ + Ω_0^(2)|10⟩ + (Ω_1^(2) − Ω_1^(1))|11⟩ ] ⟨a| + h.c.
/// ```
///
/// all kets with the phonon mode in its ground state.
pub fn analytic_effective_hamiltonian(space: &HilbertSpace, omega: &RabiMatrix) -> Operator {
    let c = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    let a = space.antisymmetric_state(0).expect("vacuum exists");
    let ket = space.basis_state(0, 1, 0).expect("valid") * (-omega.get(1, 0) * c)
        + space.basis_state(1, 0, 0).expect("valid") * (omega.get(2, 0) * c)
        + space.basis_state(1, 1, 0).expect("valid") * ((omega.get(2, 1) - omega.get(1, 1)) * c);
    let x = &ket * a.adjoint();
    &x + x.adjoint()
}

/// Explicit DFS inventory of the undriven two-ion system: `|00⟩|n⟩` for every
/// phonon number, plus `|01⟩`, `|10⟩`, `|11⟩` and the antisymmetric
/// `|a⟩ = (|12⟩ − |21⟩)/√2`, each with the phonon mode empty.
pub fn analytic_dfs_reference(space: &HilbertSpace) -> Vec<State> {
    let mut out: Vec<State> = (0..=space.n_max()).map(|n| space.basis_state(0, 0, n).expect("valid")).collect();
    for (l1, l2) in [(0, 1), (1, 0), (1, 1)] {
        out.push(space.basis_state(l1, l2, 0).expect("valid"));
    }
    out.push(space.antisymmetric_state(0).expect("valid"));
    out
}

/// `max(‖(I − P_a) P_b‖₂, ‖(I − P_b) P_a‖₂)`; zero iff the ranges coincide.
pub fn subspace_residual(pa: &Operator, pb: &Operator) -> f64 {
    let n = pa.nrows();
    let id = Operator::identity(n, n);
    norm_2(&((&id - pa) * pb)).max(norm_2(&((&id - pb) * pa)))
}

#[derive(Debug, Clone)]
pub struct TraceCheck {
    pub label: String,
    pub vector: State,
    pub times: Vec<f64>,
    pub p0: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct VerificationReport {
    pub dfs_checks: Vec<TraceCheck>,
    pub decaying_checks: Vec<TraceCheck>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn failures(&self) -> impl Iterator<Item = &TraceCheck> {
        self.dfs_checks.iter().chain(&self.decaying_checks).filter(|c| !c.passed)
    }
}

/// Minimum `P0` a DFS state must keep over the whole window.
pub const DFS_P0_FLOOR: f64 = 1.0 - 1e-8;
/// Maximum `P0` a decaying eigenvector may retain at `t_max`.
pub const DECAY_P0_CEILING: f64 = 1.0 - 1e-3;

/// Propagates `n_samples` random unit vectors of the DFS under `h_cond` and
/// checks `P0(t) ≥ 1 − 1e-8` on 64 times in `(0, t_max]`; then checks that
/// every decaying eigenvector ends with `P0(t_max) < 1 − 1e-3`. Truncation
/// artifacts are skipped (they are dark only because of the cutoff).
pub fn verify_dfs(
    decomp: &DfsDecomposition,
    h_cond: &Operator,
    t_max: f64,
    n_samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    const N_TIMES: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerificationReport::default();
    let dim = decomp.space.dim();

    for s in 0..n_samples {
        let mut v = State::zeros(dim);
        for b in &decomp.dfs_basis {
            let c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            v += b * c;
        }
        if v.norm() == 0.0 {
            continue;
        }
        let v = v.normalize();
        let (times, p0) = crate::evolve::p0_trace(h_cond, &v, t_max, N_TIMES)?;
        let passed = p0.iter().all(|&p| p >= DFS_P0_FLOOR);
        report.dfs_checks.push(TraceCheck { label: format!("dfs sample {s}"), vector: v, times, p0, passed });
    }

    for i in decomp.decaying_indices() {
        let v = decomp.eigenvector(i);
        let (times, p0) = crate::evolve::p0_trace(h_cond, &v, t_max, N_TIMES)?;
        let passed = *p0.last().expect("non-empty trace") < DECAY_P0_CEILING;
        report.decaying_checks.push(TraceCheck {
            label: format!("eigenvector {i} (λ = {:.6})", decomp.eigenvalues[i]),
            vector: v,
            times,
            p0,
            passed,
        });
    }
    Ok(report)
}

/// Whether `psi` is annihilated by `h` to within `tol`.
pub fn is_dark(h: &Operator, psi: &State, tol: f64) -> bool {
    (h * psi).norm() <= tol * psi.norm().max(1.0)
}
