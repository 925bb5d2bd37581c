//! Dense complex linear-algebra helpers: matrix exponential, rank-revealing
//! orthonormalization and a few norms.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

type CMatrix = DMatrix<Complex64>;
type CVector = DVector<Complex64>;

/// Maximum absolute column sum.
pub fn norm_1(a: &CMatrix) -> f64 {
    a.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn norm_2(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    SVD::new(a.clone(), false, false).singular_values.max()
}

/// Largest elementwise modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius norm of `A − A†`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

// Padé approximant degrees with their coefficient tables and the 1-norm
// bounds below which the truncation error is under unit roundoff
// (Higham 2005, Table 2.3).
const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

fn scaled(a: &CMatrix, c: f64) -> CMatrix {
    a * Complex64::new(c, 0.0)
}

/// `exp(A)` by scaling and squaring with a diagonal Padé approximant of
/// degree 3, 5, 7, 9 or 13 chosen from `‖A‖₁`. The degree/scaling choice
/// keeps the backward error of the approximant below double-precision unit
/// roundoff.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    assert!(a.is_square(), "expm requires a square matrix");
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::ExpOverflow { norm });
    }
    let id = CMatrix::identity(n, n);

    let low_order = [(THETA_3, &PADE_3[..]), (THETA_5, &PADE_5[..]), (THETA_7, &PADE_7[..]), (THETA_9, &PADE_9[..])];
    for (theta, b) in low_order {
        if norm <= theta {
            let (u, v) = pade_low(a, b, &id);
            return finish(u, v, 0, norm);
        }
    }

    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = scaled(a, 2f64.powi(-s));
    let b = &PADE_13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]))
        + scaled(&a6, b[7])
        + scaled(&a4, b[5])
        + scaled(&a2, b[3])
        + scaled(&id, b[1]);
    let u = &a * inner_u;
    let v = &a6 * (scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]))
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(&id, b[0]);
    finish(u, v, s, norm)
}

fn pade_low(a: &CMatrix, b: &[f64], id: &CMatrix) -> (CMatrix, CMatrix) {
    let a2 = a * a;
    let mut power = id.clone();
    let mut u_acc = CMatrix::zeros(a.nrows(), a.ncols());
    let mut v_acc = CMatrix::zeros(a.nrows(), a.ncols());
    for pair in b.chunks(2) {
        v_acc += scaled(&power, pair[0]);
        u_acc += scaled(&power, pair[1]);
        power = &power * &a2;
    }
    (a * u_acc, v_acc)
}

fn finish(u: CMatrix, v: CMatrix, squarings: i32, norm: f64) -> Result<CMatrix> {
    let p = &v + &u;
    let q = v - u;
    let mut r = q.lu().solve(&p).ok_or(Error::ExpOverflow { norm })?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|z| !z.is_finite()) {
        return Err(Error::ExpOverflow { norm });
    }
    Ok(r)
}

/// Modified Gram–Schmidt with column pivoting: at every step the remaining
/// candidate with the largest residual norm is taken, and candidates whose
/// residual falls below `pivot_tol` are dropped. Returns an orthonormal
/// basis of the span (numerical rank = number of returned vectors).
pub fn orthonormalize(vectors: &[CVector], pivot_tol: f64) -> Vec<CVector> {
    let mut pool: Vec<CVector> = vectors.to_vec();
    let mut basis: Vec<CVector> = Vec::new();
    while !pool.is_empty() {
        let (best, best_norm) = pool
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_norm <= pivot_tol {
            break;
        }
        let q = pool.swap_remove(best) / Complex64::new(best_norm, 0.0);
        for v in pool.iter_mut() {
            // twice is enough
            for _ in 0..2 {
                let c = q.dotc(v);
                *v -= &q * c;
            }
        }
        basis.push(q);
    }
    basis
}

/// Stacks column vectors into a matrix.
pub fn columns(vectors: &[CVector], nrows: usize) -> CMatrix {
    if vectors.is_empty() {
        return CMatrix::zeros(nrows, 0);
    }
    CMatrix::from_columns(vectors)
}

/// Orthogonal projector `Q Q†` onto the span of orthonormal `basis`.
pub fn projector(basis: &[CVector], dim: usize) -> CMatrix {
    let q = columns(basis, dim);
    &q * q.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Truncated Taylor series, summed until terms are negligible; only
    /// reliable for small norms.
    fn taylor_expm(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let mut term = CMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * a / c(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn expm_of_zero_and_diagonal() {
        let z = CMatrix::zeros(5, 5);
        assert_eq!(expm(&z).unwrap(), CMatrix::identity(5, 5));
        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![c(0.0, -1.0), c(-3.0, 2.0), c(20.0, 0.0)]));
        let e = expm(&d).unwrap();
        for k in 0..3 {
            let expected = d[(k, k)].exp();
            assert!((e[(k, k)] - expected).norm() <= 1e-13 * expected.norm());
        }
    }

    #[test]
    fn expm_nilpotent_jordan_block() {
        // exp of a strictly upper-triangular shift is exact after three terms
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 1)] = c(2.0, 0.0);
        a[(1, 2)] = c(0.0, 3.0);
        let e = expm(&a).unwrap();
        let mut expected = CMatrix::identity(3, 3);
        expected[(0, 1)] = c(2.0, 0.0);
        expected[(1, 2)] = c(0.0, 3.0);
        expected[(0, 2)] = c(0.0, 3.0);
        assert!((e - expected).norm() < 1e-14);
    }

    #[test]
    fn expm_hermitian_generator_is_unitary() {
        let h = CMatrix::from_fn(6, 6, |r, k| c(((r * 7 + k * 3) % 5) as f64 - 2.0, (r as f64 - k as f64) * 0.3));
        let h = (&h + h.adjoint()) * c(0.5, 0.0);
        let u = expm(&(h * c(0.0, -7.3))).unwrap();
        assert!((u.adjoint() * &u - CMatrix::identity(6, 6)).norm() < 1e-12);
    }

    #[test]
    fn expm_overflow_reported() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = c(1000.0, 0.0);
        assert!(matches!(expm(&a), Err(Error::ExpOverflow { .. })));
        a[(0, 0)] = c(f64::NAN, 0.0);
        assert!(expm(&a).is_err());
    }

    proptest! {
        #[test]
        fn expm_matches_taylor_for_small_norm(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16), scale in 0.001f64..1.5) {
            let a = CMatrix::from_iterator(4, 4, entries.iter().map(|&(re, im)| c(re * scale, im * scale)));
            let e = expm(&a).unwrap();
            let t = taylor_expm(&a);
            prop_assert!((&e - &t).norm() <= 1e-12 * t.norm().max(1.0));
        }

        #[test]
        fn expm_semigroup(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9), t1 in 0.0f64..4.0, t2 in 0.0f64..4.0) {
            let a = CMatrix::from_iterator(3, 3, entries.iter().map(|&(re, im)| c(re, im)));
            let e1 = expm(&scaled(&a, t1)).unwrap();
            let e2 = expm(&scaled(&a, t2)).unwrap();
            let e12 = expm(&scaled(&a, t1 + t2)).unwrap();
            prop_assert!((&e2 * &e1 - &e12).norm() <= 1e-11 * e12.norm().max(1.0));
        }
    }

    #[test]
    fn orthonormalize_drops_dependent_vectors() {
        let v1 = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let v2 = CVector::from_vec(vec![c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let v3 = CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0), c(1e-3, 0.0)]);
        let v4 = &v1 + &v3 * c(2.0, 0.0);
        let basis = orthonormalize(&[v1, v2, v3, v4], 1e-10);
        assert_eq!(basis.len(), 2);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((a.dotc(b) - c(expected, 0.0)).norm() < 1e-14);
            }
        }
        let p = projector(&basis, 3);
        assert!((&p * &p - &p).norm() < 1e-14);
        assert!(hermiticity_defect(&p) < 1e-15);
    }

    #[test]
    fn norms() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = c(3.0, 4.0);
        a[(1, 0)] = c(-1.0, 0.0);
        a[(1, 1)] = c(0.0, 2.0);
        assert_eq!(norm_1(&a), 6.0);
        assert_eq!(max_abs(&a), 5.0);
        let two = norm_2(&a);
        assert!(two >= 5.0 && two <= a.norm());
    }
}
