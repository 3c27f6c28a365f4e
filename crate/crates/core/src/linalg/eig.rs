//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation zeroes one off-diagonal pair `(p, q)`. The pair is first
//! made real by a diagonal phase, then annihilated with a classical real
//! Jacobi rotation, so the full step is the unitary
//!
//! ```text
//!        | c              s          |
//!   G =  | -s e^{-iφ}     c e^{-iφ}  |      a_pq = |a_pq| e^{iφ}
//! ```
//!
//! acting on columns `p, q`. Sweeps repeat until the off-diagonal mass is
//! below round-off relative to the Frobenius norm.

use std::cmp::Ordering;

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;

/// Spectrum sorted descending with orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.eigenvectors.col(i)
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                if vik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized to `(M + M†)/2` after checking that the
/// violation is within `hermiticity_tol`. Eigenvectors are phase-fixed so
/// that their first significant component is real and positive; vectors of
/// a degenerate eigenvalue are ordered lexicographically by components.
pub fn hermitian_eig(m: &ComplexMatrix, hermiticity_tol: f64) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    let violation = m.hermiticity_violation();
    if violation > hermiticity_tol {
        return Err(Error::NotHermitian {
            violation,
            tol: hermiticity_tol,
        });
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);

    let total: f64 = a.frobenius_norm();
    if total > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off = off_diagonal_norm(&a);
            if off <= f64::EPSILON * total {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|k| {
            let mut col = v.col(k);
            fix_phase(&mut col);
            (a[(k, k)].re, col)
        })
        .collect();
    sort_pairs(&mut pairs);

    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, (lambda, col)) in pairs.into_iter().enumerate() {
        values.push(lambda);
        vectors.set_col(k, &col);
    }
    Ok(EigenDecomposition {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eig(m, DEFAULT_HERMITICITY_TOL)?.eigenvalues)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let beta = apq.norm();
    if beta == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip rotations that cannot change the diagonal in floating point.
    if beta < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = apq / beta;
    let tau = (aqq - app) / (2.0 * beta);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let cc = Complex64::new(c, 0.0);
    let sc = Complex64::new(s, 0.0);
    let g_qp = -sc * phase.conj();
    let g_qq = cc * phase.conj();

    let n = a.rows();
    // A <- A G (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * cc + akq * g_qp;
        a[(k, q)] = akp * sc + akq * g_qq;
    }
    // A <- G† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * cc + aqk * g_qp.conj();
        a[(q, k)] = apk * sc + aqk * g_qq.conj();
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    // V <- V G
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * cc + vkq * g_qp;
        v[(k, q)] = vkp * sc + vkq * g_qq;
    }
}

const SIGNIFICANT: f64 = 1e-12;

fn fix_phase(col: &mut [Complex64]) {
    if let Some(lead) = col.iter().copied().find(|z| z.norm() > SIGNIFICANT) {
        let rot = lead.conj() / lead.norm();
        for z in col.iter_mut() {
            *z *= rot;
        }
        // The leading component is real positive up to rounding; make it exact.
        if let Some(first) = col.iter_mut().find(|z| z.norm() > SIGNIFICANT) {
            *first = Complex64::new(first.norm(), 0.0);
        }
    }
}

fn lexicographic(a: &[Complex64], b: &[Complex64]) -> Ordering {
    let lead = |v: &[Complex64]| v.iter().position(|z| z.norm() > SIGNIFICANT);
    match lead(a).cmp(&lead(b)) {
        Ordering::Equal => {}
        other => return other,
    }
    for (x, y) in a.iter().zip(b) {
        // Larger leading weight first.
        match y.re.partial_cmp(&x.re).unwrap_or(Ordering::Equal) {
            Ordering::Equal => {}
            other => return other,
        }
        match y.im.partial_cmp(&x.im).unwrap_or(Ordering::Equal) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    Ordering::Equal
}

fn sort_pairs(pairs: &mut [(f64, Vec<Complex64>)]) {
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let degenerate = |x: f64, y: f64| (x - y).abs() <= 1e-12 * scale;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && degenerate(pairs[start].0, pairs[end].0) {
            end += 1;
        }
        if end - start > 1 {
            // Reorder vectors only; eigenvalues keep their descending order.
            let values: Vec<f64> = pairs[start..end].iter().map(|p| p.0).collect();
            pairs[start..end].sort_by(|a, b| lexicographic(&a.1, &b.1));
            for (p, v) in pairs[start..end].iter_mut().zip(values) {
                p.0 = v;
            }
        }
        start = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_input_is_sorted() {
        let m = ComplexMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let e = hermitian_eig(&m, DEFAULT_HERMITICITY_TOL).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 2.0, 1.0]);
        // Standard basis vectors, permuted.
        assert_eq!(e.vector(0)[0].re, 1.0);
        assert_eq!(e.vector(1)[2].re, 1.0);
        assert_eq!(e.vector(2)[1].re, 1.0);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = hermitian_eig(&x, DEFAULT_HERMITICITY_TOL).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] + 1.0).abs() < 1e-15);
        // Leading components real positive.
        assert!(e.vector(0)[0].re > 0.0 && e.vector(0)[0].im == 0.0);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 4, 9, 27] {
            let h = random_hermitian(n, &mut rng);
            let e = hermitian_eig(&h, DEFAULT_HERMITICITY_TOL).unwrap();
            let v = &e.eigenvectors;
            assert!((&v.adjoint() * v).max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
            let scale = e.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
            assert!(e.reconstruct().max_abs_diff(&h) <= 1e-11 * scale.max(1.0));
            assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn deterministic_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(6, &mut rng);
        let a = hermitian_eig(&h, 1e-9).unwrap();
        let b = hermitian_eig(&h, 1e-9).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenvectors, b.eigenvectors);
    }

    #[test]
    fn degenerate_block_is_orthonormal() {
        // Projector of rank 2 inside C^3, rotated.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = crate::linalg::random::haar_unitary(3, &mut rng);
        let p = ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 0.0]).conjugate_by(&u);
        let e = hermitian_eig(&p, 1e-9).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-13);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-13);
        assert!(e.eigenvalues[2].abs() < 1e-13);
        let v = &e.eigenvectors;
        assert!((&v.adjoint() * v).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        for k in 0..3 {
            let col = e.vector(k);
            let lead = col.iter().find(|z| z.norm() > 1e-12).unwrap();
            assert!(lead.im == 0.0 && lead.re > 0.0);
        }
    }

    #[test]
    fn errors() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eig(&rect, 1e-9), Err(Error::NotSquare(2, 3))));
        let skew = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert!(matches!(hermitian_eig(&skew, 1e-9), Err(Error::NotHermitian { .. })));
    }
}
