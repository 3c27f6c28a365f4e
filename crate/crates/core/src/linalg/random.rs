//! Seeded Haar sampling.
//!
//! Unitaries come from the QR decomposition of a complex Ginibre matrix with
//! the diagonal of `R` on the positive real axis, which makes the
//! distribution exactly Haar.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, ZERO};

/// Deterministic generator used throughout the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-random unitary of dimension `dim`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    gram_schmidt_q(&ginibre(dim, dim, rng))
}

/// Haar-random unit vector.
pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    normalize(&mut v);
    v
}

/// Random Hermitian matrix with Gaussian entries (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(dim, dim, rng).hermitian_part()
}

/// Random density matrix `G G† / Tr(G G†)` with `G` of shape `dim x rank`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, rank, rng);
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    m.scale_real(1.0 / t).hermitian_part()
}

pub(crate) fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
}

/// `Q` factor of a full-column-rank matrix by Gram–Schmidt with one
/// re-orthogonalization pass. The implied `R` has a positive real diagonal.
pub(crate) fn gram_schmidt_q(a: &ComplexMatrix) -> ComplexMatrix {
    let (n, m) = (a.rows(), a.cols());
    let mut q = ComplexMatrix::zeros(n, m);
    for j in 0..m {
        let mut v = a.col(j);
        for _ in 0..2 {
            for k in 0..j {
                let qk = q.col(k);
                let proj: Complex64 = qk.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, qi) in v.iter_mut().zip(&qk) {
                    *vi -= proj * qi;
                }
            }
        }
        normalize(&mut v);
        q.set_col(j, &v);
    }
    q
}

/// Completes `basis` (orthonormal columns) to a full orthonormal basis by
/// Gram–Schmidt on standard basis vectors taken in index order.
pub fn complete_basis(basis: &ComplexMatrix) -> ComplexMatrix {
    let n = basis.rows();
    let mut cols: Vec<Vec<Complex64>> = (0..basis.cols()).map(|j| basis.col(j)).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = vec![ZERO; n];
        v[e] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for c in &cols {
                let proj: Complex64 = c.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= proj * ci;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            cols.push(v);
        }
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        out.set_col(j, c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        for dim in [1, 2, 3, 8, 16] {
            let a = haar_unitary(dim, &mut seeded_rng(42));
            let b = haar_unitary(dim, &mut seeded_rng(42));
            assert!(a.unitarity_violation() < 1e-12, "dim {dim}");
            assert_eq!(a, b);
        }
    }

    #[test]
    fn completion_is_orthonormal() {
        let u = haar_unitary(4, &mut seeded_rng(1));
        let partial = u.sub_block(0, 0, 4, 2);
        let full = complete_basis(&partial);
        assert!(full.unitarity_violation() < 1e-12);
        assert!(full.sub_block(0, 0, 4, 2).max_abs_diff(&partial) == 0.0);
    }

    #[test]
    fn random_density_is_a_state() {
        let rho = random_density(4, 2, &mut seeded_rng(5));
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        let ev = crate::linalg::eig::hermitian_eigenvalues(&rho).unwrap();
        assert!(ev.iter().all(|&l| l > -1e-12));
        assert!(ev[2].abs() < 1e-12);
    }
}
