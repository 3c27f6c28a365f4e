use num_complex::Complex64;

use super::eig::{hermitian_eig, EigenDecomposition, DEFAULT_HERMITICITY_TOL};
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Relative cutoff separating the support of a PSD matrix from round-off.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Kronecker product. The index of `a` is the major one.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of vectors, same index convention as [`tensor`].
pub fn tensor_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

pub fn tensor_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut it = factors.iter();
    let first = (*it.next().expect("at least one factor")).clone();
    it.fold(first, |acc, f| tensor(&acc, f))
}

fn check_dims(m: &ComplexMatrix, dims: &[usize]) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!("invalid subsystem dims {dims:?}")));
    }
    let total: usize = dims.iter().product();
    if total != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} multiply to {total}, matrix is {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(total)
}

/// Digits of a flat index in the mixed radix `dims` (first factor most significant).
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

/// Traces out every factor not listed in `keep`. Kept factors stay in their
/// original relative order regardless of the order of `keep`.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total = check_dims(m, dims)?;
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "keep index {k} out of range for {} factors",
                dims.len()
            )));
        }
        kept[k] = true;
    }
    let kept_dims: Vec<usize> = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(&d, _)| d).collect();
    let out_dim: usize = kept_dims.iter().product();

    // Split every flat index into (kept part, traced part).
    let mut split = Vec::with_capacity(total);
    let mut dig = vec![0; dims.len()];
    for idx in 0..total {
        digits(idx, dims, &mut dig);
        let (mut ki, mut ti) = (0usize, 0usize);
        for (f, &d) in dims.iter().enumerate() {
            if kept[f] {
                ki = ki * d + dig[f];
            } else {
                ti = ti * d + dig[f];
            }
        }
        split.push((ki, ti));
    }

    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for r in 0..total {
        let (kr, tr) = split[r];
        for c in 0..total {
            let (kc, tc) = split[c];
            if tr == tc {
                out[(kr, kc)] += m[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `perm[i]` of the input becomes factor `i`
/// of the output.
pub fn permute_subsystems(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let total = check_dims(m, dims)?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::DimensionMismatch(format!("{perm:?} is not a permutation of {} factors", dims.len())));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map = permutation_index_map(dims, perm, &new_dims);
    let mut out = ComplexMatrix::zeros(total, total);
    for r in 0..total {
        for c in 0..total {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Same reordering for a state vector.
pub fn permute_vector(v: &[Complex64], dims: &[usize], perm: &[usize]) -> Vec<Complex64> {
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map = permutation_index_map(dims, perm, &new_dims);
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (i, &z) in v.iter().enumerate() {
        out[map[i]] = z;
    }
    out
}

fn permutation_index_map(dims: &[usize], perm: &[usize], new_dims: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let mut dig = vec![0; dims.len()];
    (0..total)
        .map(|idx| {
            digits(idx, dims, &mut dig);
            perm.iter().zip(new_dims).fold(0, |acc, (&p, &d)| acc * d + dig[p])
        })
        .collect()
}

/// Trace distance `½ Σ |λ(A − B)|` between Hermitian matrices.
pub fn trace_norm_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let diff = a - b;
    let e = hermitian_eig(&diff, DEFAULT_HERMITICITY_TOL)?;
    Ok(0.5 * e.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// Applies `f` to the eigenvalues above `rank_tol · λ_max`; the rest map to 0.
pub fn matrix_func_on_support(
    m: &ComplexMatrix,
    f: impl Fn(f64) -> f64,
    rank_tol: f64,
) -> Result<ComplexMatrix> {
    let e = psd_eig(m, rank_tol)?;
    let cutoff = support_cutoff(&e, rank_tol);
    Ok(e.reconstruct_with(|l| if l > cutoff { f(l) } else { 0.0 }))
}

/// Orthogonal projector onto the support of a PSD matrix.
pub fn support_projector(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    matrix_func_on_support(m, |_| 1.0, rank_tol)
}

/// Orthonormal eigenvectors spanning the support of a PSD matrix, as columns
/// ordered by descending eigenvalue.
pub fn support_basis(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    let e = psd_eig(m, rank_tol)?;
    let cutoff = support_cutoff(&e, rank_tol);
    let r = e.eigenvalues.iter().filter(|&&l| l > cutoff).count().max(1);
    Ok(e.eigenvectors.sub_block(0, 0, m.rows(), r))
}

/// Eigendecomposition of a PSD matrix, rejecting eigenvalues below
/// `−rank_tol · λ_max`.
pub fn psd_eig(m: &ComplexMatrix, rank_tol: f64) -> Result<EigenDecomposition> {
    let e = hermitian_eig(m, DEFAULT_HERMITICITY_TOL)?;
    let lmax = e.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(&lmin) = e.eigenvalues.last() {
        if lmin < -rank_tol * lmax || (lmax == 0.0 && lmin < 0.0) {
            return Err(Error::NegativeEigenvalue(lmin));
        }
    }
    Ok(e)
}

/// Eigenvalues strictly above this value belong to the support.
pub fn support_cutoff(e: &EigenDecomposition, rank_tol: f64) -> f64 {
    rank_tol * e.eigenvalues.first().copied().unwrap_or(0.0).max(0.0)
}

/// Number of eigenvalues above `rank_tol · λ_max`.
pub fn numerical_rank(m: &ComplexMatrix, rank_tol: f64) -> Result<usize> {
    let e = hermitian_eig(m, DEFAULT_HERMITICITY_TOL)?;
    let cutoff = support_cutoff(&e, rank_tol);
    Ok(e.eigenvalues.iter().filter(|&&l| l > cutoff).count())
}

/// `exp(−i H t)` through the spectral decomposition of `H`.
pub fn unitary_propagator(h: &ComplexMatrix, t: f64, hermiticity_tol: f64) -> Result<ComplexMatrix> {
    let e = hermitian_eig(h, hermiticity_tol)?;
    let n = e.dim();
    let v = &e.eigenvectors;
    let phases: Vec<Complex64> = e
        .eigenvalues
        .iter()
        .map(|&l| Complex64::from_polar(1.0, -l * t))
        .collect();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * phases[k] * v[(j, k)].conj()).sum()
    }))
}
