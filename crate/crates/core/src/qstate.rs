//! Quantum states with labeled subsystem layouts, purification and the
//! canonical pure Markov states
//!
//! ```text
//! |ψ⟩ = Σ_{j,k} √(κ_j μ_k) |r_j⟩ ⊗ |q_jk⟩ ⊗ |ε_k⟩
//! ```
//!
//! whose `RE` marginal is the product `ρ^R ⊗ ρ^E`.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, complex_from_pairs, hermitian_eig, numerical_rank, pairs_from_complex, partial_trace,
    permute_vector, random::haar_unitary, random::haar_vector, random::seeded_rng, tensor_vec,
    ComplexMatrix, DEFAULT_RANK_TOL, ZERO,
};

/// Tolerances a [`DensityMatrix`] must satisfy.
pub const STATE_TOL: f64 = 1e-9;
/// Allowed deviation of a pure state's norm from one.
pub const NORM_TOL: f64 = 1e-10;
const SPEC_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    R,
    Q,
    E,
    X,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" => Ok(Label::R),
            "Q" => Ok(Label::Q),
            "E" => Ok(Label::E),
            "X" => Ok(Label::X),
            other => Err(Error::InvalidLayout(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr")]
pub struct SystemLayout {
    dims: Vec<usize>,
    labels: Vec<Label>,
}

#[derive(Deserialize)]
struct LayoutRepr {
    dims: Vec<usize>,
    labels: Vec<Label>,
}

impl TryFrom<LayoutRepr> for SystemLayout {
    type Error = Error;

    fn try_from(r: LayoutRepr) -> Result<Self> {
        SystemLayout::new(r.dims, r.labels)
    }
}

impl SystemLayout {
    pub fn new(dims: Vec<usize>, labels: Vec<Label>) -> Result<Self> {
        if dims.is_empty() || dims.len() != labels.len() {
            return Err(Error::InvalidLayout(format!(
                "{} dims for {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidLayout(format!("dims must be positive, got {dims:?}")));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidLayout(format!("duplicate label {l}")));
            }
        }
        Ok(Self { dims, labels })
    }

    /// Layout `R ⊗ Q ⊗ E`.
    pub fn rqe(d_r: usize, d_q: usize, d_e: usize) -> Result<Self> {
        Self::new(vec![d_r, d_q, d_e], vec![Label::R, Label::Q, Label::E])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index_of(&self, label: Label) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(Error::UnknownLabel(label))
    }

    pub fn dim_of(&self, label: Label) -> Result<usize> {
        Ok(self.dims[self.index_of(label)?])
    }

    pub fn contains(&self, label: Label) -> bool {
        self.labels.contains(&label)
    }

    /// Factor indices of `keep`, sorted in layout order.
    fn indices(&self, keep: &[Label]) -> Result<Vec<usize>> {
        let mut idx = keep.iter().map(|&l| self.index_of(l)).collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }

    fn select(&self, idx: &[usize]) -> SystemLayout {
        SystemLayout {
            dims: idx.iter().map(|&i| self.dims[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Whether the labels are exactly `expected`, in that order.
    pub fn is(&self, expected: &[Label]) -> bool {
        self.labels == expected
    }
}

/// Density operator on a labeled multipartite space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SystemLayout,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and unit trace, each within 1e-9.
    pub fn new(layout: SystemLayout, matrix: ComplexMatrix) -> Result<Self> {
        let dm = Self::from_parts_unchecked(layout, matrix)?;
        dm.validate()?;
        Ok(dm)
    }

    fn from_parts_unchecked(layout: SystemLayout, matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare(matrix.rows(), matrix.cols()));
        }
        if matrix.rows() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "layout {:?} needs dimension {}, matrix is {}",
                layout.dims(),
                layout.total_dim(),
                matrix.rows()
            )));
        }
        Ok(Self { layout, matrix })
    }

    fn validate(&self) -> Result<()> {
        let herm = self.matrix.hermiticity_violation();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("Hermiticity violation {herm:e}")));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let ev = hermitian_eig(&self.matrix, STATE_TOL)?.eigenvalues;
        if let Some(&min) = ev.last() {
            if min < -STATE_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.trace_of_product(&self.matrix).re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        self.purity() >= 1.0 - tol
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eig(&self.matrix, STATE_TOL)?.eigenvalues)
    }

    /// Reduced state on `keep`, factors in layout order.
    pub fn marginal(&self, keep: &[Label]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let idx = self.layout.indices(keep)?;
        let m = partial_trace(&self.matrix, self.layout.dims(), &idx)?;
        DensityMatrix::new(self.layout.select(&idx), m)
    }

    /// Reduced state with factors in exactly the order given by `order`.
    pub fn marginal_ordered(&self, order: &[Label]) -> Result<DensityMatrix> {
        let m = self.marginal(order)?;
        let perm = order
            .iter()
            .map(|&l| m.layout.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        let layout = m.layout.select(&perm);
        let matrix = linalg::permute_subsystems(&m.matrix, m.layout.dims(), &perm)?;
        Ok(DensityMatrix { layout, matrix })
    }

    /// `ρ ⊗ σ` with concatenated layouts.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut dims = self.layout.dims.clone();
        dims.extend_from_slice(&other.layout.dims);
        let mut labels = self.layout.labels.clone();
        labels.extend_from_slice(&other.layout.labels);
        Ok(DensityMatrix {
            layout: SystemLayout::new(dims, labels)?,
            matrix: linalg::tensor(&self.matrix, &other.matrix),
        })
    }

    /// Maximally mixed state on a single factor.
    pub fn maximally_mixed(label: Label, dim: usize) -> Self {
        DensityMatrix {
            layout: SystemLayout::new(vec![dim], vec![label]).expect("single factor"),
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// Same matrix with new labels.
    pub fn relabel(&self, labels: Vec<Label>) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            layout: SystemLayout::new(self.layout.dims.clone(), labels)?,
            matrix: self.matrix.clone(),
        })
    }
}

/// Pure state vector on a labeled layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: SystemLayout,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(layout: SystemLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for layout {:?}",
                amplitudes.len(),
                layout.dims()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm}")));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Normalizes `amplitudes` before construction.
    pub fn normalized(layout: SystemLayout, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        for z in amplitudes.iter_mut() {
            *z /= norm;
        }
        Self::new(layout, amplitudes)
    }

    /// `(|000⟩ + |111⟩)/√2` on `R ⊗ Q ⊗ E` qubits.
    pub fn ghz() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![ZERO; 8];
        amps[0] = Complex64::new(s, 0.0);
        amps[7] = Complex64::new(s, 0.0);
        Self::new(SystemLayout::rqe(2, 2, 2).expect("valid"), amps).expect("normalized")
    }

    /// Tensor product of single-factor vectors.
    pub fn product(layout: SystemLayout, factors: &[Vec<Complex64>]) -> Result<Self> {
        if factors.len() != layout.len() || factors.iter().zip(layout.dims()).any(|(f, &d)| f.len() != d) {
            return Err(Error::DimensionMismatch("factor vectors do not match layout".into()));
        }
        let amps = factors[1..]
            .iter()
            .fold(factors[0].clone(), |acc, f| tensor_vec(&acc, f));
        Self::normalized(layout, amps)
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            layout: self.layout.clone(),
            matrix: self.projector(),
        }
    }

    /// Reduced state on `keep`, factors in layout order.
    pub fn marginal(&self, keep: &[Label]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let idx = self.layout.indices(keep)?;
        let dims = self.layout.dims();
        // Reshape to (kept, traced) and form Ψ Ψ†, cheaper than tracing |ψ⟩⟨ψ|.
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !idx.contains(i)).collect();
        let mut perm = idx.clone();
        perm.extend_from_slice(&traced);
        let v = permute_vector(&self.amplitudes, dims, &perm);
        let kd: usize = idx.iter().map(|&i| dims[i]).product();
        let td: usize = traced.iter().map(|&i| dims[i]).product();
        let mut m = ComplexMatrix::zeros(kd, kd);
        for a in 0..kd {
            let ra = &v[a * td..(a + 1) * td];
            for b in a..kd {
                let rb = &v[b * td..(b + 1) * td];
                let s: Complex64 = ra.iter().zip(rb).map(|(x, y)| x * y.conj()).sum();
                m[(a, b)] = s;
                m[(b, a)] = s.conj();
            }
        }
        DensityMatrix::new(self.layout.select(&idx), m)
    }

    /// Applies `u` to the factors `on` (in the given order), identity elsewhere.
    pub fn apply_unitary(&self, on: &[Label], u: &ComplexMatrix) -> Result<PureState> {
        let dims = self.layout.dims();
        let target: Vec<usize> = on.iter().map(|&l| self.layout.index_of(l)).collect::<Result<_>>()?;
        let td: usize = target.iter().map(|&i| dims[i]).product();
        if u.rows() != td || !u.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, target factors have dimension {td}",
                u.rows(),
                u.cols()
            )));
        }
        let rest: Vec<usize> = (0..dims.len()).filter(|i| !target.contains(i)).collect();
        let mut perm = rest.clone();
        perm.extend_from_slice(&target);
        let v = permute_vector(&self.amplitudes, dims, &perm);
        let rd = v.len() / td;
        let mut out = vec![ZERO; v.len()];
        for r in 0..rd {
            let chunk = u.apply(&v[r * td..(r + 1) * td]);
            out[r * td..(r + 1) * td].copy_from_slice(&chunk);
        }
        // Undo the permutation.
        let perm_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let mut inverse = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let back = permute_vector(&out, &perm_dims, &inverse);
        Ok(PureState {
            layout: self.layout.clone(),
            amplitudes: back,
        })
    }
}

/// Common access to pure and mixed states.
pub trait QuantumState {
    fn layout(&self) -> &SystemLayout;
    fn marginal(&self, keep: &[Label]) -> Result<DensityMatrix>;
    fn density(&self) -> DensityMatrix;
    /// The state vector, when the state is stored as one.
    fn as_pure(&self) -> Option<&PureState> {
        None
    }
}

impl QuantumState for DensityMatrix {
    fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    fn marginal(&self, keep: &[Label]) -> Result<DensityMatrix> {
        DensityMatrix::marginal(self, keep)
    }

    fn density(&self) -> DensityMatrix {
        self.clone()
    }
}

impl QuantumState for PureState {
    fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    fn marginal(&self, keep: &[Label]) -> Result<DensityMatrix> {
        PureState::marginal(self, keep)
    }

    fn density(&self) -> DensityMatrix {
        self.to_density()
    }

    fn as_pure(&self) -> Option<&PureState> {
        Some(self)
    }
}

/// Ranks of the single-party marginals of a tripartite pure state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank_r: usize,
    pub rank_q: usize,
    pub rank_e: usize,
    /// `rank_q == rank_r · rank_e`.
    pub product_holds: bool,
}

pub fn rank_report(state: &PureState, rank_tol: f64) -> Result<RankReport> {
    let rank = |l| -> Result<usize> { numerical_rank(state.marginal(&[l])?.matrix(), rank_tol) };
    let (rank_r, rank_q, rank_e) = (rank(Label::R)?, rank(Label::Q)?, rank(Label::E)?);
    Ok(RankReport {
        rank_r,
        rank_q,
        rank_e,
        product_holds: rank_q == rank_r * rank_e,
    })
}

/// Purifies `rho` onto an appended reference factor.
///
/// `|Ψ⟩ = Σ_i √λ_i |v_i⟩ ⊗ |i⟩` with eigenvalues in descending order, so the
/// reference basis state `|i⟩` pairs with the `i`-th largest eigenvalue. The
/// reference dimension defaults to the numerical rank of `rho`.
pub fn purify(rho: &DensityMatrix, reference: Label, reference_dim: Option<usize>) -> Result<PureState> {
    if rho.layout.contains(reference) {
        return Err(Error::InvalidLayout(format!("label {reference} already in use")));
    }
    let e = linalg::psd_eig(rho.matrix(), DEFAULT_RANK_TOL)?;
    let cutoff = linalg::support_cutoff(&e, DEFAULT_RANK_TOL);
    let rank = e.eigenvalues.iter().filter(|&&l| l > cutoff).count();
    let d_ref = reference_dim.unwrap_or(rank);
    if d_ref < rank {
        return Err(Error::ReferenceTooSmall { reference: d_ref, rank });
    }
    let n = rho.dim();
    let mut amps = vec![ZERO; n * d_ref];
    for i in 0..rank {
        let w = e.eigenvalues[i].sqrt();
        for a in 0..n {
            amps[a * d_ref + i] = e.eigenvectors[(a, i)] * w;
        }
    }
    let mut dims = rho.layout.dims.clone();
    dims.push(d_ref);
    let mut labels = rho.layout.labels.clone();
    labels.push(reference);
    PureState::normalized(SystemLayout::new(dims, labels)?, amps)
}

/// Haar-random pure state on `layout`, deterministic per seed.
pub fn random_state(layout: SystemLayout, seed: u64) -> PureState {
    let mut rng = seeded_rng(seed);
    random_state_with(layout, &mut rng)
}

pub fn random_state_with<R: Rng + ?Sized>(layout: SystemLayout, rng: &mut R) -> PureState {
    let v = haar_vector(layout.total_dim(), rng);
    PureState::normalized(layout, v).expect("Haar vector has unit norm")
}

/// Haar-random unitary, deterministic per seed.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    haar_unitary(dim, &mut seeded_rng(seed))
}

/// Spectra and eigenbases defining a canonical pure Markov state.
///
/// `q_basis` column `j · len(mu) + k` holds `|q_jk⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr")]
pub struct PureMarkovSpec {
    kappa: Vec<f64>,
    mu: Vec<f64>,
    r_basis: ComplexMatrix,
    q_basis: ComplexMatrix,
    e_basis: ComplexMatrix,
}

#[derive(Deserialize)]
struct SpecRepr {
    kappa: Vec<f64>,
    mu: Vec<f64>,
    r_basis: ComplexMatrix,
    q_basis: ComplexMatrix,
    e_basis: ComplexMatrix,
}

impl TryFrom<SpecRepr> for PureMarkovSpec {
    type Error = Error;

    fn try_from(r: SpecRepr) -> Result<Self> {
        PureMarkovSpec::new(r.kappa, r.mu, r.r_basis, r.q_basis, r.e_basis)
    }
}

fn check_probabilities(name: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::SpecInvalid(format!("{name} is empty")));
    }
    if let Some(bad) = p.iter().find(|&&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::SpecInvalid(format!("{name} has non-positive entry {bad}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SPEC_TOL {
        return Err(Error::SpecInvalid(format!("{name} sums to {s}")));
    }
    Ok(())
}

fn check_orthonormal(name: &str, b: &ComplexMatrix, cols: usize) -> Result<()> {
    if b.cols() != cols || b.rows() < cols {
        return Err(Error::SpecInvalid(format!(
            "{name} is {}x{}, need {cols} orthonormal columns",
            b.rows(),
            b.cols()
        )));
    }
    let gram = &b.adjoint() * b;
    let dev = gram.max_abs_diff(&ComplexMatrix::identity(cols));
    if dev > SPEC_TOL {
        return Err(Error::SpecInvalid(format!("{name} columns deviate from orthonormal by {dev:e}")));
    }
    Ok(())
}

fn standard_columns(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| if i == j { linalg::ONE } else { ZERO })
}

impl PureMarkovSpec {
    pub fn new(
        kappa: Vec<f64>,
        mu: Vec<f64>,
        r_basis: ComplexMatrix,
        q_basis: ComplexMatrix,
        e_basis: ComplexMatrix,
    ) -> Result<Self> {
        check_probabilities("kappa", &kappa)?;
        check_probabilities("mu", &mu)?;
        check_orthonormal("r_basis", &r_basis, kappa.len())?;
        check_orthonormal("e_basis", &e_basis, mu.len())?;
        check_orthonormal("q_basis", &q_basis, kappa.len() * mu.len())?;
        Ok(Self {
            kappa,
            mu,
            r_basis,
            q_basis,
            e_basis,
        })
    }

    /// Standard computational bases with `d_R = len κ`, `d_E = len μ` and
    /// `d_Q = len κ · len μ`.
    pub fn standard(kappa: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        let (nk, nm) = (kappa.len(), mu.len());
        Self::with_dims(kappa, mu, nk, nk * nm, nm)
    }

    /// Standard bases embedded in larger factor dimensions. Unused basis
    /// directions are left unpopulated.
    pub fn with_dims(kappa: Vec<f64>, mu: Vec<f64>, d_r: usize, d_q: usize, d_e: usize) -> Result<Self> {
        let (nk, nm) = (kappa.len(), mu.len());
        if d_r < nk || d_e < nm || d_q < nk * nm {
            return Err(Error::SpecInvalid(format!(
                "dimensions ({d_r}, {d_q}, {d_e}) too small for {nk} x {nm} spectra"
            )));
        }
        Self::new(
            kappa,
            mu,
            standard_columns(d_r, nk),
            standard_columns(d_q, nk * nm),
            standard_columns(d_e, nm),
        )
    }

    /// Random spectra (bounded away from zero) and Haar-random bases.
    pub fn random<R: Rng + ?Sized>(
        n_kappa: usize,
        n_mu: usize,
        dims: (usize, usize, usize),
        rng: &mut R,
    ) -> Result<Self> {
        let (d_r, d_q, d_e) = dims;
        if d_r < n_kappa || d_e < n_mu || d_q < n_kappa * n_mu || n_kappa == 0 || n_mu == 0 {
            return Err(Error::SpecInvalid(format!(
                "dimensions {dims:?} too small for {n_kappa} x {n_mu} spectra"
            )));
        }
        let kappa = random_distribution(n_kappa, rng);
        let mu = random_distribution(n_mu, rng);
        let r = haar_unitary(d_r, rng).sub_block(0, 0, d_r, n_kappa);
        let q = haar_unitary(d_q, rng).sub_block(0, 0, d_q, n_kappa * n_mu);
        let e = haar_unitary(d_e, rng).sub_block(0, 0, d_e, n_mu);
        Self::new(kappa, mu, r, q, e)
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn r_basis(&self) -> &ComplexMatrix {
        &self.r_basis
    }

    pub fn q_basis(&self) -> &ComplexMatrix {
        &self.q_basis
    }

    pub fn e_basis(&self) -> &ComplexMatrix {
        &self.e_basis
    }

    pub fn d_r(&self) -> usize {
        self.r_basis.rows()
    }

    pub fn d_q(&self) -> usize {
        self.q_basis.rows()
    }

    pub fn d_e(&self) -> usize {
        self.e_basis.rows()
    }

    pub fn layout(&self) -> SystemLayout {
        SystemLayout::rqe(self.d_r(), self.d_q(), self.d_e()).expect("positive dims")
    }

    /// `|q_jk⟩`.
    pub fn q_vector(&self, j: usize, k: usize) -> Vec<Complex64> {
        self.q_basis.col(j * self.mu.len() + k)
    }

    /// `|ψ_j^QE⟩ = Σ_k √μ_k |q_jk⟩ ⊗ |ε_k⟩`.
    pub fn psi_qe(&self, j: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.d_q() * self.d_e()];
        for (k, &m) in self.mu.iter().enumerate() {
            let term = tensor_vec(&self.q_vector(j, k), &self.e_basis.col(k));
            for (o, t) in out.iter_mut().zip(term) {
                *o += t * m.sqrt();
            }
        }
        out
    }

    fn spectral_matrix(basis: &ComplexMatrix, weights: &[f64]) -> ComplexMatrix {
        let n = basis.rows();
        ComplexMatrix::from_fn(n, n, |a, b| {
            weights
                .iter()
                .enumerate()
                .map(|(j, &w)| basis[(a, j)] * basis[(b, j)].conj() * w)
                .sum()
        })
    }

    /// `ρ^R = Σ κ_j |r_j⟩⟨r_j|`.
    pub fn rho_r(&self) -> ComplexMatrix {
        Self::spectral_matrix(&self.r_basis, &self.kappa)
    }

    /// `ρ^E = Σ μ_k |ε_k⟩⟨ε_k|`.
    pub fn rho_e(&self) -> ComplexMatrix {
        Self::spectral_matrix(&self.e_basis, &self.mu)
    }

    /// `ρ^Q = Σ κ_j μ_k |q_jk⟩⟨q_jk|`.
    pub fn rho_q(&self) -> ComplexMatrix {
        let w: Vec<f64> = self
            .kappa
            .iter()
            .flat_map(|&k| self.mu.iter().map(move |&m| k * m))
            .collect();
        Self::spectral_matrix(&self.q_basis, &w)
    }
}

fn random_distribution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    // Uniform on the simplex, mixed with the flat distribution to stay off the boundary.
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| 0.9 * x / s + 0.1 / n as f64).collect();
    let total: f64 = p.iter().sum();
    for x in p.iter_mut() {
        *x /= total;
    }
    p
}

/// Builds `Σ_{j,k} √(κ_j μ_k) |r_j⟩ ⊗ |q_jk⟩ ⊗ |ε_k⟩` on layout `R ⊗ Q ⊗ E`.
pub fn make_pure_markov(spec: &PureMarkovSpec) -> PureState {
    let layout = spec.layout();
    let mut amps = vec![ZERO; layout.total_dim()];
    for (j, &kj) in spec.kappa.iter().enumerate() {
        let rj = spec.r_basis.col(j);
        for (k, &mk) in spec.mu.iter().enumerate() {
            let w = (kj * mk).sqrt();
            let term = tensor_vec(&tensor_vec(&rj, &spec.q_vector(j, k)), &spec.e_basis.col(k));
            for (a, t) in amps.iter_mut().zip(term) {
                *a += t * w;
            }
        }
    }
    PureState::normalized(layout, amps).expect("orthonormal bases give a unit vector")
}

/// Density matrix JSON: `{ "dims", "labels", "matrix": [[re, im], ...] }`.
#[derive(Serialize, Deserialize)]
struct DensityRepr {
    dims: Vec<usize>,
    labels: Vec<Label>,
    matrix: Vec<[f64; 2]>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityRepr {
            dims: self.layout.dims.clone(),
            labels: self.layout.labels.clone(),
            matrix: pairs_from_complex(self.matrix.as_slice()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = DensityRepr::deserialize(d)?;
        let layout = SystemLayout::new(r.dims, r.labels).map_err(D::Error::custom)?;
        let n = layout.total_dim();
        let m = ComplexMatrix::from_vec(n, n, complex_from_pairs(&r.matrix)).map_err(D::Error::custom)?;
        DensityMatrix::new(layout, m).map_err(D::Error::custom)
    }
}

/// Pure state JSON: `{ "dims", "labels", "amplitudes": [[re, im], ...] }`.
#[derive(Serialize, Deserialize)]
struct PureRepr {
    dims: Vec<usize>,
    labels: Vec<Label>,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PureRepr {
            dims: self.layout.dims.clone(),
            labels: self.layout.labels.clone(),
            amplitudes: pairs_from_complex(&self.amplitudes),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = PureRepr::deserialize(d)?;
        let layout = SystemLayout::new(r.dims, r.labels).map_err(D::Error::custom)?;
        PureState::new(layout, complex_from_pairs(&r.amplitudes)).map_err(D::Error::custom)
    }
}
