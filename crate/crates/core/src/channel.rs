//! Reduced dynamics `ℰ = Tr_E ∘ ad_U ∘ ℛ` of an open system whose initial
//! state with its environment anchors a Petz map.
//!
//! The channel is represented three ways: by composition, by Kraus operators
//! and, for pure Markov anchors, as a Holevo part plus a traceless part.
//! Complete positivity and trace preservation are checked on `supp(ρ^Q)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random::complete_basis;
use crate::linalg::{
    hermitian_eigenvalues, partial_trace, psd_eig, support_basis, support_cutoff, tensor, ComplexMatrix,
    DEFAULT_RANK_TOL,
};
use crate::qstate::{make_pure_markov, DensityMatrix, Label, PureMarkovSpec, PureState, SystemLayout};
use crate::recovery::PetzMap;

/// Allowed unitarity violation of a joint evolution.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance for the assembled CP and TP checks.
pub const CPTP_TOL: f64 = 1e-9;

/// A linear map between square matrix spaces.
pub trait LinearMap: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix>;
}

fn check_unitary(u: &ComplexMatrix, dim: usize) -> Result<()> {
    if u.rows() != dim || u.cols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "unitary is {}x{}, joint space has dimension {dim}",
            u.rows(),
            u.cols()
        )));
    }
    let v = u.unitarity_violation();
    if v > UNITARY_TOL {
        return Err(Error::NotUnitary(v));
    }
    Ok(())
}

/// `(I_R ⊗ U)|ψ⟩` for a state on `R ⊗ Q ⊗ E`.
pub fn evolve_tripartite(state: &PureState, u: &ComplexMatrix) -> Result<PureState> {
    let layout = state.layout();
    let d_qe = layout.dim_of(Label::Q)? * layout.dim_of(Label::E)?;
    check_unitary(u, d_qe)?;
    state.apply_unitary(&[Label::Q, Label::E], u)
}

/// `Tr_E[U ℛ(X) U†]`.
#[derive(Clone, Debug)]
pub struct ReducedChannel {
    petz: PetzMap,
    unitary: ComplexMatrix,
}

impl ReducedChannel {
    pub fn new(petz: PetzMap, unitary: ComplexMatrix) -> Result<Self> {
        check_unitary(&unitary, petz.d_q() * petz.d_e())?;
        Ok(Self { petz, unitary })
    }

    pub fn petz(&self) -> &PetzMap {
        &self.petz
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }
}

impl LinearMap for ReducedChannel {
    fn input_dim(&self) -> usize {
        self.petz.d_q()
    }

    fn output_dim(&self) -> usize {
        self.petz.d_q()
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let r = self.petz.apply_matrix(x)?;
        let evolved = r.conjugate_by(&self.unitary);
        partial_trace(&evolved, &[self.petz.d_q(), self.petz.d_e()], &[0])
    }
}

pub fn reduced_channel_apply(map: &PetzMap, u: &ComplexMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    ReducedChannel::new(map.clone(), u.clone())?.apply(x)
}

/// Consistency residuals recorded while building Kraus operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausDiagnostics {
    /// Largest entrywise gap between the two Kraus formulas, when both apply.
    pub form_residual: Option<f64>,
    /// Largest entrywise gap between the Kraus sum and the composed channel
    /// over the matrix units of the support.
    pub composition_residual: f64,
}

/// Kraus representation valid on the support of `ρ^Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumChannel {
    pub kraus: Vec<ComplexMatrix>,
    pub support_projector: ComplexMatrix,
    /// Orthonormal columns spanning the support.
    pub support_basis: ComplexMatrix,
    pub diagnostics: Option<KrausDiagnostics>,
}

impl QuantumChannel {
    pub fn dim(&self) -> usize {
        self.support_projector.rows()
    }

    /// `‖Σ E†E − P‖` entrywise.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.dim();
        let sum = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, k| &acc + &k.adjoint().matmul(k));
        sum.max_abs_diff(&self.support_projector)
    }

    /// Channel acting as the identity on the span of `support_basis`.
    pub fn identity_on(support_basis: ComplexMatrix) -> Self {
        let p = support_basis.matmul(&support_basis.adjoint());
        Self {
            kraus: vec![p.clone()],
            support_projector: p,
            support_basis,
            diagnostics: None,
        }
    }
}

impl LinearMap for QuantumChannel {
    fn input_dim(&self) -> usize {
        self.dim()
    }

    fn output_dim(&self) -> usize {
        self.kraus.first().map_or(self.dim(), |k| k.rows())
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.dim() || x.cols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "input is {}x{}, channel acts on dimension {}",
                x.rows(),
                x.cols(),
                self.dim()
            )));
        }
        let n = self.output_dim();
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, k| &acc + &x.conjugate_by(k)))
    }
}

/// `(I ⊗ ⟨v|)`: rows of `M` contracted against an E-vector, `M` acting on `Q ⊗ E`.
fn contract_e_left(m: &ComplexMatrix, v: &[num_complex::Complex64], d_q: usize) -> ComplexMatrix {
    let d_e = v.len();
    ComplexMatrix::from_fn(d_q, m.cols(), |q, c| {
        (0..d_e).map(|e| v[e].conj() * m[(q * d_e + e, c)]).sum()
    })
}

/// `M (I ⊗ |v⟩)`.
fn contract_e_right(m: &ComplexMatrix, v: &[num_complex::Complex64], d_q: usize) -> ComplexMatrix {
    let d_e = v.len();
    ComplexMatrix::from_fn(m.rows(), d_q, |r, q| (0..d_e).map(|e| m[(r, q * d_e + e)] * v[e]).sum())
}

/// `E_kℓ = (I ⊗ ⟨ε_k|) U (ρ^QE)^{1/2} (I ⊗ |ε_ℓ⟩) (ρ^Q)^{-1/2}` with `k` over
/// `full_e` and `ℓ` over its first `n_l` columns.
fn kraus_from_roots(petz: &PetzMap, u: &ComplexMatrix, full_e: &ComplexMatrix, n_l: usize) -> Vec<ComplexMatrix> {
    let d_q = petz.d_q();
    let u_sqrt = u.matmul(petz.sqrt_rho_qe());
    let right: Vec<ComplexMatrix> = (0..n_l)
        .map(|l| contract_e_right(&u_sqrt, &full_e.col(l), d_q).matmul(petz.invsqrt_rho_q()))
        .collect();
    (0..full_e.cols())
        .flat_map(|k| {
            let ek = full_e.col(k);
            right.iter().map(move |r| contract_e_left(r, &ek, d_q)).collect::<Vec<_>>()
        })
        .collect()
}

/// Largest entrywise gap between two maps over the matrix units `|v_a⟩⟨v_b|`.
pub fn max_gap_on_support(a: &dyn LinearMap, b: &dyn LinearMap, basis: &ComplexMatrix) -> Result<f64> {
    let units = matrix_units(basis);
    let gaps = units
        .par_iter()
        .map(|x| Ok(a.apply(x)?.max_abs_diff(&b.apply(x)?)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// `|v_a⟩⟨v_b|` for all column pairs, row-major in `(a, b)`.
pub fn matrix_units(basis: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let s = basis.cols();
    let cols: Vec<_> = (0..s).map(|j| basis.col(j)).collect();
    (0..s * s).map(|i| ComplexMatrix::outer(&cols[i / s], &cols[i % s])).collect()
}

fn finish_channel(
    reduced: &ReducedChannel,
    kraus: Vec<ComplexMatrix>,
    form_residual: Option<f64>,
) -> Result<QuantumChannel> {
    let basis = support_basis(reduced.petz.rho_q().matrix(), DEFAULT_RANK_TOL)?;
    let mut ch = QuantumChannel {
        kraus,
        support_projector: reduced.petz.support_projector().clone(),
        support_basis: basis.clone(),
        diagnostics: None,
    };
    let composition_residual = max_gap_on_support(&ch, reduced, &basis)?;
    ch.diagnostics = Some(KrausDiagnostics {
        form_residual,
        composition_residual,
    });
    Ok(ch)
}

/// Kraus operators for the pure Markov state given by `spec`, evolved by `u`.
///
/// Both the square-root formula and the direct form
/// `E_kℓ = Σ_j (I ⊗ ⟨ε_k|) U |ψ_j⟩⟨q_jℓ|` are evaluated and compared.
pub fn kraus_operators(spec: &PureMarkovSpec, u: &ComplexMatrix) -> Result<QuantumChannel> {
    let psi = make_pure_markov(spec);
    let petz = PetzMap::new(&psi.marginal(&[Label::Q, Label::E])?)?;
    let reduced = ReducedChannel::new(petz, u.clone())?;
    let full_e = complete_basis(spec.e_basis());
    let n_mu = spec.mu().len();
    let from_roots = kraus_from_roots(&reduced.petz, u, &full_e, n_mu);

    let d_q = spec.d_q();
    let u_psi: Vec<Vec<num_complex::Complex64>> = (0..spec.kappa().len()).map(|j| u.apply(&spec.psi_qe(j))).collect();
    let mut direct = Vec::with_capacity(from_roots.len());
    for k in 0..full_e.cols() {
        let ek = full_e.col(k);
        // (I ⊗ ⟨ε_k|) U |ψ_j⟩ for each j.
        let a: Vec<Vec<num_complex::Complex64>> = u_psi
            .iter()
            .map(|v| {
                let col = ComplexMatrix::from_vec(v.len(), 1, v.clone()).expect("finite");
                contract_e_left(&col, &ek, d_q).into_vec()
            })
            .collect();
        for l in 0..n_mu {
            let mut m = ComplexMatrix::zeros(d_q, d_q);
            for (j, aj) in a.iter().enumerate() {
                m = &m + &ComplexMatrix::outer(aj, &spec.q_vector(j, l));
            }
            direct.push(m);
        }
    }
    let form_residual = from_roots
        .iter()
        .zip(&direct)
        .map(|(a, b)| a.max_abs_diff(b))
        .fold(0.0, f64::max);
    finish_channel(&reduced, from_roots, Some(form_residual))
}

/// Kraus operators for an arbitrary anchor `ρ^QE` (labels `[Q, E]`).
///
/// `ℓ` runs over the eigenvectors of `ρ^E` with nonzero eigenvalue and `k`
/// over their completion to a full basis.
pub fn kraus_from_anchor(rho_qe: &DensityMatrix, u: &ComplexMatrix) -> Result<QuantumChannel> {
    let petz = PetzMap::new(rho_qe)?;
    let reduced = ReducedChannel::new(petz, u.clone())?;
    let rho_e = rho_qe.marginal(&[Label::E])?;
    let e = psd_eig(rho_e.matrix(), DEFAULT_RANK_TOL)?;
    let cutoff = support_cutoff(&e, DEFAULT_RANK_TOL);
    let n_l = e.eigenvalues.iter().filter(|&&l| l > cutoff).count();
    let full_e = complete_basis(&e.eigenvectors.sub_block(0, 0, e.dim(), n_l));
    let kraus = kraus_from_roots(&reduced.petz, u, &full_e, n_l);
    finish_channel(&reduced, kraus, None)
}

/// Choi matrix and CPTP verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiReport {
    /// `Σ_ab |a⟩⟨b| ⊗ ℰ(|v_a⟩⟨v_b|)` over the support basis.
    pub choi: ComplexMatrix,
    /// The same operator expressed in the full input space, zero off the support.
    pub choi_full: ComplexMatrix,
    pub min_eigenvalue: f64,
    pub completeness_residual: f64,
    pub cp_flag: bool,
    pub tp_flag: bool,
}

/// Choi matrix of `map` restricted to the span of the columns of `basis`.
pub fn choi_on_support(map: &dyn LinearMap, basis: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = basis.cols();
    let d = map.output_dim();
    let outputs = matrix_units(basis)
        .par_iter()
        .map(|x| map.apply(x))
        .collect::<Result<Vec<_>>>()?;
    let mut choi = ComplexMatrix::zeros(s * d, s * d);
    for (idx, out) in outputs.iter().enumerate() {
        let (a, b) = (idx / s, idx % s);
        for i in 0..d {
            for j in 0..d {
                choi[(a * d + i, b * d + j)] = out[(i, j)];
            }
        }
    }
    Ok(choi)
}

fn pad_choi(choi: &ComplexMatrix, basis: &ComplexMatrix, d_out: usize) -> ComplexMatrix {
    let conj_basis = ComplexMatrix::from_fn(basis.rows(), basis.cols(), |i, j| basis[(i, j)].conj());
    let lift = tensor(&conj_basis, &ComplexMatrix::identity(d_out));
    lift.matmul(choi).matmul(&lift.adjoint())
}

fn choi_report(map: &dyn LinearMap, basis: &ComplexMatrix, completeness_residual: f64) -> Result<ChoiReport> {
    let choi = choi_on_support(map, basis)?;
    let min_eigenvalue = hermitian_eigenvalues(&choi.hermitian_part())?
        .last()
        .copied()
        .unwrap_or(0.0);
    let choi_full = pad_choi(&choi, basis, map.output_dim());
    Ok(ChoiReport {
        choi,
        choi_full,
        min_eigenvalue,
        completeness_residual,
        cp_flag: min_eigenvalue >= -CPTP_TOL,
        tp_flag: completeness_residual <= CPTP_TOL,
    })
}

pub fn choi_and_verify(channel: &QuantumChannel) -> Result<ChoiReport> {
    choi_report(channel, &channel.support_basis, channel.completeness_residual())
}

/// Choi verification of a map given only by its action. Trace preservation
/// is measured as `max_ab |Tr ℰ(|v_a⟩⟨v_b|) − δ_ab|`.
pub fn choi_and_verify_map(map: &dyn LinearMap, basis: &ComplexMatrix) -> Result<ChoiReport> {
    let s = basis.cols();
    let units = matrix_units(basis);
    let mut residual: f64 = 0.0;
    for (idx, x) in units.iter().enumerate() {
        let t = map.apply(x)?.trace();
        let target = if idx / s == idx % s { 1.0 } else { 0.0 };
        residual = residual.max((t - target).norm());
    }
    choi_report(map, basis, residual)
}

/// `ℰ = ℰ^H + T` for a pure Markov anchor.
#[derive(Clone, Debug)]
pub struct HolevoDecomposition {
    /// `Π_ij = Σ_ℓ |q_iℓ⟩⟨q_jℓ|`, indexed `[i][j]`.
    pub pi_operators: Vec<Vec<ComplexMatrix>>,
    /// `σ_i = Tr_E(U |ψ_i⟩⟨ψ_i| U†)`.
    pub holevo_states: Vec<DensityMatrix>,
    /// `Tr_E(U |ψ_j⟩⟨ψ_i| U†)` for `i ≠ j`, indexed `[i][j]`; diagonal entries are unused.
    pub cross_terms: Vec<Vec<ComplexMatrix>>,
}

impl HolevoDecomposition {
    pub fn new(spec: &PureMarkovSpec, u: &ComplexMatrix) -> Result<Self> {
        let (d_q, d_e) = (spec.d_q(), spec.d_e());
        check_unitary(u, d_q * d_e)?;
        let n = spec.kappa().len();
        let n_mu = spec.mu().len();
        let u_psi: Vec<_> = (0..n).map(|j| u.apply(&spec.psi_qe(j))).collect();
        let reduce = |i: usize, j: usize| -> Result<ComplexMatrix> {
            partial_trace(&ComplexMatrix::outer(&u_psi[j], &u_psi[i]), &[d_q, d_e], &[0])
        };
        let mut pi_operators = Vec::with_capacity(n);
        let mut cross_terms = Vec::with_capacity(n);
        let mut holevo_states = Vec::with_capacity(n);
        let layout = SystemLayout::new(vec![d_q], vec![Label::Q])?;
        for i in 0..n {
            let mut pi_row = Vec::with_capacity(n);
            let mut cross_row = Vec::with_capacity(n);
            for j in 0..n {
                let mut p = ComplexMatrix::zeros(d_q, d_q);
                for l in 0..n_mu {
                    p = &p + &ComplexMatrix::outer(&spec.q_vector(i, l), &spec.q_vector(j, l));
                }
                pi_row.push(p);
                if i == j {
                    holevo_states.push(DensityMatrix::new(layout.clone(), reduce(i, i)?.hermitian_part())?);
                    cross_row.push(ComplexMatrix::zeros(d_q, d_q));
                } else {
                    cross_row.push(reduce(i, j)?);
                }
            }
            pi_operators.push(pi_row);
            cross_terms.push(cross_row);
        }
        Ok(Self {
            pi_operators,
            holevo_states,
            cross_terms,
        })
    }

    /// `(ℰ^H(X), T(X))`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let d = self.holevo_states[0].dim();
        if x.rows() != d || x.cols() != d {
            return Err(Error::DimensionMismatch(format!("input is {}x{}, expected {d}", x.rows(), x.cols())));
        }
        let mut holevo = ComplexMatrix::zeros(d, d);
        let mut traceless = ComplexMatrix::zeros(d, d);
        let n = self.holevo_states.len();
        for i in 0..n {
            for j in 0..n {
                let w = x.trace_of_product(&self.pi_operators[i][j]);
                if i == j {
                    holevo = &holevo + &self.holevo_states[i].matrix().scale(w);
                } else {
                    traceless = &traceless + &self.cross_terms[i][j].scale(w);
                }
            }
        }
        Ok((holevo, traceless))
    }

    /// Largest `|Tr|` among the cross terms.
    pub fn max_cross_trace(&self) -> f64 {
        self.cross_terms
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, m)| m.trace().norm()))
            .fold(0.0, f64::max)
    }
}

impl LinearMap for HolevoDecomposition {
    fn input_dim(&self) -> usize {
        self.holevo_states[0].dim()
    }

    fn output_dim(&self) -> usize {
        self.holevo_states[0].dim()
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (h, t) = HolevoDecomposition::apply(self, x)?;
        Ok(&h + &t)
    }
}

/// `(ℰ^H(X), T(X), decomposition)`.
pub fn holevo_decompose(
    spec: &PureMarkovSpec,
    u: &ComplexMatrix,
    x: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix, HolevoDecomposition)> {
    let dec = HolevoDecomposition::new(spec, u)?;
    let (h, t) = dec.apply(x)?;
    Ok((h, t, dec))
}

/// Machine-readable channel summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub cp_flag: bool,
    pub tp_flag: bool,
    pub min_eigenvalue: f64,
    pub completeness_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition_residual: Option<f64>,
}

/// `{ "kraus", "support_projector", "report" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelExport {
    pub kraus: Vec<ComplexMatrix>,
    pub support_projector: ComplexMatrix,
    pub report: ChannelReport,
}

impl ChannelExport {
    pub fn new(channel: &QuantumChannel, choi: &ChoiReport) -> Self {
        Self {
            kraus: channel.kraus.clone(),
            support_projector: channel.support_projector.clone(),
            report: ChannelReport {
                cp_flag: choi.cp_flag,
                tp_flag: choi.tp_flag,
                min_eigenvalue: choi.min_eigenvalue,
                completeness_residual: choi.completeness_residual,
                form_residual: channel.diagnostics.as_ref().and_then(|d| d.form_residual),
                composition_residual: channel.diagnostics.as_ref().map(|d| d.composition_residual),
            },
        }
    }
}

/// The transpose map, used as a positive but not completely positive control.
#[derive(Clone, Copy, Debug)]
pub struct Transpose(pub usize);

impl LinearMap for Transpose {
    fn input_dim(&self) -> usize {
        self.0
    }

    fn output_dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(x.transpose())
    }
}
