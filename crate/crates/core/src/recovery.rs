//! The Petz recovery map
//!
//! ```text
//! ℛ(X) = (ρ^QE)^{1/2} [ (ρ^Q)^{-1/2} X (ρ^Q)^{-1/2} ⊗ I_E ] (ρ^QE)^{1/2}
//! ```
//!
//! defined on the support of `ρ^Q`, and reconstruction of tripartite states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    matrix_func_on_support, support_projector, tensor, trace_norm_distance, ComplexMatrix, DEFAULT_RANK_TOL,
};
use crate::qstate::{DensityMatrix, Label, SystemLayout};

/// Allowed trace distance between the anchor's `Q` marginal and that of a
/// state handed to [`reconstruct_tripartite`].
pub const MARGINAL_TOL: f64 = 1e-8;
const OFF_SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct PetzMap {
    rho_qe: DensityMatrix,
    rho_q: DensityMatrix,
    sqrt_rho_qe: ComplexMatrix,
    invsqrt_rho_q: ComplexMatrix,
    support_q: ComplexMatrix,
    d_q: usize,
    d_e: usize,
}

/// Result of one application of the map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PetzOutput {
    pub matrix: ComplexMatrix,
    /// Frobenius norm of the part of `X` outside `supp(ρ^Q)`, which the map discards.
    pub off_support_weight: f64,
    pub projected: bool,
}

impl PetzMap {
    /// Anchors the map at `rho_qe`, whose labels must be `[Q, E]`.
    pub fn new(rho_qe: &DensityMatrix) -> Result<Self> {
        if !rho_qe.layout().is(&[Label::Q, Label::E]) {
            return Err(Error::BadLayout(format!(
                "anchor must be labeled [Q, E], got {:?}",
                rho_qe.layout().labels()
            )));
        }
        let dims = rho_qe.layout().dims();
        let (d_q, d_e) = (dims[0], dims[1]);
        let rho_q = rho_qe.marginal(&[Label::Q])?;
        let sqrt_rho_qe = matrix_func_on_support(rho_qe.matrix(), f64::sqrt, DEFAULT_RANK_TOL)?;
        let invsqrt_rho_q = matrix_func_on_support(rho_q.matrix(), |x| 1.0 / x.sqrt(), DEFAULT_RANK_TOL)?;
        let support_q = support_projector(rho_q.matrix(), DEFAULT_RANK_TOL)?;
        Ok(Self {
            rho_qe: rho_qe.clone(),
            rho_q,
            sqrt_rho_qe,
            invsqrt_rho_q,
            support_q,
            d_q,
            d_e,
        })
    }

    pub fn rho_qe(&self) -> &DensityMatrix {
        &self.rho_qe
    }

    pub fn rho_q(&self) -> &DensityMatrix {
        &self.rho_q
    }

    pub fn sqrt_rho_qe(&self) -> &ComplexMatrix {
        &self.sqrt_rho_qe
    }

    pub fn invsqrt_rho_q(&self) -> &ComplexMatrix {
        &self.invsqrt_rho_q
    }

    pub fn support_projector(&self) -> &ComplexMatrix {
        &self.support_q
    }

    pub fn d_q(&self) -> usize {
        self.d_q
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<PetzOutput> {
        if x.rows() != self.d_q || x.cols() != self.d_q {
            return Err(Error::DimensionMismatch(format!(
                "input is {}x{}, map acts on dimension {}",
                x.rows(),
                x.cols(),
                self.d_q
            )));
        }
        let p = &self.support_q;
        let off_support_weight = (x - &p.matmul(x).matmul(p)).frobenius_norm();
        let inner = self.invsqrt_rho_q.matmul(x).matmul(&self.invsqrt_rho_q);
        let lifted = tensor(&inner, &ComplexMatrix::identity(self.d_e));
        let matrix = self.sqrt_rho_qe.matmul(&lifted).matmul(&self.sqrt_rho_qe);
        Ok(PetzOutput {
            matrix,
            off_support_weight,
            projected: off_support_weight > OFF_SUPPORT_TOL,
        })
    }

    /// [`PetzMap::apply`] without the metadata.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(self.apply(x)?.matrix)
    }
}

/// `(id_R ⊗ ℛ)(ρ^RQ)` on layout `R ⊗ Q ⊗ E`.
pub fn reconstruct_tripartite(rho_rq: &DensityMatrix, map: &PetzMap) -> Result<DensityMatrix> {
    if !rho_rq.layout().is(&[Label::R, Label::Q]) {
        return Err(Error::BadLayout(format!(
            "expected labels [R, Q], got {:?}",
            rho_rq.layout().labels()
        )));
    }
    let d_r = rho_rq.layout().dims()[0];
    let d_q = rho_rq.layout().dims()[1];
    if d_q != map.d_q {
        return Err(Error::DimensionMismatch(format!("Q has dimension {d_q}, map expects {}", map.d_q)));
    }
    let gap = trace_norm_distance(rho_rq.marginal(&[Label::Q])?.matrix(), map.rho_q.matrix())?;
    if gap > MARGINAL_TOL {
        return Err(Error::MarginalMismatch(gap));
    }
    let block = d_q * map.d_e;
    let mut out = ComplexMatrix::zeros(d_r * block, d_r * block);
    let m = rho_rq.matrix();
    for i in 0..d_r {
        for j in 0..d_r {
            let qij = m.sub_block(i * d_q, j * d_q, d_q, d_q);
            let r = map.apply_matrix(&qij)?;
            for a in 0..block {
                for b in 0..block {
                    out[(i * block + a, j * block + b)] = r[(a, b)];
                }
            }
        }
    }
    DensityMatrix::new(SystemLayout::rqe(d_r, d_q, map.d_e)?, out.hermitian_part())
}

/// Trace distance between `ℛ(ρ^Q)` and `ρ^QE` for the map anchored at `rho_qe`.
pub fn recovery_residual(rho_qe: &DensityMatrix) -> Result<f64> {
    let map = PetzMap::new(rho_qe)?;
    let out = map.apply_matrix(map.rho_q.matrix())?;
    trace_norm_distance(&out, rho_qe.matrix())
}
