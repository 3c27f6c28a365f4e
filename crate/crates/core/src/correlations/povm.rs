//! POVMs on one factor and the ensembles they steer on the rest.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, numerical_rank, permute_vector, ComplexMatrix, ZERO};
use crate::qstate::{DensityMatrix, Label, PureState, SystemLayout};

pub const POVM_TOL: f64 = 1e-10;
/// Outcomes with probability at or below this are dropped.
pub const DROP_PROB: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
    rank1: Vec<bool>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::PovmInvalid("no elements".into()));
        };
        let d = first.rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        let mut rank1 = Vec::with_capacity(elements.len());
        for (i, m) in elements.iter().enumerate() {
            if m.rows() != d || m.cols() != d {
                return Err(Error::PovmInvalid(format!("element {i} is {}x{}, expected {d}x{d}", m.rows(), m.cols())));
            }
            if m.hermiticity_violation() > POVM_TOL {
                return Err(Error::PovmInvalid(format!("element {i} is not Hermitian")));
            }
            let ev = hermitian_eigenvalues(&m.hermitian_part())?;
            if ev.last().copied().unwrap_or(0.0) < -POVM_TOL {
                return Err(Error::PovmInvalid(format!("element {i} has eigenvalue {:e}", ev[ev.len() - 1])));
            }
            rank1.push(numerical_rank(m, 1e-9)? == 1);
            sum = &sum + m;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if dev > POVM_TOL {
            return Err(Error::PovmInvalid(format!("elements sum to identity only within {dev:e}")));
        }
        Ok(Self { elements, rank1 })
    }

    /// Elements `|α_i⟩⟨α_i|`.
    pub fn from_vectors(vectors: &[Vec<Complex64>]) -> Result<Self> {
        Self::new(vectors.iter().map(|a| ComplexMatrix::outer(a, a)).collect())
    }

    /// Projective measurement onto the columns of a unitary.
    pub fn projective(basis: &ComplexMatrix) -> Result<Self> {
        let cols: Vec<_> = (0..basis.cols()).map(|j| basis.col(j)).collect();
        Self::from_vectors(&cols)
    }

    pub fn trivial(dim: usize) -> Self {
        Self {
            elements: vec![ComplexMatrix::identity(dim)],
            rank1: vec![dim == 1],
        }
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn rank1_flags(&self) -> &[bool] {
        &self.rank1
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub probs: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// POVM index of each kept outcome.
    pub outcomes: Vec<usize>,
    /// POVM indices dropped for having probability at most 1e-12.
    pub dropped: Vec<usize>,
}

impl Ensemble {
    /// `Σ p_i ρ_i`.
    pub fn average(&self) -> ComplexMatrix {
        let d = self.states[0].dim();
        self.probs
            .iter()
            .zip(&self.states)
            .fold(ComplexMatrix::zeros(d, d), |acc, (&p, s)| &acc + &s.matrix().scale_real(p))
    }
}

/// Blocks `B_ac = Ψ_a Ψ_c†` where `Ψ_a` is the slice of the state with the
/// measured factor fixed to `a`.
pub(crate) fn reference_blocks(state: &PureState, reference: Label) -> Result<(Vec<Vec<ComplexMatrix>>, SystemLayout)> {
    let layout = state.layout();
    let r = layout.index_of(reference)?;
    if layout.len() < 2 {
        return Err(Error::InvalidLayout("steering needs at least two factors".into()));
    }
    let rest: Vec<usize> = (0..layout.len()).filter(|&i| i != r).collect();
    let mut perm = vec![r];
    perm.extend_from_slice(&rest);
    let v = permute_vector(state.amplitudes(), layout.dims(), &perm);
    let d_ref = layout.dims()[r];
    let d_rest = v.len() / d_ref;
    let rows: Vec<&[Complex64]> = (0..d_ref).map(|a| &v[a * d_rest..(a + 1) * d_rest]).collect();
    let blocks = (0..d_ref)
        .map(|a| (0..d_ref).map(|c| ComplexMatrix::outer(rows[a], rows[c])).collect())
        .collect();
    let rest_layout = SystemLayout::new(
        rest.iter().map(|&i| layout.dims()[i]).collect(),
        rest.iter().map(|&i| layout.labels()[i]).collect(),
    )?;
    Ok((blocks, rest_layout))
}

/// `p_i ρ_i = Tr_ref[(M_i ⊗ I) |ψ⟩⟨ψ|]` on the remaining factors in layout order.
pub fn steer(state: &PureState, reference: Label, povm: &Povm) -> Result<Ensemble> {
    let (blocks, rest_layout) = reference_blocks(state, reference)?;
    let d_ref = blocks.len();
    if povm.dim() != d_ref {
        return Err(Error::PovmInvalid(format!(
            "POVM acts on dimension {}, reference {reference} has dimension {d_ref}",
            povm.dim()
        )));
    }
    let d = rest_layout.total_dim();
    let mut ens = Ensemble {
        probs: Vec::new(),
        states: Vec::new(),
        outcomes: Vec::new(),
        dropped: Vec::new(),
    };
    for (i, m) in povm.elements().iter().enumerate() {
        let mut x = ComplexMatrix::zeros(d, d);
        for (a, row) in blocks.iter().enumerate() {
            for (c, b) in row.iter().enumerate() {
                let w = m[(c, a)];
                if w != ZERO {
                    x = &x + &b.scale(w);
                }
            }
        }
        let p = x.trace().re;
        if p <= DROP_PROB {
            ens.dropped.push(i);
            continue;
        }
        ens.probs.push(p);
        ens.states.push(DensityMatrix::new(rest_layout.clone(), x.hermitian_part().scale_real(1.0 / p))?);
        ens.outcomes.push(i);
    }
    Ok(ens)
}
