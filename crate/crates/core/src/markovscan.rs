//! Hamiltonian trajectories of pure Markov states: whether the product form
//! of `σ^RE(t)` survives, and whether the reduced maps between times where it
//! does compose.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{evolve_tripartite, LinearMap, ReducedChannel};
use crate::entropy::DEFAULT_MARKOV_TOL;
use crate::error::{Error, Result};
use crate::linalg::{support_basis, trace_norm_distance, unitary_propagator, ComplexMatrix, DEFAULT_RANK_TOL};
use crate::qstate::{make_pure_markov, Label, PureMarkovSpec, PureState};
use crate::recovery::PetzMap;

pub use crate::entropy::product_residual;

pub const HAMILTONIAN_TOL: f64 = 1e-10;

/// Hermitian generator on `Q ⊗ E`, with `ħ = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct Hamiltonian(ComplexMatrix);

impl TryFrom<ComplexMatrix> for Hamiltonian {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Hamiltonian::new(m)
    }
}

impl From<Hamiltonian> for ComplexMatrix {
    fn from(h: Hamiltonian) -> Self {
        h.0
    }
}

impl Hamiltonian {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare(m.rows(), m.cols()));
        }
        let violation = m.hermiticity_violation();
        if violation > HAMILTONIAN_TOL {
            return Err(Error::NotHermitian {
                violation,
                tol: HAMILTONIAN_TOL,
            });
        }
        Ok(Self(m))
    }

    pub fn zero(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// `exp(−iHt)`.
    pub fn propagator(&self, t: f64) -> Result<ComplexMatrix> {
        unitary_propagator(&self.0, t, HAMILTONIAN_TOL)
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if let Some(t) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::InvalidTimeGrid(format!("time {t} is negative or not finite")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidTimeGrid("times must be sorted ascending".into()));
    }
    Ok(())
}

fn check_dims(spec: &PureMarkovSpec, h: &Hamiltonian) -> Result<()> {
    let d = spec.d_q() * spec.d_e();
    if h.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian has dimension {}, Q ⊗ E has {d}",
            h.dim()
        )));
    }
    Ok(())
}

/// `(I_R ⊗ e^{−iHt})|ψ(0)⟩` at each time of a sorted nonnegative grid.
pub fn trajectory(spec: &PureMarkovSpec, h: &Hamiltonian, times: &[f64]) -> Result<Vec<PureState>> {
    check_grid(times)?;
    check_dims(spec, h)?;
    let psi0 = make_pure_markov(spec);
    times
        .par_iter()
        .map(|&t| evolve_tripartite(&psi0, &h.propagator(t)?))
        .collect()
}

/// Hermitian operator basis of the span of the columns of `basis`:
/// `|a⟩⟨a|`, `(|a⟩⟨b| + |b⟩⟨a|)/√2` and `i(|a⟩⟨b| − |b⟩⟨a|)/√2`.
pub fn hermitian_basis(basis: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let s = basis.cols();
    let cols: Vec<_> = (0..s).map(|j| basis.col(j)).collect();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(s * s);
    for a in 0..s {
        out.push(ComplexMatrix::outer(&cols[a], &cols[a]));
        for b in a + 1..s {
            let ab = ComplexMatrix::outer(&cols[a], &cols[b]);
            let ba = ab.adjoint();
            out.push((&ab + &ba).scale_real(r));
            out.push((&ab - &ba).scale(num_complex::Complex64::new(0.0, r)));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisibilityEntry {
    pub tau: f64,
    pub tau_prime: f64,
    pub tau_double_prime: f64,
    /// Largest trace distance between `ℰ_{τ″,τ}(X)` and `ℰ_{τ″,τ′}(ℰ_{τ′,τ}(X))`
    /// over a Hermitian operator basis of `supp σ^Q(τ)`.
    pub residual: f64,
}

fn reduced_between(state: &PureState, h: &Hamiltonian, dt: f64) -> Result<ReducedChannel> {
    let petz = PetzMap::new(&state.marginal(&[Label::Q, Label::E])?)?;
    ReducedChannel::new(petz, h.propagator(dt)?)
}

/// Composition-law residual for the triple `τ ≤ τ′ ≤ τ″`.
///
/// Both `σ(τ)` and `σ(τ′)` must be pure Markov within `tol`, since only then
/// are the two reduced maps defined.
pub fn divisibility_check(
    spec: &PureMarkovSpec,
    h: &Hamiltonian,
    times: (f64, f64, f64),
    tol: f64,
) -> Result<DivisibilityEntry> {
    let (tau, tau_p, tau_pp) = times;
    check_grid(&[tau, tau_p, tau_pp])?;
    let states = trajectory(spec, h, &[tau, tau_p])?;
    for (state, &time) in states.iter().zip(&[tau, tau_p]) {
        let residual = product_residual(state)?;
        if residual > tol {
            return Err(Error::NotMarkovAtIntermediateTime { time, residual, tol });
        }
    }
    divisibility_from_states(&states[0], &states[1], h, times)
}

fn divisibility_from_states(
    at_tau: &PureState,
    at_tau_p: &PureState,
    h: &Hamiltonian,
    (tau, tau_p, tau_pp): (f64, f64, f64),
) -> Result<DivisibilityEntry> {
    let first = reduced_between(at_tau, h, tau_p - tau)?;
    let second = reduced_between(at_tau_p, h, tau_pp - tau_p)?;
    let direct = reduced_between(at_tau, h, tau_pp - tau)?;
    let basis = support_basis(first.petz().rho_q().matrix(), DEFAULT_RANK_TOL)?;
    let residual = hermitian_basis(&basis)
        .par_iter()
        .map(|x| {
            let lhs = direct.apply(x)?;
            let rhs = second.apply(&first.apply(x)?)?;
            trace_norm_distance(&lhs, &rhs)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(DivisibilityEntry {
        tau,
        tau_prime: tau_p,
        tau_double_prime: tau_pp,
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub times: Vec<f64>,
    pub product_residuals: Vec<f64>,
    pub markov_flags: Vec<bool>,
    /// Entries for consecutive grid triples whose first two times are flagged.
    pub divisibility: Vec<DivisibilityEntry>,
    pub tol: f64,
}

impl ScanReport {
    pub const CSV_HEADER: [&'static str; 3] = ["time", "product_residual", "flag"];

    pub fn csv_rows(&self) -> Vec<[String; 3]> {
        self.times
            .iter()
            .zip(&self.product_residuals)
            .zip(&self.markov_flags)
            .map(|((t, r), f)| [format!("{t:.16e}"), format!("{r:.16e}"), f.to_string()])
            .collect()
    }
}

/// Scan input: `{ "spec", "hamiltonian", "times", "tol" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanInput {
    pub spec: PureMarkovSpec,
    pub hamiltonian: Hamiltonian,
    pub times: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_MARKOV_TOL
}

pub fn scan(spec: &PureMarkovSpec, h: &Hamiltonian, times: &[f64], tol: f64) -> Result<ScanReport> {
    let states = trajectory(spec, h, times)?;
    let product_residuals = states
        .par_iter()
        .map(product_residual)
        .collect::<Result<Vec<f64>>>()?;
    let markov_flags: Vec<bool> = product_residuals.iter().map(|&r| r <= tol).collect();
    let triples: Vec<usize> = (0..times.len().saturating_sub(2))
        .filter(|&i| markov_flags[i] && markov_flags[i + 1])
        .collect();
    let divisibility = triples
        .par_iter()
        .map(|&i| divisibility_from_states(&states[i], &states[i + 1], h, (times[i], times[i + 1], times[i + 2])))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanReport {
        times: times.to_vec(),
        product_residuals,
        markov_flags,
        divisibility,
        tol,
    })
}
