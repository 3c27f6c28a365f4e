//! Entanglement of formation, classical correlation and discord, all
//! evaluated through rank-1 measurements on a purifying or measured factor.
//!
//! `E_f(AB) = inf S(A|X)` where `X` records a rank-1 measurement on a
//! purification of `ρ^AB`, and `C(F→T) = S(T) − inf S(T|X)` for measurements
//! on `F`. Optimized quantities are bounds: EOF and discord from above,
//! classical correlation from below.

mod optimizer;
mod povm;

pub use optimizer::{
    minimize_conditional_entropy, Bound, Certificate, Minimum, OptimizerConfig, OptimizerMetadata,
};
pub use povm::{steer, Ensemble, Povm, DROP_PROB, POVM_TOL};

use serde::{Deserialize, Serialize};

use crate::entropy::{entropy_of, mutual_information, DEFAULT_MARKOV_TOL};
use crate::error::{Error, Result};
use crate::qstate::{purify, DensityMatrix, Label, PureState, QuantumState};

/// Tolerance for quantities that vanish exactly on pure Markov states.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Tolerance for identities involving optimized quantities.
pub const OPTIMIZER_TOL: f64 = 5e-3;
const PURE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub bound: Bound,
    /// Best measurement found, absent when no optimization was needed.
    pub certificate: Option<Certificate>,
    pub metadata: Option<OptimizerMetadata>,
}

impl Estimate {
    fn exact(value: f64, bound: Bound) -> Self {
        Self {
            value,
            bound,
            certificate: None,
            metadata: None,
        }
    }
}

fn require_bipartite(rho: &DensityMatrix) -> Result<()> {
    if rho.layout().len() != 2 {
        return Err(Error::BadLayout(format!(
            "expected a bipartite state, got labels {:?}",
            rho.layout().labels()
        )));
    }
    Ok(())
}

/// Entanglement of formation of a bipartite state, evaluated on its first factor.
///
/// Pure inputs return the marginal entropy directly. Mixed inputs are purified
/// onto the first label among `X, R, Q, E` not already in use.
pub fn eof(rho_ab: &DensityMatrix, config: &OptimizerConfig) -> Result<Estimate> {
    require_bipartite(rho_ab)?;
    let a = rho_ab.layout().labels()[0];
    if rho_ab.is_pure(PURE_TOL) {
        return Ok(Estimate::exact(entropy_of(rho_ab, &[a])?, Bound::Upper));
    }
    let reference = [Label::X, Label::R, Label::Q, Label::E]
        .into_iter()
        .find(|l| !rho_ab.layout().contains(*l))
        .expect("a bipartite layout leaves two labels free");
    let pur = purify(rho_ab, reference, None)?;
    let joint = pur.marginal(&[reference, a])?.marginal_ordered(&[reference, a])?;
    let (d_f, d_t) = (joint.layout().dims()[0], joint.layout().dims()[1]);
    let m = minimize_conditional_entropy(joint.matrix(), d_f, d_t, config)?;
    Ok(Estimate {
        value: m.value,
        bound: Bound::Upper,
        certificate: Some(m.certificate),
        metadata: Some(m.metadata),
    })
}

/// `C(from → to) = S(to) − inf S(to|X)` over rank-1 measurements on `from`.
pub fn classical_correlation<S: QuantumState + ?Sized>(
    state: &S,
    from: Label,
    to: Label,
    config: &OptimizerConfig,
) -> Result<Estimate> {
    if from == to {
        return Err(Error::BadPartition(format!("cannot measure {from} against itself")));
    }
    let joint = state.marginal(&[from, to])?.marginal_ordered(&[from, to])?;
    let s_to = entropy_of(&joint, &[to])?;
    let (d_f, d_t) = (joint.layout().dims()[0], joint.layout().dims()[1]);
    let m = minimize_conditional_entropy(joint.matrix(), d_f, d_t, config)?;
    Ok(Estimate {
        value: s_to - m.value,
        bound: Bound::Lower,
        certificate: Some(m.certificate),
        metadata: Some(m.metadata),
    })
}

/// `D(from → to) = S(from; to) − C(from → to)`.
pub fn discord<S: QuantumState + ?Sized>(state: &S, from: Label, to: Label, config: &OptimizerConfig) -> Result<Estimate> {
    let c = classical_correlation(state, from, to, config)?;
    let mi = mutual_information(state, (&[from], &[to]))?;
    Ok(Estimate {
        value: mi - c.value,
        bound: Bound::Upper,
        certificate: c.certificate,
        metadata: c.metadata,
    })
}

/// Extra checks reported when the input is a pure Markov state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovIdentities {
    /// `max(|S(R;E)|, |E_f(RE)|, |C(R→E)|)`
    pub degeneracy_max: f64,
    pub degeneracy_holds: bool,
    /// Largest gap among `E_f(QE)`, `C(Q→E)`, `D(Q→E)` and `S(E)`.
    pub equality_spread: f64,
    pub equalities_hold: bool,
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub S_E: f64,
    pub mutual_RE: f64,
    pub eof_QE: f64,
    pub classical_Q_to_E: f64,
    pub discord_Q_to_E: f64,
    pub classical_R_to_E: f64,
    pub eof_RE: f64,
    /// `C(R→E) + E_f(QE) − S(E)`
    pub kw_residual: f64,
    /// `C(Q→E) + E_f(RE) − S(E)` and `S(R;E) − E_f(RE) + D(Q→E) − S(E)`
    pub corollary2_residuals: [f64; 2],
    pub is_markov: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markov_identities: Option<MarkovIdentities>,
    pub optimizer_metadata: OptimizerConfig,
}

impl CorrelationReport {
    pub const CSV_HEADER: [&'static str; 13] = [
        "S_E",
        "mutual_RE",
        "eof_QE",
        "classical_Q_to_E",
        "discord_Q_to_E",
        "classical_R_to_E",
        "eof_RE",
        "kw_residual",
        "corollary2_residual_0",
        "corollary2_residual_1",
        "is_markov",
        "degeneracy_max",
        "equality_spread",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.16e}");
        let mi = self.markov_identities.as_ref();
        vec![
            f(self.S_E),
            f(self.mutual_RE),
            f(self.eof_QE),
            f(self.classical_Q_to_E),
            f(self.discord_Q_to_E),
            f(self.classical_R_to_E),
            f(self.eof_RE),
            f(self.kw_residual),
            f(self.corollary2_residuals[0]),
            f(self.corollary2_residuals[1]),
            self.is_markov.to_string(),
            mi.map_or(String::new(), |m| f(m.degeneracy_max)),
            mi.map_or(String::new(), |m| f(m.equality_spread)),
        ]
    }
}

/// Evaluates every correlation identity on a pure `R ⊗ Q ⊗ E` state.
#[allow(non_snake_case)]
pub fn identity_suite(psi: &PureState, config: &OptimizerConfig) -> Result<CorrelationReport> {
    use Label::*;
    if !psi.layout().is(&[R, Q, E]) {
        return Err(Error::BadLayout(format!(
            "expected labels [R, Q, E], got {:?}",
            psi.layout().labels()
        )));
    }
    let S_E = entropy_of(psi, &[E])?;
    let mutual_RE = mutual_information(psi, (&[R], &[E]))?;
    let eof_QE = eof(&psi.marginal(&[Q, E])?, config)?.value;
    let eof_RE = eof(&psi.marginal(&[R, E])?, config)?.value;
    let classical_Q_to_E = classical_correlation(psi, Q, E, config)?.value;
    let classical_R_to_E = classical_correlation(psi, R, E, config)?.value;
    let discord_Q_to_E = mutual_information(psi, (&[Q], &[E]))? - classical_Q_to_E;
    let check = crate::entropy::is_markov_state(psi, DEFAULT_MARKOV_TOL)?;
    let markov_identities = check.is_markov.then(|| {
        let degeneracy_max = [mutual_RE, eof_RE, classical_R_to_E]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max);
        let chain = [eof_QE, classical_Q_to_E, discord_Q_to_E, S_E];
        let hi = chain.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = chain.iter().copied().fold(f64::INFINITY, f64::min);
        MarkovIdentities {
            degeneracy_max,
            degeneracy_holds: degeneracy_max <= DEGENERACY_TOL,
            equality_spread: hi - lo,
            equalities_hold: hi - lo <= OPTIMIZER_TOL,
        }
    });
    Ok(CorrelationReport {
        S_E,
        mutual_RE,
        eof_QE,
        classical_Q_to_E,
        discord_Q_to_E,
        classical_R_to_E,
        eof_RE,
        kw_residual: classical_R_to_E + eof_QE - S_E,
        corollary2_residuals: [
            classical_Q_to_E + eof_RE - S_E,
            mutual_RE - eof_RE + discord_Q_to_E - S_E,
        ],
        is_markov: check.is_markov,
        markov_identities,
        optimizer_metadata: config.clone(),
    })
}
