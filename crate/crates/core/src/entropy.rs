//! Von Neumann entropy in bits and the information quantities built from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, tensor, trace_norm_distance, ComplexMatrix};
use crate::qstate::{DensityMatrix, Label, QuantumState};

/// Eigenvalues in `[-CLAMP, 0]` are treated as zero.
pub const CLAMP: f64 = 1e-9;
pub const DEFAULT_MARKOV_TOL: f64 = 1e-7;

/// `-Σ λ log₂ λ` of a Hermitian matrix with unit trace.
pub fn entropy_of_matrix(m: &ComplexMatrix) -> Result<f64> {
    let ev = hermitian_eigenvalues(m)?;
    entropy_of_spectrum(&ev)
}

/// Shannon entropy in bits of a spectrum, with the negative clamp applied.
pub fn entropy_of_spectrum(ev: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in ev {
        if l < -CLAMP {
            return Err(Error::InvalidState(format!("negative eigenvalue {l:e}")));
        }
        if l > 0.0 {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_matrix(rho.matrix())
}

/// Entropy of the marginal on `labels`.
pub fn entropy_of<S: QuantumState + ?Sized>(state: &S, labels: &[Label]) -> Result<f64> {
    if let Some(pure) = state.as_pure() {
        if labels.len() == pure.layout().len() && state.layout().labels().iter().all(|l| labels.contains(l)) {
            return Ok(0.0);
        }
    }
    entropy_of_matrix(state.marginal(labels)?.matrix())
}

/// `S(X) + S(Y) - S(XY)` for disjoint nonempty label sets.
pub fn mutual_information<S: QuantumState + ?Sized>(state: &S, partition: (&[Label], &[Label])) -> Result<f64> {
    let (x, y) = partition;
    if x.is_empty() || y.is_empty() {
        return Err(Error::BadPartition("both sides must be nonempty".into()));
    }
    if x.iter().any(|l| y.contains(l)) {
        return Err(Error::BadPartition(format!("{x:?} and {y:?} overlap")));
    }
    if let Some(l) = x.iter().chain(y).find(|l| !state.layout().contains(**l)) {
        return Err(Error::BadPartition(format!("label {l} not in layout")));
    }
    let xy: Vec<Label> = x.iter().chain(y).copied().collect();
    Ok(entropy_of(state, x)? + entropy_of(state, y)? - entropy_of(state, &xy)?)
}

fn require_rqe<S: QuantumState + ?Sized>(state: &S) -> Result<()> {
    if state.layout().is(&[Label::R, Label::Q, Label::E]) {
        Ok(())
    } else {
        Err(Error::BadLayout(format!(
            "expected labels [R, Q, E], got {:?}",
            state.layout().labels()
        )))
    }
}

/// `S(RQ) + S(QE) - S(RQE) - S(Q)`.
pub fn conditional_mutual_information<S: QuantumState + ?Sized>(state: &S) -> Result<f64> {
    require_rqe(state)?;
    use Label::*;
    Ok(entropy_of(state, &[R, Q])? + entropy_of(state, &[Q, E])? - entropy_of(state, &[R, Q, E])?
        - entropy_of(state, &[Q])?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovCheck {
    pub is_markov: bool,
    pub cmi: f64,
    /// Trace distance of `ρ^RE` from `ρ^R ⊗ ρ^E`, reported for pure inputs.
    pub product_residual: Option<f64>,
}

/// Trace distance between `ρ^RE` and `ρ^R ⊗ ρ^E`.
pub fn product_residual<S: QuantumState + ?Sized>(state: &S) -> Result<f64> {
    let re = state.marginal(&[Label::R, Label::E])?;
    let prod = tensor(
        re.marginal(&[Label::R])?.matrix(),
        re.marginal(&[Label::E])?.matrix(),
    );
    trace_norm_distance(re.matrix(), &prod)
}

pub fn is_markov_state<S: QuantumState + ?Sized>(state: &S, tol: f64) -> Result<MarkovCheck> {
    let cmi = conditional_mutual_information(state)?;
    let product_residual = match state.as_pure() {
        Some(_) => Some(product_residual(state)?),
        None => None,
    };
    Ok(MarkovCheck {
        is_markov: cmi <= tol,
        cmi,
        product_residual,
    })
}

/// Residuals of the identities every pure tripartite state satisfies.
#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureIdentityResiduals {
    /// `|S(R) - S(QE)|`
    pub split_R_QE: f64,
    /// `|S(E) - S(RQ)|`
    pub split_E_RQ: f64,
    /// `|S(Q) - S(RE)|`
    pub split_Q_RE: f64,
    /// `|S(R) - [S(R;Q) + S(R;E)]/2|`
    pub mean_R: f64,
    /// `|S(Q) - [S(R;Q) + S(Q;E)]/2|`
    pub mean_Q: f64,
    /// `|S(E) - [S(R;E) + S(Q;E)]/2|`
    pub mean_E: f64,
}

impl PureIdentityResiduals {
    pub fn max(&self) -> f64 {
        [self.split_R_QE, self.split_E_RQ, self.split_Q_RE, self.mean_R, self.mean_Q, self.mean_E]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub S_R: f64,
    pub S_Q: f64,
    pub S_E: f64,
    pub S_RQ: f64,
    pub S_QE: f64,
    pub S_RE: f64,
    pub S_RQE: f64,
    pub mutual_RQ: f64,
    pub mutual_QE: f64,
    pub mutual_RE: f64,
    pub cmi_RE_given_Q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pure_identities: Option<PureIdentityResiduals>,
}

#[allow(non_snake_case)]
pub fn entropy_report<S: QuantumState + ?Sized>(state: &S) -> Result<EntropyReport> {
    require_rqe(state)?;
    use Label::*;
    let S_R = entropy_of(state, &[R])?;
    let S_Q = entropy_of(state, &[Q])?;
    let S_E = entropy_of(state, &[E])?;
    let S_RQ = entropy_of(state, &[R, Q])?;
    let S_QE = entropy_of(state, &[Q, E])?;
    let S_RE = entropy_of(state, &[R, E])?;
    let S_RQE = entropy_of(state, &[R, Q, E])?;
    let mutual_RQ = S_R + S_Q - S_RQ;
    let mutual_QE = S_Q + S_E - S_QE;
    let mutual_RE = S_R + S_E - S_RE;
    let pure_identities = state.as_pure().map(|_| PureIdentityResiduals {
        split_R_QE: (S_R - S_QE).abs(),
        split_E_RQ: (S_E - S_RQ).abs(),
        split_Q_RE: (S_Q - S_RE).abs(),
        mean_R: (S_R - 0.5 * (mutual_RQ + mutual_RE)).abs(),
        mean_Q: (S_Q - 0.5 * (mutual_RQ + mutual_QE)).abs(),
        mean_E: (S_E - 0.5 * (mutual_RE + mutual_QE)).abs(),
    });
    Ok(EntropyReport {
        S_R,
        S_Q,
        S_E,
        S_RQ,
        S_QE,
        S_RE,
        S_RQE,
        mutual_RQ,
        mutual_QE,
        mutual_RE,
        cmi_RE_given_Q: S_RQ + S_QE - S_RQE - S_Q,
        pure_identities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{haar_unitary, random_density, seeded_rng};
    use crate::qstate::{make_pure_markov, random_state_with, PureMarkovSpec, PureState, SystemLayout};
    use num_complex::Complex64;

    fn single(label: Label, m: ComplexMatrix) -> DensityMatrix {
        DensityMatrix::new(SystemLayout::new(vec![m.rows()], vec![label]).unwrap(), m).unwrap()
    }

    fn bell() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        PureState::new(
            SystemLayout::new(vec![2, 2], vec![Label::Q, Label::E]).unwrap(),
            vec![Complex64::new(s, 0.0), z, z, Complex64::new(s, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(von_neumann_entropy(&DensityMatrix::maximally_mixed(Label::Q, 2)).unwrap(), 1.0);
        let d = single(Label::Q, ComplexMatrix::from_real_diagonal(&[0.7, 0.3]));
        let oracle = -0.7f64 * 0.7f64.log2() - 0.3 * 0.3f64.log2();
        assert!((von_neumann_entropy(&d).unwrap() - oracle).abs() < 1e-14);
        assert!((oracle - 0.881291).abs() < 1e-6);
        assert!(von_neumann_entropy(&bell().to_density()).unwrap().abs() < 1e-12);
        assert!(entropy_of_spectrum(&[1.0 + 5e-10, -5e-10]).unwrap() >= 0.0);
        assert!(matches!(entropy_of_spectrum(&[1.1, -0.1]), Err(Error::InvalidState(_))));
    }

    #[test]
    fn mutual_information_examples() {
        use Label::*;
        assert!((mutual_information(&bell(), (&[Q], &[E])).unwrap() - 2.0).abs() < 1e-12);
        let classical = DensityMatrix::new(
            SystemLayout::new(vec![2, 2], vec![Q, E]).unwrap(),
            ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]),
        )
        .unwrap();
        assert!((mutual_information(&classical, (&[Q], &[E])).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = seeded_rng(2);
        let a = single(Q, random_density(2, 2, &mut rng));
        let b = single(E, random_density(3, 2, &mut rng));
        let prod = a.tensor(&b).unwrap();
        assert!(mutual_information(&prod, (&[Q], &[E])).unwrap().abs() < 1e-10);
        assert!(matches!(mutual_information(&prod, (&[Q], &[Q])), Err(Error::BadPartition(_))));
        assert!(matches!(mutual_information(&prod, (&[Q], &[R])), Err(Error::BadPartition(_))));
        assert!(matches!(mutual_information(&prod, (&[], &[E])), Err(Error::BadPartition(_))));
    }

    #[test]
    fn cmi_examples() {
        let spec = PureMarkovSpec::standard(vec![0.7, 0.3], vec![0.6, 0.4]).unwrap();
        let psi = make_pure_markov(&spec);
        assert!(conditional_mutual_information(&psi).unwrap().abs() < 1e-9);
        assert!((conditional_mutual_information(&PureState::ghz()).unwrap() - 1.0).abs() < 1e-12);
        let check = is_markov_state(&PureState::ghz(), DEFAULT_MARKOV_TOL).unwrap();
        assert!(!check.is_markov && (check.cmi - 1.0).abs() < 1e-12);
        assert!(matches!(conditional_mutual_information(&bell()), Err(Error::BadLayout(_))));
    }

    #[test]
    fn markov_flags() {
        use Label::*;
        // φ^{RQ} ⊗ pure E.
        let spec = PureMarkovSpec::with_dims(vec![0.8, 0.2], vec![1.0], 2, 3, 2).unwrap();
        let c = is_markov_state(&make_pure_markov(&spec), DEFAULT_MARKOV_TOL).unwrap();
        assert!(c.is_markov && c.product_residual.unwrap() < 1e-12);
        let mut rng = seeded_rng(8);
        let r = single(R, random_density(2, 2, &mut rng));
        let q = single(Q, random_density(3, 3, &mut rng));
        let e = single(E, random_density(2, 2, &mut rng));
        let prod = r.tensor(&q).unwrap().tensor(&e).unwrap();
        let c = is_markov_state(&prod, DEFAULT_MARKOV_TOL).unwrap();
        assert!(c.is_markov && c.product_residual.is_none());
    }

    #[test]
    fn report_identities() {
        let mut rng = seeded_rng(21);
        let spec = PureMarkovSpec::random(2, 3, (2, 6, 3), &mut rng).unwrap();
        let rep = entropy_report(&make_pure_markov(&spec)).unwrap();
        assert!((rep.S_R - rep.mutual_RQ / 2.0).abs() < 1e-9);
        assert!((rep.S_E - rep.mutual_QE / 2.0).abs() < 1e-9);
        assert!(rep.pure_identities.unwrap().max() < 1e-9);

        let psi = random_state_with(SystemLayout::rqe(2, 3, 2).unwrap(), &mut rng);
        let rep = entropy_report(&psi).unwrap();
        assert!((rep.S_Q - (rep.mutual_RQ + rep.mutual_QE) / 2.0).abs() < 1e-9);
        assert!(rep.pure_identities.as_ref().unwrap().max() < 1e-9);
        assert!((rep.cmi_RE_given_Q - rep.mutual_RE).abs() < 1e-9);

        // Bell on RQ times pure E.
        let b = bell().to_density().relabel(vec![Label::R, Label::Q]).unwrap();
        let e = single(Label::E, ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));
        let rep = entropy_report(&b.tensor(&e).unwrap()).unwrap();
        assert!((rep.S_Q - rep.S_RE).abs() < 1e-9);

        let json = serde_json::to_value(&rep).unwrap();
        for key in ["S_R", "S_RQE", "mutual_RE", "cmi_RE_given_Q"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn entropy_is_unitarily_invariant_and_additive() {
        let mut rng = seeded_rng(4);
        for _ in 0..20 {
            let m = random_density(4, 3, &mut rng);
            let u = haar_unitary(4, &mut rng);
            let a = entropy_of_matrix(&m).unwrap();
            let b = entropy_of_matrix(&m.conjugate_by(&u).hermitian_part()).unwrap();
            assert!((a - b).abs() < 1e-10);
            let n = random_density(3, 2, &mut rng);
            let c = entropy_of_matrix(&tensor(&m, &n)).unwrap();
            assert!((c - a - entropy_of_matrix(&n).unwrap()).abs() < 1e-9);
        }
    }
}
