//! Minimization of `Σ_i p_i S(ρ_i^T)` over rank-1 measurements on a factor `F`
//! of a joint state `ρ^FT`.
//!
//! Qubit factors are searched on a Bloch-angle grid, larger factors over
//! Haar-random frames with `d` and `2d` elements. The best candidates are
//! then polished by pattern search. Every result is an upper bound on the
//! true infimum.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random::{haar_unitary, seeded_rng};
use crate::linalg::{hermitian_eig, hermitian_eigenvalues, ComplexMatrix, ONE, ZERO};

const REFINE_STARTS: usize = 4;

fn default_grid_theta() -> usize {
    60
}
fn default_grid_phi() -> usize {
    120
}
fn default_random_frames() -> usize {
    5000
}
fn default_refine_iters() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(default = "default_grid_theta")]
    pub grid_theta: usize,
    #[serde(default = "default_grid_phi")]
    pub grid_phi: usize,
    #[serde(default = "default_random_frames")]
    pub random_frames: usize,
    #[serde(default = "default_refine_iters")]
    pub refine_iters: usize,
    #[serde(default)]
    pub seed: u64,
    /// Smallest pattern-search step, in radians.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grid_theta: default_grid_theta(),
            grid_phi: default_grid_phi(),
            random_frames: default_random_frames(),
            refine_iters: default_refine_iters(),
            seed: 0,
            tol: default_tol(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Upper,
    Lower,
}

/// Best measurement found: POVM elements `|α_i⟩⟨α_i|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub vectors: Vec<Vec<[f64; 2]>>,
    pub value: f64,
}

impl Certificate {
    pub fn elements(&self) -> Vec<Vec<Complex64>> {
        self.vectors
            .iter()
            .map(|v| v.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerMetadata {
    pub grid_theta: usize,
    pub grid_phi: usize,
    pub random_frames: usize,
    pub refine_iters: usize,
    pub refine_iters_used: usize,
    pub seed: u64,
    pub evaluations: usize,
    pub measured_dim: usize,
    pub outcomes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub value: f64,
    pub certificate: Certificate,
    pub metadata: OptimizerMetadata,
}

/// `p S(X / p)` for `X = p ρ`, without dividing.
fn weighted_entropy(x: &ComplexMatrix) -> f64 {
    let ev = match hermitian_eigenvalues(x) {
        Ok(ev) => ev,
        Err(_) => hermitian_eigenvalues(&x.hermitian_part()).expect("Hermitian part"),
    };
    let p: f64 = ev.iter().filter(|&&l| l > 0.0).sum();
    if p <= 0.0 {
        return 0.0;
    }
    let s: f64 = ev.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.log2()).sum();
    (s + p * p.log2()).max(0.0)
}

/// Objective for a joint state split into `d_F × d_F` blocks of size `d_T`.
struct Objective {
    blocks: Vec<ComplexMatrix>,
    d_f: usize,
    d_t: usize,
}

impl Objective {
    fn new(rho_ft: &ComplexMatrix, d_f: usize, d_t: usize) -> Self {
        let blocks = (0..d_f * d_f)
            .map(|i| rho_ft.sub_block((i / d_f) * d_t, (i % d_f) * d_t, d_t, d_t))
            .collect();
        Self { blocks, d_f, d_t }
    }

    /// `Σ_i p_i S(ρ_i)` with `p_i ρ_i = Σ_ac conj(α_a) α_c B_ac`.
    fn eval(&self, alphas: &[Vec<Complex64>]) -> f64 {
        alphas
            .iter()
            .map(|alpha| {
                let mut x = ComplexMatrix::zeros(self.d_t, self.d_t);
                for a in 0..self.d_f {
                    for c in 0..self.d_f {
                        let w = alpha[a].conj() * alpha[c];
                        if w != ZERO {
                            let b = &self.blocks[a * self.d_f + c];
                            x = &x + &b.scale(w);
                        }
                    }
                }
                weighted_entropy(&x)
            })
            .sum()
    }
}

/// Projective qubit measurement along Bloch angles `(θ, φ)`.
fn bloch_pair(theta: f64, phi: f64) -> Vec<Vec<Complex64>> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = Complex64::from_polar(1.0, phi);
    vec![
        vec![Complex64::new(c, 0.0), e * s],
        vec![-e.conj() * s, Complex64::new(c, 0.0)],
    ]
}

/// Rows of `v` (conjugated) as measurement vectors; `v` has orthonormal columns.
fn frame_vectors(v: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..v.rows())
        .map(|i| (0..v.cols()).map(|a| v[(i, a)].conj()).collect())
        .collect()
}

fn certificate(alphas: &[Vec<Complex64>], value: f64) -> Certificate {
    Certificate {
        vectors: alphas
            .iter()
            .map(|a| a.iter().map(|z| [z.re, z.im]).collect())
            .collect(),
        value,
    }
}

/// Index of the smallest value, first one on ties.
fn argmin(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b <= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

/// Indices of the `k` smallest values in ascending order, ties by index.
fn smallest(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Minimizes `Σ p_i S(ρ_i^T)` over rank-1 measurements on `F` for the joint
/// state `rho_ft` (factor `F` first).
pub fn minimize_conditional_entropy(
    rho_ft: &ComplexMatrix,
    d_f: usize,
    d_t: usize,
    config: &OptimizerConfig,
) -> Result<Minimum> {
    if rho_ft.rows() != d_f * d_t || !rho_ft.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "joint state is {}x{}, expected {}",
            rho_ft.rows(),
            rho_ft.cols(),
            d_f * d_t
        )));
    }
    let obj = Objective::new(rho_ft, d_f, d_t);
    if d_f == 1 {
        let alphas = vec![vec![ONE]];
        let value = obj.eval(&alphas);
        return Ok(Minimum {
            value,
            certificate: certificate(&alphas, value),
            metadata: metadata(config, 1, 0, d_f, 1),
        });
    }
    if d_f == 2 {
        minimize_qubit(&obj, config)
    } else {
        minimize_frames(&obj, config)
    }
}

fn metadata(config: &OptimizerConfig, evaluations: usize, used: usize, d_f: usize, outcomes: usize) -> OptimizerMetadata {
    OptimizerMetadata {
        grid_theta: config.grid_theta,
        grid_phi: config.grid_phi,
        random_frames: config.random_frames,
        refine_iters: config.refine_iters,
        refine_iters_used: used,
        seed: config.seed,
        evaluations,
        measured_dim: d_f,
        outcomes,
    }
}

fn minimize_qubit(obj: &Objective, config: &OptimizerConfig) -> Result<Minimum> {
    let nt = config.grid_theta;
    let np = config.grid_phi;
    // θ_i = π i / n_θ and φ_j = 2π j / n_φ, so doubling a resolution nests the grid.
    let points: Vec<(f64, f64)> = (0..=nt)
        .flat_map(|i| {
            let theta = if nt == 0 { 0.0 } else { std::f64::consts::PI * i as f64 / nt as f64 };
            (0..np).map(move |j| (theta, 2.0 * std::f64::consts::PI * j as f64 / np as f64))
        })
        .collect();
    if points.is_empty() {
        return Err(Error::OptimizerBudgetExceeded("grid_phi = 0 leaves no Bloch candidates".into()));
    }
    let values: Vec<f64> = points.par_iter().map(|&(t, p)| obj.eval(&bloch_pair(t, p))).collect();
    let mut evaluations = values.len();
    let best = argmin(&values).expect("nonempty");
    let mut best_val = values[best];
    let mut best_pt = points[best];
    let mut used = 0;

    let step0 = if nt == 0 { std::f64::consts::FRAC_PI_2 } else { std::f64::consts::PI / nt as f64 };
    let starts = smallest(&values, REFINE_STARTS);
    let refined: Vec<((f64, f64), f64, usize, usize)> = starts
        .par_iter()
        .map(|&i| {
            let f = |(t, p): (f64, f64)| obj.eval(&bloch_pair(t, p));
            pattern_search_2d(f, points[i], values[i], step0, config)
        })
        .collect();
    for (pt, v, iters, evals) in refined {
        evaluations += evals;
        used = used.max(iters);
        if v < best_val {
            best_val = v;
            best_pt = pt;
        }
    }
    let alphas = bloch_pair(best_pt.0, best_pt.1);
    Ok(Minimum {
        value: best_val,
        certificate: certificate(&alphas, best_val),
        metadata: metadata(config, evaluations, used, 2, 2),
    })
}

fn pattern_search_2d(
    f: impl Fn((f64, f64)) -> f64,
    start: (f64, f64),
    start_val: f64,
    step0: f64,
    config: &OptimizerConfig,
) -> ((f64, f64), f64, usize, usize) {
    let (mut pt, mut val, mut step) = (start, start_val, step0);
    let mut iters = 0;
    let mut evals = 0;
    while iters < config.refine_iters && step >= config.tol {
        iters += 1;
        let moves = [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)];
        let mut improved = false;
        for (dt, dp) in moves {
            let cand = (pt.0 + dt, pt.1 + dp);
            let v = f(cand);
            evals += 1;
            if v < val {
                pt = cand;
                val = v;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (pt, val, iters, evals)
}

/// Rotation on rows `(a, b)`: real when `complex` is false, `[[c, i s], [i s, c]]` otherwise.
fn rotate_rows(v: &ComplexMatrix, a: usize, b: usize, angle: f64, complex: bool) -> ComplexMatrix {
    let (c, s) = (angle.cos(), angle.sin());
    let mut out = v.clone();
    for col in 0..v.cols() {
        let (x, y) = (v[(a, col)], v[(b, col)]);
        if complex {
            let is = Complex64::new(0.0, s);
            out[(a, col)] = x * c + y * is;
            out[(b, col)] = x * is + y * c;
        } else {
            out[(a, col)] = x * c - y * s;
            out[(b, col)] = x * s + y * c;
        }
    }
    out
}

fn minimize_frames(obj: &Objective, config: &OptimizerConfig) -> Result<Minimum> {
    let d = obj.d_f;
    let mut frames: Vec<ComplexMatrix> = Vec::with_capacity(config.random_frames + 2);
    frames.push(ComplexMatrix::identity(d));
    // Eigenbasis of ρ^F, rows as measurement vectors after conjugation.
    let rho_f = ComplexMatrix::from_fn(d, d, |a, c| obj.blocks[a * d + c].trace());
    let eig = hermitian_eig(&rho_f.hermitian_part(), 1e-8)?;
    frames.push(eig.eigenvectors.adjoint());
    let mut rng = seeded_rng(config.seed);
    for i in 0..config.random_frames {
        let n = if i % 2 == 0 { d } else { 2 * d };
        let u = haar_unitary(n, &mut rng);
        frames.push(u.sub_block(0, 0, n, d));
    }
    let values: Vec<f64> = frames.par_iter().map(|v| obj.eval(&frame_vectors(v))).collect();
    let mut evaluations = values.len();
    let starts = smallest(&values, REFINE_STARTS);
    let refined: Vec<(ComplexMatrix, f64, usize, usize)> = starts
        .par_iter()
        .map(|&i| pattern_search_frame(obj, frames[i].clone(), values[i], config))
        .collect();
    let best = argmin(&values).expect("at least two candidates");
    let (mut best_v, mut best_val) = (frames[best].clone(), values[best]);
    let mut used = 0;
    for (v, val, iters, evals) in refined {
        evaluations += evals;
        used = used.max(iters);
        if val < best_val {
            best_v = v;
            best_val = val;
        }
    }
    let alphas = frame_vectors(&best_v);
    Ok(Minimum {
        value: best_val,
        certificate: certificate(&alphas, best_val),
        metadata: metadata(config, evaluations, used, d, alphas.len()),
    })
}

fn pattern_search_frame(
    obj: &Objective,
    start: ComplexMatrix,
    start_val: f64,
    config: &OptimizerConfig,
) -> (ComplexMatrix, f64, usize, usize) {
    let n = start.rows();
    let (mut v, mut val) = (start, start_val);
    let mut step = std::f64::consts::FRAC_PI_8;
    let mut iters = 0;
    let mut evals = 0;
    while iters < config.refine_iters && step >= config.tol {
        iters += 1;
        let mut improved = false;
        for a in 0..n {
            for b in a + 1..n {
                for complex in [false, true] {
                    for sign in [1.0, -1.0] {
                        let cand = rotate_rows(&v, a, b, sign * step, complex);
                        let cv = obj.eval(&frame_vectors(&cand));
                        evals += 1;
                        if cv < val {
                            v = cand;
                            val = cv;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (v, val, iters, evals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_density;
    use crate::linalg::tensor;

    fn fast() -> OptimizerConfig {
        OptimizerConfig {
            grid_theta: 20,
            grid_phi: 40,
            random_frames: 300,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn weighted_entropy_scales() {
        let x = ComplexMatrix::from_real_diagonal(&[0.35, 0.15]);
        let h = -0.7f64 * 0.7f64.log2() - 0.3 * 0.3f64.log2();
        assert!((weighted_entropy(&x) - 0.5 * h).abs() < 1e-14);
        assert_eq!(weighted_entropy(&ComplexMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn classical_state_is_resolved_by_computational_basis() {
        let rho = ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]);
        let m = minimize_conditional_entropy(&rho, 2, 2, &fast()).unwrap();
        assert!(m.value.abs() < 1e-12);
        let m = minimize_conditional_entropy(&tensor(&ComplexMatrix::identity(3).scale_real(1.0 / 3.0), &ComplexMatrix::from_real_diagonal(&[0.5, 0.5])), 3, 2, &fast()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_states_give_target_entropy() {
        let mut rng = seeded_rng(1);
        for d_f in [2, 3] {
            let a = random_density(d_f, d_f, &mut rng);
            let b = ComplexMatrix::from_real_diagonal(&[0.7, 0.3]);
            let m = minimize_conditional_entropy(&tensor(&a, &b), d_f, 2, &fast()).unwrap();
            let h = -0.7f64 * 0.7f64.log2() - 0.3 * 0.3f64.log2();
            assert!((m.value - h).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_per_seed_and_nested_grids_are_monotone() {
        let mut rng = seeded_rng(2);
        let rho = random_density(4, 3, &mut rng);
        let cfg = OptimizerConfig { refine_iters: 0, ..fast() };
        let a = minimize_conditional_entropy(&rho, 2, 2, &cfg).unwrap();
        let b = minimize_conditional_entropy(&rho, 2, 2, &cfg).unwrap();
        assert_eq!(a, b);
        let mut prev = f64::INFINITY;
        for k in [5, 10, 20, 40] {
            let cfg = OptimizerConfig { grid_theta: k, grid_phi: 2 * k, refine_iters: 0, ..fast() };
            let v = minimize_conditional_entropy(&rho, 2, 2, &cfg).unwrap().value;
            assert!(v <= prev);
            prev = v;
        }
        let refined = minimize_conditional_entropy(&rho, 2, 2, &fast()).unwrap().value;
        assert!(refined <= prev + 1e-12);
        let rho3 = random_density(6, 4, &mut rng);
        let a = minimize_conditional_entropy(&rho3, 3, 2, &fast()).unwrap();
        let b = minimize_conditional_entropy(&rho3, 3, 2, &fast()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn certificate_reproduces_value() {
        let mut rng = seeded_rng(3);
        for d_f in [2, 3] {
            let rho = random_density(2 * d_f, 3, &mut rng);
            let m = minimize_conditional_entropy(&rho, d_f, 2, &fast()).unwrap();
            let obj = Objective::new(&rho, d_f, 2);
            let alphas = m.certificate.elements();
            assert!((obj.eval(&alphas) - m.value).abs() < 1e-12);
            let sum = alphas
                .iter()
                .fold(ComplexMatrix::zeros(d_f, d_f), |acc, a| &acc + &ComplexMatrix::outer(a, a));
            assert!(sum.max_abs_diff(&ComplexMatrix::identity(d_f)) < 1e-10);
        }
    }

    #[test]
    fn config_defaults_from_json() {
        let c: OptimizerConfig = serde_json::from_str(r#"{"seed": 9}"#).unwrap();
        assert_eq!(c, OptimizerConfig { seed: 9, ..OptimizerConfig::default() });
    }
}
