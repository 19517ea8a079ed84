//! Multi-start ascent for E_θ(t) = sup_g Σ_S θ(S) H(ρ_S(g·t / ‖g·t‖)).
//!
//! Steps are multiplicative, g_i ← (I + η D_i) g_i, which is gradient ascent
//! in the Lie algebra at the current point; the steepest direction is
//! D_i = G_(i) φ_(i)^† with G the state-space gradient.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{flattening, hermitian_spectrum, LocalGroupElement, QuantumState};
use crate::entropy::{complement, ThetaWeights};
use crate::error::{Result, SpectralError};
use crate::tensor::{flattening_layout, Tensor};

const ARMIJO: f64 = 1e-4;
const EIGEN_CLIP: f64 = 1e-16;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub cond_cap: f64,
    /// Used as the second start when present.
    pub warm: Option<LocalGroupElement>,
}

impl Default for QuantumOptions {
    fn default() -> Self {
        QuantumOptions {
            starts: 16,
            seed: 0,
            max_iters: 5000,
            grad_tol: 1e-7,
            cond_cap: 1e8,
            warm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerQuantumResult {
    pub value: f64,
    pub local: LocalGroupElement,
    /// Objective after each accepted step of the winning start.
    pub trace: Vec<f64>,
    pub best_start: usize,
    pub iterations: usize,
    pub failed_starts: usize,
}

impl LowerQuantumResult {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,objective\n");
        for (i, v) in self.trace.iter().enumerate() {
            s.push_str(&format!("{i},{v:.12}\n"));
        }
        s
    }
}

/// A weighted subset S with the flattening layout used for ρ_S.
struct Term {
    weight: f64,
    rows: usize,
    cols: usize,
    perm: Vec<usize>,
}

struct Problem {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
    terms: Vec<Term>,
}

impl Problem {
    fn new(t: &Tensor, theta: &ThetaWeights) -> Result<Problem> {
        if theta.order() != t.order() {
            return Err(SpectralError::OrderMismatch(theta.order(), t.order()));
        }
        if t.is_zero() {
            return Err(SpectralError::invalid("E_θ needs a nonzero tensor"));
        }
        let psi = QuantumState::from_tensor(t)?;
        let dims = psi.dims().to_vec();
        let k = dims.len();
        let mut terms = Vec::new();
        for (s, weight) in theta.as_bipartitions() {
            if weight <= 0.0 {
                continue;
            }
            // both sides have the same entropy; the smaller one is cheaper
            let other = complement(k, &s);
            let size = |x: &[usize]| x.iter().map(|&l| dims[l]).product::<usize>();
            let legs = if size(&other) < size(&s) { other } else { s };
            let (rows, cols, perm) = flattening_layout(&dims, &legs)?;
            terms.push(Term { weight, rows, cols, perm });
        }
        Ok(Problem {
            dims,
            amps: psi.amps().to_vec(),
            terms,
        })
    }

    /// Normalized g·t, or None when it vanishes or is not finite.
    fn image(&self, g: &LocalGroupElement) -> Option<Vec<Complex64>> {
        let v = g.apply(&self.dims, &self.amps).ok()?;
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (n.is_finite() && n > 1e-300).then(|| v.into_iter().map(|z| z / n).collect())
    }

    fn value(&self, phi: &[Complex64]) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let m = DMatrix::from_fn(term.rows, term.cols, |r, c| phi[term.perm[r * term.cols + c]]);
                let ev = hermitian_spectrum(&(&m * m.adjoint()));
                term.weight * ev.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum::<f64>()
            })
            .sum()
    }

    /// Objective and G = Σ_S θ_S (−(log₂ρ_S ⊗ I)φ − H(ρ_S)φ).
    fn value_and_gradient(&self, phi: &[Complex64]) -> (f64, Vec<Complex64>) {
        let mut value = 0.0;
        let mut grad = vec![Complex64::new(0.0, 0.0); phi.len()];
        for term in &self.terms {
            let m = DMatrix::from_fn(term.rows, term.cols, |r, c| phi[term.perm[r * term.cols + c]]);
            let eig = (&m * m.adjoint()).symmetric_eigen();
            let logs = eig.eigenvalues.map(|x| x.max(EIGEN_CLIP).log2());
            let h: f64 = eig
                .eigenvalues
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| -x * x.log2())
                .sum();
            value += term.weight * h;
            let u = &eig.eigenvectors;
            let log_rho = u * DMatrix::from_diagonal(&logs.map(|x| Complex64::new(x, 0.0))) * u.adjoint();
            let lm = log_rho * &m;
            for r in 0..term.rows {
                for c in 0..term.cols {
                    let j = r * term.cols + c;
                    grad[term.perm[j]] -= (lm[(r, c)] + m[(r, c)] * h) * term.weight;
                }
            }
        }
        (value, grad)
    }

    fn directions(&self, phi: &[Complex64], grad: &[Complex64]) -> Vec<DMatrix<Complex64>> {
        (0..self.dims.len())
            .map(|leg| {
                let gm = flattening(&self.dims, grad, &[leg]).expect("valid leg");
                let pm = flattening(&self.dims, phi, &[leg]).expect("valid leg");
                gm * pm.adjoint()
            })
            .collect()
    }
}

struct StartOutcome {
    value: f64,
    local: LocalGroupElement,
    trace: Vec<f64>,
    iterations: usize,
}

fn normalize(g: &mut DMatrix<Complex64>) {
    let n = g.norm();
    if n > 0.0 && n.is_finite() {
        *g /= Complex64::new(n, 0.0);
    }
}

fn ascend(p: &Problem, mut g: LocalGroupElement, opts: &QuantumOptions) -> Option<StartOutcome> {
    for m in &mut g.mats {
        normalize(m);
    }
    if g.max_condition() > opts.cond_cap {
        return None;
    }
    let mut phi = p.image(&g)?;
    let (mut value, mut grad) = p.value_and_gradient(&phi);
    if !value.is_finite() {
        return None;
    }
    let mut trace = vec![value];
    let mut eta = 1.0;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let dirs = p.directions(&phi, &grad);
        let sq: f64 = dirs.iter().map(|d| d.norm_squared()).sum();
        if !sq.is_finite() {
            return None;
        }
        if sq.sqrt() < opts.grad_tol {
            break;
        }
        iterations += 1;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mats: Vec<DMatrix<Complex64>> = g
                .mats
                .iter()
                .zip(&dirs)
                .map(|(gi, d)| {
                    let n = gi.nrows();
                    let mut next = (DMatrix::identity(n, n) + d * Complex64::new(eta, 0.0)) * gi;
                    normalize(&mut next);
                    next
                })
                .collect();
            let cand = LocalGroupElement { mats };
            if cand.max_condition() <= opts.cond_cap {
                if let Some(phi_c) = p.image(&cand) {
                    let v = p.value(&phi_c);
                    if v.is_finite() && v >= value + ARMIJO * eta * 2.0 * sq {
                        accepted = Some((cand, phi_c));
                        break;
                    }
                }
            }
            eta *= 0.5;
        }
        let Some((cand, phi_c)) = accepted else { break };
        g = cand;
        phi = phi_c;
        (value, grad) = p.value_and_gradient(&phi);
        trace.push(value);
        eta *= 2.0;
    }
    Some(StartOutcome { value, local: g, trace, iterations })
}

fn random_start(dims: &[usize], seed: u64, stream: u64) -> LocalGroupElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mats = dims
        .iter()
        .map(|&n| {
            DMatrix::from_fn(n, n, |r, c| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                let id = if r == c { 1.0 } else { 0.0 };
                Complex64::new(id + 0.5 * a, 0.5 * b)
            })
        })
        .collect();
    LocalGroupElement { mats }
}

/// Best value of H_θ over the starts; a lower bound on E_θ(t).
pub fn lower_quantum_functional(t: &Tensor, theta: &ThetaWeights, opts: &QuantumOptions) -> Result<LowerQuantumResult> {
    let p = Problem::new(t, theta)?;
    if opts.starts == 0 {
        return Err(SpectralError::invalid("at least one start is required"));
    }
    let mut starts = vec![LocalGroupElement::identity(&p.dims)];
    if let Some(w) = &opts.warm {
        if w.mats.len() != p.dims.len() || w.mats.iter().zip(&p.dims).any(|(m, &n)| m.shape() != (n, n)) {
            return Err(SpectralError::ShapeMismatch("warm start does not match the tensor".into()));
        }
        starts.push(w.clone());
    }
    let mut stream = 0;
    while starts.len() < opts.starts {
        stream += 1;
        starts.push(random_start(&p.dims, opts.seed, stream));
    }
    starts.truncate(opts.starts);
    let outcomes: Vec<Option<StartOutcome>> = starts.into_par_iter().map(|g| ascend(&p, g, opts)).collect();
    let failed_starts = outcomes.iter().filter(|o| o.is_none()).count();
    let mut best: Option<(usize, StartOutcome)> = None;
    for (i, o) in outcomes.into_iter().enumerate() {
        let Some(o) = o else { continue };
        if best.as_ref().is_none_or(|(_, b)| o.value > b.value) {
            best = Some((i, o));
        }
    }
    let (best_start, o) =
        best.ok_or_else(|| SpectralError::OptimizerFailure("every start hit a non-finite objective".into()))?;
    Ok(LowerQuantumResult {
        value: o.value,
        local: o.local,
        trace: o.trace,
        best_start,
        iterations: o.iterations,
        failed_starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::binary_entropy;
    use crate::family::FamilySpec;

    fn quick() -> QuantumOptions {
        QuantumOptions { starts: 4, ..Default::default() }
    }

    #[test]
    fn unit_tensor() {
        for r in 1..=4 {
            let t = FamilySpec::Unit { r, k: 3 }.build().unwrap();
            let res = lower_quantum_functional(&t, &ThetaWeights::uniform(3), &quick()).unwrap();
            assert!((res.value - (r as f64).log2()).abs() < 1e-9);
        }
    }

    #[test]
    fn w_state() {
        let t = FamilySpec::w().build().unwrap();
        let res = lower_quantum_functional(&t, &ThetaWeights::uniform(3), &quick()).unwrap();
        assert!((res.value - binary_entropy(1.0 / 3.0)).abs() < 1e-3, "{}", res.value);
        assert!(res.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let t = FamilySpec::MatMul { a: 1, b: 2, c: 2 }.build().unwrap();
        let theta = ThetaWeights::legs(vec![0.2, 0.3, 0.5]).unwrap();
        let p = Problem::new(&t, &theta).unwrap();
        let g = random_start(&p.dims, 3, 1);
        let phi = p.image(&g).unwrap();
        let (v0, grad) = p.value_and_gradient(&phi);
        let dirs = p.directions(&phi, &grad);
        let sq: f64 = dirs.iter().map(|d| d.norm_squared()).sum();
        let h = 1e-6;
        let mats = g
            .mats
            .iter()
            .zip(&dirs)
            .map(|(gi, d)| (DMatrix::identity(gi.nrows(), gi.nrows()) + d * Complex64::new(h, 0.0)) * gi)
            .collect();
        let v1 = p.value(&p.image(&LocalGroupElement { mats }).unwrap());
        let fd = (v1 - v0) / h;
        assert!((fd - 2.0 * sq).abs() < 1e-4 * (1.0 + fd.abs()), "{fd} vs {}", 2.0 * sq);
    }

    #[test]
    fn deterministic() {
        let t = FamilySpec::Cw(2).build().unwrap();
        let a = lower_quantum_functional(&t, &ThetaWeights::uniform(3), &quick()).unwrap();
        let b = lower_quantum_functional(&t, &ThetaWeights::uniform(3), &quick()).unwrap();
        assert_eq!(a, b);
    }
}
