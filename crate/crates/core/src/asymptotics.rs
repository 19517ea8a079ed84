//! Pipelines built on the functionals: z(n), asymptotic subrank of tight
//! 3-supports, the cap-set bound, degeneration lower bounds and asymptotic
//! slice rank.

use serde::{Deserialize, Serialize};

use crate::entropy::{max_min_entropy, project_simplex, ThetaWeights};
use crate::error::{Result, SpectralError};
use crate::family::FamilySpec;
use crate::field::Domain;
use crate::functionals::{support_at_basis, BasisTuple};
use crate::quantum::{lower_quantum_functional, QuantumOptions, QuantumState};
use crate::support::SupportSet;
use crate::tensor::{Matrix, Tensor};
use crate::tight::{
    check_comb_degeneration, check_tight, oblique_order, DegenerationCertificate, Tightness, TightnessCertificate,
};

pub const Z_TOL: f64 = 1e-12;
pub const SLICERANK_AGREEMENT_TOL: f64 = 2e-3;
pub const COVER_POINT_BUDGET: usize = 5000;
pub const COVER_NODE_BUDGET: u64 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZValue {
    pub n: usize,
    pub z: f64,
    pub gamma: f64,
}

/// γ^n − 1 without cancellation near γ = 1.
fn pow_m1(gamma: f64, n: usize) -> f64 {
    ((n as f64) * (gamma - 1.0).ln_1p()).exp_m1()
}

fn z_equation(gamma: f64, n: usize) -> f64 {
    1.0 / (gamma - 1.0) - n as f64 / pow_m1(gamma, n) - (n as f64 - 1.0) / 3.0
}

/// Solves 1/(γ−1) − n/(γⁿ−1) = (n−1)/3 by bisection and returns
/// z = ((γⁿ−1)/(γ−1))·γ^{−2(n−1)/3}.
pub fn z_of_n(n: usize) -> Result<ZValue> {
    if n < 2 {
        return Err(SpectralError::invalid(format!("z(n) needs n ≥ 2, got {n}")));
    }
    let mut lo = 1.0 + 1e-9;
    let mut hi = 4.0;
    // the left side decreases from (n−1)/2 to 0
    while z_equation(hi, n) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(SpectralError::OptimizerFailure("no bracket for the γ equation".into()));
        }
    }
    if z_equation(lo, n) < 0.0 {
        return Err(SpectralError::OptimizerFailure("γ equation has no root above 1".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= Z_TOL * mid.max(1.0) * 1e-3 || mid == lo || mid == hi {
            break;
        }
        if z_equation(mid, n) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = 0.5 * (lo + hi);
    let z = pow_m1(gamma, n) / (gamma - 1.0) * gamma.powf(-2.0 * (n as f64 - 1.0) / 3.0);
    Ok(ZValue { n, z, gamma })
}

/// Φ_n = {α ∈ {0..n−1}³ : α₁+α₂+α₃ = n−1}.
pub fn phi_n(n: usize) -> Result<SupportSet> {
    if n == 0 {
        return Err(SpectralError::invalid("Φ_n needs n ≥ 1"));
    }
    let pts = (0..n)
        .flat_map(|a| (0..n - a).map(move |b| vec![a, b, n - 1 - a - b]))
        .collect();
    SupportSet::new(vec![n; 3], pts)
}

/// Ψ_n = {α ∈ {0..n−1}³ : α₁+α₂+α₃ ≡ n−1 mod n}.
pub fn psi_n(n: usize) -> Result<SupportSet> {
    if n == 0 {
        return Err(SpectralError::invalid("Ψ_n needs n ≥ 1"));
    }
    let pts = (0..n)
        .flat_map(|a| (0..n).map(move |b| vec![a, b, (3 * n - 1 - a - b) % n]))
        .collect();
    SupportSet::new(vec![n; 3], pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightSubrankReport {
    pub value: f64,
    /// max_P min_i H(P_i), bits.
    pub log_value: f64,
    /// min over θ of H_θ(Φ) found by the dual iteration.
    pub dual_log_value: f64,
    pub gap: f64,
    pub theta: Vec<f64>,
    pub tight_certificate: TightnessCertificate,
}

/// 2^{max_P min_i H(P_i)} for a tight Φ ⊆ I₁×I₂×I₃.
pub fn asympt_subrank_tight3(phi: &SupportSet) -> Result<TightSubrankReport> {
    if phi.order() != 3 {
        return Err(SpectralError::Inapplicable(format!("needs an order-3 support, got order {}", phi.order())));
    }
    let cert = match check_tight(phi)? {
        Tightness::Tight(c) => c,
        Tightness::NotTight { leg, x, y } => {
            return Err(SpectralError::Inapplicable(format!(
                "support is not tight: every zero-sum weighting identifies {x} and {y} on leg {leg}"
            )))
        }
    };
    let sol = max_min_entropy(phi)?;
    Ok(TightSubrankReport {
        value: sol.value.exp2(),
        log_value: sol.value,
        dual_log_value: sol.dual_value,
        gap: sol.gap,
        theta: sol.theta,
        tight_certificate: cert,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerationBound {
    pub value: f64,
    pub certificate: DegenerationCertificate,
    pub target: TightSubrankReport,
}

/// Q~(Ψ) ≥ Q~(Φ) whenever Ψ ⊵ Φ; Φ must be tight.
pub fn degeneration_lower_bound(psi: &SupportSet, phi: &SupportSet) -> Result<DegenerationBound> {
    let certificate = check_comb_degeneration(psi, phi)?
        .ok_or_else(|| SpectralError::VerificationFailed("no combinatorial degeneration Ψ ⊵ Φ".into()))?;
    let target = asympt_subrank_tight3(phi)?;
    Ok(DegenerationBound {
        value: target.value,
        certificate,
        target,
    })
}

fn binom_small(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// C(x, a) mod p by Lucas' theorem.
pub fn binom_mod_p(mut x: u64, mut a: u64, p: u64) -> u64 {
    let mut out = 1;
    while x > 0 || a > 0 {
        let (xd, ad) = (x % p, a % p);
        if ad > xd {
            return 0;
        }
        out = out * (binom_small(xd, ad) % p) % p;
        x /= p;
        a /= p;
    }
    out
}

/// B[x][a] = C(x, a) mod p; column a is the basis vector Σ_x C(x,a) e_x.
pub fn binomial_basis(m: usize, p: u64) -> Result<Matrix> {
    let vals: Vec<i64> = (0..m)
        .flat_map(|x| (0..m).map(move |a| binom_mod_p(x as u64, a as u64, p) as i64))
        .collect();
    Matrix::from_i64(Domain::Prime(p), m, m, &vals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapSetReport {
    pub m: usize,
    pub p: u64,
    /// z(m), the bound on the cap-set growth constant of (Z/mZ)^n.
    pub bound: f64,
    pub gamma: f64,
    /// The transformed support equals Φ_m exactly.
    pub transform_verified: bool,
    /// α₃ ↦ m−1−α₃ turns it into the support of F[x]/(x^m).
    pub relabel_verified: bool,
    /// Identity weights, shifted on leg 3.
    pub degeneration: DegenerationCertificate,
    pub degeneration_lp: DegenerationCertificate,
    /// 2^{max_min_entropy(Φ_m)}, computed independently of z(m).
    pub minimax_value: f64,
}

fn prime_power_exponent(m: usize, p: u64) -> Option<u32> {
    let mut e = 0;
    let mut r = m as u64;
    while r > 1 {
        if r % p != 0 {
            return None;
        }
        r /= p;
        e += 1;
    }
    (e > 0).then_some(e)
}

pub fn capset_bound(m: usize, p: u64) -> Result<CapSetReport> {
    let tensor = FamilySpec::CapSet { m, p }.build()?;
    if prime_power_exponent(m, p).is_none() {
        return Err(SpectralError::invalid(format!("{m} is not a power of {p}")));
    }
    let domain = Domain::Prime(p);
    // P e_z = e_{z−1}: moves Σ ≡ 0 to Σ ≡ m−1
    let shift: Vec<usize> = (0..m).map(|z| (z + m - 1) % m).collect();
    let pm = Matrix::permutation(domain, &shift)?;
    let psi = tensor.restrict(&[Matrix::identity(domain, m), Matrix::identity(domain, m), pm.clone()])?;
    let psi_support = psi_n(m)?;
    if psi.support() != psi_support {
        return Err(SpectralError::VerificationFailed("shifted cap-set tensor does not have support Ψ_m".into()));
    }
    let b = binomial_basis(m, p)?;
    let b_inv = b
        .inverse()
        .ok_or_else(|| SpectralError::VerificationFailed("binomial basis is singular".into()))?;
    let transformed = psi.restrict(&[b_inv.clone(), b_inv.clone(), b_inv])?;
    let phi = phi_n(m)?;
    let transform_verified = transformed.support() == phi;
    if !transform_verified {
        return Err(SpectralError::VerificationFailed("binomial transform does not give Φ_m".into()));
    }
    let flip: Vec<usize> = (0..m).map(|c| m - 1 - c).collect();
    let ident: Vec<usize> = (0..m).collect();
    let relabeled = phi.relabel(&[ident.clone(), ident, flip])?;
    let relabel_verified = relabeled == FamilySpec::PolyMultMod(m).support()?;
    let degeneration = DegenerationCertificate {
        maps: vec![
            (0..m as i64).collect(),
            (0..m as i64).collect(),
            (0..m as i64).map(|x| x - (m as i64 - 1)).collect(),
        ],
    };
    if !degeneration.verify(&psi_support, &phi) {
        return Err(SpectralError::VerificationFailed("identity weights do not give Ψ_m ⊵ Φ_m".into()));
    }
    let degeneration_lp = check_comb_degeneration(&psi_support, &phi)?
        .ok_or_else(|| SpectralError::VerificationFailed("LP finds no Ψ_m ⊵ Φ_m".into()))?;
    let z = z_of_n(m)?;
    let minimax_value = asympt_subrank_tight3(&phi)?.value;
    Ok(CapSetReport {
        m,
        p,
        bound: z.z,
        gamma: z.gamma,
        transform_verified,
        relabel_verified,
        degeneration,
        degeneration_lp,
        minimax_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRankReport {
    /// 2^{min_θ E_θ(t)} as found by the quantum route.
    pub value: f64,
    pub log_value: f64,
    pub theta: Vec<f64>,
    /// min_θ H_θ(supp t) when the standard support is free.
    pub support_log_value: Option<f64>,
    pub outer_iterations: usize,
}

/// min over leg weights θ of E_θ(t), by projected gradient on θ with the
/// marginal entropies at the inner optimizer as gradient.
pub fn asympt_slicerank(t: &Tensor, opts: &QuantumOptions) -> Result<SliceRankReport> {
    let k = t.order();
    let state = |theta: &[f64], warm: Option<&crate::quantum::LocalGroupElement>| -> Result<(f64, Vec<f64>, _)> {
        let o = QuantumOptions {
            warm: warm.cloned(),
            ..opts.clone()
        };
        let res = lower_quantum_functional(t, &ThetaWeights::legs(theta.to_vec())?, &o)?;
        let psi = QuantumState::from_tensor(t)?.transform(&res.local)?;
        let grad = (0..k).map(|i| psi.marginal_entropy(&[i])).collect::<Result<Vec<f64>>>()?;
        Ok((res.value, grad, res.local))
    };
    let mut theta = vec![1.0 / k as f64; k];
    let (mut value, mut grad, mut local) = state(&theta, None)?;
    let mut step = 0.5;
    let mut iters = 0;
    while iters < 100 {
        iters += 1;
        let next = project_simplex(&theta.iter().zip(&grad).map(|(a, g)| a - step * g).collect::<Vec<_>>());
        let moved: f64 = next.iter().zip(&theta).map(|(a, b)| (a - b) * (a - b)).sum();
        if moved.sqrt() < 1e-9 {
            break;
        }
        let (v, g, l) = state(&next, Some(&local))?;
        if v <= value - 1e-4 * moved / step {
            let improvement = value - v;
            theta = next;
            value = v;
            grad = g;
            local = l;
            step = (step * 1.5).min(4.0);
            if improvement < 1e-10 {
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-6 {
                break;
            }
        }
    }
    let support = t.support();
    let support_log_value = if support.is_free() {
        let s = max_min_entropy(&support)?;
        if (s.value.exp2() - value.exp2()).abs() > SLICERANK_AGREEMENT_TOL {
            return Err(SpectralError::VerificationFailed(format!(
                "quantum route {} and support route {} disagree",
                value.exp2(),
                s.value.exp2()
            )));
        }
        Some(s.value)
    } else {
        None
    };
    Ok(SliceRankReport {
        value: value.exp2(),
        log_value: value,
        theta,
        support_log_value,
        outer_iterations: iters,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceCover {
    pub size: usize,
    /// (leg, index) slices covering the support.
    pub slices: Vec<(usize, usize)>,
}

/// Smallest set of axis slices covering supp_C t, which is the slice rank
/// when that support is an antichain under some order of each leg.
pub fn slicerank_exact_combinatorial(t: &Tensor, basis: &BasisTuple) -> Result<SliceCover> {
    let support = support_at_basis(t, basis)?;
    if oblique_order(&support)?.is_none() {
        return Err(SpectralError::Inapplicable(
            "support is neither an antichain nor tight in this basis; general slice rank is out of scope".into(),
        ));
    }
    min_slice_cover(&support)
}

pub fn min_slice_cover(support: &SupportSet) -> Result<SliceCover> {
    if support.len() > COVER_POINT_BUDGET {
        return Err(SpectralError::BudgetExceeded(format!(
            "{} points exceeds the budget of {COVER_POINT_BUDGET}",
            support.len()
        )));
    }
    let k = support.order();
    let mut cover = Cover {
        pts: support.points(),
        k,
        chosen: vec![Vec::new(); k],
        best: None,
        nodes: 0,
    };
    // one slice per point is always enough along any leg
    let mut trivial: Vec<(usize, usize)> = (0..k)
        .map(|i| support.leg_values(i).into_iter().map(|x| (i, x)).collect::<Vec<_>>())
        .min_by_key(|v| v.len())
        .unwrap_or_default();
    trivial.sort_unstable();
    cover.best = Some(trivial);
    let mut stack = Vec::new();
    cover.branch(&mut stack)?;
    let mut slices = cover.best.unwrap_or_default();
    slices.sort_unstable();
    Ok(SliceCover { size: slices.len(), slices })
}

struct Cover<'a> {
    pts: &'a [Vec<usize>],
    k: usize,
    chosen: Vec<Vec<usize>>,
    best: Option<Vec<(usize, usize)>>,
    nodes: u64,
}

impl Cover<'_> {
    fn covered(&self, p: &[usize]) -> bool {
        (0..self.k).any(|i| self.chosen[i].contains(&p[i]))
    }

    /// Uncovered points pairwise sharing no coordinate each need their own slice.
    fn lower_bound(&self) -> (usize, Option<usize>) {
        let mut picked: Vec<usize> = Vec::new();
        for (j, p) in self.pts.iter().enumerate() {
            if self.covered(p) {
                continue;
            }
            if picked.iter().all(|&q| self.pts[q].iter().zip(p).all(|(a, b)| a != b)) {
                picked.push(j);
            }
        }
        (picked.len(), picked.first().copied())
    }

    fn branch(&mut self, stack: &mut Vec<(usize, usize)>) -> Result<()> {
        self.nodes += 1;
        if self.nodes > COVER_NODE_BUDGET {
            return Err(SpectralError::BudgetExceeded("slice cover search exceeded its node budget".into()));
        }
        let (lb, first) = self.lower_bound();
        let best = self.best.as_ref().map_or(usize::MAX, |b| b.len());
        let Some(j) = first else {
            if stack.len() < best {
                self.best = Some(stack.clone());
            }
            return Ok(());
        };
        if stack.len() + lb >= best {
            return Ok(());
        }
        let p = self.pts[j].clone();
        for (i, &x) in p.iter().enumerate() {
            self.chosen[i].push(x);
            stack.push((i, x));
            self.branch(stack)?;
            stack.pop();
            self.chosen[i].pop();
        }
        Ok(())
    }
}
