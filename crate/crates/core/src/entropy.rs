//! Entropy utilities and the two convex programs over distributions on a
//! support: max_P Σ θ_i H(P_i) and max_P min_i H(P_i).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};
use crate::support::SupportSet;

const LN2: f64 = std::f64::consts::LN_2;
const PROB_TOL: f64 = 1e-9;

/// Frank–Wolfe gap target for the inner solver, in bits.
pub const INNER_GAP_TOL: f64 = 1e-10;
pub const INNER_MAX_ITERS: usize = 20_000;
/// Duality-gap target for the max-min program.
pub const MINIMAX_GAP_TOL: f64 = 1e-7;

fn check_prob(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(SpectralError::invalid("probabilities must be finite and nonnegative"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(SpectralError::invalid(format!("probabilities sum to {s}")));
    }
    Ok(())
}

fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    check_prob(p)?;
    Ok(p.iter().map(|&x| plogp(x)).sum())
}

pub fn binary_entropy(x: f64) -> f64 {
    plogp(x) + plogp(1.0 - x)
}

/// D(p‖q) in bits; errors when p puts mass where q has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_prob(p)?;
    check_prob(q)?;
    if p.len() != q.len() {
        return Err(SpectralError::ShapeMismatch(format!("{} vs {}", p.len(), q.len())));
    }
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b == 0.0 {
                return Err(SpectralError::invalid("KL divergence undefined: q(x)=0 < p(x)"));
            }
            d += a * (a / b).log2();
        }
    }
    Ok(d.max(0.0))
}

/// max_{p∈[0,1]} 2^{p x + (1-p) y + h(p)} by grid search plus golden-section
/// refinement. Equals 2^x + 2^y.
pub fn entropy_trick_check(x: f64, y: f64) -> Result<f64> {
    if !(x >= 0.0 && y >= 0.0) {
        return Err(SpectralError::invalid("entropy trick needs x, y ≥ 0"));
    }
    let f = |p: f64| p * x + (1.0 - p) * y + binary_entropy(p);
    let n = 10_000;
    let best = (0..=n)
        .map(|i| i as f64 / n as f64)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(0.5);
    let (mut lo, mut hi) = ((best - 1.0 / n as f64).max(0.0), (best + 1.0 / n as f64).min(1.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let v = f(best).max(f(0.5 * (lo + hi)));
    Ok(v.exp2())
}

/// Probability weights over legs, or over bipartitions {S, S̄} keyed by the
/// side containing leg 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThetaWeights {
    Legs(Vec<f64>),
    Bipartitions { k: usize, parts: Vec<(Vec<usize>, f64)> },
}

impl ThetaWeights {
    pub fn legs(w: Vec<f64>) -> Result<ThetaWeights> {
        check_prob(&w).map_err(|e| SpectralError::invalid(format!("theta: {e}")))?;
        Ok(ThetaWeights::Legs(w))
    }

    pub fn uniform(k: usize) -> ThetaWeights {
        ThetaWeights::Legs(vec![1.0 / k as f64; k])
    }

    /// Point mass on leg `i`.
    pub fn singleton(k: usize, i: usize) -> ThetaWeights {
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        ThetaWeights::Legs(w)
    }

    /// Canonicalizes each subset to the side containing leg 0 and merges
    /// repeated keys; the result is sorted by subset.
    pub fn bipartitions(k: usize, parts: Vec<(Vec<usize>, f64)>) -> Result<ThetaWeights> {
        let mut merged: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
        for (s, w) in parts {
            merged
                .entry(canonical_side(k, &s)?)
                .and_modify(|x| *x += w)
                .or_insert(w);
        }
        let parts: Vec<(Vec<usize>, f64)> = merged.into_iter().collect();
        let w: Vec<f64> = parts.iter().map(|p| p.1).collect();
        check_prob(&w).map_err(|e| SpectralError::invalid(format!("theta: {e}")))?;
        Ok(ThetaWeights::Bipartitions { k, parts })
    }

    pub fn order(&self) -> usize {
        match self {
            ThetaWeights::Legs(w) => w.len(),
            ThetaWeights::Bipartitions { k, .. } => *k,
        }
    }

    pub fn leg_weights(&self) -> Option<&[f64]> {
        match self {
            ThetaWeights::Legs(w) => Some(w),
            _ => None,
        }
    }

    /// Every weight as a (canonical subset, weight) pair; legs become
    /// singleton bipartitions.
    pub fn as_bipartitions(&self) -> Vec<(Vec<usize>, f64)> {
        match self {
            ThetaWeights::Legs(w) => w
                .iter()
                .enumerate()
                .map(|(i, &x)| (canonical_side(w.len(), &[i]).expect("valid leg"), x))
                .collect(),
            ThetaWeights::Bipartitions { parts, .. } => parts.clone(),
        }
    }

    /// S ⊆ T, T ⊆ S or S ∩ T = ∅ for every pair of weighted subsets (using
    /// either side of each bipartition).
    pub fn is_noncrossing(&self) -> bool {
        let k = self.order();
        let sets: Vec<Vec<usize>> = self
            .as_bipartitions()
            .into_iter()
            .filter(|p| p.1 > 0.0)
            .map(|p| p.0)
            .collect();
        let compatible = |a: &[usize], b: &[usize]| {
            let sub = |x: &[usize], y: &[usize]| x.iter().all(|e| y.contains(e));
            sub(a, b) || sub(b, a) || !a.iter().any(|e| b.contains(e))
        };
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                let ac = complement(k, a);
                let bc = complement(k, b);
                let ok = [(a, b), (a, &bc), (&ac, b), (&ac, &bc)]
                    .iter()
                    .any(|(x, y)| compatible(x, y));
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

pub fn complement(k: usize, s: &[usize]) -> Vec<usize> {
    (0..k).filter(|i| !s.contains(i)).collect()
}

/// The side of {S, S̄} that contains leg 0, sorted.
pub fn canonical_side(k: usize, s: &[usize]) -> Result<Vec<usize>> {
    let mut s = s.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() || s.len() >= k || s.iter().any(|&x| x >= k) {
        return Err(SpectralError::invalid(format!(
            "{s:?} is not a proper nonempty subset of the {k} legs"
        )));
    }
    Ok(if s[0] == 0 { s } else { complement(k, &s) })
}

/// Probability vector on the points of a support, with its marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    support: SupportSet,
    probs: Vec<f64>,
    marginals: Vec<Vec<f64>>,
}

impl Distribution {
    pub fn new(support: SupportSet, probs: Vec<f64>) -> Result<Distribution> {
        if probs.len() != support.len() {
            return Err(SpectralError::ShapeMismatch(format!(
                "{} probabilities for {} points",
                probs.len(),
                support.len()
            )));
        }
        check_prob(&probs)?;
        let marginals = marginals(&support, &probs);
        Ok(Distribution { support, probs, marginals })
    }

    pub fn uniform(support: SupportSet) -> Result<Distribution> {
        if support.is_empty() {
            return Err(SpectralError::EmptySupport);
        }
        let n = support.len();
        Distribution::new(support, vec![1.0 / n as f64; n])
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn marginal(&self, i: usize) -> &[f64] {
        &self.marginals[i]
    }

    pub fn marginal_entropies(&self) -> Vec<f64> {
        self.marginals.iter().map(|m| m.iter().map(|&x| plogp(x)).sum()).collect()
    }

    /// Σ θ_i H(P_i).
    pub fn h_theta(&self, theta: &[f64]) -> f64 {
        theta.iter().zip(self.marginal_entropies()).map(|(t, h)| t * h).sum()
    }
}

fn marginals(support: &SupportSet, probs: &[f64]) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = support.bounds().iter().map(|&n| vec![0.0; n]).collect();
    for (a, &p) in support.points().iter().zip(probs) {
        for (i, &x) in a.iter().enumerate() {
            m[i][x] += p;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HThetaSolution {
    pub value: f64,
    pub dist: Distribution,
    /// Frank–Wolfe gap: the true optimum is at most `value + gap`.
    pub gap: f64,
    /// Spread of the log-space gradient over points with mass > 1e-6.
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// H_θ(Φ) = max over P on Φ of Σ θ_i H(P_i), in bits.
pub fn max_h_theta(phi: &SupportSet, theta: &ThetaWeights) -> Result<HThetaSolution> {
    let w = theta
        .leg_weights()
        .ok_or_else(|| SpectralError::invalid("max_h_theta needs leg weights"))?;
    max_h_theta_legs(phi, w, None)
}

/// Exponentiated-gradient ascent with an adaptive step, stopped by the
/// Frank–Wolfe gap. `warm` optionally seeds the iterate.
pub fn max_h_theta_legs(phi: &SupportSet, theta: &[f64], warm: Option<&[f64]>) -> Result<HThetaSolution> {
    if phi.is_empty() {
        return Err(SpectralError::EmptySupport);
    }
    if theta.len() != phi.order() {
        return Err(SpectralError::OrderMismatch(theta.len(), phi.order()));
    }
    let n = phi.len();
    let pts = phi.points();
    let mut p: Vec<f64> = match warm {
        Some(w) if w.len() == n => {
            // keep every point alive so the multiplicative updates can move it
            let floor = 1e-3 / n as f64;
            let v: Vec<f64> = w.iter().map(|&x| x.max(0.0) + floor).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        }
        _ => vec![1.0 / n as f64; n],
    };
    let eval = |p: &[f64]| -> (f64, Vec<f64>) {
        let m = marginals(phi, p);
        let obj: f64 = theta
            .iter()
            .zip(&m)
            .map(|(t, mi)| t * mi.iter().map(|&x| plogp(x)).sum::<f64>())
            .sum();
        let grad = pts
            .iter()
            .map(|a| {
                a.iter()
                    .enumerate()
                    .filter(|(i, _)| theta[*i] > 0.0)
                    .map(|(i, &x)| -theta[i] * m[i][x].max(f64::MIN_POSITIVE).log2())
                    .sum()
            })
            .collect();
        (obj, grad)
    };
    let (mut f, mut g) = eval(&p);
    let mut eta = 1.0;
    let mut gap = f64::INFINITY;
    let mut iters = 0;
    while iters < INNER_MAX_ITERS {
        let avg: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gap = gmax - avg;
        if gap <= INNER_GAP_TOL || n == 1 {
            break;
        }
        iters += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let mut q: Vec<f64> = p
                .iter()
                .zip(&g)
                .map(|(&x, &gr)| x * ((gr - gmax) * eta * LN2).exp())
                .collect();
            let s: f64 = q.iter().sum();
            for x in q.iter_mut() {
                *x = (*x / s).max(1e-300);
            }
            let (fq, gq) = eval(&q);
            if fq >= f - 1e-15 {
                p = q;
                f = fq;
                g = gq;
                eta *= 1.5;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let avg: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
    let kkt_residual = p
        .iter()
        .zip(&g)
        .filter(|(x, _)| **x > 1e-6)
        .map(|(_, gr)| (gr - avg).abs())
        .fold(0.0, f64::max);
    let s: f64 = p.iter().sum();
    let p: Vec<f64> = p.into_iter().map(|x| x / s).collect();
    let dist = Distribution::new(phi.clone(), p)?;
    Ok(HThetaSolution {
        value: f,
        dist,
        gap: gap.max(0.0),
        kkt_residual,
        iterations: iters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxSolution {
    /// Best primal value max_P min_i H(P_i) found (a certified lower bound).
    pub value: f64,
    pub dist: Distribution,
    /// θ attaining the best dual value g(θ) = H_θ(Φ) (an upper bound).
    pub theta: Vec<f64>,
    pub dual_value: f64,
    pub gap: f64,
    pub outer_iterations: usize,
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut tau = 0.0;
    for (j, &x) in u.iter().enumerate() {
        css += x;
        let t = (css - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// max_P min_i H(P_i) = min_θ H_θ(Φ). The convex dual g(θ) is minimized by
/// projected gradient with backtracking (the gradient is the vector of
/// marginal entropies at the inner maximizer), starting from uniform θ.
pub fn max_min_entropy(phi: &SupportSet) -> Result<MinimaxSolution> {
    if phi.is_empty() {
        return Err(SpectralError::EmptySupport);
    }
    let k = phi.order();
    let mut theta = vec![1.0 / k as f64; k];
    let mut cur = max_h_theta_legs(phi, &theta, None)?;
    let mut h = cur.dist.marginal_entropies();
    let mut best_primal = (min_of(&h), cur.dist.clone());
    let mut dual = (cur.value + cur.gap, theta.clone());
    let mut step = 1.0;
    let mut outer = 0;
    while outer < 300 && dual.0 - best_primal.0 > MINIMAX_GAP_TOL {
        outer += 1;
        let mut moved = false;
        while step > 1e-12 {
            let trial = project_simplex(&theta.iter().zip(&h).map(|(t, g)| t - step * g).collect::<Vec<_>>());
            let decrease: f64 = theta.iter().zip(&trial).zip(&h).map(|((a, b), g)| g * (a - b)).sum();
            if decrease <= 0.0 {
                break;
            }
            let sol = max_h_theta_legs(phi, &trial, Some(cur.dist.probs()))?;
            let hn = sol.dist.marginal_entropies();
            if min_of(&hn) > best_primal.0 {
                best_primal = (min_of(&hn), sol.dist.clone());
            }
            if sol.value + sol.gap < dual.0 {
                dual = (sol.value + sol.gap, trial.clone());
            }
            if sol.value <= cur.value - 1e-4 * decrease {
                theta = trial;
                cur = sol;
                h = hn;
                step *= 2.0;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
        if dual.0 - best_primal.0 > MINIMAX_GAP_TOL {
            if let Some(better) = polish_primal(phi, &cur.dist)? {
                if better.0 > best_primal.0 {
                    best_primal = better;
                }
            }
        }
    }
    if dual.0 - best_primal.0 > MINIMAX_GAP_TOL {
        if let Some(better) = polish_primal(phi, &best_primal.1)? {
            if better.0 > best_primal.0 {
                best_primal = better;
            }
        }
    }
    Ok(MinimaxSolution {
        value: best_primal.0,
        dist: best_primal.1,
        gap: (dual.0 - best_primal.0).max(0.0),
        theta: dual.1,
        dual_value: dual.0,
        outer_iterations: outer,
    })
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Mirror ascent on the non-smooth primal min_i H(P_i), weighting the legs
/// that are currently (near-)minimal.
fn polish_primal(phi: &SupportSet, start: &Distribution) -> Result<Option<(f64, Distribution)>> {
    let pts = phi.points();
    let mut p = start.probs().to_vec();
    let mut best = (min_of(&start.marginal_entropies()), start.clone());
    let mut eta: f64 = 0.5;
    for _ in 0..2000 {
        let d = Distribution::new(phi.clone(), p.clone())?;
        let h = d.marginal_entropies();
        let lo = min_of(&h);
        // soft-min weights concentrated on the smallest marginal entropies
        let beta = 200.0;
        let mut w: Vec<f64> = h.iter().map(|&x| (-(x - lo) * beta).exp()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let g: Vec<f64> = pts
            .iter()
            .map(|a| {
                a.iter()
                    .enumerate()
                    .map(|(i, &x)| -w[i] * d.marginal(i)[x].max(f64::MIN_POSITIVE).log2())
                    .sum()
            })
            .collect();
        let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut q: Vec<f64> = p.iter().zip(&g).map(|(&x, &gr)| x * ((gr - gmax) * eta).exp()).collect();
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x = (*x / s).max(1e-300));
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= s);
        let dq = Distribution::new(phi.clone(), q.clone())?;
        let v = min_of(&dq.marginal_entropies());
        if v > best.0 {
            best = (v, dq);
            p = q;
            eta = (eta * 1.2).min(4.0);
        } else {
            eta *= 0.5;
            if eta < 1e-9 {
                break;
            }
        }
    }
    Ok(Some(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn w_support() -> SupportSet {
        SupportSet::new(vec![2, 2, 2], vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]).unwrap()
    }

    #[test]
    fn basic_entropies() {
        assert_abs_diff_eq!(shannon_entropy(&[0.125; 8]).unwrap(), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(1.0 / 3.0), 0.918296, epsilon = 1e-6);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_err());
        assert!(shannon_entropy(&[0.5, 0.6]).is_err());
    }

    #[test]
    fn trick_examples() {
        assert_abs_diff_eq!(entropy_trick_check(0.0, 0.0).unwrap(), 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(entropy_trick_check(1.0, 1.0).unwrap(), 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(entropy_trick_check(1.0, 2.0).unwrap(), 6.0, epsilon = 1e-9);
    }

    #[test]
    fn w_uniform_theta() {
        let s = max_h_theta(&w_support(), &ThetaWeights::uniform(3)).unwrap();
        assert_abs_diff_eq!(s.value, binary_entropy(1.0 / 3.0), epsilon = 1e-8);
        assert!(s.kkt_residual < 1e-6);
    }

    #[test]
    fn w_minimax() {
        let s = max_min_entropy(&w_support()).unwrap();
        assert_abs_diff_eq!(s.value, binary_entropy(1.0 / 3.0), epsilon = 1e-6);
        assert!(s.gap <= 1e-6, "gap {}", s.gap);
    }

    #[test]
    fn bipartition_canonical_form() {
        let t = ThetaWeights::bipartitions(3, vec![(vec![2, 1], 0.4), (vec![0], 0.6)]).unwrap();
        assert_eq!(t.as_bipartitions(), vec![(vec![0], 1.0)]);
        assert!(t.is_noncrossing());
        let c = ThetaWeights::bipartitions(4, vec![(vec![0, 1], 0.5), (vec![0, 2], 0.5)]).unwrap();
        assert!(!c.is_noncrossing());
        assert!(ThetaWeights::bipartitions(3, vec![(vec![0, 1, 2], 1.0)]).is_err());
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        for x in p {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
    }
}
