//! Isotypic projectors P_λ^{V_S} on (V_1 ⊗ … ⊗ V_k)^{⊗n}, acting by
//! permuting the S-components of the n copies, and the finite-n certificate
//! for the upper quantum functional.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::repr::character;
use super::QuantumState;
use crate::entropy::ThetaWeights;
use crate::error::{Result, SpectralError};
use crate::partition::PartitionSeq;
use crate::tensor::Tensor;

pub const MAX_PROJECTOR_COPIES: usize = 5;
/// Largest vector (Π dims)^n the projector will touch.
pub const MAX_PROJECTOR_LEN: usize = 1 << 21;
/// Projected vectors with norm at or below this count as zero.
pub const ZERO_NORM_TOL: f64 = 1e-8;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn cycle_type(perm: &[usize]) -> PartitionSeq {
    let mut seen = vec![false; perm.len()];
    let mut parts = Vec::new();
    for s in 0..perm.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut j = s;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        parts.push(len);
    }
    parts.sort_unstable_by(|a, b| b.cmp(a));
    PartitionSeq::new(parts).expect("cycle lengths form a partition")
}

/// Index bookkeeping for one copy: S-part and rest-part of a copy index.
struct CopySplit {
    s_of: Vec<usize>,
    r_of: Vec<usize>,
    join: Vec<usize>,
    s_size: usize,
}

fn copy_split(dims: &[usize], s: &[usize]) -> CopySplit {
    let b: usize = dims.iter().product();
    let s_dims: Vec<usize> = s.iter().map(|&l| dims[l]).collect();
    let rest: Vec<usize> = (0..dims.len()).filter(|l| !s.contains(l)).collect();
    let r_dims: Vec<usize> = rest.iter().map(|&l| dims[l]).collect();
    let s_size: usize = s_dims.iter().product();
    let r_size: usize = r_dims.iter().product();
    let mut s_of = vec![0; b];
    let mut r_of = vec![0; b];
    let mut join = vec![0; s_size * r_size];
    for (c, (so, ro)) in s_of.iter_mut().zip(r_of.iter_mut()).enumerate() {
        let idx = crate::tensor::unflatten(c, dims);
        let si = s.iter().fold(0, |acc, &l| acc * dims[l] + idx[l]);
        let ri = rest.iter().fold(0, |acc, &l| acc * dims[l] + idx[l]);
        *so = si;
        *ro = ri;
        join[si * r_size + ri] = c;
    }
    CopySplit { s_of, r_of, join, s_size }
}

fn check_budget(dims: &[usize], n: usize) -> Result<usize> {
    if n == 0 || n > MAX_PROJECTOR_COPIES {
        return Err(SpectralError::BudgetExceeded(format!(
            "projectors support 1 ≤ n ≤ {MAX_PROJECTOR_COPIES}, got {n}"
        )));
    }
    let b: usize = dims.iter().product();
    let len = b.checked_pow(n as u32).filter(|&l| l <= MAX_PROJECTOR_LEN);
    len.ok_or_else(|| SpectralError::BudgetExceeded(format!("({b})^{n} amplitudes exceed the projector budget")))
}

/// (dim[λ]/n!) Σ_π χ_λ(π) π applied to `v`, where π permutes the components
/// of the legs in `s` among the n copies. `s` may be all legs.
pub fn isotypic_projector_apply(
    v: &[Complex64],
    dims: &[usize],
    n: usize,
    s: &[usize],
    lambda: &PartitionSeq,
) -> Result<Vec<Complex64>> {
    let len = check_budget(dims, n)?;
    if v.len() != len {
        return Err(SpectralError::ShapeMismatch(format!("vector of length {} for {len}", v.len())));
    }
    if lambda.n() != n {
        return Err(SpectralError::invalid(format!("{lambda} is not a partition of {n}")));
    }
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.iter().any(|&l| l >= dims.len()) {
        return Err(SpectralError::invalid(format!("bad leg subset {s:?}")));
    }
    let split = copy_split(dims, &sorted);
    if lambda.len() > split.s_size {
        return Ok(vec![Complex64::new(0.0, 0.0); len]);
    }
    let b: usize = dims.iter().product();
    let r_size = b / split.s_size;
    let fact: f64 = (1..=n).map(|x| x as f64).product();
    let scale = lambda.dimension() as f64 / fact;
    let mut chars: BTreeMap<PartitionSeq, i64> = BTreeMap::new();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let mut copies = vec![0usize; n];
    for perm in permutations(n) {
        let ct = cycle_type(&perm);
        let chi = *chars.entry(ct.clone()).or_insert_with(|| character(lambda, &ct));
        if chi == 0 {
            continue;
        }
        let w = scale * chi as f64;
        for (flat, o) in out.iter_mut().enumerate() {
            let mut f = flat;
            for j in (0..n).rev() {
                copies[j] = f % b;
                f /= b;
            }
            let mut src = 0;
            for j in 0..n {
                let sj = split.s_of[copies[perm[j]]];
                let rj = split.r_of[copies[j]];
                src = src * b + split.join[sj * r_size + rj];
            }
            *o += v[src] * w;
        }
    }
    Ok(out)
}

/// Projection onto vectors symmetric under permuting whole copies.
pub fn symmetrize_copies(v: &[Complex64], dims: &[usize], n: usize) -> Result<Vec<Complex64>> {
    let all: Vec<usize> = (0..dims.len()).collect();
    isotypic_projector_apply(v, dims, n, &all, &PartitionSeq::new(vec![n])?)
}

/// ψ^{⊗n}, with copy 0 the most significant block.
pub fn tensor_power(psi: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..n {
        out = out.iter().flat_map(|a| psi.iter().map(move |b| a * b)).collect();
    }
    out
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperCertificate {
    /// max Σ_b θ(b) H(λ̄^{(b)}) over surviving tuples.
    pub value: f64,
    /// (canonical subset, λ) per weighted bipartition, in projector order.
    pub witness: Vec<(Vec<usize>, PartitionSeq)>,
    pub n: usize,
    pub surviving_tuples: usize,
    pub order: Vec<Vec<usize>>,
}

/// Enumerates tuples (λ^{(b)}) with Π_b P_{λ^{(b)}}^{V_{S_b}} t^{⊗n} ≠ 0.
/// For crossing θ the projectors need not commute and `order` (indices into
/// the weighted bipartitions) must be given.
pub fn upper_quantum_certificate(
    t: &Tensor,
    theta: &ThetaWeights,
    n: usize,
    order: Option<&[usize]>,
) -> Result<UpperCertificate> {
    if n > 4 {
        return Err(SpectralError::BudgetExceeded(format!("certificate supports n ≤ 4, got {n}")));
    }
    if theta.order() != t.order() {
        return Err(SpectralError::OrderMismatch(theta.order(), t.order()));
    }
    let psi = QuantumState::from_tensor(t)?;
    let dims = psi.dims().to_vec();
    check_budget(&dims, n)?;
    let weighted: Vec<(Vec<usize>, f64)> = theta.as_bipartitions().into_iter().filter(|p| p.1 > 0.0).collect();
    let seq: Vec<(Vec<usize>, f64)> = match order {
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort_unstable();
            if sorted != (0..weighted.len()).collect::<Vec<_>>() {
                return Err(SpectralError::invalid("projector order must list each weighted bipartition once"));
            }
            o.iter().map(|&i| weighted[i].clone()).collect()
        }
        None => {
            if !theta.is_noncrossing() {
                return Err(SpectralError::Inapplicable(
                    "crossing θ: the projector product depends on the order, supply one".into(),
                ));
            }
            weighted
        }
    };
    let start = tensor_power(psi.amps(), n);
    let mut best: Option<(f64, Vec<PartitionSeq>)> = None;
    let mut surviving = 0;
    let mut stack = Vec::new();
    enumerate(&start, &dims, n, &seq, 0, 0.0, &mut stack, &mut best, &mut surviving)?;
    let (value, lams) = best.ok_or_else(|| SpectralError::VerificationFailed("no surviving projector tuple".into()))?;
    Ok(UpperCertificate {
        value,
        witness: seq.iter().map(|p| p.0.clone()).zip(lams).collect(),
        n,
        surviving_tuples: surviving,
        order: seq.iter().map(|p| p.0.clone()).collect(),
    })
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    v: &[Complex64],
    dims: &[usize],
    n: usize,
    seq: &[(Vec<usize>, f64)],
    depth: usize,
    acc: f64,
    stack: &mut Vec<PartitionSeq>,
    best: &mut Option<(f64, Vec<PartitionSeq>)>,
    surviving: &mut usize,
) -> Result<()> {
    if depth == seq.len() {
        *surviving += 1;
        if best.as_ref().is_none_or(|b| acc > b.0 + 1e-12) {
            *best = Some((acc, stack.clone()));
        }
        return Ok(());
    }
    let (s, w) = &seq[depth];
    let s_dim: usize = s.iter().map(|&l| dims[l]).product();
    let r_dim: usize = dims.iter().product::<usize>() / s_dim;
    for lam in PartitionSeq::all(n) {
        if lam.len() > s_dim.min(r_dim) {
            continue;
        }
        let p = isotypic_projector_apply(v, dims, n, s, &lam)?;
        if norm(&p) <= ZERO_NORM_TOL {
            continue;
        }
        stack.push(lam.clone());
        enumerate(&p, dims, n, seq, depth + 1, acc + w * lam.entropy(), stack, best, surviving)?;
        stack.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::binary_entropy;
    use crate::family::FamilySpec;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn antisymmetrizer_kills_symmetric_square() {
        let psi = vec![c(0.6), c(0.8)];
        let v = tensor_power(&psi, 2);
        let p = isotypic_projector_apply(&v, &[2], 2, &[0], &"1,1".parse().unwrap()).unwrap();
        assert!(norm(&p) < 1e-12);
        let s = isotypic_projector_apply(&v, &[2], 2, &[0], &"2".parse().unwrap()).unwrap();
        assert!(v.iter().zip(&s).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn unit2_certificate() {
        let t = FamilySpec::Unit { r: 2, k: 3 }.build().unwrap();
        let cert = upper_quantum_certificate(&t, &ThetaWeights::singleton(3, 0), 2, None).unwrap();
        assert!((cert.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_certificate_is_zero() {
        let t = FamilySpec::Unit { r: 1, k: 3 }.build().unwrap();
        let cert = upper_quantum_certificate(&t, &ThetaWeights::uniform(3), 2, None).unwrap();
        assert_eq!(cert.value, 0.0);
        assert_eq!(cert.surviving_tuples, 1);
    }

    #[test]
    fn w_certificate_n3() {
        let t = FamilySpec::w().build().unwrap();
        let cert = upper_quantum_certificate(&t, &ThetaWeights::uniform(3), 3, None).unwrap();
        assert!(cert.value <= binary_entropy(1.0 / 3.0) + 1e-8);
        assert!(cert.value >= 0.85, "{}", cert.value);
    }

    #[test]
    fn crossing_theta_needs_order() {
        let t = FamilySpec::Unit { r: 2, k: 4 }.build().unwrap();
        let th = ThetaWeights::bipartitions(4, vec![(vec![0, 1], 0.5), (vec![0, 2], 0.5)]).unwrap();
        assert!(matches!(
            upper_quantum_certificate(&t, &th, 2, None),
            Err(SpectralError::Inapplicable(_))
        ));
        assert!(upper_quantum_certificate(&t, &th, 2, Some(&[1, 0])).is_ok());
    }
}
