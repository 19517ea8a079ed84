//! Tightness and combinatorial degeneration certificates.
//!
//! Zero-sum weightings u with Σ_i u_i(α_i) = 0 on Φ form the rational
//! nullspace N of the incidence matrix. Φ is tight iff no difference
//! u_i(x) − u_i(y) vanishes on all of N; a generic element of N then works.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};
use crate::field::{Field, Rationals};
use crate::linalg;
use crate::lp::{q, Cmp, Lp, LpOutcome};
use crate::support::SupportSet;

/// Integer leg weights `maps[i][x]` for x in 0..n_i.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightnessCertificate {
    pub maps: Vec<Vec<i64>>,
    pub injective: bool,
}

impl TightnessCertificate {
    /// Direct substitution: zero sums on Φ, and injectivity if claimed.
    pub fn verify(&self, phi: &SupportSet) -> bool {
        if !maps_fit(&self.maps, phi) {
            return false;
        }
        let zero = phi.points().iter().all(|a| weight(&self.maps, a) == 0);
        let inj = self.maps.iter().all(|m| {
            let mut v = m.clone();
            v.sort_unstable();
            v.windows(2).all(|w| w[0] != w[1])
        });
        zero && (!self.injective || inj)
    }

    /// Relabeling of each leg by rank of its weight. For an injective
    /// certificate the relabeled support is an antichain.
    pub fn leg_orders(&self) -> Vec<Vec<usize>> {
        self.maps
            .iter()
            .map(|m| {
                let mut idx: Vec<usize> = (0..m.len()).collect();
                idx.sort_by_key(|&x| (m[x], x));
                let mut rank = vec![0; m.len()];
                for (r, &x) in idx.iter().enumerate() {
                    rank[x] = r;
                }
                rank
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tightness {
    Tight(TightnessCertificate),
    /// Every zero-sum weighting has u_leg(x) = u_leg(y): proven not tight.
    NotTight { leg: usize, x: usize, y: usize },
}

impl Tightness {
    pub fn certificate(&self) -> Option<&TightnessCertificate> {
        match self {
            Tightness::Tight(c) => Some(c),
            Tightness::NotTight { .. } => None,
        }
    }
}

/// Leg orders making Φ an antichain: the identity if it already is one,
/// else the order of a tight certificate. `None` when neither applies.
pub fn oblique_order(phi: &SupportSet) -> Result<Option<Vec<Vec<usize>>>> {
    if phi.is_antichain() {
        return Ok(Some(phi.bounds().iter().map(|&n| (0..n).collect()).collect()));
    }
    Ok(check_tight(phi)?.certificate().map(|c| c.leg_orders()))
}

fn maps_fit(maps: &[Vec<i64>], phi: &SupportSet) -> bool {
    maps.len() == phi.order() && maps.iter().zip(phi.bounds()).all(|(m, &n)| m.len() == n)
}

fn weight(maps: &[Vec<i64>], a: &[usize]) -> i128 {
    a.iter().enumerate().map(|(i, &x)| maps[i][x] as i128).sum()
}

fn offsets(bounds: &[usize]) -> Vec<usize> {
    let mut off = vec![0; bounds.len()];
    for i in 1..bounds.len() {
        off[i] = off[i - 1] + bounds[i - 1];
    }
    off
}

/// Scales a rational vector to coprime integers.
fn to_integers(v: &[BigRational]) -> Result<Vec<i64>> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let g = if g.is_zero() { BigInt::one() } else { g };
    ints.iter()
        .map(|x| {
            (x / &g)
                .to_i64()
                .ok_or_else(|| SpectralError::BudgetExceeded("certificate entries overflow i64".into()))
        })
        .collect()
}

fn split(flat: &[i64], bounds: &[usize]) -> Vec<Vec<i64>> {
    let off = offsets(bounds);
    bounds
        .iter()
        .zip(&off)
        .map(|(&n, &o)| flat[o..o + n].to_vec())
        .collect()
}

fn injective_on_legs(flat: &[BigRational], bounds: &[usize]) -> bool {
    let off = offsets(bounds);
    bounds.iter().zip(&off).all(|(&n, &o)| {
        let mut v: Vec<&BigRational> = flat[o..o + n].iter().collect();
        v.sort();
        v.windows(2).all(|w| w[0] != w[1])
    })
}

/// Linear ansatz u_i(x) = a_i x + b_i with every a_i ≠ 0.
fn linear_ansatz(phi: &SupportSet) -> Option<TightnessCertificate> {
    let f = Rationals;
    let k = phi.order();
    let cols = k + 1;
    let mut rows = Vec::new();
    for a in phi.points() {
        rows.extend(a.iter().map(|&x| f.from_i64(x as i64)));
        rows.push(f.one());
    }
    let ns = linalg::nullspace(&f, phi.len(), cols, &rows);
    if ns.is_empty() {
        return None;
    }
    for m in 1..=(k as i64 + 2) {
        let mut c = vec![BigRational::zero(); cols];
        let mut pw = BigRational::one();
        for v in &ns {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += &pw * vi;
            }
            pw *= q(m + 1);
        }
        if c[..k].iter().any(|x| x.is_zero()) {
            continue;
        }
        let ints = to_integers(&c).ok()?;
        let sign = if ints[0] < 0 { -1 } else { 1 };
        let maps: Vec<Vec<i64>> = (0..k)
            .map(|i| {
                let b = if i == k - 1 { sign * ints[k] } else { 0 };
                (0..phi.bounds()[i] as i64).map(|x| sign * ints[i] * x + b).collect()
            })
            .collect();
        let cert = TightnessCertificate { maps, injective: true };
        if cert.verify(phi) {
            return Some(cert);
        }
    }
    None
}

/// Decides tightness exactly and returns a verified certificate or a forced
/// collision witness.
pub fn check_tight(phi: &SupportSet) -> Result<Tightness> {
    if phi.is_empty() {
        return Err(SpectralError::EmptySupport);
    }
    if let Some(c) = linear_ansatz(phi) {
        return Ok(Tightness::Tight(c));
    }
    let f = Rationals;
    let bounds = phi.bounds();
    let off = offsets(bounds);
    let n: usize = bounds.iter().sum();
    let mut rows = vec![f.zero(); phi.len() * n];
    for (r, a) in phi.points().iter().enumerate() {
        for (i, &x) in a.iter().enumerate() {
            rows[r * n + off[i] + x] = f.one();
        }
    }
    let ns = linalg::nullspace(&f, phi.len(), n, &rows);
    for (i, &ni) in bounds.iter().enumerate() {
        for x in 0..ni {
            for y in x + 1..ni {
                if ns.iter().all(|v| v[off[i] + x] == v[off[i] + y]) {
                    return Ok(Tightness::NotTight { leg: i, x, y });
                }
            }
        }
    }
    // small random combinations first, for readable certificates
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for attempt in 0..400 {
        let range = 1 + attempt as i64 / 50;
        let c: Vec<i64> = (0..ns.len()).map(|_| rng.random_range(-range..=range)).collect();
        let u = combine(&ns, n, |j| q(c[j]));
        if injective_on_legs(&u, bounds) {
            if let Some(cert) = finish(&u, bounds, phi)? {
                return Ok(Tightness::Tight(cert));
            }
        }
    }
    // powers of M: each bad M is a root of a nonzero polynomial of degree < dim N
    let pairs: usize = bounds.iter().map(|&b| b * b).sum();
    for m in 2..(pairs * ns.len() + 3) as i64 {
        let u = combine(&ns, n, |j| num_traits::pow(q(m), j));
        if injective_on_legs(&u, bounds) {
            if let Some(cert) = finish(&u, bounds, phi)? {
                return Ok(Tightness::Tight(cert));
            }
        }
    }
    Err(SpectralError::VerificationFailed(
        "no injective element found in a nullspace that admits one".into(),
    ))
}

fn combine(ns: &[Vec<BigRational>], n: usize, coeff: impl Fn(usize) -> BigRational) -> Vec<BigRational> {
    let mut u = vec![BigRational::zero(); n];
    for (j, v) in ns.iter().enumerate() {
        let c = coeff(j);
        if c.is_zero() {
            continue;
        }
        for (ui, vi) in u.iter_mut().zip(v) {
            *ui += &c * vi;
        }
    }
    u
}

fn finish(u: &[BigRational], bounds: &[usize], phi: &SupportSet) -> Result<Option<TightnessCertificate>> {
    let ints = to_integers(u)?;
    let cert = TightnessCertificate {
        maps: split(&ints, bounds),
        injective: true,
    };
    Ok(cert.verify(phi).then_some(cert))
}

/// Integer maps with Σu = 0 on Φ and Σu > 0 on Ψ∖Φ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerationCertificate {
    pub maps: Vec<Vec<i64>>,
}

impl DegenerationCertificate {
    pub fn verify(&self, psi: &SupportSet, phi: &SupportSet) -> bool {
        maps_fit(&self.maps, psi)
            && phi.is_subset(psi)
            && psi.points().iter().all(|a| {
                let w = weight(&self.maps, a);
                if phi.contains(a) {
                    w == 0
                } else {
                    w > 0
                }
            })
    }
}

/// Rational LP with margin 1 on Ψ∖Φ, cleared to integers and re-verified.
/// `Ok(None)` means the LP is infeasible, so no degeneration exists.
pub fn check_comb_degeneration(psi: &SupportSet, phi: &SupportSet) -> Result<Option<DegenerationCertificate>> {
    if phi.order() != psi.order() {
        return Err(SpectralError::OrderMismatch(psi.order(), phi.order()));
    }
    if !phi.is_subset(psi) {
        return Err(SpectralError::invalid("Φ is not a subset of Ψ"));
    }
    let bounds = psi.bounds();
    let off = offsets(bounds);
    let n: usize = bounds.iter().sum();
    let mut lp = Lp::new(n);
    for v in 0..n {
        lp.set_free(v);
    }
    let mut obj = vec![q(0); n];
    for a in psi.points() {
        let terms: Vec<(usize, BigRational)> = a.iter().enumerate().map(|(i, &x)| (off[i] + x, q(1))).collect();
        if phi.contains(a) {
            lp.constrain_sparse(&terms, Cmp::Eq, q(0));
        } else {
            lp.constrain_sparse(&terms, Cmp::Ge, q(1));
            for (v, _) in &terms {
                obj[*v] -= q(1);
            }
        }
    }
    // pin unused coordinates so the optimum is bounded and tidy
    for (i, &ni) in bounds.iter().enumerate() {
        for x in 0..ni {
            if !psi.points().iter().any(|a| a[i] == x) {
                lp.constrain_sparse(&[(off[i] + x, q(1))], Cmp::Eq, q(0));
            }
        }
    }
    lp.maximize(obj);
    let x = match lp.solve() {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible => return Ok(None),
        LpOutcome::Unbounded => unreachable!("objective bounded by the margin rows"),
    };
    let lcm = x.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<i64> = x
        .iter()
        .map(|v| {
            (v * &lcm)
                .to_integer()
                .to_i64()
                .ok_or_else(|| SpectralError::BudgetExceeded("certificate entries overflow i64".into()))
        })
        .collect::<Result<_>>()?;
    let cert = DegenerationCertificate { maps: split(&ints, bounds) };
    if !cert.verify(psi, phi) {
        return Err(SpectralError::VerificationFailed("degeneration certificate".into()));
    }
    Ok(Some(cert))
}
