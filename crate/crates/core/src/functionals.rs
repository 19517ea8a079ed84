//! Strassen support functionals at a basis, a seeded basis search for the
//! upper functional, gauge points and the fixed-basis instability LP.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{max_h_theta_legs, ThetaWeights};
use crate::error::{Result, SpectralError};
use crate::field::{Domain, Field};
use crate::linalg;
use crate::lp::{q, Cmp, Lp, LpOutcome};
use crate::support::SupportSet;
use crate::tensor::{with_field, Matrix, Scalar, Storage, Tensor};
use crate::tight::{check_tight, Tightness, TightnessCertificate};

/// One invertible `n_i × n_i` matrix per leg. Column j of `A_i` is the j-th
/// basis vector, so coordinates in this basis are `A_i^{-1}` applied legwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTuple {
    mats: Vec<Matrix>,
    inverses: Vec<Matrix>,
}

impl BasisTuple {
    pub fn new(mats: Vec<Matrix>) -> Result<BasisTuple> {
        let inverses = mats
            .iter()
            .enumerate()
            .map(|(i, m)| m.inverse().ok_or(SpectralError::SingularBasis(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BasisTuple { mats, inverses })
    }

    /// Built from coordinate transforms `T_i`, i.e. `A_i = T_i^{-1}`.
    pub fn from_transforms(transforms: Vec<Matrix>) -> Result<BasisTuple> {
        let mats = transforms
            .iter()
            .enumerate()
            .map(|(i, m)| m.inverse().ok_or(SpectralError::SingularBasis(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BasisTuple { mats, inverses: transforms })
    }

    pub fn standard(domain: Domain, dims: &[usize]) -> BasisTuple {
        let mats: Vec<Matrix> = dims.iter().map(|&n| Matrix::identity(domain, n)).collect();
        BasisTuple { inverses: mats.clone(), mats }
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn transforms(&self) -> &[Matrix] {
        &self.inverses
    }

    fn check(&self, t: &Tensor) -> Result<()> {
        if self.mats.len() != t.order() {
            return Err(SpectralError::OrderMismatch(self.mats.len(), t.order()));
        }
        for (i, m) in self.mats.iter().enumerate() {
            if m.domain() != t.domain() {
                return Err(SpectralError::DomainMismatch(t.domain().to_string(), m.domain().to_string()));
            }
            if m.rows != t.dims()[i] {
                return Err(SpectralError::ShapeMismatch(format!(
                    "basis matrix {} is {}x{}, leg has dimension {}",
                    i,
                    m.rows,
                    m.cols,
                    t.dims()[i]
                )));
            }
        }
        Ok(())
    }

    /// Nested rows of formatted entries, for reports.
    pub fn to_rows(&self) -> Vec<Vec<Vec<String>>> {
        self.mats
            .iter()
            .map(|m| {
                (0..m.rows)
                    .map(|r| (0..m.cols).map(|c| m.get(r, c).to_string()).collect())
                    .collect()
            })
            .collect()
    }
}

/// supp_C t: the support of t written in the basis C.
pub fn support_at_basis(t: &Tensor, basis: &BasisTuple) -> Result<SupportSet> {
    basis.check(t)?;
    Ok(t.restrict(basis.transforms())?.support())
}

fn theta_legs(theta: &ThetaWeights, k: usize) -> Result<Vec<f64>> {
    let w = theta
        .leg_weights()
        .ok_or_else(|| SpectralError::invalid("support functionals need leg weights"))?;
    if w.len() != k {
        return Err(SpectralError::OrderMismatch(w.len(), k));
    }
    Ok(w.to_vec())
}

/// H_θ(supp_C t); `-inf` for the zero tensor.
pub fn rho_upper_at_basis(t: &Tensor, basis: &BasisTuple, theta: &ThetaWeights) -> Result<f64> {
    let w = theta_legs(theta, t.order())?;
    let s = support_at_basis(t, basis)?;
    if s.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(max_h_theta_legs(&s, &w, None)?.value)
}

/// H_θ of the maximal points of supp_C t; `-inf` for the zero tensor.
pub fn rho_lower_at_basis(t: &Tensor, basis: &BasisTuple, theta: &ThetaWeights) -> Result<f64> {
    let w = theta_legs(theta, t.order())?;
    let s = support_at_basis(t, basis)?;
    if s.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(max_h_theta_legs(&s.max_points()?, &w, None)?.value)
}

/// ζ_(i)(t) = rank of the i-th flattening.
pub fn gauge_points(t: &Tensor) -> Result<Vec<usize>> {
    if t.order() == 1 {
        return Ok(vec![usize::from(!t.is_zero())]);
    }
    (0..t.order()).map(|i| t.flattening_rank(&[i])).collect()
}

#[derive(Debug, Clone)]
pub struct SearchStrategy {
    pub extra_bases: Vec<BasisTuple>,
    pub use_rref: bool,
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for SearchStrategy {
    fn default() -> Self {
        SearchStrategy {
            extra_bases: Vec::new(),
            use_rref: true,
            restarts: 50,
            steps: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportFunctionalReport {
    pub theta: Vec<f64>,
    pub basis: Vec<Vec<Vec<String>>>,
    pub support: SupportSet,
    pub rho_upper: f64,
    pub rho_lower: f64,
    pub oblique_basis_found: bool,
    pub tight_certificate: Option<TightnessCertificate>,
    /// True when the value is ρ^θ(t) itself rather than an upper bound.
    pub exact: bool,
    pub candidates_evaluated: usize,
}

impl SupportFunctionalReport {
    /// key=value lines.
    pub fn to_record(&self) -> String {
        let theta: Vec<String> = self.theta.iter().map(|x| x.to_string()).collect();
        let mut s = String::new();
        s.push_str(&format!("theta={}\n", theta.join(",")));
        s.push_str(&format!("rho_upper={}\n", self.rho_upper));
        s.push_str(&format!("rho_lower={}\n", self.rho_lower));
        s.push_str(&format!("zeta_upper={}\n", self.rho_upper.exp2()));
        s.push_str(&format!("support_size={}\n", self.support.len()));
        s.push_str(&format!("oblique_basis_found={}\n", self.oblique_basis_found));
        s.push_str(&format!("tight_certificate={}\n", self.tight_certificate.is_some()));
        s.push_str(&format!("exact={}\n", self.exact));
        s.push_str(&format!("candidates_evaluated={}\n", self.candidates_evaluated));
        s
    }
}

/// Per-leg transforms bringing each leg flattening to reduced row echelon
/// form, which zeroes out as many coordinates as Gaussian elimination can.
fn rref_transforms(t: &Tensor) -> Result<Vec<Matrix>> {
    (0..t.order())
        .map(|i| {
            let flat = t.flattening(&[i])?;
            if t.domain() == Domain::Complex {
                // exact zero tests make elimination meaningless in floating point
                return Ok(Matrix::identity(Domain::Complex, t.dims()[i]));
            }
            with_field!(t.domain(), f => {
                let data = f.view(flat.entries()).expect("own domain");
                let e = linalg::rref_transform(&f, flat.rows, flat.cols, data);
                Matrix::new(flat.rows, flat.rows, f.wrap(e))
            })
        })
        .collect()
}

/// T with row `a` replaced by row_a + c·row_b.
fn transvection(m: &Matrix, a: usize, b: usize, c: i64) -> Matrix {
    with_field!(m.domain(), f => {
        let mut d = f.view(m.entries()).expect("own domain").to_vec();
        let cc = f.from_i64(c);
        for j in 0..m.cols {
            let add = f.mul(&cc, &d[b * m.cols + j]);
            d[a * m.cols + j] = f.add(&d[a * m.cols + j], &add);
        }
        Matrix::new(m.rows, m.cols, f.wrap(d)).expect("same shape")
    })
}

/// Row x of `m` becomes row `to[x]`.
fn permute_rows(m: &Matrix, to: &[usize]) -> Matrix {
    with_field!(m.domain(), f => {
        let d = f.view(m.entries()).expect("own domain");
        let mut out = d.to_vec();
        for (x, &r) in to.iter().enumerate() {
            out[r * m.cols..(r + 1) * m.cols].clone_from_slice(&d[x * m.cols..(x + 1) * m.cols]);
        }
        Matrix::new(m.rows, m.cols, f.wrap(out)).expect("same shape")
    })
}

struct Evaluator<'a> {
    t: &'a Tensor,
    theta: Vec<f64>,
    cache: HashMap<SupportSet, f64>,
    evaluated: usize,
}

impl Evaluator<'_> {
    fn eval(&mut self, transforms: &[Matrix]) -> Result<(f64, SupportSet)> {
        self.evaluated += 1;
        let s = self.t.restrict(transforms)?.support();
        if let Some(&v) = self.cache.get(&s) {
            return Ok((v, s));
        }
        let v = max_h_theta_legs(&s, &self.theta, None)?.value;
        self.cache.insert(s.clone(), v);
        Ok((v, s))
    }
}

fn lex_better(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 - 1e-9 || (a.0 <= b.0 + 1e-9 && a.1 < b.1)
}

fn oblique_status(s: &SupportSet) -> Result<(bool, Option<TightnessCertificate>)> {
    let tight = match check_tight(s)? {
        Tightness::Tight(c) => Some(c),
        Tightness::NotTight { .. } => None,
    };
    Ok((s.is_antichain() || tight.is_some(), tight))
}

/// Minimizes H_θ(supp_C t) over a candidate pool and a seeded local search.
/// The value is always an upper bound on ρ^θ(t); it is exact once a basis
/// with antichain (or tight) support is found.
pub fn upper_support_functional(
    t: &Tensor,
    theta: &ThetaWeights,
    strategy: &SearchStrategy,
) -> Result<SupportFunctionalReport> {
    if t.is_zero() {
        return Err(SpectralError::invalid("upper support functional of the zero tensor"));
    }
    let w = theta_legs(theta, t.order())?;
    let mut ev = Evaluator {
        t,
        theta: w.clone(),
        cache: HashMap::new(),
        evaluated: 0,
    };
    let mut pool: Vec<Vec<Matrix>> = vec![BasisTuple::standard(t.domain(), t.dims()).transforms().to_vec()];
    for b in &strategy.extra_bases {
        b.check(t)?;
        pool.push(b.transforms().to_vec());
    }
    if strategy.use_rref {
        pool.push(rref_transforms(t)?);
    }

    let mut best: Option<(f64, SupportSet, Vec<Matrix>)> = None;
    let consider = |best: &mut Option<(f64, SupportSet, Vec<Matrix>)>, v: f64, s: SupportSet, tr: Vec<Matrix>| {
        let replace = match best {
            None => true,
            Some((bv, bs, _)) => lex_better((v, s.len()), (*bv, bs.len())),
        };
        if replace {
            *best = Some((v, s, tr));
        }
    };
    for tr in &pool {
        let (v, s) = ev.eval(tr)?;
        if oblique_status(&s)?.0 {
            // an oblique support attains the minimum over all bases
            return finish_report(ev.evaluated, w, v, s, tr.clone(), true);
        }
        consider(&mut best, v, s, tr.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(strategy.seed);
    let k = t.order();
    'restarts: for r in 0..strategy.restarts {
        let mut cur = pool[r % pool.len()].clone();
        let (mut cv, mut cs) = ev.eval(&cur)?;
        for _ in 0..strategy.steps {
            let leg = rng.random_range(0..k);
            let n = t.dims()[leg];
            if n < 2 {
                continue;
            }
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let mut c = rng.random_range(1..=3i64);
            if rng.random_bool(0.5) {
                c = -c;
            }
            let mut trial = cur.clone();
            trial[leg] = transvection(&cur[leg], a, b, c);
            let (v, s) = ev.eval(&trial)?;
            if lex_better((v, s.len()), (cv, cs.len())) {
                cur = trial;
                cv = v;
                cs = s;
            }
        }
        let oblique = oblique_status(&cs)?.0;
        consider(&mut best, cv, cs, cur);
        if oblique {
            break 'restarts;
        }
    }
    let (v, s, tr) = best.expect("pool is nonempty");
    let exact = oblique_status(&s)?.0;
    finish_report(ev.evaluated, w, v, s, tr, exact)
}

fn finish_report(
    evaluated: usize,
    theta: Vec<f64>,
    v: f64,
    s: SupportSet,
    tr: Vec<Matrix>,
    exact: bool,
) -> Result<SupportFunctionalReport> {
    let (oblique, tight) = oblique_status(&s)?;
    // reorder each leg by the tight weights so the reported support is an antichain
    let (s, tr) = match &tight {
        Some(c) if !s.is_antichain() => {
            let orders = c.leg_orders();
            let tr = tr.iter().zip(&orders).map(|(m, o)| permute_rows(m, o)).collect();
            (s.relabel(&orders)?, tr)
        }
        _ => (s, tr),
    };
    let lower = if s.is_antichain() {
        v
    } else {
        max_h_theta_legs(&s.max_points()?, &theta, None)?.value
    };
    let basis = BasisTuple::from_transforms(tr)?;
    Ok(SupportFunctionalReport {
        theta,
        basis: basis.to_rows(),
        support: s,
        rho_upper: v,
        rho_lower: lower,
        oblique_basis_found: oblique,
        tight_certificate: tight,
        exact,
        candidates_evaluated: evaluated,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstabilityReport {
    /// ε* as an exact rational `num/den`.
    pub epsilon_exact: String,
    pub epsilon: f64,
    pub weights: Vec<Vec<f64>>,
}

impl InstabilityReport {
    /// Right side of the instability bound: Σθ_i log₂ n_i − (2/ln2)·min θ·ε².
    pub fn bound(&self, dims: &[usize], theta: &[f64]) -> f64 {
        let base: f64 = dims.iter().zip(theta).map(|(&n, t)| t * (n as f64).log2()).sum();
        let tmin = theta.iter().copied().fold(f64::INFINITY, f64::min);
        base - 2.0 / std::f64::consts::LN_2 * tmin * self.epsilon * self.epsilon
    }
}

/// max ε subject to Σ_i w_i(a_i) ≤ Σ_i avg_x w_i(x) − ε for a ∈ supp_C t,
/// with w ≥ 0 and Σ_i max_x w_i(x) = 1. Solved exactly over Q.
pub fn instability_lp(t: &Tensor, basis: &BasisTuple) -> Result<InstabilityReport> {
    let s = support_at_basis(t, basis)?;
    if s.is_empty() {
        return Err(SpectralError::EmptySupport);
    }
    let dims = t.dims();
    let k = dims.len();
    let mut off = vec![0; k];
    for i in 1..k {
        off[i] = off[i - 1] + dims[i - 1];
    }
    let nw: usize = dims.iter().sum();
    let m0 = nw;
    let eps = nw + k;
    let nvar = eps + 1;
    let mut lp = Lp::new(nvar);
    for i in 0..k {
        for x in 0..dims[i] {
            lp.constrain_sparse(&[(m0 + i, q(1)), (off[i] + x, q(-1))], Cmp::Ge, q(0));
        }
    }
    lp.constrain_sparse(&(0..k).map(|i| (m0 + i, q(1))).collect::<Vec<_>>(), Cmp::Eq, q(1));
    for a in s.points() {
        let mut terms = vec![(eps, q(1))];
        for i in 0..k {
            terms.push((off[i] + a[i], q(1)));
            let avg = BigRational::new(1.into(), (dims[i] as i64).into());
            for x in 0..dims[i] {
                terms.push((off[i] + x, -avg.clone()));
            }
        }
        lp.constrain_sparse(&terms, Cmp::Le, q(0));
    }
    let mut obj = vec![q(0); nvar];
    obj[eps] = q(1);
    lp.maximize(obj);
    let (x, value) = match lp.solve() {
        LpOutcome::Optimal { x, value } => (x, value),
        other => return Err(SpectralError::OptimizerFailure(format!("instability LP: {other:?}"))),
    };
    let weights = (0..k)
        .map(|i| (0..dims[i]).map(|j| x[off[i] + j].to_f64().unwrap_or(f64::NAN)).collect())
        .collect();
    Ok(InstabilityReport {
        epsilon_exact: Scalar::Rational(value.clone()).to_string(),
        epsilon: value.to_f64().unwrap_or(f64::NAN),
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::binary_entropy;
    use crate::family::FamilySpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_is_exact_at_standard_basis() {
        for r in 1..=4 {
            let t = FamilySpec::Unit { r, k: 3 }.build().unwrap();
            let rep = upper_support_functional(&t, &ThetaWeights::uniform(3), &SearchStrategy::default()).unwrap();
            assert!(rep.exact && rep.oblique_basis_found);
            assert_abs_diff_eq!(rep.rho_upper, (r as f64).log2(), epsilon = 1e-9);
            assert_eq!(rep.candidates_evaluated, 1);
            assert_abs_diff_eq!(rep.rho_lower, rep.rho_upper, epsilon = 1e-9);
            assert!(rep.support.is_antichain());
            let b = BasisTuple::new(
                rep.basis
                    .iter()
                    .map(|rows| {
                        let e: Vec<i64> = rows.iter().flatten().map(|x| x.parse().unwrap()).collect();
                        Matrix::from_i64(t.domain(), rows.len(), rows.len(), &e).unwrap()
                    })
                    .collect(),
            )
            .unwrap();
            assert_eq!(support_at_basis(&t, &b).unwrap(), rep.support);
        }
    }

    #[test]
    fn cw_standard_value() {
        let t = FamilySpec::Cw(2).build().unwrap();
        let b = BasisTuple::standard(t.domain(), t.dims());
        let v = rho_upper_at_basis(&t, &b, &ThetaWeights::uniform(3)).unwrap();
        assert_abs_diff_eq!(v, 2.0 / 3.0 + binary_entropy(1.0 / 3.0), epsilon = 1e-8);
    }

    #[test]
    fn toy_lower_single_max_point() {
        let s = Tensor::from_entries(
            Domain::Rational,
            vec![2, 2],
            [(vec![0, 0], Scalar::int(1)), (vec![0, 1], Scalar::int(1)), (vec![1, 1], Scalar::int(1))],
        )
        .unwrap();
        let b = BasisTuple::standard(Domain::Rational, &[2, 2]);
        let th = ThetaWeights::uniform(2);
        assert_eq!(rho_lower_at_basis(&s, &b, &th).unwrap(), 0.0);
        assert!(rho_upper_at_basis(&s, &b, &th).unwrap() > 0.5);
    }

    #[test]
    fn singular_basis_rejected() {
        let m = Matrix::from_i64(Domain::Rational, 2, 2, &[1, 1, 1, 1]).unwrap();
        let id = Matrix::identity(Domain::Rational, 2);
        assert_eq!(
            BasisTuple::new(vec![id.clone(), m, id]).unwrap_err(),
            SpectralError::SingularBasis(1)
        );
    }

    #[test]
    fn gauge_points_matmul_and_cw() {
        let t = FamilySpec::MatMul { a: 1, b: 2, c: 3 }.build().unwrap();
        assert_eq!(gauge_points(&t).unwrap(), vec![2, 6, 3]);
        let cw = FamilySpec::Cw(3).build().unwrap();
        assert_eq!(gauge_points(&cw).unwrap(), vec![4, 4, 4]);
    }

    #[test]
    fn instability_examples() {
        let unit = FamilySpec::Unit { r: 3, k: 3 }.build().unwrap();
        let b = BasisTuple::standard(Domain::Rational, unit.dims());
        assert_eq!(instability_lp(&unit, &b).unwrap().epsilon, 0.0);
        let pt = Tensor::from_entries(Domain::Rational, vec![2, 2, 2], [(vec![0, 0, 0], Scalar::int(1))]).unwrap();
        let b = BasisTuple::standard(Domain::Rational, pt.dims());
        let rep = instability_lp(&pt, &b).unwrap();
        assert_eq!(rep.epsilon_exact, "1/2");
        assert!(rep.bound(pt.dims(), &[1.0 / 3.0; 3]) >= 0.0);
    }
}
