//! Small exact linear programs over Q: dense two-phase simplex with Bland's
//! rule, so it cannot cycle and answers are exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

/// maximize `objective · x` subject to the rows; variables are `≥ 0` unless
/// marked free.
#[derive(Debug, Clone)]
pub struct Lp {
    n: usize,
    free: Vec<bool>,
    rows: Vec<(Vec<Q>, Cmp, Q)>,
    objective: Vec<Q>,
}

impl Lp {
    pub fn new(n: usize) -> Lp {
        Lp {
            n,
            free: vec![false; n],
            rows: Vec::new(),
            objective: vec![Q::zero(); n],
        }
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn constrain(&mut self, coeffs: Vec<Q>, cmp: Cmp, rhs: Q) {
        assert_eq!(coeffs.len(), self.n);
        self.rows.push((coeffs, cmp, rhs));
    }

    /// Sparse variant: `(var, coeff)` pairs.
    pub fn constrain_sparse(&mut self, terms: &[(usize, Q)], cmp: Cmp, rhs: Q) {
        let mut c = vec![Q::zero(); self.n];
        for (v, a) in terms {
            c[*v] += a;
        }
        self.constrain(c, cmp, rhs);
    }

    pub fn maximize(&mut self, objective: Vec<Q>) {
        assert_eq!(objective.len(), self.n);
        self.objective = objective;
    }

    pub fn solve(&self) -> LpOutcome {
        // column layout: one column per nonneg var, two per free var
        let mut col_of = Vec::with_capacity(self.n);
        let mut ncols = 0;
        for &f in &self.free {
            col_of.push(ncols);
            ncols += if f { 2 } else { 1 };
        }
        let expand = |coeffs: &[Q]| -> Vec<Q> {
            let mut out = vec![Q::zero(); ncols];
            for (v, a) in coeffs.iter().enumerate() {
                out[col_of[v]] = a.clone();
                if self.free[v] {
                    out[col_of[v] + 1] = -a;
                }
            }
            out
        };

        let m = self.rows.len();
        let n_slack = self.rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let n_struct = ncols + n_slack;
        let total = n_struct + m;
        let mut t: Vec<Vec<Q>> = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack = ncols;
        for (i, (coeffs, cmp, rhs)) in self.rows.iter().enumerate() {
            let mut row = expand(coeffs);
            row.resize(total + 1, Q::zero());
            match cmp {
                Cmp::Le => row[slack] = Q::one(),
                Cmp::Ge => row[slack] = -Q::one(),
                Cmp::Eq => {}
            }
            if *cmp != Cmp::Eq {
                slack += 1;
            }
            row[total] = rhs.clone();
            if rhs.is_negative() {
                for x in row.iter_mut() {
                    *x = -x.clone();
                }
            }
            row[n_struct + i] = Q::one();
            t.push(row);
            basis.push(n_struct + i);
        }

        // phase 1: minimize the artificial sum, i.e. maximize its negation
        let mut phase1 = vec![Q::zero(); total];
        for c in phase1.iter_mut().skip(n_struct) {
            *c = -Q::one();
        }
        let allowed: Vec<bool> = vec![true; total];
        if run_simplex(&mut t, &mut basis, &phase1, &allowed).is_err() {
            unreachable!("phase one is bounded");
        }
        let art_sum: Q = basis
            .iter()
            .zip(&t)
            .filter(|(b, _)| **b >= n_struct)
            .map(|(_, r)| r[total].clone())
            .sum();
        if !art_sum.is_zero() {
            return LpOutcome::Infeasible;
        }
        // drive zero-level artificials out of the basis
        let mut r = 0;
        while r < t.len() {
            if basis[r] >= n_struct {
                if let Some(c) = (0..n_struct).find(|&c| !t[r][c].is_zero()) {
                    pivot(&mut t, &mut basis, r, c);
                } else {
                    t.remove(r);
                    basis.remove(r);
                    continue;
                }
            }
            r += 1;
        }

        let mut obj = expand(&self.objective);
        obj.resize(total, Q::zero());
        let mut allowed = vec![true; total];
        for a in allowed.iter_mut().skip(n_struct) {
            *a = false;
        }
        if run_simplex(&mut t, &mut basis, &obj, &allowed).is_err() {
            return LpOutcome::Unbounded;
        }
        let mut cols = vec![Q::zero(); total];
        for (r, &b) in basis.iter().enumerate() {
            cols[b] = t[r][total].clone();
        }
        let x: Vec<Q> = (0..self.n)
            .map(|v| {
                let c = col_of[v];
                if self.free[v] {
                    &cols[c] - &cols[c + 1]
                } else {
                    cols[c].clone()
                }
            })
            .collect();
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}

fn pivot(t: &mut [Vec<Q>], basis: &mut [usize], r: usize, c: usize) {
    let inv = t[r][c].recip();
    for x in t[r].iter_mut() {
        *x *= &inv;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r || row[c].is_zero() {
            continue;
        }
        let f = row[c].clone();
        for (x, p) in row.iter_mut().zip(&prow) {
            if !p.is_zero() {
                *x -= &f * p;
            }
        }
    }
    basis[r] = c;
}

/// Maximizes `obj` from the current feasible basis. `Err` means unbounded.
fn run_simplex(t: &mut [Vec<Q>], basis: &mut [usize], obj: &[Q], allowed: &[bool]) -> Result<(), ()> {
    let total = obj.len();
    loop {
        // reduced cost_j = obj_j − Σ_r obj_{basis r} · t[r][j]
        let mut enter = None;
        for j in 0..total {
            if !allowed[j] || basis.contains(&j) {
                continue;
            }
            let mut rc = obj[j].clone();
            for (r, &b) in basis.iter().enumerate() {
                if !obj[b].is_zero() && !t[r][j].is_zero() {
                    rc -= &obj[b] * &t[r][j];
                }
            }
            if rc.is_positive() {
                enter = Some(j);
                break;
            }
        }
        let Some(c) = enter else { return Ok(()) };
        let mut leave: Option<(usize, Q)> = None;
        for r in 0..t.len() {
            if t[r][c].is_positive() {
                let ratio = &t[r][total] / &t[r][c];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { return Err(()) };
        pivot(t, basis, r, c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_optimum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = Lp::new(2);
        lp.constrain(vec![q(1), q(0)], Cmp::Le, q(4));
        lp.constrain(vec![q(0), q(2)], Cmp::Le, q(12));
        lp.constrain(vec![q(3), q(2)], Cmp::Le, q(18));
        lp.maximize(vec![q(3), q(5)]);
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                x: vec![q(2), q(6)],
                value: q(36)
            }
        );
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = Lp::new(1);
        lp.constrain(vec![q(1)], Cmp::Ge, q(2));
        lp.constrain(vec![q(1)], Cmp::Le, q(1));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = Lp::new(1);
        lp.set_free(0);
        lp.constrain(vec![q(1)], Cmp::Le, q(1));
        lp.maximize(vec![q(-1)]);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variable_goes_negative() {
        let mut lp = Lp::new(2);
        lp.set_free(0);
        lp.constrain(vec![q(1), q(1)], Cmp::Eq, q(-3));
        lp.constrain(vec![q(0), q(1)], Cmp::Le, q(5));
        lp.maximize(vec![q(0), q(1)]);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, q(5));
                assert_eq!(x[0], q(-8));
            }
            o => panic!("{o:?}"),
        }
    }
}
