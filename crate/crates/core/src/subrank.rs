//! Subrank of a support set: the largest free diagonal.
//!
//! D ⊆ Φ is a free diagonal when its points pairwise differ in every
//! coordinate and Φ ∩ (D_1 × … × D_k) = D. The property is inherited by
//! subsets, so a branch and bound over points can prune on violation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};
use crate::support::SupportSet;

pub const DEFAULT_POINT_BUDGET: usize = 5000;
pub const DEFAULT_NODE_BUDGET: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubrankResult {
    pub size: usize,
    pub diagonal: Vec<Vec<usize>>,
    /// False when the node budget ran out; `size` is then a lower bound.
    pub exact: bool,
}

pub fn is_free_diagonal(phi: &SupportSet, d: &[Vec<usize>]) -> bool {
    for (i, a) in d.iter().enumerate() {
        if !phi.contains(a) {
            return false;
        }
        for b in &d[i + 1..] {
            if a.iter().zip(b).any(|(x, y)| x == y) {
                return false;
            }
        }
    }
    phi.points().iter().all(|p| {
        let inside = (0..phi.order()).all(|i| d.iter().any(|a| a[i] == p[i]));
        !inside || d.contains(p)
    })
}

pub fn subrank_set(phi: &SupportSet) -> Result<SubrankResult> {
    subrank_set_with_budget(phi, DEFAULT_POINT_BUDGET, DEFAULT_NODE_BUDGET)
}

pub fn subrank_set_with_budget(phi: &SupportSet, max_points: usize, max_nodes: u64) -> Result<SubrankResult> {
    if phi.len() > max_points {
        return Err(SpectralError::BudgetExceeded(format!(
            "{} points exceeds the budget of {max_points}",
            phi.len()
        )));
    }
    if phi.is_empty() {
        return Ok(SubrankResult { size: 0, diagonal: vec![], exact: true });
    }
    let mut s = Search {
        phi,
        pts: phi.points(),
        best: vec![],
        nodes: 0,
        max_nodes,
        exhausted: false,
    };
    let cand: Vec<usize> = (0..phi.len()).collect();
    s.branch(&mut Vec::new(), &cand);
    let diagonal: Vec<Vec<usize>> = s.best.iter().map(|&i| phi.points()[i].clone()).collect();
    if !is_free_diagonal(phi, &diagonal) {
        return Err(SpectralError::VerificationFailed("subrank witness".into()));
    }
    Ok(SubrankResult {
        size: diagonal.len(),
        diagonal,
        exact: !s.exhausted,
    })
}

struct Search<'a> {
    phi: &'a SupportSet,
    pts: &'a [Vec<usize>],
    best: Vec<usize>,
    nodes: u64,
    max_nodes: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn bound(&self, chosen: usize, cand: &[usize]) -> usize {
        let k = self.phi.order();
        let per_leg = (0..k)
            .map(|i| {
                let mut v: Vec<usize> = cand.iter().map(|&c| self.pts[c][i]).collect();
                v.sort_unstable();
                v.dedup();
                v.len()
            })
            .min()
            .unwrap_or(0);
        chosen + per_leg.min(cand.len())
    }

    /// Adding `a` to `chosen` keeps the box condition.
    fn box_ok(&self, chosen: &[usize], a: usize) -> bool {
        let k = self.phi.order();
        let pa = &self.pts[a];
        self.pts.iter().enumerate().all(|(j, p)| {
            if j == a || chosen.contains(&j) {
                return true;
            }
            let mut uses_a = false;
            for i in 0..k {
                if p[i] == pa[i] {
                    uses_a = true;
                } else if !chosen.iter().any(|&c| self.pts[c][i] == p[i]) {
                    return true;
                }
            }
            !uses_a
        })
    }

    fn branch(&mut self, chosen: &mut Vec<usize>, cand: &[usize]) {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            self.exhausted = true;
            return;
        }
        if chosen.len() > self.best.len() {
            self.best = chosen.clone();
        }
        for (idx, &a) in cand.iter().enumerate() {
            let rest = &cand[idx..];
            if self.bound(chosen.len(), rest) <= self.best.len() || self.exhausted {
                return;
            }
            if !self.box_ok(chosen, a) {
                continue;
            }
            let pa = &self.pts[a];
            let next: Vec<usize> = cand[idx + 1..]
                .iter()
                .copied()
                .filter(|&b| self.pts[b].iter().zip(pa).all(|(x, y)| x != y))
                .collect();
            chosen.push(a);
            self.branch(chosen, &next);
            chosen.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(phi: &SupportSet) -> usize {
        let n = phi.len();
        (0u32..1 << n)
            .filter_map(|mask| {
                let d: Vec<Vec<usize>> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| phi.points()[i].clone()).collect();
                is_free_diagonal(phi, &d).then_some(d.len())
            })
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn unit_and_w() {
        let unit = SupportSet::new(vec![4; 3], (0..4).map(|i| vec![i; 3]).collect()).unwrap();
        assert_eq!(subrank_set(&unit).unwrap().size, 4);
        let w = SupportSet::new(vec![2; 3], vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]).unwrap();
        let r = subrank_set(&w).unwrap();
        assert_eq!((r.size, r.exact), (1, true));
        assert_eq!(brute(&w), 1);
    }

    #[test]
    fn box_condition_matters() {
        // (0,0) and (1,1) are pairwise fine, but (0,1) lies in their box
        let s = SupportSet::new(vec![2, 2], vec![vec![0, 0], vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!(subrank_set(&s).unwrap().size, 1);
        assert_eq!(brute(&s), 1);
    }

    #[test]
    fn budget_flags_inexact() {
        let unit = SupportSet::new(vec![6; 3], (0..6).map(|i| vec![i; 3]).collect()).unwrap();
        let r = subrank_set_with_budget(&unit, 100, 2).unwrap();
        assert!(!r.exact);
        assert!(subrank_set_with_budget(&unit, 3, 100).is_err());
    }
}
