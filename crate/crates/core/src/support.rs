//! Finite sets of index tuples under the coordinatewise product order.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};

/// Sorted, duplicate-free set of k-tuples with `0 ≤ α_i < n_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    bounds: Vec<usize>,
    points: Vec<Vec<usize>>,
}

impl SupportSet {
    pub fn new(bounds: Vec<usize>, mut points: Vec<Vec<usize>>) -> Result<SupportSet> {
        if bounds.is_empty() || bounds.contains(&0) {
            return Err(SpectralError::ShapeMismatch(format!("bad index bounds {bounds:?}")));
        }
        for p in &points {
            if p.len() != bounds.len() || p.iter().zip(&bounds).any(|(a, n)| a >= n) {
                return Err(SpectralError::ShapeMismatch(format!(
                    "point {p:?} outside bounds {bounds:?}"
                )));
            }
        }
        points.sort();
        points.dedup();
        Ok(SupportSet { bounds, points })
    }

    pub(crate) fn from_sorted_unchecked(bounds: Vec<usize>, points: Vec<Vec<usize>>) -> SupportSet {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        SupportSet { bounds, points }
    }

    pub fn order(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    pub fn points(&self) -> &[Vec<usize>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &[usize]) -> bool {
        self.points.binary_search_by(|q| q.as_slice().cmp(p)).is_ok()
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    /// Same points, new bounds (must still contain every point).
    pub fn with_bounds(&self, bounds: Vec<usize>) -> Result<SupportSet> {
        SupportSet::new(bounds, self.points.clone())
    }

    /// Distinct values taken on leg `i`, ascending.
    pub fn leg_values(&self, i: usize) -> Vec<usize> {
        let s: BTreeSet<usize> = self.points.iter().map(|p| p[i]).collect();
        s.into_iter().collect()
    }

    /// Points with no strictly larger point in the set.
    pub fn max_points(&self) -> Result<SupportSet> {
        if self.is_empty() {
            return Err(SpectralError::EmptySupport);
        }
        let points = self
            .points
            .iter()
            .filter(|a| !self.points.iter().any(|b| strictly_below(a, b)))
            .cloned()
            .collect();
        Ok(SupportSet::from_sorted_unchecked(self.bounds.clone(), points))
    }

    /// Smallest downward-closed superset within the same bounds.
    pub fn downward_closure(&self) -> SupportSet {
        let mut all = BTreeSet::new();
        for p in &self.points {
            let dims: Vec<usize> = p.iter().map(|x| x + 1).collect();
            let total: usize = dims.iter().product();
            for flat in 0..total {
                all.insert(crate::tensor::unflatten(flat, &dims));
            }
        }
        SupportSet::from_sorted_unchecked(self.bounds.clone(), all.into_iter().collect())
    }

    pub fn is_antichain(&self) -> bool {
        self.points
            .iter()
            .all(|a| !self.points.iter().any(|b| strictly_below(a, b)))
    }

    /// Every two distinct points differ in at least two coordinates.
    pub fn is_free(&self) -> bool {
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                if a.iter().zip(b).filter(|(x, y)| x != y).count() < 2 {
                    return false;
                }
            }
        }
        true
    }

    /// Support of the tensor product: leg i pairs `(a, b)` to `a · n'_i + b`.
    pub fn product(&self, other: &SupportSet) -> Result<SupportSet> {
        if self.order() != other.order() {
            return Err(SpectralError::OrderMismatch(self.order(), other.order()));
        }
        let bounds: Vec<usize> = self.bounds.iter().zip(&other.bounds).map(|(a, b)| a * b).collect();
        let mut pts = Vec::with_capacity(self.len() * other.len());
        for a in &self.points {
            for b in &other.points {
                pts.push(
                    (0..a.len())
                        .map(|i| a[i] * other.bounds[i] + b[i])
                        .collect(),
                );
            }
        }
        SupportSet::new(bounds, pts)
    }

    /// Leg `i` of the result is leg `perm[i]` of `self`.
    pub fn permute_legs(&self, perm: &[usize]) -> Result<SupportSet> {
        let k = self.order();
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (0..k).collect::<Vec<_>>() {
            return Err(SpectralError::invalid(format!("{perm:?} is not a permutation")));
        }
        SupportSet::new(
            perm.iter().map(|&p| self.bounds[p]).collect(),
            self.points.iter().map(|a| perm.iter().map(|&p| a[p]).collect()).collect(),
        )
    }

    /// Applies a relabeling `maps[i][x]` to every coordinate.
    pub fn relabel(&self, maps: &[Vec<usize>]) -> Result<SupportSet> {
        if maps.len() != self.order() {
            return Err(SpectralError::OrderMismatch(maps.len(), self.order()));
        }
        SupportSet::new(
            maps.iter().map(|m| m.len()).collect(),
            self.points
                .iter()
                .map(|a| a.iter().enumerate().map(|(i, &x)| maps[i][x]).collect())
                .collect(),
        )
    }

    /// Header `k n_1 … n_k`, then one tuple per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.order(), join(&self.bounds));
        for p in &self.points {
            s.push_str(&join(p));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<SupportSet> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| SpectralError::parse(1, "missing header"))?;
        let h = parse_row(hl, header)?;
        if h.is_empty() || h.len() != h[0] + 1 {
            return Err(SpectralError::parse(hl, "header must be `k n_1 ... n_k`"));
        }
        let k = h[0];
        let mut pts = Vec::new();
        for (n, line) in lines {
            let p = parse_row(n, line)?;
            if p.len() != k {
                return Err(SpectralError::parse(n, format!("expected {k} indices")));
            }
            pts.push(p);
        }
        SupportSet::new(h[1..].to_vec(), pts)
    }
}

fn strictly_below(a: &[usize], b: &[usize]) -> bool {
    a != b && a.iter().zip(b).all(|(x, y)| x <= y)
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_row(line: usize, s: &str) -> Result<Vec<usize>> {
    s.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| SpectralError::parse(line, format!("`{t}`: {e}"))))
        .collect()
}
