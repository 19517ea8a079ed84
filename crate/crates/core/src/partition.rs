use std::fmt;

use serde::{Deserialize, Serialize};

use crate::entropy::shannon_entropy;
use crate::error::{Result, SpectralError};

/// Integer partition with non-increasing positive parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartitionSeq {
    parts: Vec<usize>,
}

impl PartitionSeq {
    pub fn new(parts: Vec<usize>) -> Result<PartitionSeq> {
        if parts.is_empty() || parts.contains(&0) || parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(SpectralError::invalid(format!(
                "{parts:?} is not a partition (positive, non-increasing)"
            )));
        }
        Ok(PartitionSeq { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// λ̄ = λ / n.
    pub fn normalized(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.parts.iter().map(|&x| x as f64 / n).collect()
    }

    /// H(λ̄) in bits.
    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.normalized()).expect("normalized partition")
    }

    /// Dimension of the Specht module, by the hook length formula.
    pub fn dimension(&self) -> u128 {
        let n = self.n();
        let conj = self.conjugate();
        let mut hooks: u128 = 1;
        for (i, &row) in self.parts.iter().enumerate() {
            for j in 0..row {
                hooks *= (row - j + conj.parts[j] - i - 1) as u128;
            }
        }
        (1..=n as u128).product::<u128>() / hooks
    }

    pub fn conjugate(&self) -> PartitionSeq {
        let parts = (0..self.parts[0])
            .map(|j| self.parts.iter().filter(|&&r| r > j).count())
            .collect();
        PartitionSeq { parts }
    }

    /// All partitions of `n`, in decreasing lexicographic order.
    pub fn all(n: usize) -> Vec<PartitionSeq> {
        fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<PartitionSeq>) {
            if rem == 0 {
                out.push(PartitionSeq { parts: cur.clone() });
                return;
            }
            for p in (1..=rem.min(max)).rev() {
                cur.push(p);
                rec(rem - p, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            rec(n, n, &mut Vec::new(), &mut out);
        }
        out
    }
}

impl fmt::Display for PartitionSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

impl std::str::FromStr for PartitionSeq {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts = inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| SpectralError::invalid(format!("bad partition `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        PartitionSeq::new(parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (1..=8).map(|n| PartitionSeq::all(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22]);
    }

    #[test]
    fn dimensions_square_sum_to_factorial() {
        for n in 1..=7usize {
            let s: u128 = PartitionSeq::all(n).iter().map(|l| l.dimension().pow(2)).sum();
            assert_eq!(s, (1..=n as u128).product());
        }
    }

    #[test]
    fn rejects_increasing() {
        assert!(PartitionSeq::new(vec![1, 2]).is_err());
        assert!("2,1".parse::<PartitionSeq>().is_ok());
        assert_eq!("(3,1,1)".parse::<PartitionSeq>().unwrap().to_string(), "(3,1,1)");
    }
}
