//! Named tensor families.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};
use crate::field::{is_prime, Domain};
use crate::partition::PartitionSeq;
use crate::support::SupportSet;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilySpec {
    /// Σ_{i<r} e_i^{⊗k}.
    Unit { r: usize, k: usize },
    /// Sum of all tuples in which value j occurs λ_j times; order k = |λ|.
    Dicke(PartitionSeq),
    /// Σ_{i=1..q} |0ii⟩ + |i0i⟩ + |ii0⟩, unnormalized.
    Cw(usize),
    /// Σ e_{ij} ⊗ e_{jl} ⊗ e_{li}.
    MatMul { a: usize, b: usize, c: usize },
    /// Truncated multiplication of F[x]/(x^n): α_1 + α_2 = α_3.
    PolyMultMod(usize),
    /// α_1 + α_2 + α_3 ≡ 0 (mod m) over F_p.
    CapSet { m: usize, p: u64 },
}

impl FamilySpec {
    pub fn w() -> FamilySpec {
        FamilySpec::Dicke(PartitionSeq::new(vec![2, 1]).expect("valid"))
    }

    pub fn domain(&self) -> Domain {
        match self {
            FamilySpec::CapSet { p, .. } => Domain::Prime(*p),
            _ => Domain::Rational,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SpectralError::invalid(m.to_string()));
        match self {
            FamilySpec::Unit { r, k } if *r == 0 || *k == 0 => bad("unit needs r ≥ 1 and k ≥ 1"),
            FamilySpec::Cw(0) => bad("cw needs q ≥ 1"),
            FamilySpec::MatMul { a, b, c } if *a == 0 || *b == 0 || *c == 0 => {
                bad("matmul dimensions must be positive")
            }
            FamilySpec::PolyMultMod(0) => bad("polymult needs n ≥ 1"),
            FamilySpec::CapSet { m, p } => {
                if !is_prime(*p) {
                    return bad("capset modulus p must be prime");
                }
                if *m < 2 {
                    return bad("capset needs m ≥ 2");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The support in the standard basis.
    pub fn support(&self) -> Result<SupportSet> {
        self.validate()?;
        let (bounds, pts): (Vec<usize>, Vec<Vec<usize>>) = match self {
            FamilySpec::Unit { r, k } => (vec![*r; *k], (0..*r).map(|i| vec![i; *k]).collect()),
            FamilySpec::Dicke(lambda) => {
                let k = lambda.n();
                let d = lambda.len();
                let mut pts = Vec::new();
                let mut counts = vec![0usize; d];
                dicke_rec(lambda.parts(), &mut counts, &mut Vec::with_capacity(k), &mut pts);
                (vec![d; k], pts)
            }
            FamilySpec::Cw(q) => {
                let mut pts = Vec::new();
                for i in 1..=*q {
                    pts.push(vec![0, i, i]);
                    pts.push(vec![i, 0, i]);
                    pts.push(vec![i, i, 0]);
                }
                (vec![q + 1; 3], pts)
            }
            FamilySpec::MatMul { a, b, c } => {
                let (a, b, c) = (*a, *b, *c);
                let mut pts = Vec::new();
                for i in 0..a {
                    for j in 0..b {
                        for l in 0..c {
                            pts.push(vec![i * b + j, j * c + l, l * a + i]);
                        }
                    }
                }
                (vec![a * b, b * c, c * a], pts)
            }
            FamilySpec::PolyMultMod(n) => {
                let n = *n;
                let pts = (0..n)
                    .flat_map(|x| (0..n - x).map(move |y| vec![x, y, x + y]))
                    .collect();
                (vec![n; 3], pts)
            }
            FamilySpec::CapSet { m, .. } => {
                let m = *m;
                let pts = (0..m)
                    .flat_map(|x| (0..m).map(move |y| vec![x, y, (2 * m - x - y) % m]))
                    .collect();
                (vec![m; 3], pts)
            }
        };
        SupportSet::new(bounds, pts)
    }

    /// The tensor with coefficient 1 on its support.
    pub fn build(&self) -> Result<Tensor> {
        Tensor::indicator(self.domain(), &self.support()?)
    }
}

fn dicke_rec(lambda: &[usize], counts: &mut [usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == lambda.iter().sum::<usize>() {
        out.push(cur.clone());
        return;
    }
    for v in 0..lambda.len() {
        if counts[v] < lambda[v] {
            counts[v] += 1;
            cur.push(v);
            dicke_rec(lambda, counts, cur, out);
            cur.pop();
            counts[v] -= 1;
        }
    }
}

pub fn build_family(spec: &FamilySpec) -> Result<Tensor> {
    spec.build()
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Unit { r, k } => write!(f, "unit:{r}:{k}"),
            FamilySpec::Dicke(l) => {
                let parts: Vec<String> = l.parts().iter().map(|p| p.to_string()).collect();
                write!(f, "dicke:{}", parts.join(","))
            }
            FamilySpec::Cw(q) => write!(f, "cw:{q}"),
            FamilySpec::MatMul { a, b, c } => write!(f, "matmul:{a},{b},{c}"),
            FamilySpec::PolyMultMod(n) => write!(f, "polymult:{n}"),
            FamilySpec::CapSet { m, p } => write!(f, "capset:{m},{p}"),
        }
    }
}

/// Accepts `unit:r[:k]`, `W`, `dicke:2,1`, `cw:q`, `matmul:a,b,c`,
/// `polymult:n`, `capset:m,p`.
impl std::str::FromStr for FamilySpec {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SpectralError::invalid(format!("unknown family `{s}`"));
        let nums = |t: &str| -> Result<Vec<usize>> {
            t.split([',', ':'])
                .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
                .collect()
        };
        if s.eq_ignore_ascii_case("w") {
            return Ok(FamilySpec::w());
        }
        let (name, args) = s.split_once(':').ok_or_else(bad)?;
        let v = nums(args)?;
        let spec = match (name.to_ascii_lowercase().as_str(), v.as_slice()) {
            ("unit", [r]) => FamilySpec::Unit { r: *r, k: 3 },
            ("unit", [r, k]) => FamilySpec::Unit { r: *r, k: *k },
            ("dicke", parts) => FamilySpec::Dicke(PartitionSeq::new(parts.to_vec())?),
            ("cw", [q]) => FamilySpec::Cw(*q),
            ("matmul", [a, b, c]) => FamilySpec::MatMul { a: *a, b: *b, c: *c },
            ("polymult", [n]) => FamilySpec::PolyMultMod(*n),
            ("capset", [m, p]) => FamilySpec::CapSet { m: *m, p: *p as u64 },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}
