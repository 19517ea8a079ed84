//! Dense order-k tensors over Q, C or F_p, the semiring operations, restriction
//! by legwise linear maps, flattening ranks and the text file format.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Result, SpectralError};
use crate::field::{Complexes, Domain, Field, PrimeField, Rationals};
use crate::linalg;
use crate::support::SupportSet;

/// Relative threshold below which a complex entry counts as zero when reading
/// off a support.
pub const COMPLEX_SUPPORT_TOL: f64 = 1e-9;

/// Entry storage, tagged by domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Rational(Vec<BigRational>),
    Complex(Vec<Complex64>),
    Prime { p: u64, values: Vec<u64> },
}

impl Entries {
    pub fn domain(&self) -> Domain {
        match self {
            Entries::Rational(_) => Domain::Rational,
            Entries::Complex(_) => Domain::Complex,
            Entries::Prime { p, .. } => Domain::Prime(*p),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Entries::Rational(v) => v.len(),
            Entries::Complex(v) => v.len(),
            Entries::Prime { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros(domain: Domain, len: usize) -> Entries {
        match domain {
            Domain::Rational => Entries::Rational(vec![BigRational::zero(); len]),
            Domain::Complex => Entries::Complex(vec![Complex64::new(0.0, 0.0); len]),
            Domain::Prime(p) => Entries::Prime {
                p,
                values: vec![0; len],
            },
        }
    }

    fn get(&self, i: usize) -> Scalar {
        match self {
            Entries::Rational(v) => Scalar::Rational(v[i].clone()),
            Entries::Complex(v) => Scalar::Complex(v[i]),
            Entries::Prime { values, .. } => Scalar::Prime(values[i]),
        }
    }

    fn set(&mut self, i: usize, s: Scalar) -> Result<()> {
        match (self, s) {
            (Entries::Rational(v), Scalar::Rational(x)) => v[i] = x,
            (Entries::Complex(v), Scalar::Complex(x)) => v[i] = x,
            (Entries::Complex(v), Scalar::Rational(x)) => {
                v[i] = Complex64::new(x.to_f64().unwrap_or(f64::NAN), 0.0)
            }
            (Entries::Prime { p, values }, Scalar::Prime(x)) => values[i] = x % *p,
            (Entries::Prime { p, values }, Scalar::Rational(x)) => {
                values[i] = rational_mod_p(&x, *p)?;
            }
            (e, s) => {
                return Err(SpectralError::DomainMismatch(
                    e.domain().to_string(),
                    s.domain_name().to_string(),
                ))
            }
        }
        Ok(())
    }

    fn is_nonzero_at(&self, i: usize, complex_cut: f64) -> bool {
        match self {
            Entries::Rational(v) => !v[i].is_zero(),
            Entries::Complex(v) => v[i].norm() > complex_cut,
            Entries::Prime { values, .. } => values[i] != 0,
        }
    }

    fn complex_cut(&self) -> f64 {
        match self {
            Entries::Complex(v) => {
                let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                max * COMPLEX_SUPPORT_TOL
            }
            _ => 0.0,
        }
    }
}

/// Storage hooks that tie a field context to its `Entries` variant.
pub trait Storage: Field {
    fn wrap(&self, v: Vec<Self::Elem>) -> Entries;
    fn view<'a>(&self, e: &'a Entries) -> Option<&'a [Self::Elem]>;
}

impl Storage for Rationals {
    fn wrap(&self, v: Vec<BigRational>) -> Entries {
        Entries::Rational(v)
    }
    fn view<'a>(&self, e: &'a Entries) -> Option<&'a [BigRational]> {
        match e {
            Entries::Rational(v) => Some(v),
            _ => None,
        }
    }
}

impl Storage for Complexes {
    fn wrap(&self, v: Vec<Complex64>) -> Entries {
        Entries::Complex(v)
    }
    fn view<'a>(&self, e: &'a Entries) -> Option<&'a [Complex64]> {
        match e {
            Entries::Complex(v) => Some(v),
            _ => None,
        }
    }
}

impl Storage for PrimeField {
    fn wrap(&self, values: Vec<u64>) -> Entries {
        Entries::Prime { p: self.p, values }
    }
    fn view<'a>(&self, e: &'a Entries) -> Option<&'a [u64]> {
        match e {
            Entries::Prime { p, values } if *p == self.p => Some(values),
            _ => None,
        }
    }
}

/// Runs `$body` with `$f` bound to the field context for `$domain`.
macro_rules! with_field {
    ($domain:expr, $f:ident => $body:expr) => {
        match $domain {
            $crate::field::Domain::Rational => {
                let $f = $crate::field::Rationals;
                $body
            }
            $crate::field::Domain::Complex => {
                let $f = $crate::field::Complexes;
                $body
            }
            $crate::field::Domain::Prime(p) => {
                let $f = $crate::field::PrimeField { p };
                $body
            }
        }
    };
}
pub(crate) use with_field;

/// A single scalar, used for entry access and the file format.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    Complex(Complex64),
    Prime(u64),
}

impl Scalar {
    pub fn int(v: i64) -> Scalar {
        Scalar::Rational(BigRational::from_integer(BigInt::from(v)))
    }

    fn domain_name(&self) -> &'static str {
        match self {
            Scalar::Rational(_) => "Q",
            Scalar::Complex(_) => "C",
            Scalar::Prime(_) => "Fp",
        }
    }

    pub fn parse(domain: Domain, s: &str) -> Result<Scalar> {
        let bad = || SpectralError::invalid(format!("cannot parse `{s}` as {domain} scalar"));
        match domain {
            Domain::Rational => parse_rational(s).map(Scalar::Rational).ok_or_else(bad),
            Domain::Prime(p) => {
                let r = parse_rational(s).ok_or_else(bad)?;
                rational_mod_p(&r, p).map(Scalar::Prime)
            }
            Domain::Complex => parse_complex(s).map(Scalar::Complex).ok_or_else(bad),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Complex(z) => {
                let sign = if z.im.is_sign_negative() { '-' } else { '+' };
                write!(f, "{}{}{}i", z.re, sign, z.im.abs())
            }
            Scalar::Prime(v) => write!(f, "{v}"),
        }
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            (!d.is_zero()).then(|| BigRational::new(n, d))
        }
        None => s.trim().parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re = body[..i].parse::<f64>().ok()?;
            let im = match &body[i..] {
                "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(Complex64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(Complex64::new(0.0, im))
        }
    }
}

pub(crate) fn rational_mod_p(r: &BigRational, p: u64) -> Result<u64> {
    let pb = BigInt::from(p);
    let reduce = |x: &BigInt| -> u64 {
        let m = ((x % &pb) + &pb) % &pb;
        m.to_u64().expect("reduced below p")
    };
    let n = reduce(r.numer());
    let d = reduce(r.denom());
    let f = PrimeField { p };
    let dinv = f
        .inv(&d)
        .ok_or_else(|| SpectralError::invalid(format!("denominator divisible by {p}")))?;
    Ok(f.mul(&n, &dinv))
}

/// Row-major strides for `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

pub fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        idx[i] = flat % dims[i];
        flat /= dims[i];
    }
    idx
}

/// Dense k-way array. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    entries: Entries,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, entries: Entries) -> Result<Tensor> {
        if dims.is_empty() {
            return Err(SpectralError::ShapeMismatch("order must be at least 1".into()));
        }
        if dims.contains(&0) {
            return Err(SpectralError::ShapeMismatch(
                "every dimension must be at least 1".into(),
            ));
        }
        let len: usize = dims.iter().product();
        if entries.len() != len {
            return Err(SpectralError::ShapeMismatch(format!(
                "{} entries for dims {:?}",
                entries.len(),
                dims
            )));
        }
        let entries = match entries {
            Entries::Prime { p, values } => Entries::Prime {
                p,
                values: values.into_iter().map(|v| v % p).collect(),
            },
            e => e,
        };
        Ok(Tensor { dims, entries })
    }

    pub fn zeros(domain: Domain, dims: Vec<usize>) -> Result<Tensor> {
        let len = dims.iter().product();
        Tensor::new(dims, Entries::zeros(domain, len))
    }

    /// Builds a tensor from its nonzero entries.
    pub fn from_entries<I>(domain: Domain, dims: Vec<usize>, items: I) -> Result<Tensor>
    where
        I: IntoIterator<Item = (Vec<usize>, Scalar)>,
    {
        let mut t = Tensor::zeros(domain, dims)?;
        let st = strides(&t.dims);
        for (idx, val) in items {
            if idx.len() != t.dims.len() || idx.iter().zip(&t.dims).any(|(i, d)| i >= d) {
                return Err(SpectralError::ShapeMismatch(format!(
                    "index {:?} out of bounds for dims {:?}",
                    idx, t.dims
                )));
            }
            let flat: usize = idx.iter().zip(&st).map(|(i, s)| i * s).sum();
            t.entries.set(flat, val)?;
        }
        Ok(t)
    }

    /// Tensor with coefficient 1 on every point of `support`.
    pub fn indicator(domain: Domain, support: &SupportSet) -> Result<Tensor> {
        Tensor::from_entries(
            domain,
            support.bounds().to_vec(),
            support.points().iter().map(|p| (p.clone(), Scalar::int(1))),
        )
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn domain(&self) -> Domain {
        self.entries.domain()
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, idx: &[usize]) -> Scalar {
        let flat: usize = idx.iter().zip(strides(&self.dims)).map(|(i, s)| i * s).sum();
        self.entries.get(flat)
    }

    pub fn complex_entries(&self) -> Option<&[Complex64]> {
        Complexes.view(&self.entries)
    }

    pub fn is_zero(&self) -> bool {
        let cut = self.entries.complex_cut();
        !(0..self.len()).any(|i| self.entries.is_nonzero_at(i, cut))
            || matches!(&self.entries, Entries::Complex(v) if v.iter().all(|z| z.norm() == 0.0))
    }

    /// Nonzero pattern; complex entries below `1e-9 · max|entry|` count as zero.
    pub fn support(&self) -> SupportSet {
        let cut = self.entries.complex_cut();
        let points = (0..self.len())
            .filter(|&i| self.entries.is_nonzero_at(i, cut))
            .map(|i| unflatten(i, &self.dims))
            .collect();
        SupportSet::from_sorted_unchecked(self.dims.clone(), points)
    }

    /// Converts to another domain: Q embeds into C and reduces into F_p.
    pub fn to_domain(&self, domain: Domain) -> Result<Tensor> {
        if domain == self.domain() {
            return Ok(self.clone());
        }
        let entries = match (&self.entries, domain) {
            (Entries::Rational(v), Domain::Complex) => Entries::Complex(
                v.iter()
                    .map(|r| Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0))
                    .collect(),
            ),
            (Entries::Rational(v), Domain::Prime(p)) => Entries::Prime {
                p,
                values: v.iter().map(|r| rational_mod_p(r, p)).collect::<Result<_>>()?,
            },
            _ => {
                return Err(SpectralError::DomainMismatch(
                    self.domain().to_string(),
                    domain.to_string(),
                ))
            }
        };
        Tensor::new(self.dims.clone(), entries)
    }

    /// Kronecker-style product: leg i has dimension `s_i · t_i`, the pair
    /// `(a, b)` sits at index `a · t_i + b`.
    pub fn tensor_product(&self, other: &Tensor) -> Result<Tensor> {
        self.check_compatible(other)?;
        with_field!(self.domain(), f => {
            let a = f.view(&self.entries).expect("domain checked");
            let b = f.view(&other.entries).expect("domain checked");
            let dims: Vec<usize> = self.dims.iter().zip(&other.dims).map(|(x, y)| x * y).collect();
            let out_st = strides(&dims);
            let mut out = vec![f.zero(); a.len() * b.len()];
            for (i, x) in a.iter().enumerate() {
                if f.is_zero(x) {
                    continue;
                }
                let ia = unflatten(i, &self.dims);
                for (j, y) in b.iter().enumerate() {
                    if f.is_zero(y) {
                        continue;
                    }
                    let jb = unflatten(j, &other.dims);
                    let flat: usize = (0..dims.len())
                        .map(|l| (ia[l] * other.dims[l] + jb[l]) * out_st[l])
                        .sum();
                    out[flat] = f.mul(x, y);
                }
            }
            Tensor::new(dims, f.wrap(out))
        })
    }

    /// Block-diagonal sum: `self` occupies the low index block of every leg.
    pub fn direct_sum(&self, other: &Tensor) -> Result<Tensor> {
        self.check_compatible(other)?;
        with_field!(self.domain(), f => {
            let a = f.view(&self.entries).expect("domain checked");
            let b = f.view(&other.entries).expect("domain checked");
            let dims: Vec<usize> = self.dims.iter().zip(&other.dims).map(|(x, y)| x + y).collect();
            let st = strides(&dims);
            let mut out = vec![f.zero(); dims.iter().product()];
            for (i, x) in a.iter().enumerate() {
                let idx = unflatten(i, &self.dims);
                let flat: usize = idx.iter().zip(&st).map(|(v, s)| v * s).sum();
                out[flat] = x.clone();
            }
            for (j, y) in b.iter().enumerate() {
                let idx = unflatten(j, &other.dims);
                let flat: usize = idx
                    .iter()
                    .enumerate()
                    .map(|(l, v)| (v + self.dims[l]) * st[l])
                    .sum();
                out[flat] = y.clone();
            }
            Tensor::new(dims, f.wrap(out))
        })
    }

    /// Applies `maps[i]` (an `m_i × n_i` matrix) to leg i.
    pub fn restrict(&self, maps: &[Matrix]) -> Result<Tensor> {
        if maps.len() != self.order() {
            return Err(SpectralError::ShapeMismatch(format!(
                "{} maps for an order-{} tensor",
                maps.len(),
                self.order()
            )));
        }
        let mut cur = self.clone();
        for (leg, m) in maps.iter().enumerate() {
            cur = cur.apply_leg(leg, m)?;
        }
        Ok(cur)
    }

    /// Contracts one leg with `m`.
    pub fn apply_leg(&self, leg: usize, m: &Matrix) -> Result<Tensor> {
        if m.domain() != self.domain() {
            return Err(SpectralError::DomainMismatch(
                self.domain().to_string(),
                m.domain().to_string(),
            ));
        }
        if leg >= self.order() || m.cols != self.dims[leg] {
            return Err(SpectralError::ShapeMismatch(format!(
                "{}x{} map on leg {} of dimension {:?}",
                m.rows,
                m.cols,
                leg,
                self.dims.get(leg)
            )));
        }
        with_field!(self.domain(), f => {
            let data = f.view(&self.entries).expect("domain checked");
            let md = f.view(&m.entries).expect("domain checked");
            let (new_dims, out) = contract_leg(&f, &self.dims, data, leg, m.rows, m.cols, md);
            Tensor::new(new_dims, f.wrap(out))
        })
    }

    /// Matrix of the `legs`-versus-rest flattening, rows over `legs` in
    /// ascending order.
    pub fn flattening(&self, legs: &[usize]) -> Result<Matrix> {
        let (rows, cols, perm) = flattening_layout(&self.dims, legs)?;
        with_field!(self.domain(), f => {
            let data = f.view(&self.entries).expect("own domain");
            let out: Vec<_> = perm.iter().map(|&i| data[i].clone()).collect();
            Matrix::new(rows, cols, f.wrap(out))
        })
    }

    /// Rank of the `legs`-versus-rest flattening. Exact over Q and F_p;
    /// singular values below `1e-9 · σ_max` are dropped over C.
    pub fn flattening_rank(&self, legs: &[usize]) -> Result<usize> {
        if legs.is_empty() || legs.len() >= self.order() {
            return Err(SpectralError::invalid(
                "flattening needs a nonempty proper subset of the legs",
            ));
        }
        self.flattening(legs)?.rank()
    }

    /// Reorders the legs: leg `i` of the result is leg `perm[i]` of `self`.
    pub fn permute_legs(&self, perm: &[usize]) -> Result<Tensor> {
        let k = self.order();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(SpectralError::invalid(format!("{perm:?} is not a permutation")));
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let st = strides(&dims);
        with_field!(self.domain(), f => {
            let data = f.view(&self.entries).expect("own domain");
            let mut out = vec![f.zero(); data.len()];
            for (i, x) in data.iter().enumerate() {
                let idx = unflatten(i, &self.dims);
                let flat: usize = perm.iter().enumerate().map(|(l, &p)| idx[p] * st[l]).sum();
                out[flat] = x.clone();
            }
            Tensor::new(dims, f.wrap(out))
        })
    }

    fn check_compatible(&self, other: &Tensor) -> Result<()> {
        if self.order() != other.order() {
            return Err(SpectralError::OrderMismatch(self.order(), other.order()));
        }
        if self.domain() != other.domain() {
            return Err(SpectralError::DomainMismatch(
                self.domain().to_string(),
                other.domain().to_string(),
            ));
        }
        Ok(())
    }

    /// Text format: header `k d_1 … d_k domain`, then `i_1 … i_k value` per
    /// nonzero entry with 0-based indices.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} {}\n",
            self.order(),
            self.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" "),
            self.domain()
        );
        let cut = self.entries.complex_cut();
        for i in 0..self.len() {
            let exact_zero = match &self.entries {
                Entries::Complex(v) => v[i].norm() == 0.0,
                _ => !self.entries.is_nonzero_at(i, cut),
            };
            if exact_zero {
                continue;
            }
            let idx = unflatten(i, &self.dims);
            for x in idx {
                s.push_str(&x.to_string());
                s.push(' ');
            }
            s.push_str(&self.entries.get(i).to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Tensor> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| SpectralError::parse(1, "missing header"))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let k: usize = toks
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| SpectralError::parse(hl, "bad order"))?;
        if toks.len() != k + 2 {
            return Err(SpectralError::parse(hl, "header must be `k d_1 ... d_k domain`"));
        }
        let dims = toks[1..=k]
            .iter()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| SpectralError::parse(hl, e.to_string()))?;
        let domain: Domain = toks[k + 1].parse().map_err(|e: SpectralError| SpectralError::parse(hl, e.to_string()))?;
        let mut items = Vec::new();
        for (n, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != k + 1 {
                return Err(SpectralError::parse(n, format!("expected {} fields", k + 1)));
            }
            let idx = toks[..k]
                .iter()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| SpectralError::parse(n, e.to_string()))?;
            let val = Scalar::parse(domain, toks[k]).map_err(|e| SpectralError::parse(n, e.to_string()))?;
            items.push((idx, val));
        }
        Tensor::from_entries(domain, dims, items)
    }
}

/// Row/column layout of a flattening: `perm[r * cols + c]` is the flat index
/// of the entry at `(r, c)`.
pub(crate) fn flattening_layout(dims: &[usize], legs: &[usize]) -> Result<(usize, usize, Vec<usize>)> {
    let k = dims.len();
    let mut in_rows = vec![false; k];
    for &l in legs {
        if l >= k || std::mem::replace(&mut in_rows[l], true) {
            return Err(SpectralError::invalid(format!("bad leg subset {legs:?}")));
        }
    }
    let row_legs: Vec<usize> = (0..k).filter(|&l| in_rows[l]).collect();
    let col_legs: Vec<usize> = (0..k).filter(|&l| !in_rows[l]).collect();
    let rows: usize = row_legs.iter().map(|&l| dims[l]).product();
    let cols: usize = col_legs.iter().map(|&l| dims[l]).product();
    let st = strides(dims);
    let row_dims: Vec<usize> = row_legs.iter().map(|&l| dims[l]).collect();
    let col_dims: Vec<usize> = col_legs.iter().map(|&l| dims[l]).collect();
    let mut perm = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let ri = unflatten(r, &row_dims);
        let base: usize = ri.iter().zip(&row_legs).map(|(x, &l)| x * st[l]).sum();
        for c in 0..cols {
            let ci = unflatten(c, &col_dims);
            let off: usize = ci.iter().zip(&col_legs).map(|(x, &l)| x * st[l]).sum();
            perm.push(base + off);
        }
    }
    Ok((rows, cols, perm))
}

pub(crate) fn contract_leg<F: Field>(
    f: &F,
    dims: &[usize],
    data: &[F::Elem],
    leg: usize,
    rows: usize,
    cols: usize,
    m: &[F::Elem],
) -> (Vec<usize>, Vec<F::Elem>) {
    debug_assert_eq!(cols, dims[leg]);
    let outer: usize = dims[..leg].iter().product();
    let inner: usize = dims[leg + 1..].iter().product();
    let mut new_dims = dims.to_vec();
    new_dims[leg] = rows;
    let mut out = vec![f.zero(); outer * rows * inner];
    for o in 0..outer {
        for c in 0..cols {
            for r in 0..rows {
                let a = &m[r * cols + c];
                if f.is_zero(a) {
                    continue;
                }
                let src = (o * cols + c) * inner;
                let dst = (o * rows + r) * inner;
                for i in 0..inner {
                    let x = &data[src + i];
                    if !f.is_zero(x) {
                        out[dst + i] = f.add(&out[dst + i], &f.mul(a, x));
                    }
                }
            }
        }
    }
    (new_dims, out)
}

/// Dense row-major matrix over one of the tensor domains.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    entries: Entries,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Entries) -> Result<Matrix> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(SpectralError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Matrix { rows, cols, entries })
    }

    pub fn identity(domain: Domain, n: usize) -> Matrix {
        with_field!(domain, f => {
            let mut v = vec![f.zero(); n * n];
            for i in 0..n {
                v[i * n + i] = f.one();
            }
            Matrix { rows: n, cols: n, entries: f.wrap(v) }
        })
    }

    pub fn from_i64(domain: Domain, rows: usize, cols: usize, vals: &[i64]) -> Result<Matrix> {
        with_field!(domain, f => {
            let v = vals.iter().map(|&x| f.from_i64(x)).collect();
            Matrix::new(rows, cols, f.wrap(v))
        })
    }

    pub fn from_complex(rows: usize, cols: usize, vals: Vec<Complex64>) -> Result<Matrix> {
        Matrix::new(rows, cols, Entries::Complex(vals))
    }

    /// Permutation matrix sending basis vector `j` to `perm[j]`.
    pub fn permutation(domain: Domain, perm: &[usize]) -> Result<Matrix> {
        let n = perm.len();
        let mut vals = vec![0i64; n * n];
        for (j, &i) in perm.iter().enumerate() {
            if i >= n {
                return Err(SpectralError::invalid("permutation entry out of range"));
            }
            vals[i * n + j] = 1;
        }
        Matrix::from_i64(domain, n, n, &vals)
    }

    pub fn domain(&self) -> Domain {
        self.entries.domain()
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> Scalar {
        self.entries.get(r * self.cols + c)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        with_field!(self.domain(), f => {
            let d = f.view(&self.entries).expect("own domain");
            let mut out = Vec::with_capacity(d.len());
            for c in 0..self.cols {
                for r in 0..self.rows {
                    out.push(d[r * self.cols + c].clone());
                }
            }
            Matrix { rows: self.cols, cols: self.rows, entries: f.wrap(out) }
        })
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.domain() != other.domain() || self.cols != other.rows {
            return Err(SpectralError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        with_field!(self.domain(), f => {
            let a = f.view(&self.entries).expect("own domain");
            let b = f.view(&other.entries).expect("checked");
            let out = linalg::matmul(&f, self.rows, self.cols, other.cols, a, b);
            Matrix::new(self.rows, other.cols, f.wrap(out))
        })
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(match &self.entries {
            Entries::Complex(v) => linalg::complex_rank(self.rows, self.cols, v),
            _ => with_field!(self.domain(), f => {
                let d = f.view(&self.entries).expect("own domain");
                linalg::rank(&f, self.rows, self.cols, d)
            }),
        })
    }

    /// Exact inverse over Q/F_p; over C fails when the condition number
    /// exceeds `linalg::COMPLEX_COND_LIMIT`.
    pub fn inverse(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        if let Entries::Complex(v) = &self.entries {
            if linalg::complex_condition(self.rows, v) > linalg::COMPLEX_COND_LIMIT {
                return None;
            }
        }
        with_field!(self.domain(), f => {
            let d = f.view(&self.entries).expect("own domain");
            linalg::inverse(&f, self.rows, d).map(|inv| Matrix { rows: self.rows, cols: self.cols, entries: f.wrap(inv) })
        })
    }
}
