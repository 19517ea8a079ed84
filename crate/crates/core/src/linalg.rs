//! Dense elimination kernels generic over `Field`, plus the few complex
//! routines that need singular values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::field::Field;

/// Relative singular-value cut for complex numerical rank.
pub const COMPLEX_RANK_TOL: f64 = 1e-9;
/// Complex basis matrices with a larger condition number count as singular.
pub const COMPLEX_COND_LIMIT: f64 = 1e12;

pub fn matmul<F: Field>(f: &F, n: usize, m: usize, p: usize, a: &[F::Elem], b: &[F::Elem]) -> Vec<F::Elem> {
    let mut out = vec![f.zero(); n * p];
    for i in 0..n {
        for k in 0..m {
            let x = &a[i * m + k];
            if f.is_zero(x) {
                continue;
            }
            for j in 0..p {
                out[i * p + j] = f.add(&out[i * p + j], &f.mul(x, &b[k * p + j]));
            }
        }
    }
    out
}

/// Reduced row echelon form in place; returns the pivot columns.
/// If `aug` is given, the same row operations are applied to it
/// (`aug` has `aug_cols` columns and the same number of rows).
pub fn rref_in_place<F: Field>(
    f: &F,
    rows: usize,
    cols: usize,
    a: &mut [F::Elem],
    mut aug: Option<(&mut [F::Elem], usize)>,
) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows)
            .map(|i| (i, f.magnitude(&a[i * cols + c])))
            .filter(|(_, m)| *m > 0.0)
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal).then(y.0.cmp(&x.0)));
        let Some((piv, _)) = best else { continue };
        if piv != r {
            for j in 0..cols {
                a.swap(piv * cols + j, r * cols + j);
            }
            if let Some((b, bc)) = aug.as_mut() {
                for j in 0..*bc {
                    b.swap(piv * *bc + j, r * *bc + j);
                }
            }
        }
        let inv = f.inv(&a[r * cols + c]).expect("nonzero pivot");
        for j in 0..cols {
            a[r * cols + j] = f.mul(&a[r * cols + j], &inv);
        }
        if let Some((b, bc)) = aug.as_mut() {
            for j in 0..*bc {
                b[r * *bc + j] = f.mul(&b[r * *bc + j], &inv);
            }
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let factor = a[i * cols + c].clone();
            if f.is_zero(&factor) {
                continue;
            }
            for j in 0..cols {
                let t = f.mul(&factor, &a[r * cols + j]);
                a[i * cols + j] = f.sub(&a[i * cols + j], &t);
            }
            if let Some((b, bc)) = aug.as_mut() {
                for j in 0..*bc {
                    let t = f.mul(&factor, &b[r * *bc + j]);
                    b[i * *bc + j] = f.sub(&b[i * *bc + j], &t);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<F: Field>(f: &F, rows: usize, cols: usize, a: &[F::Elem]) -> usize {
    let mut m = a.to_vec();
    rref_in_place(f, rows, cols, &mut m, None).len()
}

pub fn inverse<F: Field>(f: &F, n: usize, a: &[F::Elem]) -> Option<Vec<F::Elem>> {
    let mut m = a.to_vec();
    let mut id = vec![f.zero(); n * n];
    for i in 0..n {
        id[i * n + i] = f.one();
    }
    let piv = rref_in_place(f, n, n, &mut m, Some((&mut id, n)));
    (piv.len() == n).then_some(id)
}

/// Invertible `E` (rows × rows) with `E · a` in reduced row echelon form.
pub fn rref_transform<F: Field>(f: &F, rows: usize, cols: usize, a: &[F::Elem]) -> Vec<F::Elem> {
    let mut m = a.to_vec();
    let mut e = vec![f.zero(); rows * rows];
    for i in 0..rows {
        e[i * rows + i] = f.one();
    }
    rref_in_place(f, rows, cols, &mut m, Some((&mut e, rows)));
    e
}

/// Basis of the right nullspace `{x : a x = 0}`, one vector per free column.
pub fn nullspace<F: Field>(f: &F, rows: usize, cols: usize, a: &[F::Elem]) -> Vec<Vec<F::Elem>> {
    let mut m = a.to_vec();
    let pivots = if rows == 0 {
        Vec::new()
    } else {
        rref_in_place(f, rows, cols, &mut m, None)
    };
    let mut is_pivot = vec![false; cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    (0..cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![f.zero(); cols];
            v[free] = f.one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(&m[r * cols + free]);
            }
            v
        })
        .collect()
}

pub fn complex_singular_values(rows: usize, cols: usize, a: &[Complex64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(rows, cols, a);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}

pub fn complex_rank(rows: usize, cols: usize, a: &[Complex64]) -> usize {
    let s = complex_singular_values(rows, cols, a);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > COMPLEX_RANK_TOL * top).count()
}

pub fn complex_condition(n: usize, a: &[Complex64]) -> f64 {
    let s = complex_singular_values(n, n, a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{PrimeField, Rationals};

    #[test]
    fn rational_inverse_round_trip() {
        let f = Rationals;
        let a: Vec<_> = [2, 1, 0, 1, 1, 0, 0, 3, 1].iter().map(|&x| f.from_i64(x)).collect();
        let inv = inverse(&f, 3, &a).unwrap();
        let id = matmul(&f, 3, 3, 3, &a, &inv);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(id[i * 3 + j], f.from_i64((i == j) as i64));
            }
        }
    }

    #[test]
    fn prime_rank_drops_mod_p() {
        let f = PrimeField { p: 3 };
        let a: Vec<u64> = [1, 2, 2, 1].iter().map(|&x| f.from_i64(x)).collect();
        assert_eq!(rank(&f, 2, 2, &a), 1);
        assert_eq!(rank(&Rationals, 2, 2, &[1, 2, 2, 1].map(|x| Rationals.from_i64(x))), 2);
    }

    #[test]
    fn nullspace_vectors_are_killed() {
        let f = Rationals;
        let a: Vec<_> = [1, 1, 1, 0, 0, 1, -1, 0].iter().map(|&x| f.from_i64(x)).collect();
        let ns = nullspace(&f, 2, 4, &a);
        assert_eq!(ns.len(), 2);
        for v in ns {
            let av = matmul(&f, 2, 4, 1, &a, &v);
            assert!(av.iter().all(|x| f.is_zero(x)));
        }
    }

    #[test]
    fn complex_rank_threshold() {
        let z = |x: f64| Complex64::new(x, 0.0);
        assert_eq!(complex_rank(2, 2, &[z(1.0), z(0.0), z(0.0), z(1e-12)]), 1);
        assert_eq!(complex_rank(2, 2, &[z(1.0), z(0.0), z(0.0), z(1e-6)]), 2);
    }
}
