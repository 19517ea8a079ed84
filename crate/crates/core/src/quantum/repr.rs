//! Symmetric group characters (Murnaghan–Nakayama), Kronecker coefficients
//! from the character table, Littlewood–Richardson coefficients by tableaux.

use crate::error::{Result, SpectralError};
use crate::partition::PartitionSeq;

/// Largest n accepted for coefficient computations.
pub const MAX_COEFF_N: usize = 8;

/// χ^λ evaluated on the class of cycle type μ.
pub fn character(lambda: &PartitionSeq, mu: &PartitionSeq) -> i64 {
    if lambda.n() != mu.n() {
        return 0;
    }
    let l = lambda.len();
    // beta set: bead at λ_i + (ℓ − 1 − i)
    let top = lambda.parts()[0] + l;
    let mut abacus = vec![false; top];
    for (i, &p) in lambda.parts().iter().enumerate() {
        abacus[p + l - 1 - i] = true;
    }
    mn(&mut abacus, mu.parts())
}

fn mn(abacus: &mut [bool], cycles: &[usize]) -> i64 {
    let Some((&r, rest)) = cycles.split_first() else {
        return 1;
    };
    let mut total = 0;
    for b in r..abacus.len() {
        if abacus[b] && !abacus[b - r] {
            let between = abacus[b - r + 1..b].iter().filter(|&&x| x).count();
            abacus[b] = false;
            abacus[b - r] = true;
            let sign = if between % 2 == 0 { 1 } else { -1 };
            total += sign * mn(abacus, rest);
            abacus[b - r] = false;
            abacus[b] = true;
        }
    }
    total
}

/// z_μ = Π_i i^{m_i} m_i!, so the class of μ has n!/z_μ elements.
pub fn z_class(mu: &PartitionSeq) -> u128 {
    let mut z: u128 = 1;
    let parts = mu.parts();
    let mut i = 0;
    while i < parts.len() {
        let mut j = i;
        while j < parts.len() && parts[j] == parts[i] {
            j += 1;
        }
        let m = (j - i) as u128;
        z *= (parts[i] as u128).pow(m as u32) * (1..=m).product::<u128>();
        i = j;
    }
    z
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_COEFF_N {
        return Err(SpectralError::BudgetExceeded(format!("n = {n} exceeds {MAX_COEFF_N}")));
    }
    Ok(())
}

/// g_{λμν} = (1/n!) Σ_{σ∈S_n} χ^λ(σ) χ^μ(σ) χ^ν(σ).
pub fn kronecker_coefficient(lambda: &PartitionSeq, mu: &PartitionSeq, nu: &PartitionSeq) -> Result<u64> {
    let n = lambda.n();
    if mu.n() != n || nu.n() != n {
        return Err(SpectralError::ShapeMismatch(format!(
            "Kronecker coefficient needs |λ|=|μ|=|ν|, got {}, {}, {}",
            n,
            mu.n(),
            nu.n()
        )));
    }
    check_n(n)?;
    let fact: i128 = (1..=n as i128).product();
    let mut sum: i128 = 0;
    for c in PartitionSeq::all(n) {
        let chi = character(lambda, &c) as i128 * character(mu, &c) as i128 * character(nu, &c) as i128;
        sum += chi * (fact / z_class(&c) as i128);
    }
    debug_assert_eq!(sum % fact, 0);
    Ok((sum / fact) as u64)
}

/// c^λ_{μν}: the number of LR tableaux of shape λ/μ and content ν.
pub fn lr_coefficient(lambda: &PartitionSeq, mu: &PartitionSeq, nu: &PartitionSeq) -> Result<u64> {
    if lambda.n() != mu.n() + nu.n() {
        return Err(SpectralError::ShapeMismatch(format!(
            "LR coefficient needs |λ| = |μ|+|ν|, got {} vs {}+{}",
            lambda.n(),
            mu.n(),
            nu.n()
        )));
    }
    check_n(lambda.n())?;
    let lp = lambda.parts();
    let mp = mu.parts();
    if mp.len() > lp.len() || mp.iter().zip(lp).any(|(m, l)| m > l) {
        return Ok(0);
    }
    let mu_row = |r: usize| mp.get(r).copied().unwrap_or(0);
    // cells of λ/μ in reading order: rows top to bottom, right to left
    let mut cells = Vec::new();
    for (r, &len) in lp.iter().enumerate() {
        for c in (mu_row(r)..len).rev() {
            cells.push((r, c));
        }
    }
    let mut fill = vec![vec![usize::MAX; lp[0]]; lp.len()];
    let mut counts = vec![0usize; nu.len()];
    Ok(lr_fill(&cells, 0, &mut fill, &mut counts, nu.parts(), &mu_row))
}

fn lr_fill(
    cells: &[(usize, usize)],
    idx: usize,
    fill: &mut [Vec<usize>],
    counts: &mut [usize],
    content: &[usize],
    mu_row: &dyn Fn(usize) -> usize,
) -> u64 {
    if idx == cells.len() {
        return 1;
    }
    let (r, c) = cells[idx];
    let mut total = 0;
    for v in 0..content.len() {
        if counts[v] == content[v] || (v > 0 && counts[v] + 1 > counts[v - 1]) {
            continue;
        }
        // rows weakly increase to the right (right neighbour already filled)
        if c + 1 < fill[r].len() && fill[r][c + 1] != usize::MAX && v > fill[r][c + 1] {
            continue;
        }
        // columns strictly increase downward
        if r > 0 && c >= mu_row(r - 1) && fill[r - 1][c] != usize::MAX && v <= fill[r - 1][c] {
            continue;
        }
        fill[r][c] = v;
        counts[v] += 1;
        total += lr_fill(cells, idx + 1, fill, counts, content, mu_row);
        counts[v] -= 1;
        fill[r][c] = usize::MAX;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PartitionSeq {
        s.parse().unwrap()
    }

    #[test]
    fn s3_character_table() {
        // rows (3), (2,1), (1,1,1); columns (1,1,1), (2,1), (3)
        let classes = [p("1,1,1"), p("2,1"), p("3")];
        let table = [[1, 1, 1], [2, 0, -1], [1, -1, 1]];
        for (row, lam) in [p("3"), p("2,1"), p("1,1,1")].iter().enumerate() {
            for (col, c) in classes.iter().enumerate() {
                assert_eq!(character(lam, c), table[row][col], "{lam} on {c}");
            }
        }
    }

    #[test]
    fn character_at_identity_is_dimension() {
        for n in 1..=7 {
            let id = PartitionSeq::new(vec![1; n]).unwrap();
            for lam in PartitionSeq::all(n) {
                assert_eq!(character(&lam, &id) as u128, lam.dimension());
            }
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_coefficient(&p("4"), &p("4"), &p("4")).unwrap(), 1);
        assert_eq!(kronecker_coefficient(&p("2,1"), &p("2,1"), &p("2,1")).unwrap(), 1);
        assert_eq!(kronecker_coefficient(&p("2,1"), &p("3"), &p("2,1")).unwrap(), 1);
        assert_eq!(kronecker_coefficient(&p("1,1,1"), &p("3"), &p("2,1")).unwrap(), 0);
        assert!(kronecker_coefficient(&p("2"), &p("3"), &p("2,1")).is_err());
    }

    #[test]
    fn lr_examples() {
        assert_eq!(lr_coefficient(&p("2,1"), &p("2"), &p("1")).unwrap(), 1);
        assert_eq!(lr_coefficient(&p("3,2,1"), &p("2,1"), &p("2,1")).unwrap(), 2);
        assert_eq!(lr_coefficient(&p("3"), &p("1,1"), &p("1")).unwrap(), 0);
        assert!(lr_coefficient(&p("3"), &p("1"), &p("1")).is_err());
    }
}
