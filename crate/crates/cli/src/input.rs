use std::path::Path;

use spectral_core::asymptotics::{phi_n, psi_n};
use spectral_core::entropy::ThetaWeights;
use spectral_core::family::FamilySpec;
use spectral_core::{Result, SpectralError, SupportSet, Tensor};

fn bad(msg: impl Into<String>) -> SpectralError {
    SpectralError::InvalidParameter(msg.into())
}

/// `uniform`, `0.2,0.3,0.5`, or `bip:{1}|{2,3}=0.4,{1,2}|{3}=0.6` with
/// 1-based legs; each bipartition is keyed by the side containing leg 1.
pub fn parse_theta(s: &str, k: usize) -> Result<ThetaWeights> {
    let s = s.trim();
    if s == "uniform" {
        return Ok(ThetaWeights::uniform(k));
    }
    if let Some(rest) = s.strip_prefix("bip:") {
        let mut parts = Vec::new();
        for entry in split_top_level(rest) {
            let (lhs, w) = entry
                .rsplit_once('=')
                .ok_or_else(|| bad(format!("bipartition entry `{entry}` lacks `=weight`")))?;
            let w: f64 = w.trim().parse().map_err(|_| bad(format!("bad weight in `{entry}`")))?;
            let mut sides = lhs.split('|');
            let left = parse_set(sides.next().unwrap_or(""), k)?;
            if !left.contains(&0) {
                return Err(bad(format!("`{entry}`: the first side must contain leg 1")));
            }
            if let Some(right) = sides.next() {
                let right = parse_set(right, k)?;
                let mut all: Vec<usize> = left.iter().chain(&right).copied().collect();
                all.sort_unstable();
                if all != (0..k).collect::<Vec<_>>() {
                    return Err(bad(format!("`{entry}` is not a bipartition of {k} legs")));
                }
            }
            if sides.next().is_some() {
                return Err(bad(format!("`{entry}` has more than two sides")));
            }
            parts.push((left, w));
        }
        return ThetaWeights::bipartitions(k, parts);
    }
    let w: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| bad(format!("bad theta weight `{x}`"))))
        .collect::<Result<_>>()?;
    if w.len() != k {
        return Err(bad(format!("theta has {} weights for an order-{k} tensor", w.len())));
    }
    ThetaWeights::legs(w)
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out.into_iter().map(str::trim).filter(|e| !e.is_empty()).collect()
}

fn parse_set(s: &str, k: usize) -> Result<Vec<usize>> {
    let inner = s
        .trim()
        .strip_prefix('{')
        .and_then(|x| x.strip_suffix('}'))
        .ok_or_else(|| bad(format!("expected a set like {{1,2}}, got `{s}`")))?;
    let mut v = Vec::new();
    for x in inner.split(',') {
        let leg: usize = x.trim().parse().map_err(|_| bad(format!("bad leg `{x}`")))?;
        if leg == 0 || leg > k {
            return Err(bad(format!("leg {leg} out of range 1..={k}")));
        }
        v.push(leg - 1);
    }
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))
}

pub fn load_tensor(family: Option<&str>, file: Option<&Path>) -> Result<Tensor> {
    match (family, file) {
        (Some(f), None) => f.parse::<FamilySpec>()?.build(),
        (None, Some(p)) => Tensor::from_text(&read(p)?),
        _ => Err(bad("give exactly one of --family and --tensor")),
    }
}

/// A support from a file, `phi:n`, `psi:n`, or a family spec.
pub fn load_support(src: &str) -> Result<SupportSet> {
    let path = Path::new(src);
    if path.is_file() {
        return SupportSet::from_text(&read(path)?);
    }
    if let Some(n) = src.strip_prefix("phi:") {
        return phi_n(n.parse().map_err(|_| bad(format!("bad n in `{src}`")))?);
    }
    if let Some(n) = src.strip_prefix("psi:") {
        return psi_n(n.parse().map_err(|_| bad(format!("bad n in `{src}`")))?);
    }
    src.parse::<FamilySpec>()?.support()
}
