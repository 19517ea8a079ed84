use proptest::prelude::*;
use spectral_core::asymptotics::{phi_n, psi_n};
use spectral_core::family::FamilySpec;
use spectral_core::subrank::{is_free_diagonal, subrank_set, subrank_set_with_budget};
use spectral_core::tight::{check_comb_degeneration, check_tight, Tightness};
use spectral_core::SupportSet;

fn set(bounds: &[usize], pts: &[&[usize]]) -> SupportSet {
    SupportSet::new(bounds.to_vec(), pts.iter().map(|p| p.to_vec()).collect()).unwrap()
}

fn leq(a: &[usize], b: &[usize]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// O(|Φ|²) dominance scan.
fn maximal_oracle(phi: &SupportSet) -> Vec<Vec<usize>> {
    phi.points()
        .iter()
        .filter(|a| !phi.points().iter().any(|b| b != *a && leq(a, b)))
        .cloned()
        .collect()
}

#[test]
fn max_points_examples() {
    let w = FamilySpec::w().support().unwrap();
    assert_eq!(w.max_points().unwrap(), w);
    let chain = set(&[2, 2], &[&[0, 0], &[0, 1], &[1, 1]]);
    assert_eq!(chain.max_points().unwrap().points(), &[vec![1, 1]]);
    let pm = FamilySpec::PolyMultMod(3).support().unwrap();
    assert_eq!(pm.max_points().unwrap().points(), maximal_oracle(&pm).as_slice());
    assert!(set(&[2], &[]).max_points().is_err());
}

#[test]
fn downward_closure_examples() {
    let c = set(&[2, 2], &[&[1, 1]]).downward_closure();
    assert_eq!(c.points(), &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    let phi3 = phi_n(3).unwrap();
    let closure = phi3.downward_closure();
    assert_eq!(closure.len(), 10);
    assert_eq!(closure.downward_closure(), closure);
}

#[test]
fn antichain_and_free() {
    // the diagonal is a chain in the standard order and an antichain once one leg is reversed
    let u = FamilySpec::Unit { r: 3, k: 3 }.support().unwrap();
    assert!(!u.is_antichain() && u.is_free());
    let rev = vec![vec![0, 1, 2], vec![0, 1, 2], vec![2, 1, 0]];
    assert!(u.relabel(&rev).unwrap().is_antichain());
    let two = set(&[1, 2, 2], &[&[0, 0, 1], &[0, 1, 0]]);
    assert!(two.is_antichain() && two.is_free());
    assert!(!set(&[1, 2], &[&[0, 0], &[0, 1]]).is_free());
}

#[test]
fn tightness_examples() {
    for n in 2..=6 {
        let phi = phi_n(n).unwrap();
        let t = check_tight(&phi).unwrap();
        let cert = t.certificate().expect("Φ_n is tight");
        assert!(cert.injective && cert.verify(&phi));
        assert!(phi.relabel(&cert.leg_orders()).unwrap().is_antichain());
    }
    assert!(matches!(check_tight(&psi_n(2).unwrap()).unwrap(), Tightness::NotTight { .. }));
    let single = set(&[3, 3, 3], &[&[2, 0, 1]]);
    assert!(check_tight(&single).unwrap().certificate().unwrap().verify(&single));
}

#[test]
fn degeneration_examples() {
    for m in 2..=5 {
        let (psi, phi) = (psi_n(m).unwrap(), phi_n(m).unwrap());
        assert!(check_comb_degeneration(&psi, &phi).unwrap().unwrap().verify(&psi, &phi));
    }
    let phi = phi_n(3).unwrap();
    let c = check_comb_degeneration(&phi, &phi).unwrap().unwrap();
    assert!(c.verify(&phi, &phi));
    let psi = set(&[2, 2], &[&[0, 0], &[1, 1]]);
    let phi = set(&[2, 2], &[&[1, 1]]);
    assert!(check_comb_degeneration(&psi, &phi).unwrap().unwrap().verify(&psi, &phi));
    // (0,1) lies in the box of the two diagonal points, so its weight is forced to 0
    let psi = set(&[2, 2], &[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
    let phi = set(&[2, 2], &[&[0, 0], &[1, 1]]);
    assert!(check_comb_degeneration(&psi, &phi).unwrap().is_none());
    assert!(check_comb_degeneration(&phi, &psi).is_err());
}

#[test]
fn subrank_examples() {
    for n in 1..=5 {
        assert_eq!(subrank_set(&FamilySpec::Unit { r: n, k: 3 }.support().unwrap()).unwrap().size, n);
    }
    assert_eq!(subrank_set(&FamilySpec::w().support().unwrap()).unwrap().size, 1);
    assert_eq!(subrank_set(&phi_n(2).unwrap()).unwrap().size, 1);
    assert!(subrank_set_with_budget(&psi_n(4).unwrap(), 10, 100).is_err());
}

#[test]
fn text_format() {
    let phi = phi_n(3).unwrap();
    let text = phi.to_text();
    assert!(text.starts_with("3 3 3 3\n"));
    assert_eq!(SupportSet::from_text(&text).unwrap(), phi);
    assert!(SupportSet::from_text("2 2 2\n0 2\n").is_err());
}

fn support_strategy(max_bound: usize, max_pts: usize) -> impl Strategy<Value = SupportSet> {
    prop::collection::vec(1..=max_bound, 3).prop_flat_map(move |b| {
        let bb = b.clone();
        prop::collection::vec(
            (0..bb[0], 0..bb[1], 0..bb[2]).prop_map(|(x, y, z)| vec![x, y, z]),
            1..=max_pts,
        )
        .prop_map(move |pts| SupportSet::new(b.clone(), pts).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn max_points_through_closure(phi in support_strategy(4, 10)) {
        let m = phi.max_points().unwrap();
        prop_assert_eq!(phi.downward_closure().max_points().unwrap(), m.clone());
        let oracle = maximal_oracle(&phi);
        prop_assert_eq!(m.points(), oracle.as_slice());
        prop_assert_eq!(m.max_points().unwrap(), m);
    }

    #[test]
    fn tight_implies_oblique(phi in support_strategy(3, 8)) {
        if let Tightness::Tight(c) = check_tight(&phi).unwrap() {
            prop_assert!(c.verify(&phi));
            prop_assert!(phi.relabel(&c.leg_orders()).unwrap().is_antichain());
            prop_assert!(phi.is_free());
        }
        if phi.is_antichain() {
            prop_assert!(phi.is_free());
        }
    }

    #[test]
    fn degeneration_certificates_verify(psi in support_strategy(3, 8), keep in prop::collection::vec(any::<bool>(), 8)) {
        let pts: Vec<Vec<usize>> = psi.points().iter().zip(&keep).filter(|(_, &k)| k).map(|(p, _)| p.clone()).collect();
        let phi = SupportSet::new(psi.bounds().to_vec(), pts).unwrap();
        if let Some(c) = check_comb_degeneration(&psi, &phi).unwrap() {
            prop_assert!(c.verify(&psi, &phi));
        }
    }

    #[test]
    fn subrank_super_multiplicative(phi in support_strategy(2, 4)) {
        let s = subrank_set(&phi).unwrap();
        prop_assert!(is_free_diagonal(&phi, &s.diagonal));
        let sq = subrank_set(&phi.product(&phi).unwrap()).unwrap();
        prop_assert!(sq.size >= s.size * s.size);
    }
}
