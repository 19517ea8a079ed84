use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_core::asymptotics::{binomial_basis, z_of_n};
use spectral_core::entropy::{binary_entropy, max_h_theta_legs, ThetaWeights};
use spectral_core::family::FamilySpec;
use spectral_core::functionals::{
    gauge_points, instability_lp, rho_lower_at_basis, rho_upper_at_basis, support_at_basis, upper_support_functional,
    BasisTuple, SearchStrategy,
};
use spectral_core::partition::PartitionSeq;
use spectral_core::{Domain, Matrix, Scalar, Tensor};

fn std_basis(t: &Tensor) -> BasisTuple {
    BasisTuple::standard(t.domain(), t.dims())
}

/// Random invertible integer matrix with entries in -3..=3.
fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    loop {
        let v: Vec<i64> = (0..n * n).map(|_| rng.random_range(-3..=3)).collect();
        let m = Matrix::from_i64(Domain::Rational, n, n, &v).unwrap();
        if m.inverse().is_some() {
            return m;
        }
    }
}

fn random_basis(rng: &mut ChaCha8Rng, dims: &[usize]) -> BasisTuple {
    BasisTuple::new(dims.iter().map(|&n| random_invertible(rng, n)).collect()).unwrap()
}

fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> Tensor {
    loop {
        let n: usize = dims.iter().product();
        let items: Vec<(Vec<usize>, Scalar)> = (0..n)
            .filter_map(|f| {
                let v = if rng.random_bool(0.5) { rng.random_range(-2..=2) } else { 0 };
                (v != 0).then(|| (spectral_core::tensor::unflatten(f, dims), Scalar::int(v)))
            })
            .collect();
        let t = Tensor::from_entries(Domain::Rational, dims.to_vec(), items).unwrap();
        if !t.is_zero() {
            return t;
        }
    }
}

fn theta_grid() -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for a in 0..=3 {
        for b in 0..=3 - a {
            let c = 3 - a - b;
            out.push(vec![a as f64 / 3.0, b as f64 / 3.0, c as f64 / 3.0]);
        }
    }
    out
}

#[test]
fn upper_at_standard_basis() {
    let uniform = ThetaWeights::uniform(3);
    for r in 1..=5 {
        let t = FamilySpec::Unit { r, k: 3 }.build().unwrap();
        for th in theta_grid() {
            let v = rho_upper_at_basis(&t, &std_basis(&t), &ThetaWeights::legs(th).unwrap()).unwrap();
            assert_abs_diff_eq!(v, (r as f64).log2(), epsilon = 1e-9);
        }
    }
    for q in 1..=3 {
        let t = FamilySpec::Cw(q).build().unwrap();
        let v = rho_upper_at_basis(&t, &std_basis(&t), &uniform).unwrap();
        assert_abs_diff_eq!(v, 2.0 / 3.0 * (q as f64).log2() + binary_entropy(1.0 / 3.0), epsilon = 1e-8);
    }
    let w = FamilySpec::w().build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let b = random_basis(&mut rng, w.dims());
    assert!(rho_upper_at_basis(&w, &b, &uniform).unwrap() > binary_entropy(1.0 / 3.0) + 1e-3);
    let zero = Tensor::zeros(Domain::Rational, vec![2, 2, 2]).unwrap();
    assert_eq!(rho_upper_at_basis(&zero, &std_basis(&zero), &uniform).unwrap(), f64::NEG_INFINITY);
}

#[test]
fn lower_at_basis_examples() {
    let uniform = ThetaWeights::uniform(3);
    // the diagonal becomes an antichain once leg 3 is read in reverse
    for r in 1..=4 {
        let t = FamilySpec::Unit { r, k: 3 }.build().unwrap();
        let rev: Vec<usize> = (0..r).rev().collect();
        let id = Matrix::identity(Domain::Rational, r);
        let b = BasisTuple::new(vec![id.clone(), id, Matrix::permutation(Domain::Rational, &rev).unwrap()]).unwrap();
        assert!(support_at_basis(&t, &b).unwrap().is_antichain());
        assert_abs_diff_eq!(rho_lower_at_basis(&t, &b, &uniform).unwrap(), (r as f64).log2(), epsilon = 1e-9);
    }
    let toy = Tensor::from_entries(
        Domain::Rational,
        vec![2, 2],
        vec![(vec![0, 0], Scalar::int(1)), (vec![1, 1], Scalar::int(1))],
    )
    .unwrap();
    let th2 = ThetaWeights::uniform(2);
    assert_abs_diff_eq!(rho_lower_at_basis(&toy, &std_basis(&toy), &th2).unwrap(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(rho_upper_at_basis(&toy, &std_basis(&toy), &th2).unwrap(), 1.0, epsilon = 1e-8);
    let w = FamilySpec::w().build().unwrap();
    assert_abs_diff_eq!(
        rho_lower_at_basis(&w, &std_basis(&w), &uniform).unwrap(),
        binary_entropy(1.0 / 3.0),
        epsilon = 1e-8
    );
}

#[test]
fn singular_basis_rejected() {
    let m = Matrix::from_i64(Domain::Rational, 2, 2, &[1, 2, 2, 4]).unwrap();
    let id = Matrix::identity(Domain::Rational, 2);
    assert!(BasisTuple::new(vec![m, id.clone(), id]).is_err());
}

#[test]
fn upper_functional_exact_cases() {
    let uniform = ThetaWeights::uniform(3);
    for r in 1..=6 {
        let t = FamilySpec::Unit { r, k: 3 }.build().unwrap();
        for th in theta_grid() {
            let rep = upper_support_functional(&t, &ThetaWeights::legs(th).unwrap(), &SearchStrategy::default()).unwrap();
            assert!(rep.exact);
            assert_abs_diff_eq!(rep.rho_upper.exp2(), r as f64, epsilon = 1e-9);
            assert_abs_diff_eq!(rep.rho_lower, rep.rho_upper, epsilon = 1e-9);
        }
    }
    for parts in [vec![2, 1], vec![1, 1, 1], vec![2, 2], vec![3, 1]] {
        let lam = PartitionSeq::new(parts).unwrap();
        let t = FamilySpec::Dicke(lam.clone()).build().unwrap();
        let k = t.order();
        let rep = upper_support_functional(&t, &ThetaWeights::uniform(k), &SearchStrategy::default()).unwrap();
        assert!(rep.exact && rep.oblique_basis_found && rep.tight_certificate.is_some());
        assert_eq!(rep.candidates_evaluated, 1);
        assert_abs_diff_eq!(rep.rho_upper, lam.entropy(), epsilon = 1e-7);
    }
    let w = upper_support_functional(&FamilySpec::w().build().unwrap(), &uniform, &SearchStrategy::default()).unwrap();
    assert_abs_diff_eq!(w.rho_upper, binary_entropy(1.0 / 3.0), epsilon = 1e-8);
}

#[test]
fn capset_binomial_basis_is_tight() {
    let t = FamilySpec::CapSet { m: 3, p: 3 }.build().unwrap();
    let b = binomial_basis(3, 3).unwrap();
    let binv = b.inverse().unwrap();
    let basis = BasisTuple::from_transforms(vec![binv.clone(), binv.clone(), binv]).unwrap();
    let strategy = SearchStrategy {
        extra_bases: vec![basis],
        ..Default::default()
    };
    let rep = upper_support_functional(&t, &ThetaWeights::uniform(3), &strategy).unwrap();
    assert!(rep.oblique_basis_found && rep.exact);
    assert!(rep.support.is_antichain());
    assert_eq!(rep.support.len(), 6);
    // symmetric tight support: uniform θ is the minimizing θ, so 2^H_θ = z(3)
    assert_abs_diff_eq!(rep.rho_upper.exp2(), z_of_n(3).unwrap().z, epsilon = 1e-6);
    let std = upper_support_functional(&t, &ThetaWeights::uniform(3), &SearchStrategy { use_rref: false, restarts: 0, ..Default::default() }).unwrap();
    assert!(std.rho_upper > rep.rho_upper + 0.1);
}

#[test]
fn gauge_point_examples() {
    for r in 1..=4 {
        assert_eq!(gauge_points(&FamilySpec::Unit { r, k: 3 }.build().unwrap()).unwrap(), vec![r; 3]);
    }
    for (a, b, c) in [(1, 2, 3), (2, 2, 2), (2, 3, 1)] {
        let t = FamilySpec::MatMul { a, b, c }.build().unwrap();
        let mut want = vec![a * b, b * c, c * a];
        want.sort_unstable();
        let mut got = gauge_points(&t).unwrap();
        assert_eq!(got, t.dims());
        got.sort_unstable();
        assert_eq!(got, want);
    }
    for q in 1..=3 {
        assert_eq!(gauge_points(&FamilySpec::Cw(q).build().unwrap()).unwrap(), vec![q + 1; 3]);
    }
}

#[test]
fn instability_examples() {
    for r in 1..=4 {
        let t = FamilySpec::Unit { r, k: 3 }.build().unwrap();
        let rep = instability_lp(&t, &std_basis(&t)).unwrap();
        assert_eq!(rep.epsilon_exact, "0");
        assert_eq!(rep.epsilon, 0.0);
    }
    let point = Tensor::from_entries(Domain::Rational, vec![2, 2, 2], vec![(vec![0, 0, 0], Scalar::int(1))]).unwrap();
    let rep = instability_lp(&point, &std_basis(&point)).unwrap();
    assert!(rep.epsilon > 0.0);
    let uniform = [1.0 / 3.0; 3];
    let v = rho_upper_at_basis(&point, &std_basis(&point), &ThetaWeights::uniform(3)).unwrap();
    assert!(v <= rep.bound(point.dims(), &uniform) + 1e-6);
    let zero = Tensor::zeros(Domain::Rational, vec![2, 2, 2]).unwrap();
    assert!(instability_lp(&zero, &std_basis(&zero)).is_err());
}

#[test]
fn record_lists_fields() {
    let t = FamilySpec::Cw(1).build().unwrap();
    let rep = upper_support_functional(&t, &ThetaWeights::uniform(3), &SearchStrategy::default()).unwrap();
    let rec = rep.to_record();
    for key in ["theta=", "rho_upper=", "rho_lower=", "exact=", "oblique_basis_found="] {
        assert!(rec.contains(key), "{rec}");
    }
}

#[test]
fn search_is_seeded() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = random_tensor(&mut rng, &[3, 3, 2]);
    let s = SearchStrategy { restarts: 5, steps: 40, seed: 9, ..Default::default() };
    let a = upper_support_functional(&t, &ThetaWeights::uniform(3), &s).unwrap();
    let b = upper_support_functional(&t, &ThetaWeights::uniform(3), &s).unwrap();
    assert_eq!(a.rho_upper, b.rho_upper);
    assert_eq!(a.basis, b.basis);
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=3usize, 3)
}

fn theta_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, 3).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    })
}

fn oblique_tensor(i: usize) -> Tensor {
    match i % 5 {
        0 => FamilySpec::Unit { r: 2, k: 3 }.build(),
        1 => FamilySpec::w().build(),
        2 => FamilySpec::Cw(1).build(),
        3 => FamilySpec::PolyMultMod(2).build(),
        _ => FamilySpec::Unit { r: 1, k: 3 }.build(),
    }
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lower_below_upper(dims in dims_strategy(), seed in any::<u64>(), th in theta_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tensor(&mut rng, &dims);
        let theta = ThetaWeights::legs(th).unwrap();
        for b in [std_basis(&t), random_basis(&mut rng, &dims)] {
            let lo = rho_lower_at_basis(&t, &b, &theta).unwrap();
            let up = rho_upper_at_basis(&t, &b, &theta).unwrap();
            prop_assert!(lo <= up + 1e-9);
            if support_at_basis(&t, &b).unwrap().is_antichain() {
                prop_assert!((up - lo).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn additive_on_oblique_pairs(i in 0usize..5, j in 0usize..5, th in theta_strategy()) {
        let (s, t) = (oblique_tensor(i), oblique_tensor(j));
        let theta = ThetaWeights::legs(th).unwrap();
        let st = SearchStrategy::default();
        let zs = upper_support_functional(&s, &theta, &st).unwrap();
        let zt = upper_support_functional(&t, &theta, &st).unwrap();
        let sum = s.direct_sum(&t).unwrap();
        let zsum = upper_support_functional(&sum, &theta, &st).unwrap();
        prop_assert!(zs.exact && zt.exact && zsum.exact);
        let lhs = zsum.rho_upper.exp2();
        let rhs = zs.rho_upper.exp2() + zt.rho_upper.exp2();
        prop_assert!((lhs - rhs).abs() <= 1e-6, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn submultiplicative_at_product_basis(d1 in dims_strategy(), d2 in dims_strategy(), seed in any::<u64>(), th in theta_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, t) = (random_tensor(&mut rng, &d1), random_tensor(&mut rng, &d2));
        let p = s.tensor_product(&t).unwrap();
        let hp = max_h_theta_legs(&p.support(), &th, None).unwrap().value;
        let hs = max_h_theta_legs(&s.support(), &th, None).unwrap().value;
        let ht = max_h_theta_legs(&t.support(), &th, None).unwrap().value;
        prop_assert!(hp <= hs + ht + 1e-9);
    }

    #[test]
    fn bounded_by_dimensions(dims in dims_strategy(), seed in any::<u64>(), th in theta_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tensor(&mut rng, &dims);
        let theta = ThetaWeights::legs(th.clone()).unwrap();
        let st = SearchStrategy { restarts: 3, steps: 30, seed, ..Default::default() };
        let rep = upper_support_functional(&t, &theta, &st).unwrap();
        let cap: f64 = dims.iter().zip(&th).map(|(&n, w)| w * (n as f64).log2()).sum();
        prop_assert!(rep.rho_upper <= cap + 1e-9);
        prop_assert!(rep.rho_lower <= rep.rho_upper + 1e-9);
    }

    #[test]
    fn instability_bound_holds(dims in dims_strategy(), seed in any::<u64>(), th in theta_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tensor(&mut rng, &dims);
        let b = random_basis(&mut rng, &dims);
        let rep = instability_lp(&t, &b).unwrap();
        prop_assert!(rep.epsilon >= 0.0);
        let v = rho_upper_at_basis(&t, &b, &ThetaWeights::legs(th.clone()).unwrap()).unwrap();
        prop_assert!(v <= rep.bound(&dims, &th) + 1e-6);
    }
}
