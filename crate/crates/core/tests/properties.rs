use lie_doubles::brackets::{bracket, BracketKind};
use lie_doubles::cxmat::{chol_upper, mat_exp, qr_pos, MatC};
use lie_doubles::doubles::{iwasawa, Space};
use lie_doubles::flows::{exact_flow, Family};
use lie_doubles::lie::{LieData, Subspace, Variant};
use lie_doubles::rmat::{cdybe_residual, ROperator};
use lie_doubles::sample;
use lie_doubles::verify::{family_hamiltonians, invariant_words};
use proptest::prelude::*;

fn lie_of(n: usize, unitary: bool) -> LieData {
    LieData::new(n, if unitary { Variant::U } else { Variant::Su }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn qr_reconstructs(seed: u64, n in 1usize..=6) {
        let a = sample::ginibre(&mut sample::rng(seed), n);
        let (q, r) = qr_pos(&a).unwrap();
        prop_assert!((&q * &r).dist(&a) < 1e-10 * a.frob_norm());
        prop_assert!(q.unitarity_defect() < 1e-12);
        prop_assert!(r.is_upper_positive());
    }

    #[test]
    fn cholesky_inverts_gram(seed: u64, n in 2usize..=4, unitary: bool) {
        let b = sample::group_b(&mut sample::rng(seed), &lie_of(n, unitary), 0.7);
        prop_assert!(chol_upper(&(&b * &b.adjoint())).unwrap().dist(&b) < 1e-10 * (1.0 + b.frob_norm()));
    }

    #[test]
    fn exponential_of_negative_is_inverse(seed: u64, n in 1usize..=4, size in 0.0f64..5.0) {
        let z = sample::ginibre(&mut sample::rng(seed), n);
        let x = z.scale_re(size / z.frob_norm());
        let prod = &mat_exp(&x).unwrap() * &mat_exp(&x.scale_re(-1.0)).unwrap();
        prop_assert!(prod.dist(&MatC::identity(n)) < 1e-11);
    }

    #[test]
    fn projections_split_the_algebra(seed: u64, n in 2usize..=4, unitary: bool) {
        let lie = lie_of(n, unitary);
        let z = sample::algebra_full(&mut sample::rng(seed), &lie, 1.0);
        let (g, b) = (lie.proj_g(&z), lie.proj_b(&z));
        prop_assert!((&g + &b).dist(&z) < 1e-13);
        prop_assert!(lie.membership_defect(&g, Subspace::G) < 1e-13);
        prop_assert!(lie.membership_defect(&b, Subspace::B) < 1e-13);
    }

    #[test]
    fn tau_flips_the_imaginary_form(seed: u64, n in 2usize..=4) {
        let lie = LieData::su(n);
        let mut r = sample::rng(seed);
        let (x, y) = (sample::ginibre(&mut r, n), sample::ginibre(&mut r, n));
        prop_assert!((lie.form_i(&lie.tau(&x), &lie.tau(&y)) + lie.form_i(&x, &y)).abs() < 1e-12);
    }

    #[test]
    fn dynamical_r_matrix_is_antisymmetric(seed: u64, n in 2usize..=4) {
        let lie = LieData::su(n);
        let mut r = sample::rng(seed);
        let op = ROperator::RLambda(sample::regular_cartan(&mut r, &lie, 1.0, 0.2));
        let (x, y) = (sample::algebra_g(&mut r, &lie, 1.0), sample::algebra_g(&mut r, &lie, 1.0));
        let a = lie.form_g(&op.apply(&x).unwrap(), &y);
        prop_assert!((a + lie.form_g(&x, &op.apply(&y).unwrap())).abs() < 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn dynamical_yang_baxter_holds(seed: u64, n in 2usize..=4) {
        let lie = LieData::su(n);
        let mut r = sample::rng(seed);
        let lambda = sample::regular_cartan(&mut r, &lie, 1.0, 0.3);
        let (x, y) = (sample::algebra_g(&mut r, &lie, 1.0), sample::algebra_g(&mut r, &lie, 1.0));
        prop_assert!(cdybe_residual(&lie, &lambda, &x, &y).unwrap() < 1e-9);
    }

    #[test]
    fn iwasawa_factors_multiply_back(seed: u64, n in 2usize..=4, unitary: bool) {
        let k = sample::group_complex(&mut sample::rng(seed), &lie_of(n, unitary), 0.8);
        let iw = iwasawa(&k).unwrap();
        prop_assert!((&iw.g_l * &iw.b_r.upper_inverse().unwrap()).dist(&k) < 1e-10 * k.frob_norm());
        prop_assert!((&iw.b_l * &iw.g_r.adjoint()).dist(&k) < 1e-10 * k.frob_norm());
    }

    #[test]
    fn brackets_are_antisymmetric(seed: u64, n in 2usize..=3, i in 0usize..5, j in 0usize..5) {
        let lie = LieData::su(n);
        let p = sample::point(&mut sample::rng(seed), &lie, Space::Cotangent, 0.5, 0.3);
        let ws = invariant_words(Space::Cotangent);
        let a = bracket(&lie, BracketKind::PbCotangent, &ws[i], &ws[j], &p).unwrap();
        let b = bracket(&lie, BracketKind::PbCotangent, &ws[j], &ws[i], &p).unwrap();
        prop_assert!((a + b).abs() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn flows_start_at_the_initial_point(seed: u64, n in 2usize..=3, pi2: bool) {
        let lie = LieData::su(n);
        let family = if pi2 { Family::Pi2 } else { Family::Pi1 };
        for space in [Space::Cotangent, Space::HeisenbergGB, Space::Quasi] {
            let p = sample::point(&mut sample::rng(seed), &lie, space, 0.5, 0.3);
            let h = &family_hamiltonians(space, family)[0];
            prop_assert!(exact_flow(&lie, family, h, &p, 0.0).unwrap().dist(&p) < 1e-13);
        }
    }
}
