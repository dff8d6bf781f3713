//! Invariants over seeded random inputs.

mod common;

use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use qframes::group_frame::{
    duality_residual, factorization_residual, frame_covariance_residual, invariance_residual, relativize,
    unitality_residual, GroupFrame, SystemAction,
};
use qframes::integral::{bilinear_pairing, channel_interchange_check, pairing_residual};
use qframes::measure::{check_covariance, push_forward, CovariantPovm, SampleSpace};
use qframes::operator::expect;
use qframes::pde::{duality_residual as lift_duality_residual, lift_apply, DifferenceOperator};
use qframes::scenario::random::{
    derive_seed, random_channel, random_field, random_matrix, random_operator, random_povm, random_state,
    random_unitary, rng,
};
use qframes::scenario::{canonical_digest, Scenario};
use qframes::symmetry::{FiniteGroup, UnitaryRep};
use qframes::{Operator, C64, DEFAULT_TOL};

const TOL: f64 = 1e-10;

fn group_strategy() -> impl Strategy<Value = FiniteGroup> {
    prop_oneof![
        (1usize..6).prop_map(FiniteGroup::cyclic),
        (2usize..4).prop_map(FiniteGroup::dihedral),
        Just(FiniteGroup::symmetric(3)),
    ]
}

/// The left regular representation, written out independently.
fn left_regular(g: &Arc<FiniteGroup>) -> UnitaryRep {
    let mats = g
        .elements()
        .map(|a| Operator::new(perm_matrix(&g.elements().map(|x| g.mul(a, x)).collect::<Vec<_>>())).unwrap())
        .collect();
    UnitaryRep::new(g.clone(), mats, DEFAULT_TOL).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_states_are_density_matrices(seed in any::<u64>(), dim in 1usize..5) {
        let rho = random_state(&mut rng(seed), dim);
        prop_assert!((rho.op().trace().re - 1.0).abs() < TOL);
        prop_assert!(rho.op().hermitian_eigenvalues().iter().all(|&l| l > -TOL));
    }

    #[test]
    fn random_unitaries_are_unitary(seed in any::<u64>(), dim in 1usize..5) {
        let u = random_unitary(&mut rng(seed), dim);
        prop_assert!(max_diff(&(dagger(u.matrix()) * u.matrix()), &M::identity(dim, dim)) < TOL);
    }

    #[test]
    fn channel_pictures_agree(seed in any::<u64>(), rows in 1usize..4, cols in 1usize..4, k in 1usize..4) {
        prop_assume!(k * rows >= cols);
        let mut r = rng(seed);
        let psi = random_channel(&mut r, rows, cols, k);
        let rho = random_state(&mut r, cols);
        let a = random_operator(&mut r, rows);
        let lhs = expect(&psi.schrodinger(&rho).unwrap(), &a).unwrap();
        let rhs = expect(&rho, &psi.heisenberg(&a).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() < TOL);
        prop_assert!(max_diff(psi.heisenberg(&Operator::identity(rows)).unwrap().matrix(), &M::identity(cols, cols)) < TOL);
    }

    #[test]
    fn regular_povms_are_covariant(g in group_strategy()) {
        prop_assert!(check_covariance(&CovariantPovm::ideal(Arc::new(g))) < TOL);
    }

    #[test]
    fn push_forwards_stay_normalized(seed in any::<u64>(), n in 1usize..8, m in 1usize..4) {
        let mut r = rng(seed);
        let e = random_povm(&mut r, 2, n);
        let map: Vec<usize> = (0..n).map(|x| (x * 7 + seed as usize) % m).collect();
        let pushed = push_forward(&e, &SampleSpace::indexed(m), &map).unwrap();
        let total = pushed.effects().fold(M::zeros(2, 2), |acc, x| acc + x.matrix());
        prop_assert!(max_diff(&total, &M::identity(2, 2)) < TOL);
    }

    #[test]
    fn pairing_is_bilinear(seed in any::<u64>(), n in 1usize..7, ds in 1usize..4, df in 1usize..4) {
        let mut r = rng(seed);
        let f = random_field(&mut r, n, ds);
        let e = random_povm(&mut r, df, n);
        let (a1, a2) = (random_operator(&mut r, ds), random_operator(&mut r, ds));
        let b = random_operator(&mut r, df);
        let (x, y) = (C64::new(0.3, -1.2), C64::new(-2.0, 0.5));
        let combo = Operator::new(a1.matrix() * x + a2.matrix() * y).unwrap();
        let lhs = bilinear_pairing(&f, &e, &combo, &b).unwrap();
        let rhs = bilinear_pairing(&f, &e, &a1, &b).unwrap() * x + bilinear_pairing(&f, &e, &a2, &b).unwrap() * y;
        prop_assert!((lhs - rhs).norm() < TOL);
        let rho = random_state(&mut r, ds);
        let omega = random_state(&mut r, df);
        prop_assert!(pairing_residual(&f, &e, &rho, &omega).unwrap() < TOL);
    }

    #[test]
    fn integration_commutes_with_channels(seed in any::<u64>(), n in 1usize..6, df in 1usize..4, out in 1usize..4) {
        let mut r = rng(seed);
        let f = random_field(&mut r, n, 2);
        let e = random_povm(&mut r, df, n);
        let psi = random_channel(&mut r, df, out, df.max(out));
        prop_assert!(channel_interchange_check(&f, &e, &psi).unwrap() < TOL);
    }

    #[test]
    fn group_frame_identities(g in group_strategy(), seed in any::<u64>()) {
        let g = Arc::new(g);
        let sys = SystemAction::new(left_regular(&g));
        let frame = GroupFrame::ideal(g.clone());
        let mut r = rng(seed);
        let d = g.order();
        let a = random_operator(&mut r, d);
        let rho = random_state(&mut r, d);
        let omega = random_state(&mut r, d);
        prop_assert!(duality_residual(&rho, &omega, &a, &frame, &sys).unwrap() < TOL);
        prop_assert!(invariance_residual(&a, &frame, &sys).unwrap() < TOL);
        prop_assert!(factorization_residual(&a, &omega, &frame, &sys).unwrap() < TOL);
        prop_assert!(frame_covariance_residual(&rho, &omega, &frame, &sys).unwrap() < TOL);
        prop_assert!(unitality_residual(&frame, &sys).unwrap() < TOL);
    }

    #[test]
    fn relativization_is_linear(seed in any::<u64>()) {
        let g = Arc::new(FiniteGroup::dihedral(3));
        let sys = SystemAction::new(left_regular(&g));
        let frame = GroupFrame::ideal(g);
        let mut r = rng(seed);
        let (a, b) = (random_operator(&mut r, 6), random_operator(&mut r, 6));
        let sum = Operator::new(a.matrix() + b.matrix() * C64::new(0.0, 2.0)).unwrap();
        let lhs = relativize(&sum, &frame, &sys).unwrap();
        let rhs = relativize(&a, &frame, &sys).unwrap().matrix() + relativize(&b, &frame, &sys).unwrap().matrix() * C64::new(0.0, 2.0);
        prop_assert!(max_diff(lhs.matrix(), &rhs) < TOL);
    }

    #[test]
    fn lifts_agree_and_are_linear(seed in any::<u64>(), n in 1usize..7, d in 1usize..4) {
        let mut r = rng(seed);
        let t = DifferenceOperator::new(SampleSpace::indexed(n), random_matrix(&mut r, n, n)).unwrap();
        let (f, g) = (random_field(&mut r, n, d), random_field(&mut r, n, d));
        prop_assert!(lift_duality_residual(&t, &f).unwrap() < TOL);
        let s = C64::new(1.5, -0.5);
        let combo = f.linear_combination(s, &g, C64::new(1.0, 0.0)).unwrap();
        let lhs = lift_apply(&t, &combo).unwrap();
        let (tf, tg) = (lift_apply(&t, &f).unwrap(), lift_apply(&t, &g).unwrap());
        for p in 0..n {
            prop_assert!(max_diff(lhs.value(p).matrix(), &(tf.value(p).matrix() * s + tg.value(p).matrix())) < TOL);
        }
    }

    #[test]
    fn derived_seeds_separate_paths(seed in any::<u64>(), a in "[a-z]{1,8}", b in "[a-z]{1,8}") {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(seed, &a), derive_seed(seed, &b));
        prop_assert_eq!(derive_seed(seed, &a), derive_seed(seed, &a));
    }
}

#[test]
fn digest_ignores_key_order() {
    let a = r#"{"name":"x","group":{"builtin":"cyclic","n":2},"checks":[{"kind":"group_axioms","group":"G"}]}"#;
    let b = r#"{"checks":[{"group":"G","kind":"group_axioms"}],"group":{"n":2,"builtin":"cyclic"},"name":"x"}"#;
    let (sa, sb) = (Scenario::from_str(a).unwrap(), Scenario::from_str(b).unwrap());
    assert_eq!(sa.digest(), sb.digest());
    assert_eq!(sa.digest(), canonical_digest(&serde_json::from_str(a).unwrap()));
}
