mod common;

use proptest::prelude::*;

use rkforge::metrics;
use rkforge::tableau::{construct_family, q_vector, read_pair, write_pair, verify_order, FamilyParams};
use rkforge::{builtin, RkError};

fn table46_params() -> FamilyParams {
    FamilyParams::from_array([
        1.0 / 14.0,
        3.0 / 14.0,
        0.5,
        9.0 / 14.0,
        6.0 / 7.0,
        1.0,
        3.0 / 7.0,
        -3855.0 / 5488.0,
        45.0 / 56.0,
        -94325.0 / 51192.0,
        3773.0 / 6399.0,
    ])
}

#[test]
fn family_reproduces_published_sixth_order_tableau() {
    let built = construct_family(&table46_params()).unwrap();
    let golden = builtin("table46").unwrap();
    let diff = (built.tableau.a() - golden.tableau.a()).amax();
    assert!(diff < 1e-13 * golden.tableau.max_abs_coefficient(), "{diff}");
    let db = (built.tableau.b() - golden.tableau.b()).amax();
    assert!(db < 1e-12, "{db}");
    assert_eq!(built.orders, (4, 6));
    let bi = built.interpolant.unwrap();
    let gi = golden.interpolant.unwrap();
    assert!((bi.coeffs() - gi.coeffs()).amax() < 1e-11);
}

#[test]
fn degenerate_parameters_are_refused() {
    let mut p = table46_params();
    p.c5 = p.c4;
    assert!(matches!(construct_family(&p), Err(RkError::DegenerateFamily(_))));
    let mut p = table46_params();
    p.c2 = 0.0;
    assert!(matches!(construct_family(&p), Err(RkError::DegenerateFamily(_))));
    let mut p = table46_params();
    p.c7 = 1.2;
    assert!(construct_family(&p).is_err());
    let mut p = table46_params();
    p.a65 = f64::NAN;
    assert!(construct_family(&p).is_err());
}

#[test]
fn published_metrics_of_sixth_order_pair() {
    let pair = builtin("table46").unwrap();
    let r = metrics::report(&pair).unwrap();
    assert!(r.t6 < 1e-15);
    assert!(r.max_abs_a < 3.0);
    assert_eq!(pair.tableau.b()[8], 0.0);
    for t5 in &r.d_t5 {
        assert!(*t5 <= 1e-5 && *t5 > 5e-6, "{t5}");
    }
}

fn params_strategy() -> impl Strategy<Value = FamilyParams> {
    (
        0.02f64..0.2,
        proptest::collection::vec(0.1f64..1.0, 5),
        proptest::collection::vec(-3.0f64..3.0, 5),
    )
        .prop_map(|(c2, mut nodes, a)| {
            nodes.sort_by(f64::total_cmp);
            FamilyParams::from_array([
                c2, nodes[0], nodes[1], nodes[2], nodes[3], nodes[4], a[0], a[1], a[2], a[3], a[4],
            ])
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn constructed_pairs_satisfy_structure(p in params_strategy()) {
        if let Ok(pair) = construct_family(&p) {
            let t = &pair.tableau;
            let scale = t.max_abs_coefficient().max(1.0);
            prop_assert_eq!(t.b()[8], 0.0);
            prop_assert_eq!(t.fsal_stage(), Some(9));
            let q1 = q_vector(t, 1);
            for i in [0usize, 2, 3, 4, 5, 6, 7] {
                prop_assert!(q1[i].abs() <= 1e-10 * scale * scale);
            }
            let rows = pair.interpolant.as_ref().unwrap().coeffs().clone();
            let b_from_rows = common::beta(&rows, 1.0);
            prop_assert!((b_from_rows - t.b()).amax() <= 1e-12 * scale);
            let (v, n) = metrics::variation(pair.interpolant.as_ref().unwrap());
            prop_assert!((v - 1.0 - 2.0 * n).abs() <= 1e-10 * v.max(1.0));
            let report = verify_order(t, t.b().as_slice(), 5).unwrap();
            prop_assert!(report.max_residual() < 1e-9);
        }
    }

    #[test]
    fn written_pairs_read_back_bit_exact(p in params_strategy()) {
        if let Ok(pair) = construct_family(&p) {
            let text = write_pair(&pair);
            let back = read_pair(&text).unwrap();
            prop_assert_eq!(back.tableau.a(), pair.tableau.a());
            prop_assert_eq!(back.tableau.b(), pair.tableau.b());
            prop_assert_eq!(back.tableau.c(), pair.tableau.c());
            prop_assert_eq!(&back.interpolant, &pair.interpolant);
            prop_assert_eq!(&back.d_basis, &pair.d_basis);
            let r1 = verify_order(&pair.tableau, pair.tableau.b().as_slice(), 6).unwrap();
            let r2 = verify_order(&back.tableau, back.tableau.b().as_slice(), 6).unwrap();
            prop_assert_eq!(r1.to_string(), r2.to_string());
        }
    }
}
