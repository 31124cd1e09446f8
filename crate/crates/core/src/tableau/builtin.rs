//! Pairs with published coefficients, plus optimized members of the family.

use nalgebra::{DMatrix, DVector};

use super::family::{construct_family, FamilyParams};
use super::{
    build_interpolant, derive_error_weights, ButcherTableau, ContinuousPair, ExactCoefficients,
    Interpolant, Ratio,
};
use crate::error::{Result, RkError};

const fn r(num: i64, den: i64) -> Ratio {
    Ratio::new(num, den)
}

const fn z() -> Ratio {
    Ratio::int(0)
}

/// T5 level the difference vectors of the (4,6) pair are scaled to.
const TABLE46_T5_TARGET: f64 = 1e-5;

/// Names accepted by [`builtin`].
pub fn builtin_names() -> &'static [&'static str] {
    &["dormand_prince", "table46", "opt_a", "opt_b"]
}

/// Look up a builtin pair by name.
pub fn builtin(name: &str) -> Result<ContinuousPair> {
    match name {
        "dormand_prince" | "dopri5" => dormand_prince(),
        "table46" => table46(),
        "opt_a" => optimized(&OPT_A),
        "opt_b" => optimized(&OPT_B),
        _ => Err(RkError::UnknownBuiltin(name.to_string())),
    }
}

fn dormand_prince_exact() -> ExactCoefficients {
    let b = vec![
        r(35, 384),
        z(),
        r(500, 1113),
        r(125, 192),
        r(-2187, 6784),
        r(11, 84),
        z(),
    ];
    ExactCoefficients {
        c: vec![z(), r(1, 5), r(3, 10), r(4, 5), r(8, 9), Ratio::int(1), Ratio::int(1)],
        a: vec![
            vec![],
            vec![r(1, 5)],
            vec![r(3, 40), r(9, 40)],
            vec![r(44, 45), r(-56, 15), r(32, 9)],
            vec![r(19372, 6561), r(-25360, 2187), r(64448, 6561), r(-212, 729)],
            vec![
                r(9017, 3168),
                r(-355, 33),
                r(46732, 5247),
                r(49, 176),
                r(-5103, 18656),
            ],
            b[..6].to_vec(),
        ],
        b,
    }
}

/// Weights of the embedded fourth-order method.
pub(crate) const DOPRI_B4: [Ratio; 7] = [
    r(5179, 57600),
    z(),
    r(7571, 16695),
    r(393, 640),
    r(-92097, 339200),
    r(187, 2100),
    r(1, 40),
];

/// Coefficients of the θ²(1−θ)² correction in the standard fourth-order dense output.
const DOPRI_DENSE: [Ratio; 7] = [
    r(-12715105075, 11282082432),
    z(),
    r(87487479700, 32700410799),
    r(-10690763975, 1880347072),
    r(701980252875, 199316789632),
    r(-1453857185, 822651844),
    r(69997945, 29380423),
];

fn dormand_prince() -> Result<ContinuousPair> {
    let tableau = ButcherTableau::from_exact(dormand_prince_exact(), Some(7))?;
    let b = tableau.b().clone();
    let b4 = DVector::from_iterator(7, DOPRI_B4.iter().map(|r| r.to_f64()));
    let dense = DVector::from_iterator(7, DOPRI_DENSE.iter().map(|r| r.to_f64()));
    let mut e1 = DVector::zeros(7);
    e1[0] = 1.0;
    let mut e7 = DVector::zeros(7);
    e7[6] = 1.0;
    // β(θ) = θ b + θ(1−θ)(e1 − b) + θ²(1−θ)(2b − e1 − e7) + θ²(1−θ)² dense
    let rows = [
        e1.clone(),
        &b * 3.0 - &e1 * 2.0 - &e7 + &dense,
        -(&b * 2.0 - &e1 - &e7) - &dense * 2.0,
        dense,
    ];
    let coeffs = DMatrix::from_rows(&rows.iter().map(|v| v.transpose()).collect::<Vec<_>>());
    Ok(ContinuousPair {
        tableau,
        interpolant: Some(Interpolant::new(coeffs)),
        d_basis: vec![b4 - b],
        orders: (4, 5),
    })
}

fn table46_exact() -> ExactCoefficients {
    let b = vec![
        r(16, 243),
        z(),
        z(),
        r(16807, 53460),
        r(53, 300),
        r(2401, 12150),
        r(2401, 12150),
        r(79, 1650),
        z(),
    ];
    ExactCoefficients {
        c: vec![
            z(),
            r(1, 14),
            r(1, 7),
            r(3, 14),
            r(1, 2),
            r(9, 14),
            r(6, 7),
            Ratio::int(1),
            Ratio::int(1),
        ],
        a: vec![
            vec![],
            vec![r(1, 14)],
            vec![z(), r(1, 7)],
            vec![r(3, 56), z(), r(9, 56)],
            vec![r(29, 72), z(), r(-35, 24), r(14, 9)],
            vec![r(-17, 56), z(), r(93, 56), r(-8, 7), r(3, 7)],
            vec![
                r(199, 1372),
                z(),
                r(-195, 196),
                r(1259, 784),
                r(-3855, 5488),
                r(45, 56),
            ],
            vec![
                r(4903, 25596),
                z(),
                r(4487, 2844),
                r(-255101, 102384),
                r(33847, 11376),
                r(-94325, 51192),
                r(3773, 6399),
            ],
            b[..8].to_vec(),
        ],
        b,
    }
}

fn table46() -> Result<ContinuousPair> {
    let tableau = ButcherTableau::from_exact(table46_exact(), Some(9))?;
    let (interp, _) = build_interpolant(tableau.a(), tableau.c())?;
    let d_basis = derive_error_weights(&tableau)?;
    let mut pair = ContinuousPair {
        tableau,
        interpolant: Some(interp),
        d_basis,
        orders: (4, 6),
    };
    pair.scale_error_weights(TABLE46_T5_TARGET)?;
    Ok(pair)
}

/// Family parameters found by the optimizer, rationalized, with the T5 level of their
/// difference vectors.
struct FrozenOptimum {
    params: [Ratio; 11],
    t5_target: f64,
}

// Objective A (continuous error + variation + coefficient size).
const OPT_A: FrozenOptimum = FrozenOptimum {
    params: [
        r(104, 669),
        r(194, 941),
        r(355, 734),
        r(403, 716),
        r(503, 578),
        r(811, 883),
        r(37, 144),
        r(-379, 767),
        r(203, 200),
        r(-239, 689),
        r(29, 83),
    ],
    t5_target: 2e-4,
};

// Objective B (endpoint T6 with T7 ≤ 10 T6).
const OPT_B: FrozenOptimum = FrozenOptimum {
    params: [
        r(60, 659),
        r(3, 17),
        r(51, 107),
        r(358, 559),
        r(821, 916),
        r(620, 677),
        r(90, 163),
        r(-478, 515),
        r(934, 987),
        r(10, 871),
        r(62, 405),
    ],
    t5_target: 2.5e-5,
};

fn optimized(frozen: &FrozenOptimum) -> Result<ContinuousPair> {
    let mut v = [0.0; 11];
    for (dst, src) in v.iter_mut().zip(&frozen.params) {
        *dst = src.to_f64();
    }
    let mut pair = construct_family(&FamilyParams::from_array(v))?;
    pair.scale_error_weights(frozen.t5_target)?;
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::verify_order;

    #[test]
    fn dormand_prince_interpolant_is_order_four_and_c1() {
        let pair = builtin("dormand_prince").unwrap();
        let interp = pair.interpolant.as_ref().unwrap();
        let weights = crate::trees::ElementaryWeights::new(pair.tableau.a(), 4);
        for k in 0..=10 {
            let th = k as f64 / 10.0;
            let beta = interp.weights_at(th);
            for p in 1..=4 {
                let t = weights.error_norm(beta.as_slice(), th, p).unwrap();
                assert!(t < 1e-14, "θ = {th}, p = {p}: {t}");
            }
        }
        let d0 = interp.derivative_at(0.0);
        let d1 = interp.derivative_at(1.0);
        for j in 0..7 {
            assert!((d0[j] - if j == 0 { 1.0 } else { 0.0 }).abs() < 1e-13);
            assert!((d1[j] - if j == 6 { 1.0 } else { 0.0 }).abs() < 1e-13);
        }
        assert!((interp.weights_at(1.0) - pair.tableau.b()).amax() < 1e-15);
    }

    #[test]
    fn dormand_prince_fourth_order_weights() {
        let pair = builtin("dormand_prince").unwrap();
        let x = pair.tableau.b() + &pair.d_basis[0];
        let report = verify_order(&pair.tableau, x.as_slice(), 5).unwrap();
        assert!(report.per_order[..4].iter().all(|r| r.max_abs < 1e-12));
        assert!(report.per_order[4].max_abs > 1e-6);
    }

    #[test]
    fn unknown_name() {
        assert_eq!(
            builtin("rk4").unwrap_err(),
            RkError::UnknownBuiltin("rk4".into())
        );
    }
}
