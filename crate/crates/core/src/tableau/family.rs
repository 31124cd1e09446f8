//! The 11-parameter family of continuous 9-stage (4,5) pairs.
//!
//! Nodes `c1 = 0`, `c3 = 2 c4 / 3` and `c9 = 1` are fixed, the six coefficients
//! in `S = {65, 75, 85, 76, 86, 87}` except `a85` are free, and `a85` is pinned by
//! the scalar equation that makes `b9 = 0`. Rows 3..8 then follow from the
//! stage-order-3 structure `(q1)_i = 0 (i ≠ 2)`, `(A q1)_i = 0 (i ≠ 3)`,
//! `(q2)_i = 0 (i ≠ 2, 3)`, and the interpolant from inverting
//! `[1 | c | c² | c³ | c⁴ | q1 | A q1 | A² q1 | q3]`.

use nalgebra::{DMatrix, DVector};

use super::{derive_error_weights, verify_order, ButcherTableau, ContinuousPair, Interpolant};
use crate::error::{Result, RkError};

const STAGES: usize = 9;
const INTERPOLANT_DEGREE: usize = 5;

/// `(i, j)` index pairs (one-based) of the coefficients entering the `a85` equation.
const S: [(usize, usize); 6] = [(6, 5), (7, 5), (8, 5), (7, 6), (8, 6), (8, 7)];
/// Stages whose nodes appear in the `h_ij` denominators.
const NODE_SET: [usize; 6] = [1, 4, 5, 6, 7, 8];

/// Relative tolerance of the a85 affinity check.
const AFFINITY_TOL: f64 = 1e-9;
/// `b9` must vanish to this absolute tolerance.
const B9_TOL: f64 = 1e-10;
/// Order-5 residual above which a construction is declared numerically singular.
const ORDER_TOL: f64 = 1e-9;

/// The free parameters of the family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyParams {
    pub c2: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub a65: f64,
    pub a75: f64,
    pub a76: f64,
    pub a86: f64,
    pub a87: f64,
}

impl FamilyParams {
    pub const NAMES: [&'static str; 11] = [
        "c2", "c4", "c5", "c6", "c7", "c8", "a65", "a75", "a76", "a86", "a87",
    ];

    pub fn from_array(v: [f64; 11]) -> Self {
        FamilyParams {
            c2: v[0],
            c4: v[1],
            c5: v[2],
            c6: v[3],
            c7: v[4],
            c8: v[5],
            a65: v[6],
            a75: v[7],
            a76: v[8],
            a86: v[9],
            a87: v[10],
        }
    }

    pub fn to_array(&self) -> [f64; 11] {
        [
            self.c2, self.c4, self.c5, self.c6, self.c7, self.c8, self.a65, self.a75, self.a76,
            self.a86, self.a87,
        ]
    }

    /// Full node vector `c1..c9`.
    pub fn nodes(&self) -> [f64; STAGES] {
        [
            0.0,
            self.c2,
            2.0 * self.c4 / 3.0,
            self.c4,
            self.c5,
            self.c6,
            self.c7,
            self.c8,
            1.0,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(RkError::DegenerateFamily("non-finite parameter".into()));
        }
        for (name, v) in FamilyParams::NAMES.iter().zip(&self.to_array()[..6]) {
            if !(*v > 0.0 && *v <= 1.0) {
                return Err(RkError::DegenerateFamily(format!(
                    "node {name} = {v} outside (0, 1]"
                )));
            }
        }
        let c = self.nodes();
        for (x, &i) in NODE_SET.iter().enumerate() {
            for &k in &NODE_SET[x + 1..] {
                if c[i - 1] == c[k - 1] {
                    return Err(RkError::DegenerateFamily(format!(
                        "duplicate nodes c{i} = c{k} = {}",
                        c[i - 1]
                    )));
                }
            }
        }
        Ok(())
    }

    fn s_coefficient(&self, i: usize, j: usize, a85: f64) -> f64 {
        match (i, j) {
            (6, 5) => self.a65,
            (7, 5) => self.a75,
            (8, 5) => a85,
            (7, 6) => self.a76,
            (8, 6) => self.a86,
            (8, 7) => self.a87,
            _ => unreachable!("({i}, {j}) is not in S"),
        }
    }
}

/// Residual of the scalar equation that fixes `a85`, evaluated at a trial value.
///
/// `Σ_S Y_j h_ij − Σ_{unordered pairs of S} (c_i − c_k)(c_j − c_l) Z_{21−i−k} h_ij h_kl`.
pub fn a85_residual(p: &FamilyParams, a85: f64) -> f64 {
    let c = p.nodes();
    let node = |i: usize| c[i - 1];
    let c4 = p.c4;
    let c5 = p.c5;
    let h: Vec<f64> = S
        .iter()
        .map(|&(i, j)| {
            let den: f64 = NODE_SET
                .iter()
                .filter(|&&k| k != i)
                .map(|&k| node(i) - node(k))
                .product();
            p.s_coefficient(i, j, a85) * node(j) * (node(j) - c4) / den
        })
        .collect();
    let y = |j: usize| 3.0 - 5.0 * c4 - 5.0 * node(j) + 10.0 * c4 * node(j);
    let z = |m: usize| {
        let cm = node(m);
        12.0 - 15.0 * c4 - 15.0 * c5 - 15.0 * cm + 20.0 * c4 * c5 + 20.0 * c4 * cm + 20.0 * c5 * cm
            - 30.0 * c4 * c5 * cm
    };
    let linear: f64 = S.iter().zip(&h).map(|(&(_, j), hij)| y(j) * hij).sum();
    let mut quadratic = 0.0;
    for (x, &(i, j)) in S.iter().enumerate() {
        for (w, &(k, l)) in S.iter().enumerate().skip(x + 1) {
            if i == k || j == l {
                continue;
            }
            quadratic += (node(i) - node(k)) * (node(j) - node(l)) * z(21 - i - k) * h[x] * h[w];
        }
    }
    linear - quadratic
}

/// Solve the affine `a85` equation from two trial evaluations, confirming affinity with a third.
fn solve_a85(p: &FamilyParams) -> Result<f64> {
    let r0 = a85_residual(p, 0.0);
    let r1 = a85_residual(p, 1.0);
    let r2 = a85_residual(p, 2.0);
    let scale = r0.abs() + r1.abs() + r2.abs();
    if !scale.is_finite() {
        return Err(RkError::DegenerateFamily("a85 equation is not finite".into()));
    }
    if (r2 - 2.0 * r1 + r0).abs() > AFFINITY_TOL * scale {
        return Err(RkError::InternalConsistency(format!(
            "a85 residual is not affine: second difference {:e} vs scale {:e}",
            r2 - 2.0 * r1 + r0,
            scale
        )));
    }
    let slope = r1 - r0;
    if slope.abs() <= 1e-14 * scale {
        return Err(RkError::DegenerateFamily(
            "a85 does not enter the b9 equation".into(),
        ));
    }
    Ok(-r0 / slope)
}

/// Rows 1..8 of `A` given all six `S` coefficients.
fn fill_rows(p: &FamilyParams, a85: f64) -> DMatrix<f64> {
    let c = p.nodes();
    let mut a = DMatrix::zeros(STAGES, STAGES);
    for &(i, j) in &S {
        a[(i - 1, j - 1)] = p.s_coefficient(i, j, a85);
    }
    let (c3, c4) = (c[2], c[3]);
    a[(2, 1)] = c3 * c3 / (2.0 * p.c2);
    for i in 3..8 {
        let ci = c[i];
        let mut s4 = 0.0;
        let mut s3 = 0.0;
        for j in 4..i {
            s4 += a[(i, j)] * c[j] * (c[j] - c3);
            s3 += a[(i, j)] * c[j] * (c[j] - c4);
        }
        a[(i, 3)] = (ci * ci * (ci - c4) - 3.0 * s4) / (c4 * c4);
        a[(i, 2)] = (ci * ci * (c4 - 2.0 * ci / 3.0) + 2.0 * s3) / (c3 * c3);
    }
    for i in 1..8 {
        let rest: f64 = (1..i).map(|j| a[(i, j)]).sum();
        a[(i, 0)] = c[i] - rest;
    }
    a
}

/// Interpolant from rows 1..8 of `A` and the nodes of a 9-stage tableau.
///
/// Returns `B` (5 × 9) and the weights `b` given by its column sums.
pub fn build_interpolant(a: &DMatrix<f64>, c: &DVector<f64>) -> Result<(Interpolant, DVector<f64>)> {
    if a.nrows() != STAGES || a.ncols() != STAGES || c.len() != STAGES {
        return Err(RkError::DimensionMismatch {
            expected: STAGES,
            got: c.len(),
        });
    }
    let mut rows = a.clone();
    rows.row_mut(STAGES - 1).fill(0.0);

    let pow = |n: i32| c.map(|v| v.powi(n));
    let q = |n: i32| &rows * pow(n) - c.map(|v| v.powi(n + 1) / (n as f64 + 1.0));
    let mut q1 = q(1);
    let mut aq1 = &rows * &q1;
    let mut a2q1 = &rows * &aq1;
    let mut q3 = q(3);
    for v in [&mut q1, &mut aq1, &mut a2q1, &mut q3] {
        v[STAGES - 1] = 0.0;
    }
    let columns = [
        DVector::from_element(STAGES, 1.0),
        c.clone(),
        pow(2),
        pow(3),
        pow(4),
        q1,
        aq1,
        a2q1,
        q3,
    ];
    let m = DMatrix::from_columns(&columns);
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| RkError::SingularFamily("interpolant matrix is singular".into()))?;
    if !inv.iter().all(|v| v.is_finite()) {
        return Err(RkError::SingularFamily("interpolant matrix is singular".into()));
    }
    let mut coeffs = inv.rows(0, INTERPOLANT_DEGREE).into_owned();
    for k in 0..INTERPOLANT_DEGREE {
        coeffs.row_mut(k).scale_mut(1.0 / (k as f64 + 1.0));
    }
    let b = DVector::from_iterator(STAGES, coeffs.column_iter().map(|col| col.sum()));
    let interp = Interpolant::new(coeffs);

    let slope_end = interp.derivative_at(1.0);
    let scale = interp.coeffs().amax().max(1.0);
    for j in 0..STAGES {
        let want = if j == STAGES - 1 { 1.0 } else { 0.0 };
        if (slope_end[j] - want).abs() > 1e-10 * scale {
            return Err(RkError::InternalConsistency(format!(
                "β'(1) differs from the FSAL unit vector at stage {}",
                j + 1
            )));
        }
    }
    Ok((interp, b))
}

/// Construct the continuous pair for a parameter set.
pub fn construct_family(p: &FamilyParams) -> Result<ContinuousPair> {
    let mut pair = construct_without_estimator(p)?;
    pair.d_basis = derive_error_weights(&pair.tableau)?;
    Ok(pair)
}

/// [`construct_family`] without the difference vectors, for objective evaluation.
pub(crate) fn construct_without_estimator(p: &FamilyParams) -> Result<ContinuousPair> {
    p.validate()?;
    let a85 = solve_a85(p)?;
    let mut a = fill_rows(p, a85);
    if !a.iter().all(|v| v.is_finite()) {
        return Err(RkError::DegenerateFamily("coefficients are not finite".into()));
    }
    let c = DVector::from_row_slice(&p.nodes());
    let (interp, mut b) = build_interpolant(&a, &c)?;
    if b[STAGES - 1].abs() > B9_TOL {
        return Err(RkError::InternalConsistency(format!(
            "b9 = {:e} does not vanish",
            b[STAGES - 1]
        )));
    }
    b[STAGES - 1] = 0.0;
    for j in 0..STAGES {
        a[(STAGES - 1, j)] = b[j];
    }
    let tableau = ButcherTableau::new(c, a, b.clone(), Some(STAGES))
        .map_err(|e| RkError::SingularFamily(format!("tableau rejected: {e}")))?;
    let report = verify_order(&tableau, b.as_slice(), 6)?;
    if report.per_order[..5].iter().any(|r| r.max_abs > ORDER_TOL) {
        return Err(RkError::SingularFamily(format!(
            "ill-conditioned construction: order-5 residual {:e}",
            report.per_order[..5].iter().fold(0.0f64, |m, r| m.max(r.max_abs))
        )));
    }
    let high = if report.per_order[5].max_abs <= 1e-12 { 6 } else { 5 };
    Ok(ContinuousPair {
        tableau,
        interpolant: Some(interp),
        d_basis: Vec::new(),
        orders: (4, high),
    })
}
