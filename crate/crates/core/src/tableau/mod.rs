//! Butcher tableaux, polynomial interpolants and continuous embedded pairs.

mod builtin;
mod family;
mod format;

pub use builtin::{builtin, builtin_names};
pub use family::{a85_residual, build_interpolant, construct_family, FamilyParams};
pub(crate) use family::construct_without_estimator;
pub use format::{read_pair, write_pair};

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RkError};
use crate::trees::{ElementaryWeights, RootedTree};

/// Tolerance on `A 1 = c` and on the FSAL row identity.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// An exact rational coefficient `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub const fn new(num: i64, den: i64) -> Self {
        Ratio { num, den }
    }

    pub const fn int(num: i64) -> Self {
        Ratio { num, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Exact coefficients kept alongside the doubles for tableaux given as rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactCoefficients {
    pub c: Vec<Ratio>,
    pub a: Vec<Vec<Ratio>>,
    pub b: Vec<Ratio>,
}

/// An explicit Runge–Kutta tableau `(c, A, b)` with an optional FSAL stage.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    /// Zero-based FSAL stage.
    fsal: Option<usize>,
    exact: Option<ExactCoefficients>,
}

impl ButcherTableau {
    /// Build and validate a tableau. `fsal_stage` is one-based, as in `u`.
    pub fn new(
        c: DVector<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        fsal_stage: Option<usize>,
    ) -> Result<Self> {
        let s = c.len();
        if s == 0 {
            return Err(RkError::InvalidArgument("tableau needs at least one stage".into()));
        }
        if a.nrows() != s || a.ncols() != s {
            return Err(RkError::DimensionMismatch {
                expected: s,
                got: a.nrows().max(a.ncols()),
            });
        }
        if b.len() != s {
            return Err(RkError::DimensionMismatch {
                expected: s,
                got: b.len(),
            });
        }
        for i in 0..s {
            for j in i..s {
                if a[(i, j)] != 0.0 {
                    return Err(RkError::InvalidArgument(format!(
                        "a[{}][{}] = {} is not strictly lower triangular",
                        i + 1,
                        j + 1,
                        a[(i, j)]
                    )));
                }
            }
            let row = a.row(i);
            let scale = row.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            if (row.sum() - c[i]).abs() > ROW_SUM_TOL * scale {
                return Err(RkError::InvalidArgument(format!(
                    "row {} sums to {} but c = {}",
                    i + 1,
                    row.sum(),
                    c[i]
                )));
            }
        }
        let fsal = match fsal_stage {
            None => None,
            Some(u) if u == 0 || u > s => {
                return Err(RkError::InvalidArgument(format!("FSAL stage {u} out of range")))
            }
            Some(u) => {
                let k = u - 1;
                if (c[k] - 1.0).abs() > ROW_SUM_TOL {
                    return Err(RkError::InvalidArgument(format!("FSAL stage {u} has c = {}", c[k])));
                }
                for j in 0..s {
                    if (a[(k, j)] - b[j]).abs() > ROW_SUM_TOL * b[j].abs().max(1.0) {
                        return Err(RkError::InvalidArgument(format!(
                            "FSAL row {u} differs from b at column {}",
                            j + 1
                        )));
                    }
                }
                Some(k)
            }
        };
        Ok(ButcherTableau {
            c,
            a,
            b,
            fsal,
            exact: None,
        })
    }

    /// Build from exact rationals; the doubles are the correctly rounded quotients.
    pub fn from_exact(exact: ExactCoefficients, fsal_stage: Option<usize>) -> Result<Self> {
        let s = exact.c.len();
        let c = DVector::from_iterator(s, exact.c.iter().map(|r| r.to_f64()));
        let b = DVector::from_iterator(exact.b.len(), exact.b.iter().map(|r| r.to_f64()));
        let mut a = DMatrix::zeros(s, s);
        if exact.a.len() != s {
            return Err(RkError::DimensionMismatch {
                expected: s,
                got: exact.a.len(),
            });
        }
        for (i, row) in exact.a.iter().enumerate() {
            if row.len() > s {
                return Err(RkError::DimensionMismatch {
                    expected: s,
                    got: row.len(),
                });
            }
            for (j, r) in row.iter().enumerate() {
                a[(i, j)] = r.to_f64();
            }
        }
        let mut t = ButcherTableau::new(c, a, b, fsal_stage)?;
        t.exact = Some(exact);
        Ok(t)
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// One-based FSAL stage index `u`.
    pub fn fsal_stage(&self) -> Option<usize> {
        self.fsal.map(|k| k + 1)
    }

    pub fn exact(&self) -> Option<&ExactCoefficients> {
        self.exact.as_ref()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `q_n = A c^n − c^{n+1} / (n + 1)`.
pub fn q_vector(tableau: &ButcherTableau, n: u32) -> DVector<f64> {
    let c = tableau.c();
    let cn = c.map(|v| v.powi(n as i32));
    tableau.a() * cn - c.map(|v| v.powi(n as i32 + 1) / (n as f64 + 1.0))
}

/// Polynomial weights `β_j(θ) = Σ_{m=1..k} B[m-1][j] θ^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interpolant {
    coeffs: DMatrix<f64>,
}

impl Interpolant {
    pub fn new(coeffs: DMatrix<f64>) -> Self {
        Interpolant { coeffs }
    }

    /// The `k × s` coefficient matrix `B`; row `m - 1` multiplies `θ^m`.
    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn stages(&self) -> usize {
        self.coeffs.ncols()
    }

    /// `β(θ)`.
    pub fn weights_at(&self, theta: f64) -> DVector<f64> {
        let k = self.degree();
        let mut acc = DVector::zeros(self.stages());
        for m in (0..k).rev() {
            acc = (acc + self.coeffs.row(m).transpose()) * theta;
        }
        acc
    }

    /// `β'(θ)`.
    pub fn derivative_at(&self, theta: f64) -> DVector<f64> {
        let k = self.degree();
        let mut acc = DVector::zeros(self.stages());
        for m in (0..k).rev() {
            acc = acc * theta + self.coeffs.row(m).transpose() * (m as f64 + 1.0);
        }
        acc
    }

    /// Coefficients of `β_j` in ascending powers, constant term included.
    pub fn column_poly(&self, j: usize) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.coeffs.column(j).iter().copied())
            .collect()
    }
}

/// A tableau with its interpolant and the difference vectors used for error control.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousPair {
    pub tableau: ButcherTableau,
    pub interpolant: Option<Interpolant>,
    /// Each `d` makes `b + d` a method of order exactly `orders.0`.
    pub d_basis: Vec<DVector<f64>>,
    pub orders: (usize, usize),
}

impl ContinuousPair {
    pub fn stages(&self) -> usize {
        self.tableau.stages()
    }

    /// One past the index of the last stage a difference vector uses.
    pub fn support_len(d: &DVector<f64>) -> usize {
        d.iter().rposition(|v| *v != 0.0).map_or(0, |k| k + 1)
    }

    /// Rescale every difference vector to `d / n` with the smallest integer `n ≥ 1`
    /// such that `T_5(b + d / n) ≤ target`.
    pub fn scale_error_weights(&mut self, target_t5: f64) -> Result<()> {
        if !(target_t5 > 0.0) {
            return Err(RkError::InvalidArgument("T5 target must be positive".into()));
        }
        let weights = ElementaryWeights::new(self.tableau.a(), 5);
        let b = self.tableau.b().clone();
        for d in &mut self.d_basis {
            let x = &b + &*d;
            let t5 = weights.error_norm(x.as_slice(), 1.0, 5)?;
            let n = (t5 / target_t5).ceil().max(1.0);
            *d /= n;
        }
        Ok(())
    }
}

/// Worst residual among trees of one order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderResidual {
    pub order: usize,
    pub max_abs: f64,
    pub worst_tree: RootedTree,
}

/// Residuals of `x Φ(t) = 1/γ(t)` for every order up to the requested one.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderReport {
    pub per_order: Vec<OrderResidual>,
}

impl OrderReport {
    pub fn max_residual(&self) -> f64 {
        self.per_order.iter().fold(0.0, |m, r| m.max(r.max_abs))
    }

    /// Highest order `q` such that all orders `≤ q` are below `tol`.
    pub fn satisfied_order(&self, tol: f64) -> usize {
        self.per_order
            .iter()
            .take_while(|r| r.max_abs <= tol)
            .count()
    }
}

impl std::fmt::Display for OrderReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "order  max|x·Φ(t) - 1/γ(t)|  worst tree")?;
        for r in &self.per_order {
            writeln!(f, "{:>5}  {:>21.3e}  {}", r.order, r.max_abs, r.worst_tree)?;
        }
        Ok(())
    }
}

/// Check `x Φ(t) = 1/γ(t)` for all trees up to order `p`.
pub fn verify_order(tableau: &ButcherTableau, x: &[f64], p: usize) -> Result<OrderReport> {
    if x.len() != tableau.stages() {
        return Err(RkError::DimensionMismatch {
            expected: tableau.stages(),
            got: x.len(),
        });
    }
    let weights = ElementaryWeights::new(tableau.a(), p);
    let per_order = (1..=p)
        .map(|q| {
            let mut worst = OrderResidual {
                order: q,
                max_abs: f64::NEG_INFINITY,
                worst_tree: RootedTree::leaf(),
            };
            for (t, phi) in weights.of_order(q) {
                let dot: f64 = x.iter().zip(phi.iter()).map(|(a, b)| a * b).sum();
                let r = (dot - 1.0 / t.gamma() as f64).abs();
                if r > worst.max_abs {
                    worst.max_abs = r;
                    worst.worst_tree = t.clone();
                }
            }
            worst
        })
        .collect();
    Ok(OrderReport { per_order })
}

/// Rank tolerance for the order-4 null space.
const NULL_SPACE_TOL: f64 = 1e-10;
/// A difference vector must break at least one order-5 condition by this much.
const ORDER5_VIOLATION_MIN: f64 = 1e-6;

/// Basis of the weight differences `d` for which `b + d` keeps order 4 but loses order 5.
///
/// Vectors come sorted by the last stage they use (fewest stages first),
/// orthogonalized in that order and scaled to a unit largest entry.
pub fn derive_error_weights(tableau: &ButcherTableau) -> Result<Vec<DVector<f64>>> {
    let s = tableau.stages();
    let weights = ElementaryWeights::new(tableau.a(), 5);
    let rows: Vec<&DVector<f64>> = (1..=4).flat_map(|p| weights.of_order(p).map(|(_, v)| v)).collect();
    let m = rows.len().max(s);
    let mut conditions = DMatrix::zeros(m, s);
    for (i, r) in rows.iter().enumerate() {
        conditions.row_mut(i).copy_from(&r.transpose());
    }
    let svd = conditions.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let null: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, sv)| **sv <= NULL_SPACE_TOL * smax.max(1.0))
        .map(|(k, _)| v_t.row(k).transpose())
        .collect();
    if null.is_empty() {
        return Err(RkError::NoErrorEstimator);
    }

    // Reduced echelon form with columns processed from the last stage backwards,
    // so each vector vanishes beyond its pivot stage.
    let mut basis = null;
    let k = basis.len();
    let scale = basis.iter().flat_map(|v| v.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let pivot_tol = 1e-8 * scale;
    let mut pivots: Vec<usize> = Vec::with_capacity(k);
    let mut next = 0;
    for col in (0..s).rev() {
        if next == k {
            break;
        }
        let best = (next..k).max_by(|&x, &y| basis[x][col].abs().total_cmp(&basis[y][col].abs()));
        let Some(best) = best else { break };
        if basis[best][col].abs() <= pivot_tol {
            for v in basis.iter_mut().skip(next) {
                v[col] = 0.0;
            }
            continue;
        }
        basis.swap(next, best);
        let p = basis[next][col];
        basis[next] /= p;
        basis[next][col] = 1.0;
        for r in 0..k {
            if r != next {
                let f = basis[r][col];
                if f != 0.0 {
                    let pivot_row = basis[next].clone();
                    basis[r] -= pivot_row * f;
                    basis[r][col] = 0.0;
                }
            }
        }
        pivots.push(col);
        next += 1;
    }
    let mut ordered: Vec<(usize, DVector<f64>)> = pivots.into_iter().zip(basis).collect();
    ordered.sort_by_key(|(p, _)| *p);

    // Gram–Schmidt in support order keeps the nested supports.
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(k);
    for (pivot, v) in ordered {
        let mut w = v;
        for u in &ortho {
            let proj = w.dot(u);
            w -= u * proj;
        }
        for j in pivot + 1..s {
            w[j] = 0.0;
        }
        let norm = w.norm();
        if norm == 0.0 {
            continue;
        }
        ortho.push(&w / norm);
        let (imax, _) = w.iter().enumerate().fold((0, 0.0f64), |acc, (i, v)| {
            if v.abs() > acc.1 {
                (i, v.abs())
            } else {
                acc
            }
        });
        let d = &w / w[imax];
        let violation = weights
            .of_order(5)
            .map(|(_, phi)| d.dot(phi).abs())
            .fold(0.0, f64::max);
        if violation >= ORDER5_VIOLATION_MIN {
            out.push(d);
        }
    }
    if out.is_empty() {
        return Err(RkError::NoErrorEstimator);
    }
    Ok(out)
}
