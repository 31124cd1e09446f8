//! Browser bindings for the demo page in `www/`.
//!
//! Three operations are exported: build a family member from its parameters,
//! trace a stability boundary, and run the one-step circle test. Each wraps a
//! plain function so the logic can be tested natively.

use rkforge::metrics::{self, ContinuousError, Window};
use rkforge::problems::circle_test;
use rkforge::tableau::{construct_family, FamilyParams};
use rkforge::{builtin, ContinuousPair};
use wasm_bindgen::prelude::*;

/// θ samples for the curves returned to the page.
const CURVE_POINTS: usize = 201;

/// Summary of one family member, flattened for JavaScript.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct FamilyView {
    t5: f64,
    t6: f64,
    t7: f64,
    max_t6: f64,
    variation: f64,
    max_abs_a: f64,
    theta: Vec<f64>,
    t6_curve: Vec<f64>,
    /// Stage-major: `weights[j * theta.len() + k] = β_j(θ_k)`.
    weights: Vec<f64>,
    c: Vec<f64>,
}

#[wasm_bindgen]
impl FamilyView {
    #[wasm_bindgen(getter)]
    pub fn t5(&self) -> f64 {
        self.t5
    }
    #[wasm_bindgen(getter)]
    pub fn t6(&self) -> f64 {
        self.t6
    }
    #[wasm_bindgen(getter)]
    pub fn t7(&self) -> f64 {
        self.t7
    }
    #[wasm_bindgen(getter)]
    pub fn max_t6(&self) -> f64 {
        self.max_t6
    }
    #[wasm_bindgen(getter)]
    pub fn variation(&self) -> f64 {
        self.variation
    }
    #[wasm_bindgen(getter)]
    pub fn max_abs_a(&self) -> f64 {
        self.max_abs_a
    }
    #[wasm_bindgen(getter)]
    pub fn theta(&self) -> Vec<f64> {
        self.theta.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn t6_curve(&self) -> Vec<f64> {
        self.t6_curve.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn weights(&self) -> Vec<f64> {
        self.weights.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn nodes(&self) -> Vec<f64> {
        self.c.clone()
    }
}

/// Parameters of a builtin family member, for seeding the page's inputs.
#[wasm_bindgen]
pub fn builtin_params(name: &str) -> Result<Vec<f64>, JsError> {
    builtin_params_inner(name).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn explore(params: &[f64]) -> Result<FamilyView, JsError> {
    explore_inner(params).map_err(|e| JsError::new(&e))
}

/// Boundary of `|R(k z)| = 1` with `k = s − 1` when `equal_cost`, else 1.
/// Polylines are concatenated as `re, im` pairs separated by a `NaN, NaN` pair.
#[wasm_bindgen]
pub fn stability_boundary(source: &str, equal_cost: bool, window: &[f64], resolution: usize) -> Result<Vec<f64>, JsError> {
    stability_inner(source, equal_cost, window, resolution).map_err(|e| JsError::new(&e))
}

/// Circle test at h = π/2: `θ, x, y, err_x, err_y` per tick, then the endpoint error.
#[wasm_bindgen]
pub fn circle(source: &str) -> Result<Vec<f64>, JsError> {
    circle_inner(source).map_err(|e| JsError::new(&e))
}

pub fn builtin_params_inner(name: &str) -> Result<Vec<f64>, String> {
    let pair = builtin(name).map_err(|e| e.to_string())?;
    if pair.stages() != 9 {
        return Err(format!("`{name}` is not a member of the 9-stage family"));
    }
    let (a, c) = (pair.tableau.a(), pair.tableau.c());
    Ok(vec![
        c[1],
        c[3],
        c[4],
        c[5],
        c[6],
        c[7],
        a[(5, 4)],
        a[(6, 4)],
        a[(6, 5)],
        a[(7, 5)],
        a[(7, 6)],
    ])
}

pub fn explore_inner(params: &[f64]) -> Result<FamilyView, String> {
    let array: [f64; 11] = params
        .try_into()
        .map_err(|_| format!("expected 11 parameters, got {}", params.len()))?;
    let pair = construct_family(&FamilyParams::from_array(array)).map_err(|e| e.to_string())?;
    let r = metrics::report(&pair).map_err(|e| e.to_string())?;
    let profile = ContinuousError::new(&pair, 6).map_err(|e| e.to_string())?;
    let interp = pair.interpolant.as_ref().ok_or("pair has no interpolant")?;
    let theta: Vec<f64> = (0..CURVE_POINTS).map(|k| k as f64 / (CURVE_POINTS - 1) as f64).collect();
    let t6_curve = theta.iter().map(|&t| profile.at(t)).collect();
    let columns: Vec<_> = theta.iter().map(|&t| interp.weights_at(t)).collect();
    let mut weights = Vec::with_capacity(pair.stages() * theta.len());
    for j in 0..pair.stages() {
        weights.extend(columns.iter().map(|w| w[j]));
    }
    Ok(FamilyView {
        t5: r.t5,
        t6: r.t6,
        t7: r.t7,
        max_t6: r.max_t6.map_or(f64::NAN, |m| m.1),
        variation: r.variation.unwrap_or(f64::NAN),
        max_abs_a: r.max_abs_a,
        theta,
        t6_curve,
        weights,
        c: pair.tableau.c().iter().copied().collect(),
    })
}

/// A builtin name or eleven comma-separated family parameters.
fn resolve(source: &str) -> Result<ContinuousPair, String> {
    if source.contains(',') {
        let v = source
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let array: [f64; 11] = v
            .try_into()
            .map_err(|v: Vec<f64>| format!("expected 11 parameters, got {}", v.len()))?;
        construct_family(&FamilyParams::from_array(array)).map_err(|e| e.to_string())
    } else {
        builtin(source.trim()).map_err(|e| e.to_string())
    }
}

pub fn stability_inner(source: &str, equal_cost: bool, window: &[f64], resolution: usize) -> Result<Vec<f64>, String> {
    let pair = resolve(source)?;
    let [re0, re1, im0, im1] = window[..] else {
        return Err("window needs four values".into());
    };
    let ny = ((resolution as f64) * (im1 - im0) / (re1 - re0)).round().max(2.0) as usize;
    let w = Window::new((re0, re1), (im0, im1), resolution, ny);
    let poly = metrics::stability_polynomial(&pair.tableau, pair.tableau.b().as_slice()).map_err(|e| e.to_string())?;
    let scale = if equal_cost {
        let s = pair.stages();
        if pair.tableau.fsal_stage().is_some() {
            (s - 1) as f64
        } else {
            s as f64
        }
    } else {
        1.0
    };
    let lines = metrics::stability_region(&poly, scale, &w).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (k, line) in lines.iter().enumerate() {
        if k > 0 {
            out.extend([f64::NAN, f64::NAN]);
        }
        for &(x, y) in line {
            out.extend([x, y]);
        }
    }
    Ok(out)
}

pub fn circle_inner(source: &str) -> Result<Vec<f64>, String> {
    let pair = resolve(source)?;
    let report = circle_test(&pair, std::f64::consts::FRAC_PI_2).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(5 * report.curve.len() + 1);
    for p in &report.curve {
        out.extend([p.theta, p.x[0], p.x[1], p.error[0], p.error[1]]);
    }
    out.push(report.endpoint_error);
    Ok(out)
}
