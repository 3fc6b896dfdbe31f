//! Browser bindings. Every export returns a JSON string; failures come back
//! as `{"error": "..."}` so the page never has to catch.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use polyliouville::classify::analyze;
use polyliouville::exactconst::PiRational;
use polyliouville::greenball::green_ball;
use polyliouville::polyfield::{almansi_random, pizzetti_check};
use polyliouville::shooter::{InitialData, ShootingConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

const PLOT_POINTS: usize = 400;

fn finish(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Shoot from `u(0) = log 2` with the given even derivatives (`d4` is
/// ignored for m = 2) and classify the result.
#[wasm_bindgen]
pub fn shoot_explorer(m: u32, d2: f64, d4: f64, r_end: f64) -> String {
    finish(shoot_value(m, d2, d4, r_end))
}

fn shoot_value(m: u32, d2: f64, d4: f64, r_end: f64) -> Result<Value, String> {
    let d = match m {
        2 => vec![std::f64::consts::LN_2, d2],
        3 => vec![std::f64::consts::LN_2, d2, d4],
        _ => return Err("the explorer supports m = 2 and m = 3".into()),
    };
    if !(r_end > 1.0 && r_end <= 2000.0) {
        return Err("r_end must lie in (1, 2000]".into());
    }
    let mut cfg = ShootingConfig::new(m, InitialData::EvenDerivatives(d), r_end);
    if m == 3 {
        cfg.rel_tol = 1e-12;
        cfg.abs_tol = 1e-14;
    }
    let a = analyze(&cfg).map_err(|e| e.to_string())?;
    let t = &a.trajectory;
    let step = t.grid.len().div_ceil(PLOT_POINTS).max(1);
    let idx: Vec<usize> = (0..t.grid.len()).step_by(step).chain(std::iter::once(t.grid.len() - 1)).collect();
    let c = &a.classification;
    Ok(json!({
        "r": idx.iter().map(|&i| t.grid[i]).collect::<Vec<_>>(),
        "u": idx.iter().map(|&i| finite(t.w[0][i])).collect::<Vec<_>>(),
        "termination": t.termination,
        "r_final": t.r_final(),
        "alpha_final": finite(a.report.alpha_final),
        "lim_laplacian": finite(a.report.delta_limits[0].value),
        "overall": c.overall.to_string(),
        "criteria": c.criteria().iter().map(|k| json!({
            "name": k.name,
            "statistic": finite(k.statistic),
            "verdict": k.verdict.to_string(),
        })).collect::<Vec<_>>(),
    }))
}

fn pi_json(x: &PiRational) -> Value {
    json!({ "exact": x.to_string(), "value": x.to_f64() })
}

/// Navier Green function of Δ^m on the ball of rational radius `radius`.
#[wasm_bindgen]
pub fn green_profile(m: u32, radius: &str, nodes: usize) -> String {
    finish(green_value(m, radius, nodes))
}

fn green_value(m: u32, radius: &str, nodes: usize) -> Result<Value, String> {
    if !(1..=8).contains(&m) {
        return Err("m must be between 1 and 8".into());
    }
    let r = BigRational::from_str(radius.trim()).map_err(|e| format!("radius: {e}"))?;
    let g = green_ball(m, &r).map_err(|e| e.to_string())?;
    let rf = PiRational::new(r, 0).to_f64();
    let n = nodes.clamp(2, 2000);
    let xs: Vec<f64> = (1..n).map(|i| rf * i as f64 / (n - 1) as f64).collect();
    Ok(json!({
        "log_coeff": pi_json(&g.log_coeff),
        "poly_coeffs": g.poly_coeffs.iter().map(pi_json).collect::<Vec<_>>(),
        "sign_constants": g.sign_constants.iter().map(pi_json).collect::<Vec<_>>(),
        "navier_exact": g.navier_residuals().iter().all(PiRational::is_zero),
        "r": xs,
        "g": xs.iter().map(|&x| finite(g.value(x))).collect::<Vec<_>>(),
    }))
}

/// Mean-value check on one seeded Almansi polynomial, centred at a seeded
/// lattice point, over the ball of radius 1.
#[wasm_bindgen]
pub fn pizzetti_demo(m: u32, n: usize, degree: u32, seed: u32) -> String {
    finish(pizzetti_value(m, n, degree, seed))
}

fn pizzetti_value(m: u32, n: usize, degree: u32, seed: u32) -> Result<Value, String> {
    if !(1..=4).contains(&m) || !(1..=6).contains(&n) || degree > 6 {
        return Err("use 1 ≤ m ≤ 4, 1 ≤ n ≤ 6, degree ≤ 6".into());
    }
    let p = almansi_random(m, n, degree, u64::from(seed)).map_err(|e| e.to_string())?;
    let x0: Vec<BigRational> = (0..n)
        .map(|j| BigRational::from_integer(BigInt::from((i64::from(seed) + 3 * j as i64) % 5 - 2)))
        .collect();
    let one = BigRational::from_integer(1.into());
    let c = pizzetti_check(&p, m, &x0, &one).map_err(|e| e.to_string())?;
    Ok(json!({
        "polynomial": p.to_text(),
        "center": x0.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "lhs": c.lhs.to_string(),
        "rhs": c.rhs.to_string(),
        "residual": c.residual.to_string(),
        "exact": c.residual == BigRational::from_integer(0.into()),
    }))
}
