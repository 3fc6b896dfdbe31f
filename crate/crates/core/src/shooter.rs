//! Radial solutions of `(-Δ)^m u = (2m-1)! e^{2mu}` on `R^{2m}` by shooting.
//!
//! The state is the chain of Laplacian iterates `w_j = Δ^j u` and their radial
//! derivatives `p_j = ∂_r w_j`, `j = 0..m-1`, plus the running total curvature
//!
//! ```text
//! α(R) = (1/|S^{2m}|) ∫_{B_R} e^{2mu} dx.
//! ```
//!
//! The chain closes with `Δ w_{m-1} = σ_m (2m-1)! e^{2m w_0}`, `σ_m = (-1)^m`.

use serde::Serialize;
use serde_json::json;

use crate::classify::limit_estimate;
use crate::error::{Error, Result};
use crate::exactconst::{pizzetti_coefficient, ConstantTable};
use crate::ode::{self, StepOutcome, Tolerances};
use crate::output::{csv, json_finite};
use num_traits::ToPrimitive;

/// Fraction of `r_end` where the tail window starts.
pub const TAIL_START: f64 = 0.8;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `A_j = Δ^j u(0)`, `j = 0..m-1`
    Laplacians(Vec<f64>),
    /// `u(0), u''(0), …, u^{(2m-2)}(0)`
    EvenDerivatives(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingConfig {
    pub m: u32,
    pub initial: InitialData,
    pub r_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// radius where the Taylor start hands over to the integrator
    pub r0: Option<f64>,
    pub blowup_threshold: f64,
    /// ratio of consecutive output radii
    pub grid_ratio: f64,
}

impl ShootingConfig {
    pub fn new(m: u32, initial: InitialData, r_end: f64) -> Self {
        Self {
            m,
            initial,
            r_end,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            r0: None,
            blowup_threshold: 50.0,
            grid_ratio: 1.01,
        }
    }

    /// Initial data of `log(2λ/(1+λ²r²))`.
    pub fn standard(m: u32, lambda: f64, r_end: f64) -> Result<Self> {
        let a: Vec<f64> = standard_solution(m, lambda, 0.0)?.laps[..m as usize].to_vec();
        Ok(Self::new(m, InitialData::Laplacians(a), r_end))
    }

    pub fn laplacians(&self) -> Result<Vec<f64>> {
        match &self.initial {
            InitialData::Laplacians(a) => {
                if a.len() != self.m as usize {
                    return Err(Error::InvalidArgument(format!(
                        "expected {} initial Laplacians, got {}",
                        self.m,
                        a.len()
                    )));
                }
                Ok(a.clone())
            }
            InitialData::EvenDerivatives(d) => derivs_to_laplacians(self.m, d),
        }
    }

    pub fn start_radius(&self) -> f64 {
        self.r0.unwrap_or_else(|| self.abs_tol.powf(0.25).clamp(1e-6, 1e-2))
    }

    fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidOrder(self.m));
        }
        Tolerances { rel: self.rel_tol, abs: self.abs_tol }.validate()?;
        let r0 = self.start_radius();
        if !(r0 > 0.0 && r0 < self.r_end) {
            return Err(Error::InvalidArgument(format!("need 0 < r0 < r_end (r0={r0}, r_end={})", self.r_end)));
        }
        if !(self.grid_ratio > 1.0) {
            return Err(Error::InvalidArgument("grid ratio must exceed 1".into()));
        }
        Ok(())
    }
}

/// `A_j = n / (c_j (n+2j) (2j)!) · u^{(2j)}(0)` with the mean-value
/// coefficients `c_j` of `R^n`, `n = 2m`.
pub fn derivs_to_laplacians(m: u32, even_derivs: &[f64]) -> Result<Vec<f64>> {
    if m < 1 {
        return Err(Error::InvalidOrder(m));
    }
    if even_derivs.len() != m as usize {
        return Err(Error::InvalidArgument(format!(
            "expected {m} even derivatives u(0), u''(0), …, got {}",
            even_derivs.len()
        )));
    }
    let n = 2 * m;
    Ok(even_derivs
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let j = j as u32;
            let c = pizzetti_coefficient(n, j).to_f64().unwrap();
            let fact: f64 = (1..=2 * j).map(|k| k as f64).product();
            n as f64 / (c * (n + 2 * j) as f64 * fact) * d
        })
        .collect())
}

/// Frequently used per-order constants in floating point.
#[derive(Clone, Copy, Debug)]
pub struct OrderConstants {
    pub m: u32,
    pub n: f64,
    pub sigma: f64,
    /// `(2m-1)!`
    pub q: f64,
    /// `|S^{2m-1}| / |S^{2m}|`
    pub alpha_density: f64,
    pub omega: f64,
    pub sphere: f64,
    pub gamma: f64,
}

impl OrderConstants {
    pub fn new(m: u32) -> Result<Self> {
        let t = ConstantTable::new(m)?;
        let omega = t.omega_n.to_f64();
        let sphere = t.vol_sphere_2m.to_f64();
        Ok(Self {
            m,
            n: 2.0 * m as f64,
            sigma: t.sigma_m as f64,
            q: t.nonlinearity_factor().to_f64().unwrap(),
            alpha_density: t.omega_n.checked_div(&t.vol_sphere_2m)?.to_f64(),
            omega,
            sphere,
            gamma: t.gamma_m.to_f64(),
        })
    }

    /// `Δ^m u = σ_m (2m-1)! e^{2mu}`
    pub fn top(&self, w0: f64) -> f64 {
        self.sigma * self.q * (2.0 * self.m as f64 * w0).exp()
    }
}

/// State layout: `[w_0, p_0, w_1, p_1, …, w_{m-1}, p_{m-1}, α]`.
pub fn state_len(m: u32) -> usize {
    2 * m as usize + 1
}

/// Right-hand side of the first-order radial system at `r > 0`.
pub fn rhs(k: &OrderConstants, r: f64, state: &[f64], out: &mut [f64]) {
    let m = k.m as usize;
    let damp = (k.n - 1.0) / r;
    for j in 0..m {
        let w_next = if j + 1 < m { state[2 * (j + 1)] } else { k.top(state[0]) };
        out[2 * j] = state[2 * j + 1];
        out[2 * j + 1] = w_next - damp * state[2 * j + 1];
    }
    out[2 * m] = k.alpha_density * (2.0 * k.m as f64 * state[0]).exp() * r.powi(2 * k.m as i32 - 1);
}

/// Taylor start at `r0`:
/// `w_j = A_j + A_{j+1} r²/(2n) + A_{j+2} r⁴/(8n(n+2))`, with
/// `A_m = σ(2m-1)! e^{2mA_0}` and `A_{m+1} = A_m · 2m A_1`.
pub fn series_start(k: &OrderConstants, a: &[f64], r0: f64) -> Vec<f64> {
    let m = k.m as usize;
    let n = k.n;
    let am = k.top(a[0]);
    let mut ext: Vec<f64> = a.to_vec();
    ext.push(am);
    // Δ^{m+1}u(0) = σ(2m-1)! Δ(e^{2mu})(0) = A_m · 2m Δu(0)   (∇u(0) = 0)
    ext.push(am * 2.0 * k.m as f64 * ext[1]);
    let mut s = vec![0.0; state_len(k.m)];
    for j in 0..m {
        s[2 * j] = ext[j] + ext[j + 1] * r0 * r0 / (2.0 * n) + ext[j + 2] * r0.powi(4) / (8.0 * n * (n + 2.0));
        s[2 * j + 1] = ext[j + 1] * r0 / n + ext[j + 2] * r0.powi(3) / (2.0 * n * (n + 2.0));
    }
    // α(r0): e^{2mu} ≈ e^{2mA_0}(1 + 2m A_1 r²/(2n))
    let e0 = (2.0 * k.m as f64 * a[0]).exp();
    let two_m = 2.0 * k.m as f64;
    s[2 * m] = k.alpha_density
        * e0
        * (r0.powf(two_m) / two_m + two_m * ext[1] / (2.0 * n) * r0.powf(two_m + 2.0) / (two_m + 2.0));
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedEnd,
    Blowup,
    StepUnderflow,
}

/// Sampled radial solution.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTrajectory {
    pub m: u32,
    pub grid: Vec<f64>,
    /// `w[j][i] = Δ^j u(grid[i])`
    pub w: Vec<Vec<f64>>,
    /// `p[j][i] = ∂_r Δ^j u(grid[i])`
    pub p: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub termination: Termination,
    /// requested end radius
    pub r_end: f64,
    /// accumulated local error estimates of `w_0`
    pub w0_error_estimate: f64,
}

impl RadialTrajectory {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.w[0]
    }

    pub fn r_final(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn alpha_final(&self) -> f64 {
        *self.alpha.last().unwrap()
    }

    /// `Δ^j u` at every node, `0 ≤ j ≤ m` (the top one from the equation).
    pub fn laplacian_iterate(&self, j: u32) -> Result<Vec<f64>> {
        if j < self.m {
            return Ok(self.w[j as usize].clone());
        }
        if j == self.m {
            let k = OrderConstants::new(self.m)?;
            return Ok(self.w[0].iter().map(|&w| k.top(w)).collect());
        }
        Err(Error::IndexOutOfRange { index: j as usize, range: format!("0..={}", self.m) })
    }

    /// Indices of nodes in `[TAIL_START · r_final, r_final]`.
    pub fn tail_indices(&self) -> std::ops::Range<usize> {
        let lo = TAIL_START * self.r_final();
        let start = self.grid.partition_point(|&r| r < lo);
        start..self.grid.len()
    }

    /// `u` at arbitrary `r` in range by cubic Hermite interpolation of `(w_0, p_0)`.
    pub fn interp_u(&self, r: f64) -> f64 {
        let g = &self.grid;
        if r <= g[0] {
            return self.w[0][0];
        }
        let i = g.partition_point(|&x| x <= r).min(g.len() - 1).max(1) - 1;
        let (x0, x1) = (g[i], g[i + 1]);
        let h = x1 - x0;
        let t = ((r - x0) / h).clamp(0.0, 1.0);
        let (y0, y1) = (self.w[0][i], self.w[0][i + 1]);
        let (d0, d1) = (self.p[0][i] * h, self.p[0][i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1
    }

    /// `ũ(x) = u(λx) + log λ`, sampled on `grid / λ`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let grid = self.grid.iter().map(|r| r / lambda).collect();
        let w = self
            .w
            .iter()
            .enumerate()
            .map(|(j, col)| {
                let f = lambda.powi(2 * j as i32);
                col.iter().map(|v| if j == 0 { v + lambda.ln() } else { v * f }).collect()
            })
            .collect();
        let p = self
            .p
            .iter()
            .enumerate()
            .map(|(j, col)| {
                let f = lambda.powi(2 * j as i32 + 1);
                col.iter().map(|v| v * f).collect()
            })
            .collect();
        Self {
            m: self.m,
            grid,
            w,
            p,
            alpha: self.alpha.clone(),
            termination: self.termination,
            r_end: self.r_end / lambda,
            w0_error_estimate: self.w0_error_estimate,
        }
    }

    /// CSV `r,w0,p0,w1,p1,…,alpha_R,R_scalar`.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["r".to_string()];
        for j in 0..self.m {
            header.push(format!("w{j}"));
            header.push(format!("p{j}"));
        }
        header.push("alpha_R".into());
        header.push("R_scalar".into());
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        let rs = scalar_curvature(self);
        csv(
            &h,
            (0..self.len()).map(|i| {
                let mut row = vec![self.grid[i]];
                for j in 0..self.m as usize {
                    row.push(self.w[j][i]);
                    row.push(self.p[j][i]);
                }
                row.push(self.alpha[i]);
                row.push(rs[i]);
                row
            }),
        )
    }
}

/// `R_{g_u} = -2(2m-1) e^{-2u} (Δu + (m-1)|∇u|²)`; for `m = 1`, `R = -2 e^{-2u} Δu`.
pub fn scalar_curvature(traj: &RadialTrajectory) -> Vec<f64> {
    let m = traj.m;
    let lap = traj.laplacian_iterate(1).expect("m ≥ 1");
    (0..traj.len())
        .map(|i| {
            let w0 = traj.w[0][i];
            let bracket = lap[i] + (m as f64 - 1.0) * traj.p[0][i].powi(2);
            if bracket == 0.0 {
                return 0.0;
            }
            let factor = if m == 1 { -2.0 } else { -2.0 * (2.0 * m as f64 - 1.0) };
            // e^{-2u}·|bracket| in log space, so huge values saturate to ±inf
            factor.signum() * bracket.signum() * (-2.0 * w0 + (factor.abs() * bracket.abs()).ln()).exp()
        })
        .collect()
}

/// `log ρ_1 = 2u + 2 log(1 + r²) - log 4`, `ρ_1 = e^{2u}/ρ_0`, `ρ_0 = 4/(1+r²)²`.
pub fn log_rho1(r: f64, u: f64) -> f64 {
    2.0 * u + 2.0 * (r * r).ln_1p() - 4f64.ln()
}

/// Estimated `lim_{r→∞} Δ^j u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub j: u32,
    pub value: f64,
    /// spread of the estimate across nested tail windows
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub m: u32,
    pub termination: Termination,
    pub r_final: f64,
    pub alpha_final: f64,
    /// `lim Δ^j u`, `j = 1..max(m-1, 1)`
    pub delta_limits: Vec<LimitEstimate>,
    /// slope of `log|u|` against `log r` over the tail
    pub growth_exponent: f64,
    /// even integer nearest to `growth_exponent`
    pub leading_power: u32,
    pub u_over_r2: f64,
    pub scalar_curvature_tail: Vec<(f64, f64)>,
    pub rho1_tail: Vec<(f64, f64)>,
    pub log_rho1_tail: Vec<(f64, f64)>,
    pub w0_error_estimate: f64,
}

impl SolveReport {
    pub fn min_tail_scalar_curvature(&self) -> f64 {
        self.scalar_curvature_tail.iter().map(|x| x.1).fold(f64::INFINITY, f64::min)
    }

    /// JSON with fixed field names.
    pub fn to_json(&self) -> serde_json::Value {
        let (lr_min, lr_max) = self
            .log_rho1_tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x.1), b.max(x.1)));
        json!({
            "m": self.m,
            "alpha_final": self.alpha_final,
            "delta_limits": self.delta_limits.iter().map(|d| json!({
                "j": d.j, "value": d.value, "confidence": d.confidence
            })).collect::<Vec<_>>(),
            "growth_exponent": self.growth_exponent,
            "verdict_inputs": {
                "termination": self.termination,
                "r_final": self.r_final,
                "leading_power": self.leading_power,
                "u_over_r2": json_finite(self.u_over_r2),
                "min_tail_scalar_curvature": json_finite(self.min_tail_scalar_curvature()),
                "log_rho1_tail_min": json_finite(lr_min),
                "log_rho1_tail_max": json_finite(lr_max),
                "w0_error_estimate": self.w0_error_estimate,
            }
        })
    }
}

fn geometric_grid(r0: f64, r_end: f64, ratio: f64) -> Vec<f64> {
    let mut g = vec![0.0, r0];
    let steps = ((r_end / r0).ln() / ratio.ln()).ceil() as usize;
    let factor = (r_end / r0).powf(1.0 / steps as f64);
    for i in 1..steps {
        g.push(r0 * factor.powi(i as i32));
    }
    g.push(r_end);
    g
}

/// Integrate from the Taylor start to `r_end`, sampling the dense output on
/// a geometric grid. Blow-up (`w_0 > blowup_threshold`) and step underflow
/// end the run early and are recorded in `termination`.
pub fn shoot(config: &ShootingConfig) -> Result<(RadialTrajectory, SolveReport)> {
    config.validate()?;
    let k = OrderConstants::new(config.m)?;
    let a = config.laplacians()?;
    let m = config.m as usize;
    let r0 = config.start_radius();
    let grid = geometric_grid(r0, config.r_end, config.grid_ratio);

    let mut samples: Vec<(f64, Vec<f64>)> = Vec::with_capacity(grid.len());
    let mut origin = vec![0.0; state_len(config.m)];
    for j in 0..m {
        origin[2 * j] = a[j];
    }
    samples.push((0.0, origin));
    let y0 = series_start(&k, &a, r0);
    samples.push((r0, y0.clone()));

    let mut next = 2;
    let mut err_w0 = 0.0;
    let threshold = config.blowup_threshold;
    let (outcome, y_last, r_last, _) = ode::integrate(
        |r, y, dy| rhs(&k, r, y, dy),
        r0,
        &y0,
        config.r_end,
        Tolerances { rel: config.rel_tol, abs: config.abs_tol },
        None,
        |_, y| !(y[0] <= threshold),
        |step| {
            let t1 = step.t1();
            let mut buf = vec![0.0; state_len(config.m)];
            while next < grid.len() && grid[next] <= t1 * (1.0 + 1e-15) {
                step.eval(grid[next].min(t1), &mut buf);
                samples.push((grid[next], buf.clone()));
                next += 1;
            }
            err_w0 += step.local_error[0].abs();
        },
    )?;
    let termination = match outcome {
        StepOutcome::Finished => Termination::ReachedEnd,
        StepOutcome::Stopped => Termination::Blowup,
        StepOutcome::Underflow => Termination::StepUnderflow,
    };
    if termination != Termination::ReachedEnd && r_last > samples.last().unwrap().0 {
        samples.push((r_last, y_last));
    }
    let mut traj = RadialTrajectory {
        m: config.m,
        grid: samples.iter().map(|s| s.0).collect(),
        w: vec![Vec::with_capacity(samples.len()); m],
        p: vec![Vec::with_capacity(samples.len()); m],
        alpha: samples.iter().map(|s| s.1[2 * m]).collect(),
        termination,
        r_end: config.r_end,
        w0_error_estimate: err_w0,
    };
    for (_, s) in &samples {
        for j in 0..m {
            traj.w[j].push(s[2 * j]);
            traj.p[j].push(s[2 * j + 1]);
        }
    }
    let report = solve_report(&traj)?;
    Ok((traj, report))
}

/// Tail diagnostics over `[0.8 r_final, r_final]`.
pub fn solve_report(traj: &RadialTrajectory) -> Result<SolveReport> {
    let tail = traj.tail_indices();
    let rs = scalar_curvature(traj);
    let mut delta_limits = Vec::new();
    for j in 1..=traj.m.saturating_sub(1).max(1) {
        let vals = traj.laplacian_iterate(j)?;
        let curve: Vec<(f64, f64)> = tail.clone().map(|i| (traj.grid[i], vals[i])).collect();
        let (value, confidence) = limit_estimate(&curve).unwrap_or((f64::NAN, f64::INFINITY));
        delta_limits.push(LimitEstimate { j, value, confidence });
    }
    let (growth_exponent, leading_power) = growth_fit(traj, tail.clone());
    let r_final = traj.r_final();
    let u_final = *traj.u().last().unwrap();
    Ok(SolveReport {
        m: traj.m,
        termination: traj.termination,
        r_final,
        alpha_final: traj.alpha_final(),
        delta_limits,
        growth_exponent,
        leading_power,
        u_over_r2: if r_final > 0.0 { u_final / (r_final * r_final) } else { f64::NAN },
        scalar_curvature_tail: tail.clone().map(|i| (traj.grid[i], rs[i])).collect(),
        rho1_tail: tail.clone().map(|i| (traj.grid[i], log_rho1(traj.grid[i], traj.w[0][i]).exp())).collect(),
        log_rho1_tail: tail.map(|i| (traj.grid[i], log_rho1(traj.grid[i], traj.w[0][i]))).collect(),
        w0_error_estimate: traj.w0_error_estimate,
    })
}

fn growth_fit(traj: &RadialTrajectory, tail: std::ops::Range<usize>) -> (f64, u32) {
    let pts: Vec<(f64, f64)> = tail
        .filter(|&i| traj.grid[i] > 0.0 && traj.w[0][i] != 0.0)
        .map(|i| (traj.grid[i].ln(), traj.w[0][i].abs().ln()))
        .collect();
    if pts.len() < 2 {
        return (f64::NAN, 0);
    }
    let nf = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let power = if slope.is_finite() { (2.0 * (slope / 2.0).round()).max(0.0) as u32 } else { 0 };
    (slope, power)
}

/// Closed-form values of `u_λ = log(2λ/(1+λ²r²))`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardValues {
    /// `Δ^j u_λ(r)`, `j = 0..=m`
    pub laps: Vec<f64>,
    /// `∂_r Δ^j u_λ(r)`, `j = 0..=m`
    pub dlaps: Vec<f64>,
}

impl StandardValues {
    pub fn u(&self) -> f64 {
        self.laps[0]
    }

    pub fn du(&self) -> f64 {
        self.dlaps[0]
    }
}

/// Exact Laplacian chain of the standard solution.
///
/// With `s = 1 + λ²r²` in `R^n`: `Δ(-log s) = λ²[(4-2n)s^{-1} - 4s^{-2}]` and
/// `Δ s^{-k} = λ²[(4k(k+1) - 2nk) s^{-k-1} - 4k(k+1) s^{-k-2}]`.
pub fn standard_solution(m: u32, lambda: f64, r: f64) -> Result<StandardValues> {
    if m < 1 {
        return Err(Error::InvalidOrder(m));
    }
    if !(lambda > 0.0) || !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("need λ > 0 and r ≥ 0 (λ={lambda}, r={r})")));
    }
    let n = 2.0 * m as f64;
    let l2 = lambda * lambda;
    let s = 1.0 + l2 * r * r;
    // coefficients of s^{-k}; index k
    let mut coeffs: Vec<f64> = vec![0.0];
    let mut laps = vec![(2.0 * lambda).ln() - s.ln()];
    let mut dlaps = vec![-2.0 * l2 * r / s];
    for j in 1..=m {
        let mut next = vec![0.0; coeffs.len() + 2];
        if j == 1 {
            next[1] += l2 * (4.0 - 2.0 * n);
            next[2] += -4.0 * l2;
        } else {
            for (k, &c) in coeffs.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let kf = k as f64;
                next[k + 1] += c * l2 * (4.0 * kf * (kf + 1.0) - 2.0 * n * kf);
                next[k + 2] += -c * l2 * 4.0 * kf * (kf + 1.0);
            }
        }
        coeffs = next;
        let v: f64 = coeffs.iter().enumerate().map(|(k, c)| c * s.powi(-(k as i32))).sum();
        let dv: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| -c * k as f64 * s.powi(-(k as i32) - 1) * 2.0 * l2 * r)
            .sum();
        laps.push(v);
        dlaps.push(dv);
    }
    Ok(StandardValues { laps, dlaps })
}

/// Exact state vector (without α) of the standard solution at `r`.
pub fn standard_state(m: u32, lambda: f64, r: f64) -> Result<Vec<f64>> {
    let sv = standard_solution(m, lambda, r)?;
    let mut s = Vec::with_capacity(2 * m as usize);
    for j in 0..m as usize {
        s.push(sv.laps[j]);
        s.push(sv.dlaps[j]);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivs_to_laplacians_examples() {
        let a = derivs_to_laplacians(2, &[2f64.ln(), -2.0]).unwrap();
        assert!((a[1] + 8.0).abs() < 1e-14);
        assert_eq!(derivs_to_laplacians(3, &[1.5, 0.0, 0.0]).unwrap(), vec![1.5, 0.0, 0.0]);
        let a = derivs_to_laplacians(1, &[0.3]).unwrap();
        assert_eq!(a, vec![0.3]);
        assert!(derivs_to_laplacians(2, &[0.0]).is_err());
        // m = 3: u''''(0) of log(2/(1+r²)) is 12, Δ²u(0) = 192 in R^6
        let a = derivs_to_laplacians(3, &[2f64.ln(), -2.0, 12.0]).unwrap();
        assert!((a[1] + 12.0).abs() < 1e-12);
        assert!((a[2] - 192.0).abs() < 1e-11);
    }

    #[test]
    fn two_dimensional_laplacian_of_even_function() {
        // m = 1 has only u(0); use the n = 2 coefficient for j = 1 directly
        let c1 = pizzetti_coefficient(2, 1).to_f64().unwrap();
        assert!((2.0 / (c1 * 4.0 * 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn standard_chain_values() {
        let sv = standard_solution(2, 1.0, 0.0).unwrap();
        assert!((sv.u() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(sv.laps[1], -8.0);
        for &r in &[0.0, 0.3, 1.0, 7.0] {
            let sv = standard_solution(2, 1.0, r).unwrap();
            let s = 1.0 + r * r;
            assert!((sv.laps[1] - (-8.0 - 4.0 * r * r) / (s * s)).abs() < 1e-14);
            // Δ² u = 6 e^{4u} = 96/s⁴
            assert!((sv.laps[2] - 96.0 / s.powi(4)).abs() < 1e-12 * sv.laps[2].abs().max(1.0));
        }
        for m in 1..=5u32 {
            let k = OrderConstants::new(m).unwrap();
            for &lam in &[0.5, 1.0, 2.0] {
                for &r in &[0.0, 0.4, 2.5] {
                    let sv = standard_solution(m, lam, r).unwrap();
                    let top = sv.laps[m as usize];
                    let expect = k.top(sv.u());
                    assert!((top - expect).abs() <= 1e-10 * expect.abs(), "m={m} λ={lam} r={r}");
                }
            }
        }
        assert!(standard_solution(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn rhs_examples() {
        let k1 = OrderConstants::new(1).unwrap();
        let mut out = vec![0.0; 3];
        rhs(&k1, 1.0, &[0.0, 0.0, 0.0], &mut out);
        assert_eq!(out[1], -1.0);

        // exact m = 2 standard solution at r = 1 against analytic derivatives
        let k2 = OrderConstants::new(2).unwrap();
        let mut st = standard_state(2, 1.0, 1.0).unwrap();
        st.push(0.0);
        let mut out = vec![0.0; 5];
        rhs(&k2, 1.0, &st, &mut out);
        // second radial derivatives of u and Δu from Δf = f'' + 3f'/r
        let sv = standard_solution(2, 1.0, 1.0).unwrap();
        let u_rr = sv.laps[1] - 3.0 * sv.dlaps[0];
        let w1_rr = sv.laps[2] - 3.0 * sv.dlaps[1];
        assert!((out[0] - sv.dlaps[0]).abs() < 1e-12);
        assert!((out[1] - u_rr).abs() < 1e-12);
        assert!((out[2] - sv.dlaps[1]).abs() < 1e-12);
        assert!((out[3] - w1_rr).abs() < 1e-12);
        // α density: (ω/|S|) e^{4u} r³ = (3/4)·(16/16) at r = 1
        assert!((out[4] - 0.75 * (4.0 * sv.u()).exp()).abs() < 1e-12);

        // very negative w0: nonlinearity underflows to zero
        rhs(&k2, 2.0, &[-1e4, 0.0, 0.0, 0.0, 0.0], &mut out);
        assert_eq!(out[3], 0.0);
        assert_eq!(out[4], 0.0);
    }

    #[test]
    fn series_start_examples() {
        let k1 = OrderConstants::new(1).unwrap();
        let r0 = 1e-2;
        let s = series_start(&k1, &[0.0], r0);
        // w0 = σ·e^0·r0²/(2n) + A_2 r0⁴/(8n(n+2)) with A_2 = A_1·2·A_1 = 2
        let expect = -r0 * r0 / 4.0 + 2.0 * r0.powi(4) / 64.0;
        assert!((s[0] - expect).abs() < 1e-18);

        let k2 = OrderConstants::new(2).unwrap();
        for &r0 in &[1e-3, 1e-2, 3e-2] {
            let s = series_start(&k2, &[2f64.ln(), -8.0], r0);
            let exact = standard_state(2, 1.0, r0).unwrap();
            for (a, b) in s.iter().zip(&exact) {
                assert!((a - b).abs() < 500.0 * r0.powi(5) + 1e-14, "r0={r0}: {a} vs {b}");
            }
        }

        // no curvature terms: w_j stays put up to the top component
        let k3 = OrderConstants::new(3).unwrap();
        let s = series_start(&k3, &[-40.0, 0.0, 0.0], 1e-2);
        assert_eq!(s[0], -40.0);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn geometric_grid_shape() {
        let g = geometric_grid(1e-2, 10.0, 1.01);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 10.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let ratio = g[3] / g[2];
        assert!(ratio <= 1.01 + 1e-12);
    }

    #[test]
    fn shoot_m1_matches_closed_form() {
        let cfg = ShootingConfig::new(1, InitialData::Laplacians(vec![0.7]), 100.0);
        let (traj, rep) = shoot(&cfg).unwrap();
        assert_eq!(traj.termination, Termination::ReachedEnd);
        let lam = 0.7f64.exp() / 2.0;
        for (r, u) in traj.grid.iter().zip(traj.u()) {
            let exact = (2.0 * lam / (1.0 + lam * lam * r * r)).ln();
            assert!((u - exact).abs() < 1e-7, "r={r}");
        }
        assert!((rep.alpha_final - 1.0).abs() < 1e-3);
        // R = 2 for the round metric in 2D
        assert!(rep.scalar_curvature_tail.iter().all(|x| (x.1 - 2.0).abs() < 1e-6));
    }

    #[test]
    fn blowup_is_reported() {
        let cfg = ShootingConfig::new(2, InitialData::Laplacians(vec![2f64.ln(), 0.0]), 100.0);
        let (traj, _) = shoot(&cfg).unwrap();
        // the singularity is logarithmic, so the step size usually collapses
        // before w_0 reaches the threshold
        assert_ne!(traj.termination, Termination::ReachedEnd);
        assert!(traj.r_final() < 100.0);
        assert!(*traj.u().last().unwrap() > 10.0);

        let mut cfg = cfg;
        cfg.blowup_threshold = 5.0;
        let (traj, _) = shoot(&cfg).unwrap();
        assert_eq!(traj.termination, Termination::Blowup);
        assert!(traj.u()[..traj.len() - 1].iter().all(|&u| u <= 50.0));
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ShootingConfig::new(2, InitialData::Laplacians(vec![0.0, 0.0]), 10.0);
        cfg.rel_tol = 0.0;
        assert!(shoot(&cfg).is_err());
        let cfg = ShootingConfig::new(2, InitialData::Laplacians(vec![0.0]), 10.0);
        assert!(shoot(&cfg).is_err());
        let mut cfg = ShootingConfig::new(2, InitialData::Laplacians(vec![0.0, 0.0]), 10.0);
        cfg.r0 = Some(20.0);
        assert!(shoot(&cfg).is_err());
    }

    #[test]
    fn scalar_curvature_flat_input() {
        let traj = RadialTrajectory {
            m: 2,
            grid: vec![0.0, 1.0],
            w: vec![vec![0.0; 2], vec![0.0; 2]],
            p: vec![vec![0.0; 2], vec![0.0; 2]],
            alpha: vec![0.0; 2],
            termination: Termination::ReachedEnd,
            r_end: 1.0,
            w0_error_estimate: 0.0,
        };
        assert_eq!(scalar_curvature(&traj), vec![0.0, 0.0]);
    }
}
