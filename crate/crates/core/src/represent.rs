//! The integral part `v` of a radial solution and the polynomial `u - v`.
//!
//! For radial data the `2m`-dimensional potentials reduce to one radial
//! integral against spherically averaged kernels:
//!
//! ```text
//! v(r)     = (2/|S^{2m}|) ω_{2m} ∫ s^{2m-1} e^{2mu(s)} K_0(r, s) ds
//! Δ^j v(r) = (-1)^j (2 L_j/|S^{2m}|) ω_{2m} ∫ s^{2m-1} e^{2mu(s)} K_j(r, s) ds
//! ```
//!
//! where `K_0` averages `log(s/|x-y|)` and `K_j` averages `|x-y|^{-2j}` over
//! `|y| = s` for a fixed `|x| = r`, and `L_j` is the coefficient of
//! `Δ^j log(1/|x|) = L_j (-1)^j / |x|^{2j}` (see [`crate::exactconst`]).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::exactconst::double_factorial;
use crate::output::csv;
use crate::quad::GaussLegendre;
use crate::shooter::{OrderConstants, RadialTrajectory, Termination};
use num_traits::ToPrimitive;

/// Angular rule on `[0, π]` for the normalised `sin^{2m-2}θ dθ` measure.
#[derive(Clone, Debug)]
pub struct KernelCache {
    pub m: u32,
    /// uniform panels away from the diagonal
    pub panels: usize,
    rule: GaussLegendre,
    wallis: f64,
    /// nodes and normalised weights of the uniform composite rule
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const GL_POINTS: usize = 8;
/// below this angle the integrand is resolved by dyadic panels
const DYADIC_LIMIT: f64 = std::f64::consts::PI / 8.0;

impl KernelCache {
    pub fn new(m: u32) -> Result<Self> {
        Self::with_panels(m, 8)
    }

    pub fn with_panels(m: u32, panels: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidOrder(m));
        }
        if panels < 8 {
            return Err(Error::InvalidArgument("need at least 8 angular panels".into()));
        }
        let rule = GaussLegendre::new(GL_POINTS);
        let wallis = wallis(2 * m - 2);
        let k = 2 * m as i32 - 2;
        let h = std::f64::consts::PI / panels as f64;
        let (mut nodes, mut weights) = (Vec::new(), Vec::new());
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = mid + 0.5 * h * x;
                nodes.push(t);
                weights.push(w * 0.5 * h * t.sin().powi(k) / wallis);
            }
        }
        Ok(Self { m, panels, rule, wallis, nodes, weights })
    }

    fn panel_sum(&self, a: f64, b: f64, g: &impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let k = 2 * self.m as i32 - 2;
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(x, w)| {
                let t = mid + half * x;
                w * t.sin().powi(k) * g(t)
            })
            .sum::<f64>()
            * half
            / self.wallis
    }

    /// Average of `g(θ)` against the normalised measure, refining dyadically
    /// towards `θ = 0` down to `theta_min`.
    fn average(&self, theta_min: f64, g: impl Fn(f64) -> f64) -> f64 {
        if theta_min >= DYADIC_LIMIT {
            return self.nodes.iter().zip(&self.weights).map(|(t, w)| w * g(*t)).sum();
        }
        let h = std::f64::consts::PI / self.panels as f64;
        let mut acc = 0.0;
        // dyadic panels [0, θ_min], [θ_min, 2θ_min], … up to the first uniform break
        let mut a = 0.0;
        let mut b = theta_min;
        while b < h {
            acc += self.panel_sum(a, b, &g);
            a = b;
            b *= 2.0;
        }
        acc += self.panel_sum(a, h, &g);
        for p in 1..self.panels {
            acc += self.panel_sum(p as f64 * h, (p + 1) as f64 * h, &g);
        }
        acc
    }

    /// Spherical average of `log(s/|x-y|)` (`j = 0`) or `|x-y|^{-2j}` over
    /// `|y| = s`, `|x| = r`.
    pub fn kernel_avg(&self, r: f64, s: f64, j: u32) -> Result<f64> {
        if j >= self.m {
            return Err(Error::IndexOutOfRange { index: j as usize, range: format!("0..{}", self.m) });
        }
        if !(r >= 0.0 && s >= 0.0) || (j >= 1 && r == 0.0 && s == 0.0) {
            return Err(Error::InvalidArgument(format!("kernel undefined at r={r}, s={s}")));
        }
        if r == 0.0 || s == 0.0 {
            let d = r.max(s);
            return Ok(if j == 0 {
                if s == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            } else {
                d.powi(-2 * j as i32)
            });
        }
        let rs = r * s;
        let diff2 = (r - s) * (r - s);
        let theta_star = (r - s).abs() / rs.sqrt();
        let theta_min = (0.5 * theta_star).max(1e-12);
        let d2 = |t: f64| diff2 + 4.0 * rs * (0.5 * t).sin().powi(2);
        Ok(if j == 0 {
            s.ln() - 0.5 * self.average(theta_min, |t| d2(t).ln())
        } else {
            self.average(theta_min, |t| d2(t).powi(-(j as i32)))
        })
    }
}

/// `∫_0^π sin^k θ dθ`
fn wallis(k: u32) -> f64 {
    let num = double_factorial(k as i64 - 1).to_f64().unwrap();
    let den = double_factorial(k as i64).to_f64().unwrap();
    if k % 2 == 0 {
        std::f64::consts::PI * num / den
    } else {
        2.0 * num / den
    }
}

/// Convenience wrapper around a default [`KernelCache`].
pub fn kernel_avg(r: f64, s: f64, m: u32, j: u32) -> Result<f64> {
    KernelCache::new(m)?.kernel_avg(r, s, j)
}

/// Values of `v` or `Δ^j v` at requested radii.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VProfile {
    pub m: u32,
    /// `0` for `v`, `j` for `Δ^j v`
    pub j: u32,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub err_bar: Vec<f64>,
    /// radii where the error estimate exceeded the tolerance
    pub skipped: Vec<bool>,
}

impl VProfile {
    /// CSV `r,v,err_bar` for the radii that were not skipped.
    pub fn to_csv(&self) -> String {
        csv(
            &["r", "v", "err_bar"],
            (0..self.radii.len())
                .filter(|&i| !self.skipped[i])
                .map(|i| vec![self.radii[i], self.values[i], self.err_bar[i]]),
        )
    }

    pub fn value_at(&self, r: f64) -> Option<f64> {
        self.radii.iter().position(|&x| x == r).map(|i| self.values[i])
    }
}

/// Local power-law decay `e^{2mu(s)} s^{2m-1} ~ s^κ` at the end of the trajectory.
pub fn tail_exponent(traj: &RadialTrajectory) -> f64 {
    let i = traj.len() - 1;
    let r = traj.grid[i];
    2.0 * traj.m as f64 * r * traj.p[0][i] + 2.0 * traj.m as f64 - 1.0
}

struct Potential<'a> {
    traj: &'a RadialTrajectory,
    cache: &'a KernelCache,
    k: OrderConstants,
}

impl Potential<'_> {
    fn density(&self, s: f64) -> f64 {
        let u = self.traj.interp_u(s);
        (2.0 * self.k.m as f64 * u).exp() * s.powi(2 * self.k.m as i32 - 1)
    }

    /// `∫_0^{R} density · K_j(r, ·)` with `q` Gauss points per interval.
    fn radial_integral(&self, r: f64, j: u32, rule: &GaussLegendre) -> Result<f64> {
        let g = &self.traj.grid;
        let mut acc = 0.0;
        for w in g.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut seg = |lo: f64, hi: f64| -> Result<()> {
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                    let s = mid + half * x;
                    let d = self.density(s);
                    if d == 0.0 {
                        continue;
                    }
                    acc += wt * half * d * self.cache.kernel_avg(r, s, j)?;
                }
                Ok(())
            };
            if r > a && r < b {
                seg(a, r)?;
                seg(r, b)?;
            } else {
                seg(a, b)?;
            }
        }
        Ok(acc)
    }
}

const COARSE: usize = 4;
const FINE: usize = 8;

fn check_converged(traj: &RadialTrajectory) -> Result<f64> {
    if traj.termination != Termination::ReachedEnd {
        return Err(Error::NotConverged(format!(
            "trajectory ended by {:?} at r = {}; the potential needs the full decay",
            traj.termination,
            traj.r_final()
        )));
    }
    let kappa = tail_exponent(traj);
    if !(kappa < -1.0) {
        return Err(Error::NotConverged(format!(
            "e^{{2mu}} r^{{2m-1}} decays like r^{kappa:.3} at r = {}, not integrable",
            traj.r_final()
        )));
    }
    Ok(kappa)
}

fn potential_profile(
    traj: &RadialTrajectory,
    j: u32,
    eval_radii: &[f64],
    cache: &KernelCache,
    tol: f64,
) -> Result<VProfile> {
    let kappa = check_converged(traj)?;
    if cache.m != traj.m {
        return Err(Error::Inconsistent(format!("kernel for m={} used with m={}", cache.m, traj.m)));
    }
    let k = OrderConstants::new(traj.m)?;
    let big_r = traj.r_final();
    if let Some(r) = eval_radii.iter().find(|&&r| !(r >= 0.0 && r <= big_r)) {
        return Err(Error::InvalidArgument(format!("evaluation radius {r} outside [0, {big_r}]")));
    }
    let prefactor = if j == 0 {
        2.0 / k.sphere * k.omega
    } else {
        let lj = crate::exactconst::laplog_coefficient(traj.m, j)?.to_f64().unwrap();
        (-1f64).powi(j as i32) * 2.0 * lj / k.sphere * k.omega
    };
    let pot = Potential { traj, cache, k };
    let (coarse, fine) = (GaussLegendre::new(COARSE), GaussLegendre::new(FINE));
    let edge = pot.density(big_r) * big_r / (-kappa - 1.0);
    let mut out = VProfile {
        m: traj.m,
        j,
        radii: eval_radii.to_vec(),
        values: Vec::with_capacity(eval_radii.len()),
        err_bar: Vec::with_capacity(eval_radii.len()),
        skipped: Vec::with_capacity(eval_radii.len()),
    };
    for &r in eval_radii {
        if j >= 1 && r == 0.0 && traj.grid.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: traj.grid.len() });
        }
        let vf = prefactor * pot.radial_integral(r, j, &fine)?;
        let vc = prefactor * pot.radial_integral(r, j, &coarse)?;
        // |K(r, s)| decreases for s beyond max(r, R)
        let tail = (prefactor * edge * cache.kernel_avg(r, big_r, j)?).abs();
        let err = tail + (vf - vc).abs() + 1e-13 * (1.0 + vf.abs());
        out.values.push(vf);
        out.err_bar.push(err);
        out.skipped.push(!(err <= tol * (1.0 + vf.abs())) || !vf.is_finite());
    }
    Ok(out)
}

/// `v` at `eval_radii ⊂ [0, r_final]`.
pub fn compute_v(traj: &RadialTrajectory, eval_radii: &[f64]) -> Result<VProfile> {
    compute_v_with(traj, eval_radii, &KernelCache::new(traj.m)?)
}

pub fn compute_v_with(traj: &RadialTrajectory, eval_radii: &[f64], cache: &KernelCache) -> Result<VProfile> {
    potential_profile(traj, 0, eval_radii, cache, f64::INFINITY)
}

/// `Δ^j v`, `1 ≤ j ≤ m-1`. Radii whose error bar exceeds `1e-6 (1 + |value|)`
/// are flagged in `skipped`.
pub fn compute_lap_v(traj: &RadialTrajectory, j: u32, eval_radii: &[f64]) -> Result<VProfile> {
    if j == 0 || j >= traj.m {
        return Err(Error::IndexOutOfRange { index: j as usize, range: format!("1..{}", traj.m) });
    }
    potential_profile(traj, j, eval_radii, &KernelCache::new(traj.m)?, 1e-6)
}

/// Least-squares fit in `{1, r², …, r^{2d}}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyFit1D {
    /// coefficient of `r^{2k}` at index `k`
    pub coefficients: Vec<f64>,
    /// root mean square residual
    pub residual: f64,
    pub inferred_degree: u32,
    pub max_radius: f64,
    /// contribution at `max_radius` a term needs to count towards the degree
    pub threshold: f64,
}

fn infer_degree(coefficients: &[f64], rmax: f64, threshold: f64) -> u32 {
    (1..coefficients.len())
        .rev()
        .find(|&k| (coefficients[k] * rmax.powi(2 * k as i32)).abs() > threshold)
        .map_or(0, |k| 2 * k as u32)
}

impl PolyFit1D {
    pub fn evaluate(&self, r: f64) -> f64 {
        let r2 = r * r;
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * r2 + c)
    }

    /// Coefficient of the inferred leading power.
    pub fn leading_coefficient(&self) -> f64 {
        self.coefficients[(self.inferred_degree / 2) as usize]
    }

    /// `Δ` of the fitted polynomial in `R^n`, evaluated at `r`.
    pub fn laplacian(&self, n: u32, r: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| {
                let k2 = 2.0 * k as f64;
                c * k2 * (k2 + n as f64 - 2.0) * r.powf(k2 - 2.0)
            })
            .sum()
    }

    /// Recompute the inferred degree, ignoring terms whose contribution at
    /// the largest radius is below `floor`.
    pub fn rethreshold(&self, floor: f64) -> Self {
        let threshold = self.threshold.max(floor);
        let mut out = self.clone();
        out.threshold = threshold;
        out.inferred_degree = infer_degree(&self.coefficients, self.max_radius, threshold);
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "coefficients": self.coefficients,
            "threshold": self.threshold,
            "residual": self.residual,
            "inferred_degree": self.inferred_degree,
        })
    }
}

/// Fit an even polynomial of degree `≤ max_deg`; the inferred degree is the
/// largest `2k` whose term at the largest radius exceeds ten times the
/// residual norm (and `1e-10 · max|value|`).
pub fn fit_even_polynomial(samples: &[(f64, f64)], max_deg: u32) -> Result<PolyFit1D> {
    if max_deg % 2 == 1 {
        return Err(Error::InvalidArgument(format!("max degree {max_deg} is odd")));
    }
    let nb = (max_deg / 2 + 1) as usize;
    let needed = (max_deg / 2 + 2) as usize;
    if samples.len() < needed {
        return Err(Error::TooFewSamples { needed, got: samples.len() });
    }
    if samples.iter().any(|(r, v)| !r.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    let rmax = samples.iter().map(|s| s.0.abs()).fold(0.0, f64::max);
    let scale = if rmax > 0.0 { rmax } else { 1.0 };
    let a = DMatrix::from_fn(samples.len(), nb, |i, k| (samples[i].0 / scale).powi(2 * k as i32));
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Singular(format!("sample radii do not determine {nb} even coefficients")));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| Error::Singular(e.to_string()))?;
    let resid = &a * &x - &b;
    let residual = (resid.norm_squared() / samples.len() as f64).sqrt();
    let ymax = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    let threshold = (10.0 * residual).max(1e-10 * ymax);
    let coefficients: Vec<f64> = (0..nb).map(|k| x[k] / scale.powi(2 * k as i32)).collect();
    let degree = infer_degree(&coefficients, rmax, threshold);
    Ok(PolyFit1D { coefficients, residual, inferred_degree: degree, max_radius: rmax, threshold })
}

/// Samples of `u - v` at the given radii.
pub fn u_minus_v(traj: &RadialTrajectory, v: &VProfile) -> Vec<(f64, f64)> {
    v.radii.iter().zip(&v.values).map(|(&r, &vv)| (r, traj.interp_u(r) - vv)).collect()
}

/// Default sample radii for the `u - v` fit: uniform on `[0, r_final]`.
pub fn default_fit_radii(traj: &RadialTrajectory, count: usize) -> Vec<f64> {
    crate::quad::linspace(0.0, traj.r_final(), count.max(2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RescaleReport {
    pub scale: f64,
    pub radii: Vec<f64>,
    /// `max |ṽ(x) - v(λx)|`
    pub max_deviation: f64,
    /// spread of `(ũ - ṽ)(x) - (u - v)(λx)` around its mean
    pub constant_spread: f64,
    /// mean of `(ũ - ṽ)(x) - (u - v)(λx)`
    pub constant_shift: f64,
}

/// Rescale `ũ(x) = u(λx) + log λ` and compare its potential with `v(λ ·)`.
pub fn rescale_check(traj: &RadialTrajectory, scale: f64, test_radii: &[f64]) -> Result<RescaleReport> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    let scaled = traj.rescaled(scale);
    let xs: Vec<f64> = test_radii.to_vec();
    let lxs: Vec<f64> = xs.iter().map(|x| x * scale).collect();
    let vt = compute_v(&scaled, &xs)?;
    let v = compute_v(traj, &lxs)?;
    let mut max_dev: f64 = 0.0;
    let mut shifts = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        max_dev = max_dev.max((vt.values[i] - v.values[i]).abs());
        let pt = scaled.interp_u(xs[i]) - vt.values[i];
        let p = traj.interp_u(lxs[i]) - v.values[i];
        shifts.push(pt - p);
    }
    let mean = shifts.iter().sum::<f64>() / shifts.len().max(1) as f64;
    let spread = shifts.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max);
    Ok(RescaleReport { scale, radii: xs, max_deviation: max_dev, constant_spread: spread, constant_shift: mean })
}
