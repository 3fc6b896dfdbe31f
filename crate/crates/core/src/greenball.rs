//! Green function of Δ^m on balls of R^{2m} with Navier boundary conditions,
//! a radial Navier solver for `(-Δ)^m v = f`, and the exponential
//! integrability experiment built on it.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactconst::{ConstantTable, PiRational};
use crate::quad::{self, GaussLegendre};

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Radial function `a·log r + Σ_p b_p r^p` on `R^n` with exact coefficients.
#[derive(Clone, Debug, PartialEq)]
struct RadialExpr {
    n: i64,
    log: PiRational,
    powers: BTreeMap<i32, PiRational>,
}

impl RadialExpr {
    fn add_power(&mut self, p: i32, c: PiRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.powers.entry(p).or_insert_with(PiRational::zero);
        *slot = slot.checked_add(&c).expect("homogeneous powers of pi");
        if slot.is_zero() {
            self.powers.remove(&p);
        }
    }

    fn laplacian(&self) -> Self {
        let mut out = Self { n: self.n, log: PiRational::zero(), powers: BTreeMap::new() };
        // Δ log r = (n-2) r^{-2}
        out.add_power(-2, self.log.scale(&int(self.n - 2)));
        for (&p, c) in &self.powers {
            let k = p as i64 * (p as i64 + self.n - 2);
            out.add_power(p - 2, c.scale(&int(k)));
        }
        out
    }

    fn derivative(&self) -> Self {
        let mut out = Self { n: self.n, log: PiRational::zero(), powers: BTreeMap::new() };
        out.add_power(-1, self.log.clone());
        for (&p, c) in &self.powers {
            out.add_power(p - 1, c.scale(&int(p as i64)));
        }
        out
    }

    /// Value at a rational radius; the log term must vanish there (`r = 1`)
    /// or be absent.
    fn value_at(&self, r: &BigRational) -> PiRational {
        assert!(self.log.is_zero() || r.is_one(), "log term is not rational away from r = 1");
        self.powers.iter().fold(PiRational::zero(), |acc, (&p, c)| {
            let rp = if p >= 0 {
                num_traits::pow(r.clone(), p as usize)
            } else {
                num_traits::pow(r.recip(), (-p) as usize)
            };
            acc.checked_add(&c.scale(&rp)).expect("homogeneous powers of pi")
        })
    }

    fn without_log(&self) -> Self {
        Self { n: self.n, log: PiRational::zero(), powers: self.powers.clone() }
    }
}

/// Green function `G(r) = α_log log r + Σ_{k<m} α_k r^{2k} + log_shift` of Δ^m
/// on `B_R ⊂ R^{2m}` with `G = ΔG = … = Δ^{m-1}G = 0` on `∂B_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenBall {
    pub m: u32,
    pub radius: BigRational,
    /// `(-1)^{m+1}/γ_m`
    pub log_coeff: PiRational,
    /// coefficients of `1, r², …, r^{2m-2}` (for this radius)
    pub poly_coeffs: Vec<PiRational>,
    /// `-log_coeff · ln R`, the only non-exact piece (zero at `R = 1`)
    pub log_shift: f64,
    /// `(-1)^i ∂_r Δ^{m-1-i} G` on `∂B_R`, `i = 0..m-1`
    pub sign_constants: Vec<PiRational>,
}

impl GreenBall {
    fn expr(&self) -> RadialExpr {
        let mut e = RadialExpr { n: 2 * self.m as i64, log: self.log_coeff.clone(), powers: BTreeMap::new() };
        for (k, c) in self.poly_coeffs.iter().enumerate() {
            e.add_power(2 * k as i32, c.clone());
        }
        e
    }

    /// `Δ^i G` on `∂B_R` for `i = 0..m-1`, exactly. The log term at `i = 0`
    /// cancels against `log_shift` identically and is omitted.
    pub fn navier_residuals(&self) -> Vec<PiRational> {
        let mut e = self.expr();
        let mut out = Vec::with_capacity(self.m as usize);
        for i in 0..self.m {
            let v = if i == 0 { e.without_log().value_at(&self.radius) } else { e.value_at(&self.radius) };
            out.push(v);
            e = e.laplacian();
        }
        out
    }

    /// Flux `∫_{∂B_r} ∂_r Δ^{m-1} G dS` at `r = 1`; equals 1 for a fundamental solution of Δ^m.
    pub fn fundamental_flux(&self) -> Result<PiRational> {
        let t = ConstantTable::new(self.m)?;
        let mut e = self.expr();
        for _ in 0..self.m - 1 {
            e = e.laplacian();
        }
        let d = e.derivative().value_at(&BigRational::one());
        Ok(&t.omega_n * &d)
    }

    pub fn sign_constants_f64(&self) -> Vec<f64> {
        self.sign_constants.iter().map(PiRational::to_f64).collect()
    }

    /// `Δ^i G(r)` for `r > 0`.
    pub fn laplacian_value(&self, i: u32, r: f64) -> f64 {
        let mut e = self.expr();
        for _ in 0..i {
            e = e.laplacian();
        }
        let mut v = e.log.to_f64() * r.ln();
        for (&p, c) in &e.powers {
            v += c.to_f64() * r.powi(p);
        }
        if i == 0 {
            v += self.log_shift;
        }
        v
    }

    pub fn value(&self, r: f64) -> f64 {
        self.laplacian_value(0, r)
    }
}

/// Build the Navier Green function of Δ^m on the ball of the given radius.
pub fn green_ball(m: u32, radius: &BigRational) -> Result<GreenBall> {
    if m < 1 {
        return Err(Error::InvalidOrder(m));
    }
    if radius <= &BigRational::zero() {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let t = ConstantTable::new(m)?;
    let sign = if m % 2 == 1 { 1 } else { -1 };
    let log_coeff = PiRational::integer(sign).checked_div(&t.gamma_m)?;
    let n = 2 * m as i64;

    // Unit ball: Δ^i G(1) = 0, i = m-1 down to 0. Row i only involves α_k, k ≥ i.
    let log_part = RadialExpr { n, log: log_coeff.clone(), powers: BTreeMap::new() };
    let mut log_laps = Vec::with_capacity(m as usize);
    let mut e = log_part;
    for _ in 0..m {
        log_laps.push(e.without_log().value_at(&BigRational::one()));
        e = e.laplacian();
    }
    // basis_laps[k][i] = Δ^i r^{2k} at r = 1
    let basis_laps: Vec<Vec<BigRational>> = (0..m)
        .map(|k| {
            (0..m)
                .map(|i| {
                    if i > k {
                        return BigRational::zero();
                    }
                    (0..i).fold(BigRational::one(), |acc, l| {
                        let p = 2 * (k - l) as i64;
                        acc * int(p * (p + n - 2))
                    })
                })
                .collect()
        })
        .collect();
    let mut coeffs = vec![PiRational::zero(); m as usize];
    for i in (0..m as usize).rev() {
        let mut rhs = -log_laps[i].clone();
        for (k, c) in coeffs.iter().enumerate().skip(i + 1) {
            rhs = rhs.checked_sub(&c.scale(&basis_laps[k][i]))?;
        }
        let diag = &basis_laps[i][i];
        if diag.is_zero() {
            return Err(Error::Singular(format!("zero pivot in Navier system at row {i}")));
        }
        coeffs[i] = rhs.scale(&diag.recip());
    }

    // Rescale: G_R(r) = G_1(r/R).
    let rinv = radius.recip();
    let poly_coeffs: Vec<PiRational> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c.scale(&num_traits::pow(rinv.clone(), 2 * k)))
        .collect();
    let rf = radius.to_f64().expect("finite radius");
    let log_shift = if radius.is_one() { 0.0 } else { -log_coeff.to_f64() * rf.ln() };

    let mut g = GreenBall { m, radius: radius.clone(), log_coeff, poly_coeffs, log_shift, sign_constants: vec![] };
    // sign constants on ∂B_R: Δ^j G_R has a log term only for j = 0, whose
    // derivative at R is log_coeff/R (rational).
    let mut laps = vec![g.expr()];
    for _ in 1..m {
        let next = laps.last().unwrap().laplacian();
        laps.push(next);
    }
    let sign_constants = (0..m as usize)
        .map(|i| {
            let d = laps[m as usize - 1 - i].derivative();
            let v = d.value_at(radius);
            if i % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect();
    g.sign_constants = sign_constants;
    Ok(g)
}

/// Samples of a radial function on `[0, R]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub m: u32,
    pub outer_radius: f64,
}

impl RadialProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, m: u32) -> Result<Self> {
        quad::check_grid(&grid)?;
        if grid[0] != 0.0 {
            return Err(Error::InvalidArgument("profile grid must start at r = 0".into()));
        }
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument("grid and values differ in length".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("profile values must be finite".into()));
        }
        let outer_radius = *grid.last().unwrap();
        Ok(Self { grid, values, m, outer_radius })
    }

    /// Uniform grid on `[0, R]` with `nodes` points.
    pub fn from_fn(m: u32, radius: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if nodes < 2 || !(radius > 0.0) {
            return Err(Error::BadGrid);
        }
        let grid = quad::linspace(0.0, radius, nodes);
        let values = grid.iter().map(|&r| f(r)).collect();
        Self::new(grid, values, m)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// CSV with header `r,value`.
    pub fn to_csv(&self) -> String {
        crate::output::csv(&["r", "value"], self.grid.iter().zip(&self.values).map(|(r, v)| vec![*r, *v]))
    }

    /// `∫_{B_R} |f| dx = ω_{2m} ∫_0^R |f(r)| r^{2m-1} dr`.
    pub fn l1_norm(&self) -> Result<f64> {
        let t = ConstantTable::new(self.m)?;
        let abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        let i = weighted_cumulative(&self.grid, &abs, 2 * self.m as i32 - 1)?;
        Ok(t.omega_n.to_f64() * i.last().unwrap())
    }
}

/// Running `∫_0^{r_i} t^k g(t) dt`: `g` is replaced by the cubic through its
/// four nearest samples and the polynomial `t^k · cubic` is integrated
/// exactly with an 8-point Gauss rule (exact for `k ≤ 12`).
pub fn weighted_cumulative(grid: &[f64], values: &[f64], k: i32) -> Result<Vec<f64>> {
    quad::check_grid(grid)?;
    if values.len() != grid.len() {
        return Err(Error::InvalidArgument("grid and values differ in length".into()));
    }
    let gl = GaussLegendre::new(8);
    let n = grid.len();
    let mut out = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let lo = if n < 4 { 0 } else { i.saturating_sub(1).min(n - 4) };
        let hi = (lo + 4).min(n);
        let xs = &grid[lo..hi];
        let ys = &values[lo..hi];
        let seg = gl.integrate(grid[i], grid[i + 1], |t| t.powi(k) * lagrange(xs, ys, t));
        out[i + 1] = out[i] + seg;
    }
    Ok(out)
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut l = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                l *= (x - xj) / (xi - xj);
            }
        }
        acc += yi * l;
    }
    acc
}

/// One radial Dirichlet inversion of `-Δ` on `B_R ⊂ R^n`:
/// `z(r) = ∫_r^R s^{1-n} ∫_0^s t^{n-1} g(t) dt ds`.
fn invert_minus_laplacian(grid: &[f64], g: &[f64], n: u32) -> Result<Vec<f64>> {
    let inner = weighted_cumulative(grid, g, n as i32 - 1)?;
    let h: Vec<f64> = grid
        .iter()
        .zip(&inner)
        .map(|(&s, &f)| if s == 0.0 { 0.0 } else { f / s.powi(n as i32 - 1) })
        .collect();
    let outer = quad::cumulative(grid, &h)?;
    let total = *outer.last().unwrap();
    Ok(outer.iter().map(|o| total - o).collect())
}

/// All stages of the Navier chain: `stages[0] = f`, `-Δ stages[j+1] = stages[j]`
/// with zero Dirichlet data; `stages[m]` solves `(-Δ)^m v = f`.
pub fn navier_solve_stages(f: &RadialProfile, m: u32) -> Result<Vec<RadialProfile>> {
    if m < 1 {
        return Err(Error::InvalidOrder(m));
    }
    quad::check_grid(&f.grid)?;
    let mut stages = vec![f.clone()];
    for _ in 0..m {
        let prev = stages.last().unwrap();
        let z = invert_minus_laplacian(&f.grid, &prev.values, 2 * m)?;
        stages.push(RadialProfile { grid: f.grid.clone(), values: z, m, outer_radius: f.outer_radius });
    }
    Ok(stages)
}

/// Solve `(-Δ)^m v = f` in `B_R` with `v = Δv = … = Δ^{m-1}v = 0` on `∂B_R`.
pub fn navier_solve_radial(f: &RadialProfile, m: u32) -> Result<RadialProfile> {
    Ok(navier_solve_stages(f, m)?.pop().unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpIntegral {
    /// `ω_{2m} ∫_0^R e^{2mp|v|} r^{2m-1} dr`, `+∞` on overflow
    pub value: f64,
    pub overflow: bool,
}

/// Exponent above which `e^x` is treated as overflowing.
pub const EXP_OVERFLOW: f64 = 700.0;

pub fn exp_integrability(v: &RadialProfile, m: u32, p: f64) -> Result<ExpIntegral> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
    }
    let t = ConstantTable::new(m)?;
    let scale = 2.0 * m as f64 * p;
    if v.values.iter().any(|x| scale * x.abs() > EXP_OVERFLOW) {
        return Ok(ExpIntegral { value: f64::INFINITY, overflow: true });
    }
    let e: Vec<f64> = v.values.iter().map(|x| (scale * x.abs()).exp()).collect();
    let i = weighted_cumulative(&v.grid, &e, 2 * m as i32 - 1)?;
    Ok(ExpIntegral { value: t.omega_n.to_f64() * i.last().unwrap(), overflow: false })
}

/// Upper bound `ω_{2m} 2^c R^{2m} / (2m - c)`, `c = 2mp‖f‖₁/γ_m`, valid for
/// `p‖f‖₁ < γ_m`.
pub fn exp_integrability_bound(m: u32, p: f64, l1_norm: f64, radius: f64) -> Result<f64> {
    let t = ConstantTable::new(m)?;
    let two_m = 2.0 * m as f64;
    let c = two_m * p * l1_norm / t.gamma_m.to_f64();
    if c >= two_m {
        return Ok(f64::INFINITY);
    }
    Ok(t.omega_n.to_f64() * 2f64.powf(c) * radius.powf(two_m) / (two_m - c))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A2mReport {
    pub m: u32,
    pub radius: f64,
    pub l1_norm: f64,
    pub p: f64,
    pub integral: ExpIntegral,
    pub bound: f64,
    pub min_stage_value: f64,
    pub nonnegative: bool,
}

/// Navier-solve `f`, pick `p = γ_m / (2‖f‖₁)` and compare the exponential
/// integral with its a-priori bound.
pub fn a2m_experiment(f: &RadialProfile, m: u32) -> Result<(A2mReport, RadialProfile)> {
    let t = ConstantTable::new(m)?;
    let stages = navier_solve_stages(f, m)?;
    let min_stage_value = stages[1..]
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let v = stages.last().unwrap().clone();
    let l1 = f.l1_norm()?;
    let p = t.gamma_m.to_f64() / (2.0 * l1);
    let integral = exp_integrability(&v, m, p)?;
    let bound = exp_integrability_bound(m, p, l1, f.outer_radius)?;
    let f_nonneg = f.values.iter().all(|&x| x >= 0.0);
    let report = A2mReport {
        m,
        radius: f.outer_radius,
        l1_norm: l1,
        p,
        integral,
        bound,
        min_stage_value,
        nonnegative: !f_nonneg || min_stage_value >= 0.0,
    };
    Ok((report, v))
}
