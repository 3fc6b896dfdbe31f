//! Standard versus non-standard: five equivalent tail criteria evaluated on
//! a computed radial solution, plus their mutual agreement.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::output::json_finite;
use crate::represent::{compute_v, default_fit_radii, fit_even_polynomial, u_minus_v, PolyFit1D, VProfile};
use crate::shooter::{shoot, InitialData, RadialTrajectory, ShootingConfig, SolveReport, Termination};

pub const EPS_STD: f64 = 1e-3;
pub const EPS_GROWTH: f64 = 1e-4;
pub const R_BIG: f64 = 1e4;
/// runs shorter than this cannot separate the two classes
pub const MIN_R_END: f64 = 100.0;
/// ρ_1 must stay within a factor 2 over the tail
pub const RHO_SPREAD: f64 = std::f64::consts::LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Standard,
    Nonstandard,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Standard => "standard",
            Verdict::Nonstandard => "nonstandard",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub name: &'static str,
    pub statistic: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    /// `lim Δu`
    pub crit_ii: Criterion,
    /// `|u(r_end) + 2α log r_end| / r_end²`
    pub crit_iii: Criterion,
    /// inferred degree of `u - v`
    pub crit_iv: Criterion,
    /// minimum of the scalar curvature over the tail
    pub crit_v: Criterion,
    /// spread of `log ρ_1` over the tail
    pub crit_vi: Criterion,
    pub overall: Verdict,
    pub agreement: bool,
    /// `(j, a)` with `Δ^j u → a < 0`
    pub deltaa_estimate: Option<(u32, f64)>,
}

impl ClassificationReport {
    pub fn criteria(&self) -> [&Criterion; 5] {
        [&self.crit_ii, &self.crit_iii, &self.crit_iv, &self.crit_v, &self.crit_vi]
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "criteria": self.criteria().iter().map(|c| json!({
                "name": c.name,
                "statistic": json_finite(c.statistic),
                "threshold": c.threshold,
                "verdict": c.verdict,
            })).collect::<Vec<_>>(),
            "overall": self.overall,
            "agreement": self.agreement,
            "deltaa_estimate": self.deltaa_estimate.map(|(j, a)| json!({"j": j, "a": a})),
        })
    }
}

fn criterion(name: &'static str, statistic: f64, threshold: f64, verdict: Verdict) -> Criterion {
    let verdict = if statistic.is_nan() { Verdict::Inconclusive } else { verdict };
    Criterion { name, statistic, threshold, verdict }
}

fn binary(standard: bool) -> Verdict {
    if standard {
        Verdict::Standard
    } else {
        Verdict::Nonstandard
    }
}

/// Evaluate the criteria on one run. `fit` is the even-polynomial fit of
/// `u - v`; without it criterion (iv) is inconclusive.
pub fn classify(traj: &RadialTrajectory, report: &SolveReport, fit: Option<&PolyFit1D>) -> Result<ClassificationReport> {
    if report.m != traj.m || report.r_final != traj.r_final() || report.termination != traj.termination {
        return Err(Error::Inconsistent("report was not computed from this trajectory".into()));
    }
    if let Some(f) = fit {
        if f.max_radius > traj.r_final() * (1.0 + 1e-12) {
            return Err(Error::Inconsistent("fit extends beyond the trajectory".into()));
        }
    }
    let usable = traj.termination == Termination::ReachedEnd && traj.r_final() >= MIN_R_END;

    let lim = report.delta_limits.first().map_or(f64::NAN, |d| d.value);
    let ii = criterion(
        "ii_lim_laplacian",
        lim,
        EPS_STD,
        if lim.abs() < EPS_STD {
            Verdict::Standard
        } else if lim < -EPS_STD {
            Verdict::Nonstandard
        } else {
            Verdict::Inconclusive
        },
    );
    // u/r² with the logarithmic part -2α log r removed; both tend to the same
    // limit, but the raw ratio of a standard solution only drops below
    // EPS_GROWTH once r_end is several hundred
    let rf = report.r_final;
    let growth = (report.u_over_r2 + 2.0 * report.alpha_final * rf.ln() / (rf * rf)).abs();
    let iii = criterion("iii_u_over_r2", growth, EPS_GROWTH, binary(growth < EPS_GROWTH));
    let iv = match fit {
        Some(f) => criterion("iv_degree_of_p", f.inferred_degree as f64, 0.0, binary(f.inferred_degree == 0)),
        None => criterion("iv_degree_of_p", f64::NAN, 0.0, Verdict::Inconclusive),
    };
    let rmin = report.min_tail_scalar_curvature();
    let v = criterion("v_min_scalar_curvature", rmin, -R_BIG, binary(rmin > -R_BIG));
    let (lo, hi) = report
        .log_rho1_tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x.1), b.max(x.1)));
    let spread = if lo.is_finite() && hi.is_finite() { hi - lo } else { f64::INFINITY };
    let vi = criterion("vi_log_rho1_spread", spread, RHO_SPREAD, binary(spread < RHO_SPREAD));

    let mut crits = [ii, iii, iv, v, vi];
    if !usable {
        for c in crits.iter_mut() {
            c.verdict = Verdict::Inconclusive;
        }
    }
    let decided: Vec<Verdict> = crits.iter().map(|c| c.verdict).filter(|v| *v != Verdict::Inconclusive).collect();
    let agreement = decided.windows(2).all(|w| w[0] == w[1]);
    let overall = match (agreement, decided.first()) {
        (true, Some(v)) => *v,
        _ => Verdict::Inconclusive,
    };
    let deltaa_estimate = if overall == Verdict::Nonstandard {
        report
            .delta_limits
            .iter()
            .rev()
            .find(|d| d.value.abs() > EPS_STD)
            .map(|d| (d.j, d.value))
    } else {
        None
    };
    let [ii, iii, iv, v, vi] = crits;
    Ok(ClassificationReport {
        crit_ii: ii,
        crit_iii: iii,
        crit_iv: iv,
        crit_v: v,
        crit_vi: vi,
        overall,
        agreement,
        deltaa_estimate,
    })
}

/// Fit `value = a + b r^{-2}` on the full window and two nested tails;
/// returns `(a of the widest window, max pairwise spread of a)`.
pub fn limit_estimate(curve: &[(f64, f64)]) -> Result<(f64, f64)> {
    const NEEDED: usize = 12;
    if curve.len() < NEEDED {
        return Err(Error::TooFewSamples { needed: NEEDED, got: curve.len() });
    }
    let n = curve.len();
    let fits: Vec<f64> = [0, n / 3, 2 * n / 3]
        .iter()
        .map(|&start| fit_inverse_square(&curve[start..]))
        .collect::<Result<_>>()?;
    let mut spread: f64 = 0.0;
    for i in 0..fits.len() {
        for j in i + 1..fits.len() {
            spread = spread.max((fits[i] - fits[j]).abs());
        }
    }
    Ok((fits[0], spread))
}

fn fit_inverse_square(pts: &[(f64, f64)]) -> Result<f64> {
    let nf = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.powi(-2)).collect();
    let mx = xs.iter().sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(pts).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Singular("tail radii coincide".into()));
    }
    let b = sxy / sxx;
    Ok(my - b * mx)
}

/// Everything computed for one initial condition.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub trajectory: RadialTrajectory,
    pub report: SolveReport,
    /// `v` on the fit radii, absent when the run did not converge
    pub v: Option<VProfile>,
    pub fit: Option<PolyFit1D>,
    pub classification: ClassificationReport,
}

/// Smallest `r²` rate of `u - v` counted as polynomial growth. Rounding
/// errors excite the `-C r²` mode of the radial equation at `C ~ 1e-11`,
/// so a bare residual test would call every computed solution non-standard.
pub const DEGREE_FLOOR_RATE: f64 = 1e-8;

/// Number of radii used to sample `u - v`.
pub const FIT_SAMPLES: usize = 41;

/// Shoot, compute `v` and the fit of `u - v` when possible, then classify.
pub fn analyze(config: &ShootingConfig) -> Result<Analysis> {
    let (trajectory, report) = shoot(config)?;
    let (v, fit) = match compute_v(&trajectory, &default_fit_radii(&trajectory, FIT_SAMPLES)) {
        Ok(v) => {
            let samples = u_minus_v(&trajectory, &v);
            let fit = fit_even_polynomial(&samples, 2 * trajectory.m - 2)
                .ok()
                .map(|f| f.rethreshold(DEGREE_FLOOR_RATE * f.max_radius * f.max_radius));
            (Some(v), fit)
        }
        Err(Error::NotConverged(_)) => (None, None),
        Err(e) => return Err(e),
    };
    let classification = classify(&trajectory, &report, fit.as_ref())?;
    Ok(Analysis { trajectory, report, v, fit, classification })
}

/// Analyse every configuration on up to `jobs` threads; results keep the input order.
pub fn analyze_all(configs: &[ShootingConfig], jobs: usize) -> Vec<Result<Analysis>> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<Analysis>>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, configs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= configs.len() {
                    break;
                }
                let r = analyze(&configs[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().unwrap().expect("every slot filled")).collect()
}

/// `count` runs of order 2 with `u(0) = log 2` and `u''(0) = -2.5 + k/count`,
/// `k = 0..count`; for `count = 20` this steps by 0.05 through the standard
/// value `-2`.
pub fn second_derivative_sweep(count: usize, r_end: f64) -> Vec<ShootingConfig> {
    (0..count)
        .map(|k| {
            let d2 = -2.5 + k as f64 / count as f64;
            ShootingConfig::new(2, InitialData::EvenDerivatives(vec![std::f64::consts::LN_2, d2]), r_end)
        })
        .collect()
}
