//! Dormand–Prince 5(4) with Hairer's dense output.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th order minus embedded 4th order
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Step-size safety factor.
const SAFETY: f64 = 0.8;

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x < 1.0;
        if !ok(self.rel) || !ok(self.abs) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must lie in (0, 1): rel={}, abs={}",
                self.rel, self.abs
            )));
        }
        Ok(())
    }
}

/// Continuous extension of one accepted step.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    /// embedded local error estimate per component
    pub local_error: Vec<f64>,
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// integration reached the requested end point
    Finished,
    /// the stop predicate fired on the last accepted state
    Stopped,
    /// step size fell below the representable resolution of `t`
    Underflow,
}

#[derive(Clone, Copy, Debug)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrate `y' = f(t, y)` from `t0` to `t1`. `on_step` receives every
/// accepted step's dense output; integration stops early when `stop`
/// returns `true` for the state at the end of a step.
pub fn integrate<F, S, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    tol: Tolerances,
    h0: Option<f64>,
    mut stop: S,
    mut on_step: O,
) -> Result<(StepOutcome, Vec<f64>, f64, Stats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> bool,
    O: FnMut(&DenseStep),
{
    tol.validate()?;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument("integration interval must be increasing".into()));
    }
    let dim = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut local_err = vec![0.0; dim];
    let mut stats = Stats { accepted: 0, rejected: 0, evaluations: 0 };

    f(t, &y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = h0.unwrap_or_else(|| initial_step(&y, &k[0], tol, t1 - t0));
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h.abs() <= 16.0 * f64::EPSILON * t.abs().max(1e-300) {
            return Ok((StepOutcome::Underflow, y, t, stats));
        }
        for s in 1..7 {
            let (done, rest) = k.split_at_mut(s);
            for i in 0..dim {
                ytmp[i] = y[i] + h * done.iter().zip(&A[s]).map(|(kj, a)| a * kj[i]).sum::<f64>();
            }
            f(t + C[s] * h, &ytmp, &mut rest[0]);
        }
        // the last stage is evaluated at the 5th-order solution (FSAL)
        ynew.copy_from_slice(&ytmp);
        stats.evaluations += 6;
        let mut err = 0.0;
        for i in 0..dim {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
            local_err[i] = e;
            let sc = tol.abs + tol.rel * y[i].abs().max(ynew[i].abs());
            err = f64::max(err, (e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.2;
            stats.rejected += 1;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            let mut rcont = [
                y.clone(),
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
            ];
            for i in 0..dim {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k[6][i] - bspl;
                rcont[4][i] = h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>();
            }
            let dense = DenseStep { t0: t, h, local_error: local_err.clone(), rcont };
            on_step(&dense);
            stats.accepted += 1;
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            let k6 = k[6].clone();
            k[0].copy_from_slice(&k6);
            if stop(t, &y) {
                return Ok((StepOutcome::Stopped, y, t, stats));
            }
            if t >= t1 {
                return Ok((StepOutcome::Finished, y, t, stats));
            }
            // PI controller with Hairer's dopri5 exponents
            let fac = (err.max(1e-10).powf(0.17) / err_old.powf(0.04) / SAFETY).clamp(0.1, 5.0);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            err_old = err.max(1e-4);
            h = hnew;
            last_rejected = false;
        } else {
            let fac = (err.powf(0.2) / SAFETY).min(10.0);
            h /= fac;
            stats.rejected += 1;
            last_rejected = true;
        }
    }
}

fn initial_step(y: &[f64], dy: &[f64], tol: Tolerances, span: f64) -> f64 {
    let dim = y.len() as f64;
    let (mut d0, mut d1) = (0.0, 0.0);
    for (yi, di) in y.iter().zip(dy) {
        let sc = tol.abs + tol.rel * yi.abs();
        d0 += (yi / sc).powi(2);
        d1 += (di / sc).powi(2);
    }
    let (d0, d1) = ((d0 / dim).sqrt(), (d1 / dim).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).min(1e-3 * span.max(1e-3)).max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let tol = Tolerances { rel: 1e-10, abs: 1e-12 };
        let (out, y, t, _) = integrate(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            &[1.0],
            5.0,
            tol,
            None,
            |_, _| false,
            |_| {},
        )
        .unwrap();
        assert_eq!(out, StepOutcome::Finished);
        assert_eq!(t, 5.0);
        assert!((y[0] - (-5f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_accurate() {
        let tol = Tolerances { rel: 1e-9, abs: 1e-12 };
        let mut max_err: f64 = 0.0;
        integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            tol,
            None,
            |_, _| false,
            |step| {
                let mut out = [0.0; 2];
                for q in 0..=10 {
                    let t = step.t0 + step.h * q as f64 / 10.0;
                    step.eval(t, &mut out);
                    max_err = max_err.max((out[0] - t.sin()).abs()).max((out[1] - t.cos()).abs());
                }
            },
        )
        .unwrap();
        assert!(max_err < 1e-7, "{max_err}");
    }

    #[test]
    fn stop_predicate() {
        let tol = Tolerances { rel: 1e-8, abs: 1e-10 };
        // y' = y², y(0) = 1 blows up at t = 1
        let (out, y, t, _) = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            2.0,
            tol,
            None,
            |_, y| y[0] > 50.0,
            |_| {},
        )
        .unwrap();
        assert_eq!(out, StepOutcome::Stopped);
        assert!(y[0] > 50.0 && t < 1.0);
    }

    #[test]
    fn rejects_bad_tolerances() {
        let tol = Tolerances { rel: 0.0, abs: 1e-10 };
        assert!(integrate(|_, _, _| {}, 0.0, &[1.0], 1.0, tol, None, |_, _| false, |_| {}).is_err());
    }
}
