use num_bigint::BigInt;
use num_rational::BigRational;
use polyliouville::exactconst::PiRational;
use polyliouville::greenball::*;
use polyliouville::quad::GaussLegendre;
use proptest::prelude::*;
use std::f64::consts::PI;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Coefficients in `r²` of `(1 - r²)^k`.
fn bump(k: u32) -> Vec<f64> {
    let mut c = vec![1.0];
    for _ in 0..k {
        let mut next = vec![0.0; c.len() + 1];
        for (j, a) in c.iter().enumerate() {
            next[j] += a;
            next[j + 1] -= a;
        }
        c = next;
    }
    c
}

/// Radial Laplacian on `R^n` of `Σ c_j r^{2j}`.
fn lap_even(c: &[f64], n: f64) -> Vec<f64> {
    (1..c.len()).map(|j| c[j] * 2.0 * j as f64 * (2.0 * j as f64 + n - 2.0)).collect()
}

fn eval_even(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * r * r + a)
}

#[test]
fn green_reproduces_point_values() {
    // ∫_B G Δ^m φ = φ(0) for φ = (1-r²)^k with Δ^j φ = 0 on ∂B, j < m
    let gl = GaussLegendre::new(20);
    for m in 1..=4u32 {
        let n = 2.0 * m as f64;
        let g = green_ball(m, &q(1, 1)).unwrap();
        let omega = 2.0 * PI.powi(m as i32) / (1..m).map(|k| k as f64).product::<f64>();
        let mut c = bump(2 * m);
        for _ in 0..m {
            c = lap_even(&c, n);
        }
        // dyadic panels towards the logarithmic singularity
        let mut total = 0.0;
        let mut hi = 1.0;
        for _ in 0..40 {
            let lo = hi / 2.0;
            total += gl.integrate(lo, hi, |r| g.value(r) * eval_even(&c, r) * r.powf(n - 1.0));
            hi = lo;
        }
        let got = omega * total;
        assert!((got - 1.0).abs() < 1e-12, "m={m}: {got}");
    }
}

#[test]
fn m2_hand_solution() {
    let g = green_ball(2, &q(1, 1)).unwrap();
    assert_eq!(g.log_coeff, PiRational::new(q(-1, 8), -2));
    assert_eq!(g.poly_coeffs, vec![PiRational::new(q(-1, 32), -2), PiRational::new(q(1, 32), -2)]);
    assert_eq!(g.sign_constants, vec![PiRational::new(q(1, 2), -2), PiRational::new(q(1, 16), -2)]);
}

#[test]
fn navier_conditions_and_signs_up_to_six() {
    for m in 1..=6 {
        let g = green_ball(m, &q(1, 1)).unwrap();
        assert!(g.navier_residuals().iter().all(PiRational::is_zero), "m={m}");
        assert!(g.sign_constants.iter().all(PiRational::is_positive), "m={m}");
        assert_eq!(g.fundamental_flux().unwrap(), PiRational::one());
        // boundary values also vanish numerically on other radii
        let g = green_ball(m, &q(5, 2)).unwrap();
        for i in 0..m {
            assert!(g.laplacian_value(i, 2.5).abs() < 1e-12, "m={m} i={i}");
        }
    }
}

/// Fourth-order central radial Laplacian on a uniform grid, interior nodes only.
fn fd_laplacian(grid: &[f64], v: &[f64], n: f64) -> Vec<(usize, f64)> {
    let h = grid[1] - grid[0];
    (2..grid.len() - 2)
        .map(|i| {
            let d2 = (-v[i + 2] + 16.0 * v[i + 1] - 30.0 * v[i] + 16.0 * v[i - 1] - v[i - 2]) / (12.0 * h * h);
            let d1 = (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
            (i, d2 + (n - 1.0) / grid[i] * d1)
        })
        .collect()
}

#[test]
fn stages_invert_the_laplacian() {
    for m in 1..=3u32 {
        let f = RadialProfile::from_fn(m, 1.0, 4001, |r| 1.0 / (1.0 + r * r) + r.powi(4)).unwrap();
        let stages = navier_solve_stages(&f, m).unwrap();
        assert_eq!(stages.len(), m as usize + 1);
        let mut worst: f64 = 0.0;
        for j in 0..m as usize {
            let prev = &stages[j].values;
            for (i, lap) in fd_laplacian(&f.grid, &stages[j + 1].values, 2.0 * m as f64) {
                worst = worst.max((-lap - prev[i]).abs() / prev[i].abs().max(1e-3));
            }
            assert!(stages[j + 1].values.last().unwrap().abs() < 1e-15);
        }
        assert!(worst < 1e-6, "m={m}: {worst}");
    }
}

#[test]
fn constant_source_in_the_plane() {
    let f = RadialProfile::from_fn(1, 1.0, 401, |_| 1.0).unwrap();
    let v = navier_solve_radial(&f, 1).unwrap();
    for (r, x) in v.grid.iter().zip(&v.values) {
        assert!((x - (1.0 - r * r) / 4.0).abs() < 1e-13);
    }
    let zero = RadialProfile::from_fn(2, 1.0, 101, |_| 0.0).unwrap();
    assert!(navier_solve_radial(&zero, 2).unwrap().values.iter().all(|&x| x == 0.0));
}

#[test]
fn exponential_integral_of_zero_is_ball_volume() {
    let zero = RadialProfile::from_fn(1, 1.0, 101, |_| 0.0).unwrap();
    assert!((exp_integrability(&zero, 1, 1.0).unwrap().value - PI).abs() < 1e-13);
    let zero = RadialProfile::from_fn(2, 1.0, 101, |_| 0.0).unwrap();
    assert!((exp_integrability(&zero, 2, 0.3).unwrap().value - PI * PI / 2.0).abs() < 1e-13);
    let huge = RadialProfile::from_fn(1, 1.0, 11, |_| 1e3).unwrap();
    let i = exp_integrability(&huge, 1, 1.0).unwrap();
    assert!(i.overflow && i.value.is_infinite());
    assert!(exp_integrability(&zero, 2, 0.0).is_err());
}

#[test]
fn scaling_covariance() {
    for m in 1..=3u32 {
        let f1 = |r: f64| (-r * r).exp() * (2.0 + r.cos());
        let run = |radius: f64| {
            let f = RadialProfile::from_fn(m, radius, 2001, |r| radius.powi(-2 * m as i32) * f1(r / radius)).unwrap();
            let (rep, v) = a2m_experiment(&f, m).unwrap();
            (f.l1_norm().unwrap(), rep, v)
        };
        let (l1, rep1, v1) = run(1.0);
        for radius in [2.0, 4.0] {
            let (lr, rep, v) = run(radius);
            assert!((lr / l1 - 1.0).abs() < 1e-12);
            for (a, b) in v.values.iter().zip(&v1.values) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-3));
            }
            let ratio = rep.integral.value / (radius.powi(2 * m as i32) * rep1.integral.value);
            assert!((ratio - 1.0).abs() < 1e-8, "m={m} R={radius}: {ratio}");
        }
    }
}

#[test]
fn integral_stays_below_bound() {
    for m in 1..=3u32 {
        let f = RadialProfile::from_fn(m, 1.5, 1001, |r| 3.0 * (1.0 - r / 1.5).powi(2) + 0.1).unwrap();
        let (rep, _) = a2m_experiment(&f, m).unwrap();
        assert!(rep.nonnegative && rep.min_stage_value >= 0.0);
        assert!(!rep.integral.overflow);
        assert!(rep.integral.value <= rep.bound, "m={m}: {} > {}", rep.integral.value, rep.bound);
    }
}

#[test]
fn profile_validation_and_csv() {
    assert!(RadialProfile::new(vec![0.0, 0.5, 0.4], vec![0.0; 3], 1).is_err());
    assert!(RadialProfile::new(vec![], vec![], 1).is_err());
    assert!(RadialProfile::new(vec![0.1, 0.5], vec![0.0; 2], 1).is_err());
    let f = RadialProfile::from_fn(1, 1.0, 3, |r| r).unwrap();
    let csv = f.to_csv();
    assert_eq!(csv.lines().next(), Some("r,value"));
    assert_eq!(csv.lines().count(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nonnegative_sources_give_nonnegative_stages(
        m in 1u32..4,
        a in 0.0f64..5.0,
        b in 0.0f64..5.0,
        k in 1.0f64..8.0,
        radius in 0.2f64..3.0,
    ) {
        let f = RadialProfile::from_fn(m, radius, 301, |r| a + b * (k * r).sin().powi(2)).unwrap();
        for stage in navier_solve_stages(&f, m).unwrap() {
            prop_assert!(stage.values.iter().all(|&x| x >= -1e-15 * (a + b) * radius.powi(2 * m as i32)));
        }
    }
}
