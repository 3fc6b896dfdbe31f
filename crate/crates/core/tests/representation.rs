use polyliouville::classify::analyze;
use polyliouville::quad::linspace;
use polyliouville::represent::*;
use polyliouville::shooter::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn standard() -> &'static RadialTrajectory {
    static T: OnceLock<RadialTrajectory> = OnceLock::new();
    T.get_or_init(|| shoot(&ShootingConfig::standard(2, 1.0, 1000.0).unwrap()).unwrap().0)
}

fn nonstandard() -> &'static RadialTrajectory {
    static T: OnceLock<RadialTrajectory> = OnceLock::new();
    T.get_or_init(|| {
        let cfg = ShootingConfig::new(2, InitialData::EvenDerivatives(vec![2f64.ln(), -3.0]), 1000.0);
        shoot(&cfg).unwrap().0
    })
}

/// Composite Simpson in θ against `sin^{n-2}θ`, normalised; used off the diagonal only.
fn simpson_average(n: u32, r: f64, s: f64, f: impl Fn(f64) -> f64) -> f64 {
    let steps = 20_000;
    let h = PI / steps as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=steps {
        let t = i as f64 * h;
        let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let d = (r * r + s * s - 2.0 * r * s * t.cos()).sqrt();
        let mu = t.sin().powi(n as i32 - 2);
        num += w * mu * f(d);
        den += w * mu;
    }
    num / den
}

#[test]
fn kernel_trivial_cases() {
    assert_eq!(kernel_avg(0.0, 2.0, 2, 0).unwrap(), 0.0);
    assert!((kernel_avg(0.0, 2.0, 3, 1).unwrap() - 0.25).abs() < 1e-15);
    assert!((kernel_avg(0.0, 2.0, 3, 2).unwrap() - 1.0 / 16.0).abs() < 1e-15);
}

#[test]
fn kernel_planar_log_closed_form() {
    for (r, s) in [(0.3, 1.0), (1.0, 0.3), (2.0, 5.0), (7.0, 0.01), (1.0, 1.2)] {
        let got = kernel_avg(r, s, 1, 0).unwrap();
        let exact = (s / f64::max(r, s)).ln();
        assert!((got - exact).abs() < 1e-10, "r={r} s={s}: {got} vs {exact}");
    }
}

#[test]
fn kernel_against_simpson_in_four_and_six_dimensions() {
    for (m, r, s) in [(2u32, 0.5, 2.0), (2, 3.0, 1.0), (3, 0.8, 1.7), (3, 4.0, 2.5)] {
        let n = 2 * m;
        let log = simpson_average(n, r, s, |d| (s / d).ln());
        assert!((kernel_avg(r, s, m, 0).unwrap() - log).abs() < 1e-10, "m={m}");
        for j in 1..m {
            let pw = simpson_average(n, r, s, |d| d.powi(-2 * j as i32));
            let got = kernel_avg(r, s, m, j).unwrap();
            assert!((got / pw - 1.0).abs() < 1e-10, "m={m} j={j}");
        }
    }
}

#[test]
fn newtonian_average_near_the_diagonal() {
    // the average of |x-y|^{2-n} over |y| = s is max(r, s)^{2-n}
    for (m, r, s) in [(2u32, 1.0, 1.001), (2, 1.0, 0.99999), (3, 5.0, 5.01)] {
        let got = kernel_avg(r, s, m, m - 1).unwrap();
        let exact = f64::max(r, s).powi(2 - 2 * m as i32);
        assert!((got / exact - 1.0).abs() < 1e-9, "m={m} r={r} s={s}: {got}");
    }
}

#[test]
fn standard_solution_differs_from_v_by_a_constant() {
    let traj = standard();
    let radii = linspace(0.0, 20.0, 41);
    let v = compute_v(traj, &radii).unwrap();
    let diffs: Vec<f64> = u_minus_v(traj, &v).into_iter().map(|x| x.1).collect();
    let mut sorted = diffs.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    assert!(diffs.iter().all(|d| (d - median).abs() <= 1e-2));
    assert!(diffs.iter().all(|d| (d - median).abs() <= 1e-6), "tighter than required");
    assert!(v.err_bar.iter().all(|e| *e < 1e-6));
}

#[test]
fn logarithmic_growth_of_v() {
    let traj = standard();
    let alpha = traj.alpha_final();
    let v = compute_v(traj, &[4.0, 10.0, 100.0, 500.0, 1000.0]).unwrap();
    let at = |r: f64| v.value_at(r).unwrap();
    assert!((at(1000.0) / 1000f64.ln() + 2.0).abs() < 0.1);
    let slope = (at(1000.0) - at(500.0)) / 2f64.ln();
    assert!((slope / (-2.0 * alpha) - 1.0).abs() < 0.05, "{slope}");
    let c = at(4.0) + 2.0 * alpha * 4f64.ln();
    for r in [10.0, 100.0, 500.0, 1000.0] {
        assert!(at(r) >= -2.0 * alpha * r.ln() + c - 1e-9, "r={r}");
    }
}

#[test]
fn rescaling_identity() {
    let traj = standard();
    let radii = linspace(0.0, 20.0, 11);
    let same = rescale_check(traj, 1.0, &radii).unwrap();
    assert!(same.max_deviation < 1e-12);
    let rep = rescale_check(traj, 2.0, &radii).unwrap();
    assert!(rep.max_deviation <= 1e-3, "{}", rep.max_deviation);
    assert!((rep.constant_shift - 2f64.ln()).abs() < 1e-6);
    assert!(rep.constant_spread < 1e-6);
    assert!(rescale_check(traj, -1.0, &radii).is_err());
}

#[test]
fn laplacian_of_v_matches_solver_for_standard() {
    let traj = standard();
    // probe at grid nodes so the solver values need no interpolation
    let idx: Vec<usize> = [200.0, 500.0, 1000.0].iter().map(|r| traj.grid.partition_point(|&x| x < *r)).collect();
    let radii: Vec<f64> = idx.iter().map(|&k| traj.grid[k]).collect();
    let lv = compute_lap_v(traj, 1, &radii).unwrap();
    for (i, r) in radii.iter().enumerate() {
        let exact = standard_solution(2, 1.0, *r).unwrap().laps[1];
        assert!((lv.values[i] / exact - 1.0).abs() < 1e-6, "r={r}");
        let w1 = traj.w[1][idx[i]];
        assert!((lv.values[i] - w1).abs() < 1e-4 * w1.abs(), "r={r}: {} vs {w1}", lv.values[i]);
    }
    assert!(lv.values[2].abs() < lv.values[0].abs());
    assert!(compute_lap_v(traj, 2, &radii).is_err());
}

#[test]
fn far_field_of_a_concentrated_density() {
    // λ = 50 puts almost all of e^{4u} within r < 1; then Δv ≈ -2 L_1 α r^{-2} with L_1 = 2
    let (traj, _) = shoot(&ShootingConfig::standard(2, 50.0, 1000.0).unwrap()).unwrap();
    let lv = compute_lap_v(&traj, 1, &[100.0, 200.0]).unwrap();
    let slope = (lv.values[1] / lv.values[0]).ln() / 2f64.ln();
    assert!((slope + 2.0).abs() < 1e-3, "{slope}");
    let alpha = traj.alpha_final();
    assert!((lv.values[0] * 1e4 / (-4.0 * alpha) - 1.0).abs() < 1e-3);
}

#[test]
fn polynomial_part_accounts_for_laplacian_gap() {
    // w_1 - Δv = Δp on the non-standard run
    let traj = nonstandard();
    let radii = default_fit_radii(traj, 41);
    let v = compute_v(traj, &radii).unwrap();
    let fit = fit_even_polynomial(&u_minus_v(traj, &v), 2).unwrap();
    assert_eq!(fit.inferred_degree, 2);
    assert!(fit.leading_coefficient() < 0.0);
    let probe = [300.0, 600.0, 900.0];
    let lv = compute_lap_v(traj, 1, &probe).unwrap();
    for (i, r) in probe.iter().enumerate() {
        let k = traj.grid.partition_point(|&x| x < *r);
        let w1 = traj.w[1][k] + (r - traj.grid[k]) * traj.p[1][k];
        let dp = fit.laplacian(4, *r);
        assert!((w1 - lv.values[i] - dp).abs() < 1e-3 * dp.abs(), "r={r}: {w1} {} {dp}", lv.values[i]);
    }
}

#[test]
fn doubling_angular_panels_stays_within_error_bar() {
    for traj in [standard(), nonstandard()] {
        let radii = [0.0, 0.5, 1.0, 3.0, 20.0, 400.0, 999.0];
        let base = compute_v(traj, &radii).unwrap();
        let fine = compute_v_with(traj, &radii, &KernelCache::with_panels(2, 16).unwrap()).unwrap();
        for i in 0..radii.len() {
            let d = (base.values[i] - fine.values[i]).abs();
            assert!(d <= base.err_bar[i], "r={}: {d} > {}", radii[i], base.err_bar[i]);
        }
    }
}

#[test]
fn refuses_unconverged_trajectories() {
    let (short, _) = shoot(&ShootingConfig::new(2, InitialData::EvenDerivatives(vec![2f64.ln(), -1.6]), 50.0)).unwrap();
    assert_ne!(short.termination, Termination::ReachedEnd);
    assert!(compute_v(&short, &[0.5]).is_err());
    assert!(compute_v(standard(), &[2000.0]).is_err());
    assert!(KernelCache::with_panels(2, 4).is_err());
}

#[test]
fn fit_examples() {
    let rs = linspace(0.0, 10.0, 21);
    let f = fit_even_polynomial(&rs.iter().map(|&r| (r, 3.0 - 2.0 * r * r)).collect::<Vec<_>>(), 2).unwrap();
    assert!((f.coefficients[0] - 3.0).abs() < 1e-12 && (f.coefficients[1] + 2.0).abs() < 1e-12);
    assert!(f.residual < 1e-10);
    assert_eq!(f.inferred_degree, 2);
    let f = fit_even_polynomial(&rs.iter().map(|&r| (r, 1.7)).collect::<Vec<_>>(), 4).unwrap();
    assert_eq!(f.inferred_degree, 0);
    assert!(fit_even_polynomial(&[(1.0, 1.0); 10], 2).is_err());
    assert!(fit_even_polynomial(&[(1.0, 1.0), (2.0, 1.0)], 2).is_err());
    assert!(fit_even_polynomial(&[(1.0, 1.0), (2.0, 1.0), (3.0, 0.0)], 3).is_err());
    let j = f.to_json();
    for key in ["coefficients", "residual", "inferred_degree"] {
        assert!(j.get(key).is_some());
    }
}

#[test]
fn fitted_degree_is_even_and_bounded() {
    let mut m3 = ShootingConfig::new(3, InitialData::EvenDerivatives(vec![2f64.ln(), -2.0, 10.0]), 200.0);
    m3.rel_tol = 1e-12;
    m3.abs_tol = 1e-14;
    let configs = [
        ShootingConfig::standard(2, 1.0, 1000.0).unwrap(),
        ShootingConfig::new(2, InitialData::EvenDerivatives(vec![0.2, -2.3]), 1000.0),
        m3,
    ];
    for cfg in configs {
        let a = analyze(&cfg).unwrap();
        let fit = a.fit.unwrap();
        assert!(fit.inferred_degree % 2 == 0 && fit.inferred_degree <= 2 * cfg.m - 2);
        if fit.inferred_degree >= 2 {
            assert!(fit.leading_coefficient() < 0.0);
        }
        assert!(fit.coefficients.iter().all(|c| c.is_finite()));
    }
}

#[test]
fn profile_csv() {
    let v = compute_v(standard(), &[0.0, 1.0]).unwrap();
    let csv = v.to_csv();
    assert_eq!(csv.lines().next(), Some("r,v,err_bar"));
    assert_eq!(csv.lines().count(), 3);
}
