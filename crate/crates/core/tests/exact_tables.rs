use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use polyliouville::exactconst::*;
use proptest::prelude::*;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

#[test]
fn gamma_identity_holds_up_to_twelve() {
    for m in 1..=12 {
        assert!(verify_gamma_identity(m), "m={m}");
    }
}

#[test]
fn table_examples() {
    let t = constant_table(1).unwrap();
    assert_eq!(t.gamma_m, PiRational::new(q(2, 1), 1));
    assert_eq!(t.omega_n, PiRational::new(q(2, 1), 1));
    assert_eq!(t.vol_sphere_2m, PiRational::new(q(4, 1), 1));

    let t = constant_table(2).unwrap();
    assert_eq!(t.gamma_m, PiRational::new(q(8, 1), 2));
    assert_eq!(t.omega_n, PiRational::new(q(2, 1), 2));
    assert_eq!(t.vol_sphere_2m, PiRational::new(q(8, 3), 2));
    assert_eq!(t.pizzetti_c[1], PiRational::rational(q(1, 12)));
    assert!(constant_table(0).is_err());
}

#[test]
fn sphere_volume_matches_gamma_function_formula() {
    // |S^{k}| = 2 π^{(k+1)/2} / Γ((k+1)/2), evaluated independently in floating point
    fn gamma_half_integer(twice: u32) -> f64 {
        // Γ(twice/2)
        if twice % 2 == 0 {
            (1..twice / 2).map(|k| k as f64).product()
        } else {
            let mut g = std::f64::consts::PI.sqrt();
            let mut x = 0.5;
            while (2.0 * x) as u32 != twice {
                g *= x;
                x += 1.0;
            }
            g
        }
    }
    for m in 1..=8u32 {
        let t = constant_table(m).unwrap();
        let k = 2 * m;
        let s2m = 2.0 * std::f64::consts::PI.powf((k + 1) as f64 / 2.0) / gamma_half_integer(k + 1);
        let s2m1 = 2.0 * std::f64::consts::PI.powf(k as f64 / 2.0) / gamma_half_integer(k);
        assert!((t.vol_sphere_2m.to_f64() / s2m - 1.0).abs() < 1e-13, "m={m}");
        assert!((t.omega_n.to_f64() / s2m1 - 1.0).abs() < 1e-13, "m={m}");
    }
}

#[test]
fn first_mean_value_coefficient_against_moment_quadrature() {
    // average of |x|² over the unit ball of R^4 is 2/3 = c_1 · Δ|x|²
    let c1 = pizzetti_coefficient(4, 1).to_f64().unwrap();
    let gl = polyliouville::quad::GaussLegendre::new(20);
    let avg = gl.integrate(0.0, 1.0, |r| r * r * r.powi(3)) / gl.integrate(0.0, 1.0, |r| r.powi(3));
    assert!((avg - 2.0 / 3.0).abs() < 1e-14);
    assert!((c1 * 8.0 - avg).abs() < 1e-14);
}

#[test]
fn laplog_examples() {
    assert!((laplog_value(2, 1, 1.0).unwrap() - 2.0).abs() < 1e-15);
    assert!((laplog_value(3, 2, 2.0).unwrap() - 1.0).abs() < 1e-15);
    for m in 2..=8u32 {
        let expect = BigRational::from_integer(
            BigInt::from(2).pow(2 * m - 3) * factorial(m - 2) * factorial(m - 1),
        );
        assert_eq!(laplog_coefficient(m, m - 1).unwrap(), expect, "m={m}");
    }
    assert!(laplog_value(2, 2, 1.0).is_err());
    assert!(laplog_value(2, 1, 0.0).is_err());
    assert!(laplog_value(2, 0, 1.0).is_err());
}

/// Fourth-order central differences of the radial Laplacian
/// `f'' + (n-1) f'/r` applied `j` times to `log(1/r)`.
fn fd_iterated_laplacian(n: u32, j: u32, r: f64) -> f64 {
    let h = 1e-2;
    fn lap(f: &dyn Fn(f64) -> f64, n: u32, r: f64, h: f64) -> f64 {
        let d2 = (-f(r + 2.0 * h) + 16.0 * f(r + h) - 30.0 * f(r) + 16.0 * f(r - h) - f(r - 2.0 * h)) / (12.0 * h * h);
        let d1 = (-f(r + 2.0 * h) + 8.0 * f(r + h) - 8.0 * f(r - h) + f(r - 2.0 * h)) / (12.0 * h);
        d2 + (n as f64 - 1.0) / r * d1
    }
    let mut f: Box<dyn Fn(f64) -> f64> = Box::new(|x: f64| -x.ln());
    for _ in 0..j {
        let g = f;
        f = Box::new(move |x| -lap(&*g, n, x, h));
    }
    f(r)
}

#[test]
fn laplog_matches_finite_differences() {
    // m = 1 has no j in 1..m-1; check the harmonic case instead
    assert!(fd_iterated_laplacian(2, 1, 1.0).abs() < 1e-6);
    let m = 2;
    let fd = fd_iterated_laplacian(2 * m, 1, 1.0);
    let exact = laplog_value(m, 1, 1.0).unwrap();
    assert!((fd / exact - 1.0).abs() < 1e-4, "{fd} vs {exact}");
}

#[test]
fn listing_format() {
    let listing = constant_table(2).unwrap().to_listing();
    assert!(listing.contains("gamma_m = 8 * pi^2 ~ 78.9568352087148689506759279990"), "{listing}");
    assert!(listing.lines().all(|l| l.contains(" = ") && l.contains(" ~ ")));
}

proptest! {
    #[test]
    fn mean_value_coefficients_positive(n in 1u32..12, i in 0u32..10) {
        prop_assert!(pizzetti_coefficient(n, i).is_positive());
    }

    #[test]
    fn laplog_coefficients_positive(m in 2u32..10, j in 1u32..9) {
        prop_assume!(j < m);
        prop_assert!(laplog_coefficient(m, j).unwrap().is_positive());
    }

    #[test]
    fn pi_rational_field_laws(a in -50i64..50, b in 1i64..50, c in -50i64..50, d in 1i64..50, k in -3i32..4) {
        let x = PiRational::new(q(a, b), k);
        let y = PiRational::new(q(c, d), k);
        let s = x.checked_add(&y).unwrap();
        prop_assert_eq!(s.checked_sub(&y).unwrap(), x.clone());
        if !y.is_zero() {
            let prod = x.clone() * y.clone();
            prop_assert_eq!(prod.checked_div(&y).unwrap(), x.clone());
        }
        prop_assert_eq!(x.powi(2), x.clone() * x.clone());
        prop_assert!(x.coeff().denom() > &BigInt::zero());
    }

    #[test]
    fn decimal_matches_float(a in 1i64..1000, b in 1i64..1000, k in 0i32..5) {
        let x = PiRational::new(q(a, b), k);
        let direct = a as f64 / b as f64 * std::f64::consts::PI.powi(k);
        prop_assert!((x.to_f64() / direct - 1.0).abs() < 1e-14);
        prop_assert!(x.powi(0) == PiRational::rational(BigRational::one()));
    }
}
