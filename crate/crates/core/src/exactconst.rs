//! Closed-form constants in exact `q·π^k` arithmetic.
//!
//! Everything here is exact; floating point only appears in
//! [`PiRational::to_f64`] and [`PiRational::to_decimal`].

use std::fmt;
use std::ops::{Mul, Neg};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// π to 118 decimal places.
const PI_DIGITS: &str = "31415926535897932384626433832795028841971693993751\
                         05820974944592307816406286208998628034825342117067\
                         9821480865132823066";

fn pi_scaled() -> (BigInt, u32) {
    let digits: BigInt = PI_DIGITS.parse().expect("pi digits");
    (digits, (PI_DIGITS.len() - 1) as u32)
}

/// Exact number `coeff · π^pi_power`.
///
/// The rational part is always kept in lowest terms with a positive
/// denominator (guaranteed by [`BigRational`]). Zero is normalised to
/// `pi_power = 0` so that equality stays structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiRational {
    coeff: BigRational,
    pi_power: i32,
}

impl PiRational {
    pub fn new(coeff: BigRational, pi_power: i32) -> Self {
        if coeff.is_zero() {
            return Self::zero();
        }
        Self { coeff, pi_power }
    }

    pub fn rational(coeff: BigRational) -> Self {
        Self::new(coeff, 0)
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Self::rational(BigRational::from_integer(n.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::rational(BigRational::new(num.into(), den.into()))
    }

    pub fn zero() -> Self {
        Self { coeff: BigRational::zero(), pi_power: 0 }
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn pi() -> Self {
        Self::new(BigRational::one(), 1)
    }

    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    pub fn numerator(&self) -> &BigInt {
        self.coeff.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.coeff.denom()
    }

    pub fn pi_power(&self) -> i32 {
        self.pi_power
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.coeff.is_positive()
    }

    /// Sum of two values; only defined when both carry the same power of π
    /// (zero is compatible with everything).
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.pi_power != other.pi_power {
            return Err(Error::PiPowerMismatch(self.pi_power, other.pi_power));
        }
        Ok(Self::new(&self.coeff + &other.coeff, self.pi_power))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&-other.clone())
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::new(&self.coeff / &other.coeff, self.pi_power - other.pi_power))
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Self::new(&self.coeff * q, self.pi_power)
    }

    pub fn powi(&self, e: i32) -> Self {
        if e == 0 {
            return Self::one();
        }
        if self.is_zero() {
            assert!(e > 0, "zero to a negative power");
            return Self::zero();
        }
        let c = num_traits::pow(self.coeff.clone(), e.unsigned_abs() as usize);
        let c = if e < 0 { c.recip() } else { c };
        Self::new(c, self.pi_power * e)
    }

    /// Decimal expansion with `sig` significant digits (round half up).
    pub fn to_decimal(&self, sig: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let (pi, digits) = pi_scaled();
        let k = self.pi_power;
        let ten = BigInt::from(10);
        let mut num = self.coeff.numer().abs();
        let mut den = self.coeff.denom().clone();
        if k >= 0 {
            num *= num_traits::pow(pi, k as usize);
            den *= num_traits::pow(ten.clone(), digits as usize * k as usize);
        } else {
            let kk = (-k) as usize;
            num *= num_traits::pow(ten.clone(), digits as usize * kk);
            den *= num_traits::pow(pi, kk);
        }
        // find exponent so that num/den = d.ddd × 10^exp
        let mut exp: i64 = num.to_string().len() as i64 - den.to_string().len() as i64;
        let scaled = |e: i64| -> BigInt {
            let shift = sig as i64 - 1 - e;
            if shift >= 0 {
                &num * num_traits::pow(ten.clone(), shift as usize) / &den
            } else {
                &num / (&den * num_traits::pow(ten.clone(), (-shift) as usize))
            }
        };
        let lower = num_traits::pow(ten.clone(), sig - 1);
        let upper = num_traits::pow(ten.clone(), sig);
        loop {
            let s = scaled(exp);
            if s < lower {
                exp -= 1;
            } else if s >= upper {
                exp += 1;
            } else {
                break;
            }
        }
        // one extra digit for rounding
        let shift = sig as i64 - exp;
        let extended = if shift >= 0 {
            &num * num_traits::pow(ten.clone(), shift as usize) / &den
        } else {
            &num / (&den * num_traits::pow(ten.clone(), (-shift) as usize))
        };
        let mut mantissa = (&extended + BigInt::from(5)) / &ten;
        if mantissa >= upper {
            mantissa /= &ten;
            exp += 1;
        }
        let digits_str = mantissa.to_string();
        let sign = if self.coeff.is_negative() { "-" } else { "" };
        format_decimal(sign, &digits_str, exp)
    }

    /// Nearest double, obtained by rounding a 40-digit decimal expansion.
    pub fn to_f64(&self) -> f64 {
        self.to_decimal(40).parse().expect("decimal expansion parses")
    }
}

fn format_decimal(sign: &str, digits: &str, exp: i64) -> String {
    let sig = digits.len() as i64;
    if (-6..30).contains(&exp) {
        if exp >= 0 {
            let int_len = (exp + 1) as usize;
            if int_len >= digits.len() {
                format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
            } else {
                format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
            }
        } else {
            format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
        }
    } else {
        let frac = if sig > 1 { format!(".{}", &digits[1..]) } else { String::new() };
        format!("{sign}{}{frac}e{exp}", &digits[..1])
    }
}

impl Mul for PiRational {
    type Output = PiRational;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl Mul for &PiRational {
    type Output = PiRational;
    fn mul(self, rhs: Self) -> PiRational {
        PiRational::new(&self.coeff * &rhs.coeff, self.pi_power + rhs.pi_power)
    }
}

impl Neg for PiRational {
    type Output = PiRational;
    fn neg(self) -> Self {
        PiRational::new(-self.coeff, self.pi_power)
    }
}

/// `p/q * pi^k`; the π factor is omitted when `k = 0` and the denominator when `q = 1`.
impl fmt::Display for PiRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff.is_integer() {
            write!(f, "{}", self.coeff.numer())?;
        } else {
            write!(f, "{}/{}", self.coeff.numer(), self.coeff.denom())?;
        }
        match self.pi_power {
            0 => Ok(()),
            k => write!(f, " * pi^{k}"),
        }
    }
}

pub fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `k!!` with the convention `0!! = (-1)!! = 1`.
pub fn double_factorial(k: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut i = k;
    while i > 1 {
        acc *= BigInt::from(i);
        i -= 2;
    }
    acc
}

fn big(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Mean-value coefficient `c_i` in dimension `n`:
/// `c_0 = 1`, `c_i = n/(n+2i) · (n-2)!! / ((2i)!! (2i+n-2)!!)`.
pub fn pizzetti_coefficient(n: u32, i: u32) -> BigRational {
    if i == 0 {
        return BigRational::one();
    }
    let (n, i) = (n as i64, i as i64);
    BigRational::new(BigInt::from(n), BigInt::from(n + 2 * i))
        * BigRational::new(
            double_factorial(n - 2),
            double_factorial(2 * i) * double_factorial(2 * i + n - 2),
        )
}

/// Coefficient of `r^{-2j}` in `(-Δ)^j log(1/r)` on `R^{2m}`, valid for `1 ≤ j ≤ m-1`.
pub fn laplog_coefficient(m: u32, j: u32) -> Result<BigRational> {
    if m < 1 {
        return Err(Error::InvalidOrder(m));
    }
    if j < 1 || j + 1 > m {
        return Err(Error::IndexOutOfRange { index: j as usize, range: format!("1..={}", m as i64 - 1) });
    }
    let num = num_traits::pow(BigInt::from(2), (2 * j - 1) as usize) * factorial(j - 1) * factorial(m - 1);
    Ok(BigRational::new(num, factorial(m - j - 1)))
}

/// `(-Δ)^j log(1/r)` evaluated at radius `r`.
pub fn laplog_value(m: u32, j: u32, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let c = laplog_coefficient(m, j)?.to_f64().expect("finite coefficient");
    Ok(c * r.powi(-2 * j as i32))
}

/// All closed-form constants attached to a given order `m` (dimension `n = 2m`).
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantTable {
    pub m: u32,
    pub n: u32,
    /// `|S^{2m-1}| = (2π)^m / (2m-2)!!`
    pub omega_n: PiRational,
    /// `|S^{2m}| = 2 (2π)^m / (2m-1)!!`
    pub vol_sphere_2m: PiRational,
    /// `γ_m = ω_{2m} 2^{2m-2} ((m-1)!)²`, so that `(1/γ_m) log(1/|x|)` is the
    /// fundamental solution of `(-Δ)^m`.
    pub gamma_m: PiRational,
    /// `c_0 ..= c_m` in dimension `n`
    pub pizzetti_c: Vec<PiRational>,
    /// `laplog_coeff[j-1]` for `j = 1..m-1`
    pub laplog_coeff: Vec<BigRational>,
    /// `(-1)^m`: `Δ^m = σ_m (-Δ)^m`
    pub sigma_m: i32,
}

impl ConstantTable {
    pub fn new(m: u32) -> Result<Self> {
        Self::with_pizzetti_len(m, m as usize + 1)
    }

    /// Same as [`ConstantTable::new`] with `len` mean-value coefficients.
    pub fn with_pizzetti_len(m: u32, len: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidOrder(m));
        }
        let n = 2 * m;
        let two_pi_m = PiRational::new(big(num_traits::pow(BigInt::from(2), m as usize)), m as i32);
        let omega_n = two_pi_m.scale(&BigRational::new(BigInt::one(), double_factorial(2 * m as i64 - 2)));
        let vol_sphere_2m =
            two_pi_m.scale(&BigRational::new(BigInt::from(2), double_factorial(2 * m as i64 - 1)));
        let fm1 = factorial(m - 1);
        let gamma_m =
            omega_n.scale(&big(num_traits::pow(BigInt::from(2), 2 * m as usize - 2) * &fm1 * &fm1));
        let pizzetti_c = (0..len as u32)
            .map(|i| PiRational::rational(pizzetti_coefficient(n, i)))
            .collect();
        let laplog_coeff = (1..m).map(|j| laplog_coefficient(m, j)).collect::<Result<_>>()?;
        Ok(Self {
            m,
            n,
            omega_n,
            vol_sphere_2m,
            gamma_m,
            pizzetti_c,
            laplog_coeff,
            sigma_m: if m % 2 == 0 { 1 } else { -1 },
        })
    }

    /// `(2m-1)!`
    pub fn nonlinearity_factor(&self) -> BigInt {
        factorial(2 * self.m - 1)
    }

    pub fn laplog(&self, j: u32) -> Result<&BigRational> {
        if j < 1 || j >= self.m {
            return Err(Error::IndexOutOfRange { index: j as usize, range: format!("1..={}", self.m as i64 - 1) });
        }
        Ok(&self.laplog_coeff[j as usize - 1])
    }

    /// Named entries in export order.
    pub fn entries(&self) -> Vec<(String, PiRational)> {
        let mut out = vec![
            ("m".to_string(), PiRational::integer(self.m)),
            ("n".to_string(), PiRational::integer(self.n)),
            ("omega_n".to_string(), self.omega_n.clone()),
            ("vol_sphere_2m".to_string(), self.vol_sphere_2m.clone()),
            ("gamma_m".to_string(), self.gamma_m.clone()),
            ("sigma_m".to_string(), PiRational::integer(self.sigma_m)),
        ];
        for (i, c) in self.pizzetti_c.iter().enumerate() {
            out.push((format!("pizzetti_c_{i}"), c.clone()));
        }
        for (j, c) in self.laplog_coeff.iter().enumerate() {
            out.push((format!("laplog_coeff_{}", j + 1), PiRational::rational(c.clone())));
        }
        out
    }

    /// Key/value listing, one constant per line: `name = exact ~ decimal(30)`.
    pub fn to_listing(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(name, v)| format!("{name} = {v} ~ {}\n", v.to_decimal(30)))
            .collect()
    }
}

pub fn constant_table(m: u32) -> Result<ConstantTable> {
    ConstantTable::new(m)
}

/// `(2m-1)! · |S^{2m}| == 2 γ_m`, checked exactly.
pub fn verify_gamma_identity(m: u32) -> bool {
    let Ok(t) = ConstantTable::new(m) else { return false };
    let lhs = t.vol_sphere_2m.scale(&big(t.nonlinearity_factor()));
    let rhs = t.gamma_m.scale(&big(2));
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(num: i64, den: i64, k: i32) -> PiRational {
        PiRational::new(BigRational::new(num.into(), den.into()), k)
    }

    #[test]
    fn double_factorial_conventions() {
        assert_eq!(double_factorial(0), BigInt::one());
        assert_eq!(double_factorial(-1), BigInt::one());
        assert_eq!(double_factorial(5), BigInt::from(15));
        assert_eq!(double_factorial(6), BigInt::from(48));
    }

    #[test]
    fn small_tables() {
        let t1 = constant_table(1).unwrap();
        assert_eq!(t1.gamma_m, pr(2, 1, 1));
        assert_eq!(t1.omega_n, pr(2, 1, 1));
        assert_eq!(t1.vol_sphere_2m, pr(4, 1, 1));
        assert_eq!(t1.sigma_m, -1);
        assert!(t1.laplog_coeff.is_empty());

        let t2 = constant_table(2).unwrap();
        assert_eq!(t2.gamma_m, pr(8, 1, 2));
        assert_eq!(t2.omega_n, pr(2, 1, 2));
        assert_eq!(t2.vol_sphere_2m, pr(8, 3, 2));
        assert_eq!(t2.pizzetti_c[0], PiRational::one());
        assert_eq!(t2.pizzetti_c[1], pr(1, 12, 0));
        assert_eq!(t2.sigma_m, 1);
    }

    #[test]
    fn rejects_order_zero() {
        assert_eq!(constant_table(0), Err(Error::InvalidOrder(0)));
    }

    #[test]
    fn first_mean_value_coefficient_closed_form() {
        for n in 1..20u32 {
            assert_eq!(pizzetti_coefficient(n, 1), BigRational::new(1.into(), (2 * (n + 2)).into()));
        }
    }

    #[test]
    fn gamma_identity_up_to_twelve() {
        for m in 1..=12 {
            assert!(verify_gamma_identity(m), "m = {m}");
        }
        assert!(!verify_gamma_identity(0));
    }

    #[test]
    fn laplog_examples() {
        assert_eq!(laplog_value(2, 1, 1.0).unwrap(), 2.0);
        assert!((laplog_value(3, 2, 2.0).unwrap() - 1.0).abs() < 1e-15);
        for m in 2..10u32 {
            let expect = num_traits::pow(BigInt::from(2), 2 * m as usize - 3) * factorial(m - 2) * factorial(m - 1);
            assert_eq!(laplog_coefficient(m, m - 1).unwrap(), big(expect));
        }
        assert!(laplog_value(2, 0, 1.0).is_err());
        assert!(laplog_value(2, 2, 1.0).is_err());
        assert!(laplog_value(3, 1, 0.0).is_err());
    }

    #[test]
    fn laplog_recursion_matches_single_step_rule() {
        // -Δ log(1/r) = 2(m-1)/r², -Δ r^{-2j} = 4j(m-1-j) r^{-2j-2}
        for m in 2..9u32 {
            let mut c = big(2 * (m as i64 - 1));
            assert_eq!(laplog_coefficient(m, 1).unwrap(), c);
            for j in 1..m - 1 {
                c *= big(4 * j as i64 * (m as i64 - 1 - j as i64));
                assert_eq!(laplog_coefficient(m, j + 1).unwrap(), c);
            }
        }
    }

    #[test]
    fn fundamental_solution_flux_is_one() {
        // flux of -∂_r (-Δ)^{m-1} (1/γ) log(1/r) through any sphere equals 1
        for m in 2..10u32 {
            let t = constant_table(m).unwrap();
            let flux = t.omega_n.scale(&(big(2 * m as i64 - 2) * t.laplog(m - 1).unwrap()));
            assert_eq!(flux, t.gamma_m);
        }
        // m = 1: flux of -∂_r log(1/r) = 1/r over a circle is 2π = γ_1
        let t = constant_table(1).unwrap();
        assert_eq!(t.omega_n, t.gamma_m);
    }

    #[test]
    fn addition_requires_equal_pi_power() {
        let a = pr(1, 2, 1);
        let b = pr(1, 3, 1);
        assert_eq!(a.checked_add(&b).unwrap(), pr(5, 6, 1));
        assert_eq!(a.checked_add(&pr(1, 1, 2)), Err(Error::PiPowerMismatch(1, 2)));
        assert_eq!(a.checked_add(&PiRational::zero()).unwrap(), a);
        assert_eq!(a.checked_sub(&a).unwrap(), PiRational::zero());
        assert_eq!(a.checked_div(&PiRational::zero()), Err(Error::DivisionByZero));
    }

    #[test]
    fn display_and_decimal() {
        assert_eq!(pr(8, 1, 2).to_string(), "8 * pi^2");
        assert_eq!(pr(1, 12, 0).to_string(), "1/12");
        assert_eq!(pr(-1, 8, -2).to_string(), "-1/8 * pi^-2");
        assert_eq!(PiRational::pi().to_decimal(30), "3.14159265358979323846264338328");
        assert_eq!(pr(8, 1, 2).to_decimal(30), "78.9568352087148689506759279990");
        assert_eq!(pr(1, 12, 0).to_decimal(5), "0.083333");
        assert_eq!(pr(2, 3, 0).to_decimal(3), "0.667");
        assert_eq!(PiRational::integer(-120).to_decimal(5), "-120.00");
        assert_eq!(pr(-1, 8, -2).to_f64(), -1.0 / (8.0 * std::f64::consts::PI * std::f64::consts::PI));
        assert_eq!(PiRational::pi().to_f64(), std::f64::consts::PI);
    }

    #[test]
    fn powers() {
        let p = pr(2, 3, 1);
        assert_eq!(p.powi(2), pr(4, 9, 2));
        assert_eq!(p.powi(-1), pr(3, 2, -1));
        assert_eq!(p.powi(0), PiRational::one());
    }

    #[test]
    fn listing_contains_gamma() {
        let s = constant_table(2).unwrap().to_listing();
        assert!(s.contains("gamma_m = 8 * pi^2 ~ 78.95683520871486895"), "{s}");
        assert!(s.contains("pizzetti_c_1 = 1/12"));
    }
}
