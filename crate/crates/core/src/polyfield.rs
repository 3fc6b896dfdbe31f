//! Exact multivariate polynomials over ℚ and the polyharmonic mean-value
//! expansion
//!
//! ```text
//! avg_{B_R(x0)} h = Σ_{i<m} c_i R^{2i} Δ^i h(x0)      whenever Δ^m h = 0
//! ```
//!
//! All arithmetic is exact, so the expansion can be checked with zero tolerance.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exactconst::{double_factorial, pizzetti_coefficient};

pub type MultiIndex = Vec<u32>;

/// Polynomial in `n` variables with exact rational coefficients.
///
/// Terms live in a `BTreeMap`, so iteration (and the text format) follows
/// the lexicographic order of the exponent vectors. Zero coefficients are
/// never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialND {
    n: usize,
    terms: BTreeMap<MultiIndex, BigRational>,
}

impl PolynomialND {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        Self::monomial(vec![0; n], c)
    }

    pub fn monomial(alpha: MultiIndex, c: BigRational) -> Self {
        let mut p = Self::zero(alpha.len());
        p.add_term(alpha, c);
        p
    }

    /// `x_i`
    pub fn variable(n: usize, i: usize) -> Self {
        let mut alpha = vec![0; n];
        alpha[i] = 1;
        Self::monomial(alpha, BigRational::one())
    }

    /// `|x|^{2k}`
    pub fn radial_power(n: usize, k: u32) -> Self {
        let r2 = (0..n).fold(Self::zero(n), |acc, i| {
            let mut alpha = vec![0; n];
            alpha[i] = 2;
            acc.add(&Self::monomial(alpha, BigRational::one()))
        });
        (0..k).fold(Self::constant(n, BigRational::one()), |acc, _| acc.mul(&r2))
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, alpha: &[u32]) -> BigRational {
        self.terms.get(alpha).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|a| a.iter().sum()).max()
    }

    fn add_term(&mut self, alpha: MultiIndex, c: BigRational) {
        assert_eq!(alpha.len(), self.n, "multi-index length must match dimension");
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.n);
        }
        Self { n: self.n, terms: self.terms.iter().map(|(a, v)| (a.clone(), v * c)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let ab = a.iter().zip(b).map(|(i, j)| i + j).collect();
                out.add_term(ab, x * y);
            }
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (a, c) in &self.terms {
            for i in 0..self.n {
                if a[i] >= 2 {
                    let mut b = a.clone();
                    b[i] -= 2;
                    out.add_term(b, c * BigRational::from_integer(BigInt::from(a[i] * (a[i] - 1))));
                }
            }
        }
        out
    }

    /// `Δ^k P`
    pub fn laplacian_pow(&self, k: u32) -> Self {
        (0..k).fold(self.clone(), |p, _| p.laplacian())
    }

    pub fn evaluate(&self, x: &[BigRational]) -> BigRational {
        assert_eq!(x.len(), self.n);
        self.terms
            .iter()
            .map(|(a, c)| {
                a.iter()
                    .zip(x)
                    .fold(c.clone(), |acc, (&e, xi)| acc * num_traits::pow(xi.clone(), e as usize))
            })
            .fold(BigRational::zero(), |acc, t| acc + t)
    }

    /// `y ↦ P(y + shift)`
    pub fn translate(&self, shift: &[BigRational]) -> Self {
        assert_eq!(shift.len(), self.n);
        let mut out = Self::zero(self.n);
        for (a, c) in &self.terms {
            // expand ∏ (y_i + s_i)^{a_i}
            let mut partial: Vec<(MultiIndex, BigRational)> = vec![(Vec::with_capacity(self.n), c.clone())];
            for (i, &ai) in a.iter().enumerate() {
                let mut next = Vec::with_capacity(partial.len() * (ai as usize + 1));
                for (beta, v) in &partial {
                    for bi in 0..=ai {
                        let w = v
                            * BigRational::from_integer(binomial(BigInt::from(ai), BigInt::from(bi)))
                            * num_traits::pow(shift[i].clone(), (ai - bi) as usize);
                        if w.is_zero() {
                            continue;
                        }
                        let mut b = beta.clone();
                        b.push(bi);
                        next.push((b, w));
                    }
                }
                partial = next;
            }
            for (b, v) in partial {
                out.add_term(b, v);
            }
        }
        out
    }

    /// Homogeneous component of degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| a.iter().sum::<u32>() == d)
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect(),
        }
    }

    /// One term per line: `coeff  e1 e2 ... en`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (a, c) in &self.terms {
            let exps: Vec<String> = a.iter().map(|e| e.to_string()).collect();
            writeln!(s, "{}  {}", c, exps.join(" ")).unwrap();
        }
        s
    }

    /// Parse the one-term-per-line format. Blank lines and lines starting
    /// with `#` are ignored. When `n` is `None` the dimension is inferred from
    /// the first term.
    pub fn from_text(text: &str, n: Option<usize>) -> Result<Self> {
        let mut dim = n;
        let mut out: Option<Self> = n.map(Self::zero);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: lineno + 1, msg };
            let mut fields = line.split_whitespace();
            let coeff_str = fields.next().expect("non-empty line");
            let coeff: BigRational = coeff_str.parse().map_err(|_| err(format!("bad coefficient {coeff_str:?}")))?;
            let alpha: MultiIndex = fields
                .map(|f| f.parse::<u32>().map_err(|_| err(format!("bad exponent {f:?}"))))
                .collect::<Result<_>>()?;
            match dim {
                None => {
                    dim = Some(alpha.len());
                    out = Some(Self::zero(alpha.len()));
                }
                Some(d) if d != alpha.len() => {
                    return Err(err(format!("expected {d} exponents, found {}", alpha.len())));
                }
                _ => {}
            }
            if alpha.is_empty() {
                return Err(err("missing exponents".into()));
            }
            out.as_mut().unwrap().add_term(alpha, coeff);
        }
        out.ok_or(Error::Parse { line: 0, msg: "empty polynomial with unknown dimension".into() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Ball,
    Sphere,
}

/// Exact average `coeff · R^{r_exponent}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentValue {
    pub coeff: BigRational,
    pub r_exponent: u32,
}

impl MomentValue {
    pub fn at_radius(&self, radius: &BigRational) -> BigRational {
        &self.coeff * num_traits::pow(radius.clone(), self.r_exponent as usize)
    }
}

/// Average of `x^alpha` over the ball or sphere of radius `R` centred at 0.
pub fn moment_average(alpha: &[u32], n: usize, domain: Domain) -> MomentValue {
    let total: u32 = alpha.iter().sum();
    let zero = MomentValue { coeff: BigRational::zero(), r_exponent: total };
    if n == 0 || alpha.iter().any(|a| a % 2 == 1) {
        return zero;
    }
    let num = alpha.iter().fold(BigInt::one(), |acc, &a| acc * double_factorial(a as i64 - 1));
    let den = (0..total / 2).fold(BigInt::one(), |acc, l| acc * BigInt::from(n as u32 + 2 * l));
    let mut coeff = BigRational::new(num, den);
    if domain == Domain::Ball {
        coeff *= BigRational::new(BigInt::from(n), BigInt::from(n as u32 + total));
    }
    MomentValue { coeff, r_exponent: total }
}

/// Exact ball average of `P` over `B_R(x0)`.
pub fn ball_average(p: &PolynomialND, x0: &[BigRational], radius: &BigRational) -> BigRational {
    p.translate(x0)
        .terms()
        .map(|(a, c)| c * moment_average(a, p.dimension(), Domain::Ball).at_radius(radius))
        .fold(BigRational::zero(), |acc, t| acc + t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PizzettiCheck {
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub residual: BigRational,
}

/// Compare the exact ball average of `P` with the truncated expansion
/// `Σ_{i<m} c_i R^{2i} Δ^i P(x0)`.
pub fn pizzetti_check(p: &PolynomialND, m: u32, x0: &[BigRational], radius: &BigRational) -> Result<PizzettiCheck> {
    if m < 1 {
        return Err(Error::InvalidOrder(m));
    }
    if x0.len() != p.dimension() {
        return Err(Error::InvalidArgument(format!(
            "centre has {} coordinates, polynomial has dimension {}",
            x0.len(),
            p.dimension()
        )));
    }
    let n = p.dimension() as u32;
    let lhs = ball_average(p, x0, radius);
    let mut rhs = BigRational::zero();
    let mut lap = p.clone();
    for i in 0..m {
        rhs += pizzetti_coefficient(n, i) * num_traits::pow(radius.clone(), 2 * i as usize) * lap.evaluate(x0);
        lap = lap.laplacian();
    }
    let residual = &lhs - &rhs;
    Ok(PizzettiCheck { lhs, rhs, residual })
}

/// Harmonic part of a homogeneous polynomial of degree `d`, obtained by
/// subtracting `|x|^{2k} Δ^k q` multiples:
/// `h = Σ_k a_k |x|^{2k} Δ^k q`, `a_{k+1} = -a_k / (2(k+1)(n+2d-4-2k))`.
pub fn harmonic_projection(q: &PolynomialND, d: u32) -> PolynomialND {
    let n = q.dimension() as i64;
    let mut h = q.clone();
    let mut a = BigRational::one();
    let mut lap = q.laplacian();
    let mut k: i64 = 0;
    while !lap.is_zero() {
        let denom = 2 * (k + 1) * (n + 2 * d as i64 - 4 - 2 * k);
        assert!(denom != 0, "degenerate harmonic projection");
        a = -a / BigRational::from_integer(denom.into());
        h = h.add(&PolynomialND::radial_power(q.dimension(), (k + 1) as u32).mul(&lap).scale(&a));
        lap = lap.laplacian();
        k += 1;
    }
    debug_assert!(h.laplacian().is_zero());
    h
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let mut num: i64 = rng.gen_range(-6..=6);
    if num == 0 {
        num = 1;
    }
    BigRational::new(num.into(), rng.gen_range(1i64..=4).into())
}

fn random_harmonic(n: usize, d: u32, rng: &mut ChaCha8Rng) -> PolynomialND {
    let mut h = PolynomialND::zero(n);
    for deg in 0..=d {
        let mut q = PolynomialND::zero(n);
        for _ in 0..rng.gen_range(1..=3) {
            let mut alpha = vec![0u32; n];
            for _ in 0..deg {
                alpha[rng.gen_range(0..n)] += 1;
            }
            q = q.add(&PolynomialND::monomial(alpha, random_rational(rng)));
        }
        h = h.add(&harmonic_projection(&q, deg));
    }
    h
}

/// Random `m`-polyharmonic polynomial `Σ_{k<m} |x|^{2k} h_k` with harmonic
/// `h_k` of degree `≤ d`. Deterministic in `seed`; retries until the top
/// component `h_{m-1}` is non-zero so that `Δ^{m-1} P ≠ 0`.
pub fn almansi_random(m: u32, n: usize, d: u32, seed: u64) -> Result<PolynomialND> {
    if m < 1 {
        return Err(Error::InvalidOrder(m));
    }
    if n < 1 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let mut p = PolynomialND::zero(n);
        let mut top_nonzero = false;
        for k in 0..m {
            let h = random_harmonic(n, d, &mut rng);
            if k == m - 1 {
                top_nonzero = !h.is_zero();
            }
            p = p.add(&PolynomialND::radial_power(n, k).mul(&h));
        }
        if !top_nonzero {
            continue;
        }
        if !p.laplacian_pow(m).is_zero() {
            return Err(Error::Inconsistent("generated polynomial is not polyharmonic".into()));
        }
        return Ok(p);
    }
    Err(Error::Inconsistent("generator failed to produce a non-degenerate polynomial".into()))
}

/// `Δ^i |x|^{2i}` (a constant) in dimension `n`: `(2i)!! (2i+n-2)!! / (n-2)!!`.
pub fn radial_power_top_laplacian(n: u32, i: u32) -> BigRational {
    let (n, i) = (n as i64, i as i64);
    BigRational::new(double_factorial(2 * i) * double_factorial(2 * i + n - 2), double_factorial(n - 2))
}
