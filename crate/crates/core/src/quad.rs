//! Quadrature building blocks shared by the radial solvers.

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Tricomi initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// `∫_a^b f`
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `(P_n(x), P_n'(x))`
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::BadGrid);
    }
    Ok(())
}

const GL3_X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Running integral `F_i = ∫_{x_0}^{x_i} f` on an arbitrary increasing grid.
///
/// Each interval is integrated exactly against the cubic interpolating the
/// four nearest samples (one-sided at the ends), so the scheme is fourth
/// order and gives a value at every node.
pub fn cumulative(grid: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    check_grid(grid)?;
    if values.len() != grid.len() {
        return Err(Error::InvalidArgument("grid and values differ in length".into()));
    }
    let n = grid.len();
    let mut out = vec![0.0; n];
    if n == 1 {
        return Ok(out);
    }
    for i in 0..n - 1 {
        let lo = if n < 4 { 0 } else { i.saturating_sub(1).min(n - 4) };
        let hi = (lo + 4).min(n);
        let xs = &grid[lo..hi];
        let ys = &values[lo..hi];
        let (a, b) = (grid[i], grid[i + 1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let seg: f64 = GL3_X
            .iter()
            .zip(GL3_W)
            .map(|(x, w)| w * lagrange(xs, ys, mid + half * x))
            .sum::<f64>()
            * half;
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

/// `∫ f` over the whole grid.
pub fn integrate(grid: &[f64], values: &[f64]) -> Result<f64> {
    Ok(*cumulative(grid, values)?.last().unwrap())
}

/// Composite Simpson on a uniform grid with an odd number of nodes.
pub fn simpson_uniform(h: f64, values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidArgument(format!("Simpson needs an odd node count >= 3, got {n}")));
    }
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(s * h / 3.0)
}

/// `n` uniform nodes on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect()
}
