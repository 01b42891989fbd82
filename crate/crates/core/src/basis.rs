//! Orthonormal sine basis on an interval `(a, b)`.
//!
//! Every element of `H = L²((a, b))` is carried as a truncated coefficient
//! vector in the Dirichlet-Laplacian eigenbasis
//!
//! ```text
//! φ_j(x) = sqrt(2 / (b − a)) · sin(π j (x − a) / (b − a)),   j = 1, 2, …
//! ```
//!
//! Coefficient index `i` of an [`HFunction`] holds mode `j = i + 1`.
//! Grid values are produced by [`synthesize`] and mapped back by [`project`],
//! which integrates with the composite midpoint rule on an equally spaced
//! [`Grid`].

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Open interval `(a, b)` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::param(format!(
                "interval ({a}, {b}) must be finite with a < b"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }
}

impl Default for Interval {
    /// The `(0, 60)` domain used by the simulation presets.
    fn default() -> Self {
        Self { a: 0.0, b: 60.0 }
    }
}

/// Element of `L²((a, b))` stored as `K` basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HFunction {
    coeffs: Vec<f64>,
    interval: Interval,
}

impl HFunction {
    pub fn new(coeffs: Vec<f64>, interval: Interval) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::param("an HFunction needs at least one coefficient"));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::param(format!("coefficient {} is not finite", i + 1)));
        }
        Ok(Self { coeffs, interval })
    }

    pub fn zeros(k: usize, interval: Interval) -> Self {
        assert!(k >= 1, "K must be at least 1");
        Self {
            coeffs: vec![0.0; k],
            interval,
        }
    }

    /// Unit coordinate vector for 1-based `mode`.
    pub fn unit(k: usize, mode: usize, interval: Interval) -> Self {
        assert!(mode >= 1 && mode <= k, "mode {mode} outside 1..={k}");
        let mut f = Self::zeros(k, interval);
        f.coeffs[mode - 1] = 1.0;
        f
    }

    /// Builds coefficients from a law evaluated at 1-based modes.
    pub fn from_fn(k: usize, interval: Interval, law: impl Fn(usize) -> f64) -> Self {
        assert!(k >= 1, "K must be at least 1");
        Self {
            coeffs: (1..=k).map(law).collect(),
            interval,
        }
    }

    pub(crate) fn from_raw(coeffs: Vec<f64>, interval: Interval) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs, interval }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Number of retained modes `K`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn check_compatible(&self, other: &HFunction) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::dims(format!(
                "K = {} vs K = {}",
                self.len(),
                other.len()
            )));
        }
        if self.interval != other.interval {
            return Err(Error::dims("HFunctions live on different intervals"));
        }
        Ok(())
    }

    pub fn add(&self, other: &HFunction) -> Result<HFunction> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y)
            .collect();
        Ok(Self::from_raw(coeffs, self.interval))
    }

    pub fn sub(&self, other: &HFunction) -> Result<HFunction> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x - y)
            .collect();
        Ok(Self::from_raw(coeffs, self.interval))
    }

    pub fn scale(&self, s: f64) -> HFunction {
        Self::from_raw(self.coeffs.iter().map(|c| s * c).collect(), self.interval)
    }
}

/// `M` equally spaced midpoints of `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    interval: Interval,
}

impl Grid {
    pub fn midpoints(interval: Interval, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("grid needs at least one point"));
        }
        let h = interval.length() / m as f64;
        let points = (0..m)
            .map(|i| interval.a() + (i as f64 + 0.5) * h)
            .collect();
        Ok(Self { points, interval })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Quadrature weight of each node.
    pub fn spacing(&self) -> f64 {
        self.interval.length() / self.points.len() as f64
    }
}

#[inline]
fn normalization(interval: &Interval) -> f64 {
    (2.0 / interval.length()).sqrt()
}

#[inline]
fn eval_unchecked(j: usize, x: f64, interval: &Interval) -> f64 {
    normalization(interval) * (PI * j as f64 * (x - interval.a()) / interval.length()).sin()
}

/// Value of basis function `j` (1-based) at `x`.
pub fn basis_eval(j: usize, x: f64, interval: Interval) -> Result<f64> {
    if j == 0 {
        return Err(Error::param("basis modes are numbered from 1"));
    }
    if !interval.contains(x) {
        return Err(Error::Domain {
            x,
            a: interval.a(),
            b: interval.b(),
        });
    }
    Ok(eval_unchecked(j, x, &interval))
}

/// Pointwise values of `f` on the grid.
pub fn synthesize(f: &HFunction, grid: &Grid) -> Result<Vec<f64>> {
    if grid.interval() != f.interval() {
        return Err(Error::dims("grid and function live on different intervals"));
    }
    let iv = f.interval();
    Ok(grid
        .points()
        .iter()
        .map(|&x| {
            f.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| c * eval_unchecked(i + 1, x, &iv))
                .sum()
        })
        .collect())
}

/// Midpoint-rule projection of grid values onto the first `k` modes.
pub fn project(values: &[f64], grid: &Grid, k: usize) -> Result<HFunction> {
    if values.len() != grid.len() {
        return Err(Error::dims(format!(
            "{} values for a {}-point grid",
            values.len(),
            grid.len()
        )));
    }
    if k == 0 {
        return Err(Error::param("K must be at least 1"));
    }
    let required = 4 * k;
    if grid.len() < required {
        return Err(Error::Resolution {
            points: grid.len(),
            modes: k,
            required,
        });
    }
    let iv = grid.interval();
    let h = grid.spacing();
    let coeffs = (1..=k)
        .map(|j| {
            h * grid
                .points()
                .iter()
                .zip(values)
                .map(|(&x, v)| v * eval_unchecked(j, x, &iv))
                .sum::<f64>()
        })
        .collect();
    HFunction::new(coeffs, iv)
}

/// `⟨f, g⟩_H` by Parseval.
pub fn inner_product(f: &HFunction, g: &HFunction) -> Result<f64> {
    f.check_compatible(g)?;
    Ok(f.coeffs().iter().zip(g.coeffs()).map(|(x, y)| x * y).sum())
}
