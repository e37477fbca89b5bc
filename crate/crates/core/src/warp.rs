//! Sampled warping functions: nondecreasing maps of [0, 1] onto itself.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;

use crate::error::{Error, Result};

/// Slack allowed when validating monotonicity and endpoints.
const TAU_WARP: f64 = 1e-12;

/// `γ` sampled on the uniform grid `{0, 1/(N−1), …, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpFn {
    values: Vec<f64>,
}

impl WarpFn {
    /// Validates endpoints and monotonicity; tiny violations are snapped.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::invalid("a warp needs at least two samples"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("warp"));
        }
        if values[0].abs() > TAU_WARP || (values[n - 1] - 1.0).abs() > TAU_WARP {
            return Err(Error::invalid("a warp must map 0 to 0 and 1 to 1"));
        }
        values[0] = 0.0;
        values[n - 1] = 1.0;
        for i in 1..n {
            if values[i] < values[i - 1] - TAU_WARP {
                return Err(Error::invalid(alloc::format!(
                    "warp decreases at sample {i}: {} < {}",
                    values[i],
                    values[i - 1]
                )));
            }
            values[i] = values[i].max(values[i - 1]).min(1.0);
        }
        Ok(Self { values })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |t| t)
    }

    /// Samples `f` on the grid; `f` must be a valid warp.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        assert!(n >= 2, "a warp needs at least two samples");
        let h = 1.0 / (n - 1) as f64;
        let mut values: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
        values[0] = 0.0;
        values[n - 1] = 1.0;
        for i in 1..n {
            values[i] = values[i].clamp(values[i - 1], 1.0);
        }
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }

    /// Grid times `t_i`.
    pub fn times(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.len()).map(|i| i as f64 * h).collect()
    }

    /// Piecewise-linear evaluation; `t` is clamped to [0, 1].
    pub fn eval(&self, t: f64) -> f64 {
        let (k, f) = locate(t, self.len());
        if f == 0.0 {
            self.values[k]
        } else {
            self.values[k] + f * (self.values[k + 1] - self.values[k])
        }
    }

    /// Resamples onto an `n`-point grid.
    pub fn resample(&self, n: usize) -> Self {
        if n == self.len() {
            return self.clone();
        }
        Self::from_fn(n, |t| self.eval(t))
    }

    /// `self ∘ inner`, sampled on `inner`'s grid.
    pub fn compose(&self, inner: &WarpFn) -> Self {
        let mut values: Vec<f64> = inner.values.iter().map(|&t| self.eval(t)).collect();
        let n = values.len();
        values[0] = 0.0;
        values[n - 1] = 1.0;
        for i in 1..n {
            values[i] = values[i].max(values[i - 1]);
        }
        Self { values }
    }

    /// Generalized inverse `s ↦ inf{t : γ(t) ≥ s}`, linear between samples,
    /// on the same grid. Flat stretches of `γ` become jumps.
    pub fn inverse(&self) -> Self {
        let n = self.len();
        let h = self.step();
        Self::from_fn(n, |s| {
            let i = self.values.partition_point(|&x| x < s);
            if i == 0 {
                return 0.0;
            }
            if i == n {
                return 1.0;
            }
            let (x0, x1) = (self.values[i - 1], self.values[i]);
            ((i - 1) as f64 + (s - x0) / (x1 - x0)) * h
        })
    }

    /// Forward differences, clamped at 0; the last sample repeats.
    pub fn derivative(&self) -> Vec<f64> {
        let n = self.len();
        let inv_h = (n - 1) as f64;
        let mut d: Vec<f64> = (0..n - 1)
            .map(|i| ((self.values[i + 1] - self.values[i]) * inv_h).max(0.0))
            .collect();
        d.push(d[n - 2]);
        d
    }

    /// Largest slope between consecutive samples.
    pub fn max_slope(&self) -> f64 {
        self.derivative().into_iter().fold(0.0, f64::max)
    }

    /// `‖γ − id‖_{L²}` by the trapezoid rule.
    pub fn l2_distance_to_identity(&self) -> f64 {
        let h = self.step();
        let sq: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - i as f64 * h).powi(2))
            .collect();
        trapezoid(&sq, h).sqrt()
    }

    /// `max |γ(t) − t|` over the samples.
    pub fn sup_distance_to_identity(&self) -> f64 {
        let h = self.step();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - i as f64 * h).abs())
            .fold(0.0, f64::max)
    }

    /// `‖γ₁ − γ₂‖_{L²}` on the finer of the two grids.
    pub fn l2_distance(&self, other: &WarpFn) -> f64 {
        let n = self.len().max(other.len());
        let a = self.resample(n);
        let b = other.resample(n);
        let sq: Vec<f64> = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).powi(2))
            .collect();
        trapezoid(&sq, a.step()).sqrt()
    }
}

/// Index `k` and fraction `f ∈ [0, 1)` with `t ≈ (k + f)/(n − 1)`.
pub(crate) fn locate(t: f64, n: usize) -> (usize, f64) {
    let s = t.clamp(0.0, 1.0) * (n - 1) as f64;
    let r = s.round();
    if (s - r).abs() < 1e-9 {
        return (r as usize, 0.0);
    }
    let k = (s.floor() as usize).min(n - 1);
    if k == n - 1 {
        (k, 0.0)
    } else {
        (k, s - k as f64)
    }
}

/// Trapezoid rule on a uniform grid with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}
