//! Sampled trajectories and their transported square-root vector fields.

use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::manifold::{Manifold, TangentVector};
use crate::warp::{locate, WarpFn};

/// Speeds below this produce a zero TSRVF sample.
pub const TAU_VEL: f64 = 1e-10;

/// Points sampled on the uniform grid `{0, δ, …, 1}`, `δ = 1/(T−1)`.
pub struct Trajectory<M: Manifold> {
    points: Vec<M::Point>,
}

impl<M: Manifold> Clone for Trajectory<M> {
    fn clone(&self) -> Self {
        Self {
            points: self.points.clone(),
        }
    }
}

impl<M: Manifold> fmt::Debug for Trajectory<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("points", &self.points)
            .finish()
    }
}

impl<M: Manifold> PartialEq for Trajectory<M> {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl<M: Manifold> Trajectory<M> {
    pub fn new(points: Vec<M::Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a trajectory needs at least two samples"));
        }
        Ok(Self { points })
    }

    pub fn constant(p: M::Point, len: usize) -> Result<Self> {
        Self::new(alloc::vec![p; len])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[M::Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<M::Point> {
        self.points
    }

    pub fn start(&self) -> &M::Point {
        &self.points[0]
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.len()).map(|i| i as f64 * h).collect()
    }

    /// Point at time `t`, interpolated along the geodesic between samples.
    pub fn eval(&self, m: &M, t: f64) -> Result<M::Point> {
        let (k, f) = locate(t, self.len());
        if f == 0.0 {
            Ok(self.points[k].clone())
        } else {
            m.geodesic(&self.points[k], &self.points[k + 1], f)
        }
    }

    /// Resamples onto an `n`-point grid by geodesic interpolation.
    pub fn resample(&self, m: &M, n: usize) -> Result<Self> {
        if n == self.len() {
            return Ok(self.clone());
        }
        if n < 2 {
            return Err(Error::invalid("a trajectory needs at least two samples"));
        }
        let h = 1.0 / (n - 1) as f64;
        let points = (0..n)
            .map(|i| self.eval(m, i as f64 * h))
            .collect::<Result<_>>()?;
        Self::new(points)
    }

    /// `max_k d(self_k, other_k)` on a common grid.
    pub fn sup_distance(&self, m: &M, other: &Self) -> Result<f64> {
        check_len(self.len(), other.len())?;
        let mut worst: f64 = 0.0;
        for (a, b) in self.points.iter().zip(&other.points) {
            worst = worst.max(m.distance(a, b)?);
        }
        Ok(worst)
    }
}

/// A starting point and TSRVF samples, all in the tangent space at `start`.
pub struct TsrvfRepr<M: Manifold> {
    pub start: M::Point,
    pub q: Vec<M::Tangent>,
}

impl<M: Manifold> Clone for TsrvfRepr<M> {
    fn clone(&self) -> Self {
        Self {
            start: self.start.clone(),
            q: self.q.clone(),
        }
    }
}

impl<M: Manifold> fmt::Debug for TsrvfRepr<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TsrvfRepr")
            .field("start", &self.start)
            .field("q", &self.q)
            .finish()
    }
}

impl<M: Manifold> TsrvfRepr<M> {
    pub fn new(start: M::Point, q: Vec<M::Tangent>) -> Result<Self> {
        if q.len() < 2 {
            return Err(Error::invalid("a TSRVF needs at least two samples"));
        }
        Ok(Self { start, q })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }

    /// Same start, warped field `(q∘γ)·√γ̇`.
    pub fn warped(&self, gamma: &WarpFn) -> Self {
        Self {
            start: self.start.clone(),
            q: warp_tsrvf(&self.q, gamma),
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// TSRVF of a sampled trajectory.
///
/// Velocities are forward differences `log(α_k, α_{k+1})/δ`, scaled by the
/// inverse square root of their speed, and carried back to `α(0)` through
/// the chain of single-step transports.
pub fn tsrvf_of<M: Manifold>(m: &M, alpha: &Trajectory<M>) -> Result<TsrvfRepr<M>> {
    let pts = alpha.points();
    let t = pts.len();
    let inv_h = (t - 1) as f64;
    let mut q = Vec::with_capacity(t);
    for k in 0..t - 1 {
        let vel = m.log(&pts[k], &pts[k + 1])?.scaled(inv_h);
        let speed = m.norm(&pts[k], &vel);
        if speed < TAU_VEL {
            q.push(m.zero(&pts[k]));
        } else {
            q.push(vel.scaled(1.0 / speed.sqrt()));
        }
    }
    // q[j] lives at α_j; walking back moves the tail q[k..] from α_k to α_{k−1}.
    for k in (1..t - 1).rev() {
        m.transport_all(&pts[k], &pts[k - 1], &mut q[k..])?;
    }
    let last = q[t - 2].clone();
    q.push(last);
    TsrvfRepr::new(pts[0].clone(), q)
}

/// Covariant integral of a TSRVF: `α_{k+1} = exp_{α_k}(δ q∥_k |q∥_k|)`.
pub fn reconstruct<M: Manifold>(m: &M, r: &TsrvfRepr<M>) -> Result<Trajectory<M>> {
    let t = r.len();
    let h = r.step();
    let mut q: Vec<M::Tangent> = r.q[..t - 1].to_vec();
    let mut points = Vec::with_capacity(t);
    points.push(r.start.clone());
    for k in 0..t - 1 {
        let here = &points[k];
        let speed = m.norm(here, &q[k]);
        let next = m.exp(here, &q[k].scaled(h * speed))?;
        if k + 1 < t - 1 {
            m.transport_all(here, &next, &mut q[k + 1..])?;
        }
        points.push(next);
    }
    Trajectory::new(points)
}

/// `α∘γ` with geodesic interpolation between samples.
pub fn warp_trajectory<M: Manifold>(
    m: &M,
    alpha: &Trajectory<M>,
    gamma: &WarpFn,
) -> Result<Trajectory<M>> {
    let g = gamma.resample(alpha.len());
    let points = g
        .values()
        .iter()
        .map(|&s| alpha.eval(m, s))
        .collect::<Result<_>>()?;
    Trajectory::new(points)
}

/// Value of a sampled field at time `t`.
///
/// Forward-difference samples are cell-centred: `q[k]` is the velocity at
/// `t_k + δ/2`. The last sample duplicates the previous one and is ignored.
pub fn sample_field<V: TangentVector>(q: &[V], t: f64) -> V {
    let (k, f) = field_position(t, q.len());
    if f == 0.0 {
        q[k].clone()
    } else {
        q[k].lerp(&q[k + 1], f)
    }
}

/// Sample index `k` and fraction `f` such that the field at `t` is
/// `(1 − f)·q[k] + f·q[k + 1]`.
pub(crate) fn field_position(t: f64, len: usize) -> (usize, f64) {
    let cells = len - 1;
    let u = (t.clamp(0.0, 1.0) * cells as f64 - 0.5).clamp(0.0, (cells - 1) as f64);
    let r = u.round();
    if (u - r).abs() < 1e-9 {
        (r as usize, 0.0)
    } else {
        (u.floor() as usize, u - u.floor())
    }
}

/// `(q∘γ)·√γ̇` on `q`'s grid, with `γ̇` from forward differences.
pub fn warp_tsrvf<V: TangentVector>(q: &[V], gamma: &WarpFn) -> Vec<V> {
    let n = q.len();
    let g = gamma.resample(n);
    let d = g.derivative();
    let gv = g.values();
    let mut out: Vec<V> = (0..n - 1)
        .map(|i| sample_field(q, 0.5 * (gv[i] + gv[i + 1])).scaled(d[i].sqrt()))
        .collect();
    let last = out[n - 2].clone();
    out.push(last);
    out
}

/// Quadrature weights for fields sampled by [`tsrvf_of`]: the midpoint
/// rule over the `t − 1` cells, zero on the duplicated last sample.
pub fn field_weights(t: usize) -> Vec<f64> {
    let h = 1.0 / (t - 1) as f64;
    let mut w = alloc::vec![h; t];
    w[t - 1] = 0.0;
    w
}

/// `∫⟨a(τ), b(τ)⟩ dτ` for fields in the tangent space at `p`.
pub fn l2_inner<M: Manifold>(m: &M, p: &M::Point, a: &[M::Tangent], b: &[M::Tangent]) -> f64 {
    let h = 1.0 / (a.len() - 1) as f64;
    let n = a.len() - 1;
    let mut acc = 0.0;
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        acc += m.inner(p, x, y);
    }
    h * acc
}

pub fn l2_norm<M: Manifold>(m: &M, p: &M::Point, a: &[M::Tangent]) -> f64 {
    l2_inner(m, p, a, a).max(0.0).sqrt()
}

pub fn l2_distance<M: Manifold>(m: &M, p: &M::Point, a: &[M::Tangent], b: &[M::Tangent]) -> f64 {
    let diff: Vec<M::Tangent> = a.iter().zip(b).map(|(x, y)| x.minus(y)).collect();
    l2_norm(m, p, &diff)
}
