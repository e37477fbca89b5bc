//! The manifold interface shared by the SPD and sphere geometries.
//!
//! Everything above this layer (TSRVFs, bundle geodesics, registration,
//! Karcher means) is written against [`Manifold`] only.

use core::fmt::Debug;

use crate::error::{Error, Result};

/// Vector-space operations on tangent vectors.
///
/// Tangents do not carry their base point; callers keep the base alongside
/// (a [`crate::tsrvf::TsrvfRepr`] stores one start point for all its samples).
pub trait TangentVector: Clone + Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn scaled(&self, alpha: f64) -> Self;
    /// `self += alpha * other`
    fn add_scaled(&mut self, alpha: f64, other: &Self);

    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(1.0, other);
        out
    }

    fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    /// Linear interpolation `(1 − f)·self + f·other`.
    fn lerp(&self, other: &Self, f: f64) -> Self {
        let mut out = self.scaled(1.0 - f);
        out.add_scaled(f, other);
        out
    }
}

/// A Riemannian manifold with closed-form exponential map, inverse
/// exponential, parallel transport along geodesics and curvature tensor.
pub trait Manifold: Send + Sync {
    type Point: Clone + Debug + PartialEq + Send + Sync;
    type Tangent: TangentVector;
    /// Precomputed parallel transport between two fixed points.
    type Transport: Send + Sync;

    fn name(&self) -> &'static str;

    fn zero(&self, p: &Self::Point) -> Self::Tangent;

    fn exp(&self, p: &Self::Point, v: &Self::Tangent) -> Result<Self::Point>;

    fn log(&self, p: &Self::Point, q: &Self::Point) -> Result<Self::Tangent>;

    fn distance(&self, p: &Self::Point, q: &Self::Point) -> Result<f64>;

    fn inner(&self, p: &Self::Point, u: &Self::Tangent, v: &Self::Tangent) -> f64;

    fn norm(&self, p: &Self::Point, v: &Self::Tangent) -> f64 {
        let sq = self.inner(p, v, v);
        if sq > 0.0 {
            libm::sqrt(sq)
        } else {
            0.0
        }
    }

    /// Transport along the minimizing geodesic from `p` to `q`.
    fn transporter(&self, p: &Self::Point, q: &Self::Point) -> Result<Self::Transport>;

    fn apply_transport(&self, t: &Self::Transport, v: &Self::Tangent) -> Self::Tangent;

    fn transport(
        &self,
        p: &Self::Point,
        q: &Self::Point,
        v: &Self::Tangent,
    ) -> Result<Self::Tangent> {
        let t = self.transporter(p, q)?;
        Ok(self.apply_transport(&t, v))
    }

    /// Transports every vector in `vs` from `p` to `q` in place.
    fn transport_all(
        &self,
        p: &Self::Point,
        q: &Self::Point,
        vs: &mut [Self::Tangent],
    ) -> Result<()> {
        if p == q {
            return Ok(());
        }
        let t = self.transporter(p, q)?;
        for v in vs.iter_mut() {
            *v = self.apply_transport(&t, v);
        }
        Ok(())
    }

    /// Riemannian curvature tensor `R(X, Y)Z` at `p`.
    fn curvature(
        &self,
        p: &Self::Point,
        x: &Self::Tangent,
        y: &Self::Tangent,
        z: &Self::Tangent,
    ) -> Self::Tangent;

    /// Quadrature `Σ_k weights[k] · R(vs[k], ws[k]) z`.
    fn curvature_integral(
        &self,
        p: &Self::Point,
        vs: &[Self::Tangent],
        ws: &[Self::Tangent],
        weights: &[f64],
        z: &Self::Tangent,
    ) -> Self::Tangent {
        let mut acc = self.zero(p);
        for ((v, w), &c) in vs.iter().zip(ws).zip(weights) {
            acc.add_scaled(c, &self.curvature(p, v, w, z));
        }
        acc
    }

    /// Point at parameter `t ∈ [0, 1]` on the geodesic from `p` to `q`.
    fn geodesic(&self, p: &Self::Point, q: &Self::Point, t: f64) -> Result<Self::Point> {
        check_unit_interval("t", t)?;
        if t == 0.0 || p == q {
            return Ok(p.clone());
        }
        if t == 1.0 {
            return Ok(q.clone());
        }
        let v = self.log(p, q)?;
        self.exp(p, &v.scaled(t))
    }
}

pub(crate) fn check_unit_interval(what: &'static str, t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: t,
            domain: "[0, 1]",
        })
    }
}
