//! Geodesics on the bundle of (start point, TSRVF) pairs.
//!
//! A bundle point is `(p, q(·))` with `q(τ) ∈ T_p M`. Geodesics satisfy
//! `∇x_s x_s = −∫R(v, ∇v)(x_s)dτ` and `∇x_s ∇x_s v = 0`, so the fiber is
//! covariantly linear: `v(s) = (q + s·w)∥` along the base path `x`.

use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::manifold::{Manifold, TangentVector};
use crate::tsrvf::{check_len, field_weights, l2_inner, l2_norm, TsrvfRepr};

/// Direction `(u, w)` at a bundle point: base velocity and fiber velocity.
pub struct BundleTangent<M: Manifold> {
    pub u: M::Tangent,
    pub w: Vec<M::Tangent>,
}

impl<M: Manifold> Clone for BundleTangent<M> {
    fn clone(&self) -> Self {
        Self {
            u: self.u.clone(),
            w: self.w.clone(),
        }
    }
}

impl<M: Manifold> fmt::Debug for BundleTangent<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundleTangent")
            .field("u", &self.u)
            .field("w", &self.w)
            .finish()
    }
}

impl<M: Manifold> BundleTangent<M> {
    pub fn zero(m: &M, p: &M::Point, len: usize) -> Self {
        Self {
            u: m.zero(p),
            w: alloc::vec![m.zero(p); len],
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            u: self.u.scaled(alpha),
            w: self.w.iter().map(|x| x.scaled(alpha)).collect(),
        }
    }

    /// `(|u|², ‖w‖²_{L²})` at `p`.
    pub fn norms_sq(&self, m: &M, p: &M::Point) -> (f64, f64) {
        let wn = l2_norm(m, p, &self.w);
        (m.inner(p, &self.u, &self.u), wn * wn)
    }

    pub fn norm(&self, m: &M, p: &M::Point) -> f64 {
        let (a, b) = self.norms_sq(m, p);
        (a + b).sqrt()
    }
}

/// A discrete bundle path `s ↦ (x(s), v(s, ·))` on `S + 1` nodes.
pub struct BundlePath<M: Manifold> {
    /// `x(iε)`.
    pub base: Vec<M::Point>,
    /// `x_s(iε)`, at `base[i]`.
    pub velocity: Vec<M::Tangent>,
    /// `v(iε, ·)`, at `base[i]`.
    pub fiber: Vec<Vec<M::Tangent>>,
    /// The fiber direction `w` carried to the last node.
    pub end_direction: Vec<M::Tangent>,
}

impl<M: Manifold> Clone for BundlePath<M> {
    fn clone(&self) -> Self {
        Self {
            base: self.base.clone(),
            velocity: self.velocity.clone(),
            fiber: self.fiber.clone(),
            end_direction: self.end_direction.clone(),
        }
    }
}

impl<M: Manifold> fmt::Debug for BundlePath<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundlePath")
            .field("steps", &self.steps())
            .field("base", &self.base)
            .finish_non_exhaustive()
    }
}

impl<M: Manifold> BundlePath<M> {
    pub fn steps(&self) -> usize {
        self.base.len() - 1
    }

    pub fn end_point(&self) -> &M::Point {
        self.base.last().expect("nonempty path")
    }

    pub fn end_fiber(&self) -> &[M::Tangent] {
        self.fiber.last().expect("nonempty path")
    }

    /// Sum of the geodesic lengths of the segments.
    pub fn base_length(&self, m: &M) -> Result<f64> {
        let mut l = 0.0;
        for pair in self.base.windows(2) {
            l += m.distance(&pair[0], &pair[1])?;
        }
        Ok(l)
    }

    /// `|x_s|² + ‖∇v‖²` at every node.
    pub fn energy(&self, m: &M) -> Vec<f64> {
        let wn = l2_norm(m, self.end_point(), &self.end_direction);
        self.base
            .iter()
            .zip(&self.velocity)
            .map(|(x, xs)| m.inner(x, xs, xs) + wn * wn)
            .collect()
    }

    /// Each fiber carried back to `x(0)`.
    pub fn fibers_at_origin(&self, m: &M) -> Result<Vec<Vec<M::Tangent>>> {
        let mut out = Vec::with_capacity(self.base.len());
        for (i, f) in self.fiber.iter().enumerate() {
            let mut f = f.clone();
            for k in (1..=i).rev() {
                m.transport_all(&self.base[k], &self.base[k - 1], &mut f)?;
            }
            out.push(f);
        }
        Ok(out)
    }
}

/// The base curve joining two bundle points, as a chain of geodesic
/// segments ending at `target`.
pub struct Baseline<M: Manifold> {
    nodes: Vec<M::Point>,
}

impl<M: Manifold> Clone for Baseline<M> {
    fn clone(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
        }
    }
}

impl<M: Manifold> fmt::Debug for Baseline<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Baseline")
            .field("nodes", &self.nodes)
            .finish()
    }
}

impl<M: Manifold> Baseline<M> {
    /// Single geodesic from `from` to `to`.
    pub fn geodesic(from: M::Point, to: M::Point) -> Self {
        if from == to {
            Self {
                nodes: alloc::vec![from],
            }
        } else {
            Self {
                nodes: alloc::vec![from, to],
            }
        }
    }

    /// The base path of a shot, closed off at `target`.
    pub fn from_path(path: &BundlePath<M>, target: &M::Point) -> Self {
        let mut nodes: Vec<M::Point> = Vec::with_capacity(path.base.len() + 1);
        for x in &path.base {
            if nodes.last() != Some(x) {
                nodes.push(x.clone());
            }
        }
        if nodes.last() != Some(target) {
            nodes.push(target.clone());
        }
        Self { nodes }
    }

    pub fn nodes(&self) -> &[M::Point] {
        &self.nodes
    }

    pub fn length(&self, m: &M) -> Result<f64> {
        let mut l = 0.0;
        for pair in self.nodes.windows(2) {
            l += m.distance(&pair[0], &pair[1])?;
        }
        Ok(l)
    }

    /// Carries vectors from the first node to the last.
    pub fn forward(&self, m: &M, vs: &mut [M::Tangent]) -> Result<()> {
        for pair in self.nodes.windows(2) {
            m.transport_all(&pair[0], &pair[1], vs)?;
        }
        Ok(())
    }

    /// Carries vectors from the last node to the first.
    pub fn backward(&self, m: &M, vs: &mut [M::Tangent]) -> Result<()> {
        for pair in self.nodes.windows(2).rev() {
            m.transport_all(&pair[1], &pair[0], vs)?;
        }
        Ok(())
    }

    /// `√(l_x² + ‖q₁∥ − q₂‖²)`, with `q₁` carried to the end of the baseline.
    pub fn distance(&self, m: &M, q1: &[M::Tangent], q2: &[M::Tangent]) -> Result<f64> {
        check_len(q1.len(), q2.len())?;
        let l = self.length(m)?;
        let mut moved = q1.to_vec();
        self.forward(m, &mut moved)?;
        let end = self.nodes.last().expect("nonempty baseline");
        let diff: Vec<M::Tangent> = moved.iter().zip(q2).map(|(a, b)| a.minus(b)).collect();
        let f = l2_norm(m, end, &diff);
        Ok((l * l + f * f).sqrt())
    }
}

/// Numerical exponential map on the bundle with `steps` integration steps.
///
/// Euler steps for the base with the curvature forcing
/// `−∫R(v, w∥)(x_s)dτ`, and chained transport of `q` and `w` so that the
/// fiber at node `i` is `q∥ + iε·w∥`.
pub fn bundle_exp<M: Manifold>(
    m: &M,
    origin: &TsrvfRepr<M>,
    dir: &BundleTangent<M>,
    steps: usize,
) -> Result<BundlePath<M>> {
    if steps == 0 {
        return Err(Error::invalid(
            "the bundle integrator needs at least one step",
        ));
    }
    check_len(origin.len(), dir.w.len())?;
    let eps = 1.0 / steps as f64;
    let weights = field_weights(origin.len());
    let t = origin.len();

    let mut x = origin.start.clone();
    let mut xs = dir.u.clone();
    // q∥ followed by w∥, transported together.
    let mut carried: Vec<M::Tangent> = origin.q.iter().chain(&dir.w).cloned().collect();

    let mut base = Vec::with_capacity(steps + 1);
    let mut velocity = Vec::with_capacity(steps + 1);
    let mut fiber = Vec::with_capacity(steps + 1);
    base.push(x.clone());
    velocity.push(xs.clone());
    fiber.push(origin.q.clone());

    for i in 0..steps {
        let (qp, wp) = carried.split_at(t);
        let v: &[M::Tangent] = &fiber[i];
        let force = m.curvature_integral(&x, v, wp, &weights, &xs);
        let next = m.exp(&x, &xs.scaled(eps))?;
        let tr = if next == x {
            None
        } else {
            Some(m.transporter(&x, &next)?)
        };
        let mut step = xs.clone();
        step.add_scaled(-eps, &force);
        let _ = qp;
        if let Some(tr) = &tr {
            xs = m.apply_transport(tr, &step);
            for c in carried.iter_mut() {
                *c = m.apply_transport(tr, c);
            }
        } else {
            xs = step;
        }
        let s = (i + 1) as f64 * eps;
        let (qp, wp) = carried.split_at(t);
        let v: Vec<M::Tangent> = qp
            .iter()
            .zip(wp)
            .map(|(a, b)| {
                let mut out = a.clone();
                out.add_scaled(s, b);
                out
            })
            .collect();
        x = next;
        base.push(x.clone());
        velocity.push(xs.clone());
        fiber.push(v);
    }
    let end_direction = carried.split_off(t);
    Ok(BundlePath {
        base,
        velocity,
        fiber,
        end_direction,
    })
}

/// Discrete residuals of the two geodesic equations along a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicResiduals {
    /// RMS over interior nodes of `|∇x_s x_s + ∫R(v, ∇v)(x_s)dτ|`.
    pub base: f64,
    /// RMS over interior nodes of `‖∇x_s ∇x_s v‖_{L²}`.
    pub fiber: f64,
}

/// Central differences of `x_s` and `v` at interior nodes, with
/// neighbours brought in by single-step transport.
pub fn geodesic_residuals<M: Manifold>(m: &M, path: &BundlePath<M>) -> Result<GeodesicResiduals> {
    let steps = path.steps();
    if steps < 2 {
        return Ok(GeodesicResiduals {
            base: 0.0,
            fiber: 0.0,
        });
    }
    let eps = 1.0 / steps as f64;
    let t = path.fiber[0].len();
    let weights = field_weights(t);
    let mut base_sq = 0.0;
    let mut fiber_sq = 0.0;
    for i in 1..steps {
        let x = &path.base[i];
        let mut prev: Vec<M::Tangent> = core::iter::once(path.velocity[i - 1].clone())
            .chain(path.fiber[i - 1].iter().cloned())
            .collect();
        let mut next: Vec<M::Tangent> = core::iter::once(path.velocity[i + 1].clone())
            .chain(path.fiber[i + 1].iter().cloned())
            .collect();
        m.transport_all(&path.base[i - 1], x, &mut prev)?;
        m.transport_all(&path.base[i + 1], x, &mut next)?;

        let dxs = next[0].minus(&prev[0]).scaled(0.5 / eps);
        let dv: Vec<M::Tangent> = next[1..]
            .iter()
            .zip(&prev[1..])
            .map(|(a, b)| a.minus(b).scaled(0.5 / eps))
            .collect();
        let forcing = m.curvature_integral(x, &path.fiber[i], &dv, &weights, &path.velocity[i]);
        let r = dxs.plus(&forcing);
        base_sq += m.inner(x, &r, &r);

        let second: Vec<M::Tangent> = next[1..]
            .iter()
            .zip(&prev[1..])
            .zip(&path.fiber[i])
            .map(|((a, b), c)| {
                let mut out = a.plus(b);
                out.add_scaled(-2.0, c);
                out.scaled(1.0 / (eps * eps))
            })
            .collect();
        let f = l2_norm(m, x, &second);
        fiber_sq += f * f;
    }
    Ok(GeodesicResiduals {
        base: (eps * base_sq).sqrt(),
        fiber: (eps * fiber_sq).sqrt(),
    })
}

/// Settings for [`bundle_shoot`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Integration steps `S`.
    pub steps: usize,
    /// Both endpoint gaps must fall below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest step fraction tried along a Newton direction.
    pub min_step: f64,
    /// Double `S` while the base residual exceeds `residual_tol`.
    pub refine: bool,
    pub residual_tol: f64,
    pub max_steps: usize,
    /// Largest Krylov space per Newton step.
    pub krylov_dim: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            steps: 20,
            tol: 1e-4,
            max_iter: 100,
            min_step: 1.0 / 64.0,
            refine: true,
            residual_tol: 5e-2,
            max_steps: 160,
            krylov_dim: 30,
        }
    }
}

/// Outcome of a shot between two bundle points.
pub struct ShootResult<M: Manifold> {
    pub direction: BundleTangent<M>,
    pub path: BundlePath<M>,
    /// `d(x(1), p₂)`.
    pub base_gap: f64,
    /// `‖q₂ − v(1)∥‖_{L²}` at `p₂`.
    pub fiber_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub steps: usize,
}

impl<M: Manifold> Clone for ShootResult<M> {
    fn clone(&self) -> Self {
        Self {
            direction: self.direction.clone(),
            path: self.path.clone(),
            base_gap: self.base_gap,
            fiber_gap: self.fiber_gap,
            iterations: self.iterations,
            converged: self.converged,
            steps: self.steps,
        }
    }
}

impl<M: Manifold> fmt::Debug for ShootResult<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShootResult")
            .field("base_gap", &self.base_gap)
            .field("fiber_gap", &self.fiber_gap)
            .field("iterations", &self.iterations)
            .field("converged", &self.converged)
            .field("steps", &self.steps)
            .finish_non_exhaustive()
    }
}

impl<M: Manifold> ShootResult<M> {
    pub fn baseline(&self, target: &M::Point) -> Baseline<M> {
        Baseline::from_path(&self.path, target)
    }
}

struct Shot<M: Manifold> {
    dir: BundleTangent<M>,
    path: BundlePath<M>,
    base_gap: f64,
    fiber_gap: f64,
    /// Fiber correction then base correction, carried to the origin.
    correction: Vec<M::Tangent>,
}

impl<M: Manifold> Shot<M> {
    fn total_gap(&self) -> f64 {
        self.base_gap.hypot(self.fiber_gap)
    }

    fn gaps_below(&self, tol: f64) -> bool {
        self.base_gap < tol && self.fiber_gap < tol
    }

    /// Base correction first, then the fiber correction.
    fn stacked_correction(&self) -> Vec<M::Tangent> {
        let t = self.dir.w.len();
        core::iter::once(self.correction[t].clone())
            .chain(self.correction[..t].iter().cloned())
            .collect()
    }
}

fn evaluate<M: Manifold>(
    m: &M,
    start: &TsrvfRepr<M>,
    target: &TsrvfRepr<M>,
    dir: BundleTangent<M>,
    steps: usize,
) -> Result<Shot<M>> {
    let path = bundle_exp(m, start, &dir, steps)?;
    let end = path.end_point();
    let p2 = &target.start;
    let base_gap = m.distance(end, p2)?;

    let mut landed = path.end_fiber().to_vec();
    m.transport_all(end, p2, &mut landed)?;
    let gap: Vec<M::Tangent> = target
        .q
        .iter()
        .zip(&landed)
        .map(|(a, b)| a.minus(b))
        .collect();
    let fiber_gap = l2_norm(m, p2, &gap);

    let mut correction = target.q.clone();
    m.transport_all(p2, end, &mut correction)?;
    for (c, v) in correction.iter_mut().zip(path.end_fiber()) {
        c.add_scaled(-1.0, v);
    }
    correction.push(m.log(end, p2)?);
    for k in (1..path.base.len()).rev() {
        m.transport_all(&path.base[k], &path.base[k - 1], &mut correction)?;
    }
    Ok(Shot {
        dir,
        path,
        base_gap,
        fiber_gap,
        correction,
    })
}

/// Initial direction: `u = log(p₁, p₂)`, `w = q₂ carried to p₁ − q₁`.
pub fn initial_direction<M: Manifold>(
    m: &M,
    start: &TsrvfRepr<M>,
    target: &TsrvfRepr<M>,
) -> Result<BundleTangent<M>> {
    let u = m.log(&start.start, &target.start)?;
    let mut w = target.q.clone();
    m.transport_all(&target.start, &start.start, &mut w)?;
    for (a, b) in w.iter_mut().zip(&start.q) {
        a.add_scaled(-1.0, b);
    }
    Ok(BundleTangent { u, w })
}

/// `(u, w)` flattened with `u` first.
fn stacked<M: Manifold>(dir: &BundleTangent<M>) -> Vec<M::Tangent> {
    core::iter::once(dir.u.clone())
        .chain(dir.w.iter().cloned())
        .collect()
}

fn unstacked<M: Manifold>(mut v: Vec<M::Tangent>) -> BundleTangent<M> {
    let w = v.split_off(1);
    BundleTangent {
        u: v.pop().expect("nonempty"),
        w,
    }
}

fn stacked_inner<M: Manifold>(m: &M, p: &M::Point, a: &[M::Tangent], b: &[M::Tangent]) -> f64 {
    m.inner(p, &a[0], &b[0]) + l2_inner(m, p, &a[1..], &b[1..])
}

fn combine<V: TangentVector>(a: &[V], alpha: f64, b: &[V]) -> Vec<V> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut out = x.clone();
            out.add_scaled(alpha, y);
            out
        })
        .collect()
}

/// Restart-free GMRES for `J δ = b` in the stacked tangent space.
fn gmres<M: Manifold>(
    m: &M,
    p: &M::Point,
    b: &[M::Tangent],
    max_dim: usize,
    rtol: f64,
    mut apply: impl FnMut(&[M::Tangent]) -> Result<Vec<M::Tangent>>,
) -> Result<Vec<M::Tangent>> {
    let beta = stacked_inner(m, p, b, b).sqrt();
    let zero: Vec<M::Tangent> = b.iter().map(|v| v.zero_like()).collect();
    if beta == 0.0 {
        return Ok(zero);
    }
    let mut basis: Vec<Vec<M::Tangent>> =
        alloc::vec![b.iter().map(|v| v.scaled(1.0 / beta)).collect()];
    // Hessenberg columns after Givens rotation, and the rotated right-hand side.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut rot: Vec<(f64, f64)> = Vec::new();
    let mut g = alloc::vec![beta];
    for k in 0..max_dim {
        let mut v = apply(&basis[k])?;
        let mut h = Vec::with_capacity(k + 2);
        for bj in &basis {
            let hij = stacked_inner(m, p, &v, bj);
            v = combine(&v, -hij, bj);
            h.push(hij);
        }
        let hn = stacked_inner(m, p, &v, &v).sqrt();
        h.push(hn);
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = c * a + s * b;
            h[i + 1] = -s * a + c * b;
        }
        let (a, b) = (h[k], h[k + 1]);
        let den = a.hypot(b);
        let (c, s) = if den == 0.0 {
            (1.0, 0.0)
        } else {
            (a / den, b / den)
        };
        h[k] = den;
        h[k + 1] = 0.0;
        rot.push((c, s));
        g.push(-s * g[k]);
        g[k] *= c;
        r_cols.push(h);
        let done = g[k + 1].abs() <= rtol * beta || hn <= 1e-14 * beta;
        if done || k + 1 == max_dim {
            break;
        }
        basis.push(v.iter().map(|x| x.scaled(1.0 / hn)).collect());
    }
    let k = r_cols.len();
    let mut y = alloc::vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in i + 1..k {
            acc -= r_cols[j][i] * y[j];
        }
        y[i] = if r_cols[i][i] == 0.0 {
            0.0
        } else {
            acc / r_cols[i][i]
        };
    }
    let mut out = zero;
    for (yi, bi) in y.iter().zip(&basis) {
        out = combine(&out, *yi, bi);
    }
    Ok(out)
}

/// Shooting for the bundle geodesic from `start` to `target`.
///
/// The correction at an iterate is the fiber gap `q₂ − v(1)∥` and the base
/// gap `log(x(1), p₂)`, both carried back to `p₁`; with no curvature the
/// endpoint responds to `(u, w)` as the identity and one unit correction is
/// exact. In general each iteration takes a Newton step on the correction,
/// solving the linearization with matrix-free GMRES whose first direction
/// is the plain correction, then halves the step until the combined gap
/// decreases.
pub fn bundle_shoot<M: Manifold>(
    m: &M,
    start: &TsrvfRepr<M>,
    target: &TsrvfRepr<M>,
    opts: &ShootOptions,
) -> Result<ShootResult<M>> {
    check_len(start.len(), target.len())?;
    let p1 = &start.start;
    let mut steps = opts.steps.max(1);
    let mut dir = initial_direction(m, start, target)?;
    let mut iterations = 0;
    loop {
        let mut best = evaluate(m, start, target, dir, steps)?;
        let mut converged = best.gaps_below(opts.tol);
        let mut stalled = false;
        while !converged && !stalled && iterations < opts.max_iter {
            iterations += 1;
            let z = stacked(&best.dir);
            let b = best.stacked_correction();
            let zn = stacked_inner(m, p1, &z, &z).sqrt();
            let bn = stacked_inner(m, p1, &b, &b).sqrt();
            let forcing = bn.min(0.1);
            let delta = gmres(m, p1, &b, opts.krylov_dim, forcing, |v| {
                let vn = stacked_inner(m, p1, v, v).sqrt();
                let h = 1e-7 * (1.0 + zn) / vn.max(f64::MIN_POSITIVE);
                let moved = evaluate(m, start, target, unstacked::<M>(combine(&z, h, v)), steps)?;
                let c = moved.stacked_correction();
                Ok(b.iter()
                    .zip(&c)
                    .map(|(x, y)| x.minus(y).scaled(1.0 / h))
                    .collect())
            })?;
            let mut lambda = 1.0;
            stalled = true;
            while lambda >= opts.min_step {
                let shot = evaluate(
                    m,
                    start,
                    target,
                    unstacked::<M>(combine(&z, lambda, &delta)),
                    steps,
                )?;
                if shot.total_gap() < best.total_gap() {
                    best = shot;
                    stalled = false;
                    break;
                }
                lambda *= 0.5;
            }
            converged = best.gaps_below(opts.tol);
        }
        if opts.refine && steps < opts.max_steps {
            let res = geodesic_residuals(m, &best.path)?;
            if res.base > opts.residual_tol {
                log::warn!(
                    "bundle geodesic residual {:.3e} above {:.1e} with {} steps; doubling",
                    res.base,
                    opts.residual_tol,
                    steps
                );
                steps *= 2;
                dir = best.dir;
                continue;
            }
        }
        if !converged {
            log::warn!(
                "shooting stopped after {} iterations with gaps {:.3e} (base), {:.3e} (fiber)",
                iterations,
                best.base_gap,
                best.fiber_gap
            );
        }
        return Ok(ShootResult {
            direction: best.dir,
            path: best.path,
            base_gap: best.base_gap,
            fiber_gap: best.fiber_gap,
            iterations,
            converged,
            steps,
        });
    }
}

/// `d_c` and the pieces it was assembled from.
pub struct BundleDistance<M: Manifold> {
    pub value: f64,
    pub base_length: f64,
    pub fiber_distance: f64,
    pub converged: bool,
    pub baseline: Baseline<M>,
}

impl<M: Manifold> fmt::Debug for BundleDistance<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundleDistance")
            .field("value", &self.value)
            .field("base_length", &self.base_length)
            .field("fiber_distance", &self.fiber_distance)
            .field("converged", &self.converged)
            .finish_non_exhaustive()
    }
}

fn assemble<M: Manifold>(
    m: &M,
    baseline: Baseline<M>,
    a: &TsrvfRepr<M>,
    b: &TsrvfRepr<M>,
    converged: bool,
) -> Result<BundleDistance<M>> {
    let base_length = baseline.length(m)?;
    let mut moved = a.q.clone();
    baseline.forward(m, &mut moved)?;
    let diff: Vec<M::Tangent> = moved.iter().zip(&b.q).map(|(x, y)| x.minus(y)).collect();
    let fiber_distance = l2_norm(m, &b.start, &diff);
    Ok(BundleDistance {
        value: (base_length * base_length + fiber_distance * fiber_distance).sqrt(),
        base_length,
        fiber_distance,
        converged,
        baseline,
    })
}

/// `d_c` along the shot bundle geodesic.
pub fn bundle_distance_dc<M: Manifold>(
    m: &M,
    a: &TsrvfRepr<M>,
    b: &TsrvfRepr<M>,
    opts: &ShootOptions,
) -> Result<BundleDistance<M>> {
    check_len(a.len(), b.len())?;
    if a.start == b.start {
        return assemble(
            m,
            Baseline::geodesic(a.start.clone(), b.start.clone()),
            a,
            b,
            true,
        );
    }
    let shot = bundle_shoot(m, a, b, opts)?;
    assemble(m, shot.baseline(&b.start), a, b, shot.converged)
}

/// `d_c` with the base path replaced by the geodesic between start points.
pub fn fast_distance_dc<M: Manifold>(
    m: &M,
    a: &TsrvfRepr<M>,
    b: &TsrvfRepr<M>,
) -> Result<BundleDistance<M>> {
    check_len(a.len(), b.len())?;
    assemble(
        m,
        Baseline::geodesic(a.start.clone(), b.start.clone()),
        a,
        b,
        true,
    )
}
