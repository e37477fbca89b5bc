//! Rate-invariant comparison: optimal warps by dynamic programming, the
//! alternating pairwise registration and the quotient distance `d_q`.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;

use crate::bundle::{bundle_shoot, Baseline, ShootOptions};
use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::tsrvf::{check_len, field_position, tsrvf_of, warp_tsrvf, Trajectory, TsrvfRepr};
use crate::warp::WarpFn;

/// Default DP grid size.
pub const DEFAULT_GRID: usize = 100;
/// Largest numerator or denominator of a DP segment slope.
pub const MAX_SLOPE: usize = 5;

/// Relative tolerance under which two DP path costs count as tied.
const TIE_REL: f64 = 1e-12;

/// Segment moves `(k, l)` with `gcd(k, l) = 1` and `1 ≤ k, l ≤ max`.
fn moves(max: usize) -> Vec<(usize, usize)> {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut out = Vec::new();
    for k in 1..=max {
        for l in 1..=max {
            if gcd(k, l) == 1 {
                out.push((k, l));
            }
        }
    }
    out
}

/// Inner products needed to evaluate `⟨a(t), b(s)⟩` for linearly
/// interpolated fields.
struct Grams {
    /// `⟨a_i, b_j⟩`, row-major over the `T − 1` used samples.
    cross: Vec<f64>,
    a_diag: Vec<f64>,
    a_off: Vec<f64>,
    b_diag: Vec<f64>,
    b_off: Vec<f64>,
    len: usize,
}

impl Grams {
    fn new<M: Manifold>(m: &M, p: &M::Point, a: &[M::Tangent], b: &[M::Tangent]) -> Self {
        let c = a.len() - 1;
        let mut cross = Vec::with_capacity(c * c);
        for x in &a[..c] {
            for y in &b[..c] {
                cross.push(m.inner(p, x, y));
            }
        }
        let diag = |v: &[M::Tangent]| v[..c].iter().map(|x| m.inner(p, x, x)).collect();
        let off = |v: &[M::Tangent]| {
            (0..c.saturating_sub(1))
                .map(|i| m.inner(p, &v[i], &v[i + 1]))
                .collect()
        };
        Self {
            cross,
            a_diag: diag(a),
            a_off: off(a),
            b_diag: diag(b),
            b_off: off(b),
            len: a.len(),
        }
    }

    fn norm_sq(diag: &[f64], off: &[f64], (k, f): (usize, f64)) -> f64 {
        if f == 0.0 {
            diag[k]
        } else {
            let g = 1.0 - f;
            g * g * diag[k] + 2.0 * f * g * off[k] + f * f * diag[k + 1]
        }
    }

    fn a_norm_sq(&self, pos: (usize, f64)) -> f64 {
        Self::norm_sq(&self.a_diag, &self.a_off, pos)
    }

    fn b_norm_sq(&self, pos: (usize, f64)) -> f64 {
        Self::norm_sq(&self.b_diag, &self.b_off, pos)
    }

    fn cross(&self, (i, f): (usize, f64), (j, g): (usize, f64)) -> f64 {
        let c = self.len - 1;
        let at = |a: usize, b: usize| self.cross[a * c + b];
        let row = |a: usize| {
            if g == 0.0 {
                at(a, j)
            } else {
                (1.0 - g) * at(a, j) + g * at(a, j + 1)
            }
        };
        if f == 0.0 {
            row(i)
        } else {
            (1.0 - f) * row(i) + f * row(i + 1)
        }
    }
}

/// Optimal piecewise-linear warp on the `grid × grid` lattice minimizing
/// `∫|q₁(t) − q₂(γ(t))·√γ̇(t)|² dt`, with segment slopes in `[1/5, 5]`.
///
/// Segment costs use the midpoint rule on each grid cell. Among paths whose
/// costs agree to a relative `1e-12`, the one closest to the diagonal wins.
pub fn dp_optimal_warp<M: Manifold>(
    m: &M,
    p: &M::Point,
    q1: &[M::Tangent],
    q2: &[M::Tangent],
    grid: usize,
) -> Result<WarpFn> {
    check_len(q1.len(), q2.len())?;
    if q1.len() < 2 {
        return Err(Error::invalid("fields need at least two samples"));
    }
    if grid < 2 {
        return Err(Error::invalid("the DP grid needs at least two nodes"));
    }
    let n = grid;
    let h = 1.0 / (n - 1) as f64;
    let t = q1.len();
    let grams = Grams::new(m, p, q1, q2);
    let moves = moves(MAX_SLOPE);

    // q₁ at cell midpoints does not depend on the path.
    let mid: Vec<((usize, f64), f64)> = (0..n - 1)
        .map(|c| {
            let pos = field_position((c as f64 + 0.5) * h, t);
            (pos, grams.a_norm_sq(pos))
        })
        .collect();

    let edge = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        let slope = l as f64 / k as f64;
        let root = slope.sqrt();
        let mut acc = 0.0;
        for c in 0..k {
            let (pa, na) = mid[i + c];
            let s = (j as f64 + (c as f64 + 0.5) * slope) * h;
            let pb = field_position(s, t);
            acc += na - 2.0 * root * grams.cross(pa, pb) + slope * grams.b_norm_sq(pb);
        }
        h * acc
    };

    let idx = |i: usize, j: usize| i * n + j;
    let mut cost = alloc::vec![f64::INFINITY; n * n];
    let mut dev = alloc::vec![f64::INFINITY; n * n];
    let mut from = alloc::vec![u8::MAX; n * n];
    cost[0] = 0.0;
    dev[0] = 0.0;
    for i in 1..n {
        for j in 1..n {
            let mut best = f64::INFINITY;
            let mut best_dev = f64::INFINITY;
            let mut best_move = u8::MAX;
            for (mi, &(k, l)) in moves.iter().enumerate() {
                if k > i || l > j {
                    continue;
                }
                let prev = idx(i - k, j - l);
                if !cost[prev].is_finite() {
                    continue;
                }
                let c = cost[prev] + edge(i - k, j - l, k, l);
                let off0 = (i - k).abs_diff(j - l) as f64;
                let off1 = i.abs_diff(j) as f64;
                let d = dev[prev] + 0.5 * k as f64 * (off0 + off1);
                let tied = (c - best).abs() <= TIE_REL * c.abs().max(best.abs());
                if (tied && d < best_dev) || (!tied && c < best) {
                    best = c;
                    best_dev = d;
                    best_move = mi as u8;
                }
            }
            cost[idx(i, j)] = best;
            dev[idx(i, j)] = best_dev;
            from[idx(i, j)] = best_move;
        }
    }
    if !cost[idx(n - 1, n - 1)].is_finite() {
        return Err(Error::invalid("no admissible DP path"));
    }

    let mut values = alloc::vec![0.0; n];
    let (mut i, mut j) = (n - 1, n - 1);
    values[n - 1] = 1.0;
    while i > 0 {
        let (k, l) = moves[from[idx(i, j)] as usize];
        let (i0, j0) = (i - k, j - l);
        for c in 0..k {
            values[i0 + c] = (j0 as f64 + c as f64 * l as f64 / k as f64) * h;
        }
        i = i0;
        j = j0;
    }
    WarpFn::new(values)
}

/// The DP objective of a warp given on a grid: the midpoint rule over grid
/// cells with `γ` linear on each cell.
pub fn warp_cost<M: Manifold>(
    m: &M,
    p: &M::Point,
    q1: &[M::Tangent],
    q2: &[M::Tangent],
    gamma: &WarpFn,
) -> Result<f64> {
    check_len(q1.len(), q2.len())?;
    let grams = Grams::new(m, p, q1, q2);
    let h = gamma.step();
    let g = gamma.values();
    let t = q1.len();
    let mut acc = 0.0;
    for c in 0..g.len() - 1 {
        let slope = (g[c + 1] - g[c]) / h;
        let pa = field_position((c as f64 + 0.5) * h, t);
        let pb = field_position(0.5 * (g[c] + g[c + 1]), t);
        acc += grams.a_norm_sq(pa) - 2.0 * slope.sqrt() * grams.cross(pa, pb)
            + slope * grams.b_norm_sq(pb);
    }
    Ok(h * acc)
}

/// Position of `m` in the cell-centred sample grid, with `du/dm`, which is
/// zero where the lookup clamps.
fn position_with_rate(m: f64, len: usize) -> ((usize, f64), f64) {
    let cells = len - 1;
    let u = m * cells as f64 - 0.5;
    if u <= 0.0 {
        ((0, 0.0), 0.0)
    } else if u >= (cells - 1) as f64 {
        ((cells - 1, 0.0), 0.0)
    } else {
        let k = u.floor();
        ((k as usize, u - k), cells as f64)
    }
}

impl Grams {
    /// `d/du` of `⟨a(pa), b(u)⟩` and of `|b(u)|²` inside a cell.
    fn b_rates(&self, pa: (usize, f64), (j, g): (usize, f64)) -> (f64, f64) {
        let x0 = self.cross(pa, (j, 0.0));
        let x1 = self.cross(pa, (j + 1, 0.0));
        let (d0, d1, o) = (self.b_diag[j], self.b_diag[j + 1], self.b_off[j]);
        (
            x1 - x0,
            -2.0 * (1.0 - g) * d0 + 2.0 * (1.0 - 2.0 * g) * o + 2.0 * g * d1,
        )
    }
}

/// Continuous improvement of a grid warp. Node values are freed from the
/// lattice and the midpoint cost is minimized over log-slopes by L-BFGS,
/// keeping every slope in `[1/5, 5]`. The input is returned unchanged unless
/// the cost strictly decreases, so exact and tied DP optima are kept.
pub fn refine_warp<M: Manifold>(
    m: &M,
    p: &M::Point,
    q1: &[M::Tangent],
    q2: &[M::Tangent],
    gamma: &WarpFn,
    max_iter: usize,
) -> Result<WarpFn> {
    check_len(q1.len(), q2.len())?;
    let n = gamma.len();
    if n < 3 || max_iter == 0 {
        return Ok(gamma.clone());
    }
    let grams = Grams::new(m, p, q1, q2);
    let t = q1.len();
    let h = gamma.step();
    let cells = n - 1;
    let lo = 1.0 / MAX_SLOPE as f64 - 1e-12;
    let hi = MAX_SLOPE as f64 + 1e-12;
    let mid: Vec<((usize, f64), f64)> = (0..cells)
        .map(|c| {
            let pos = field_position((c as f64 + 0.5) * h, t);
            (pos, grams.a_norm_sq(pos))
        })
        .collect();

    let slopes_of = |theta: &[f64]| -> Vec<f64> {
        let top = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = theta.iter().map(|x| (x - top).exp()).collect();
        let z: f64 = e.iter().sum();
        e.iter().map(|x| x / (h * z)).collect()
    };
    // Cost and gradient in log-slope coordinates.
    let eval = |theta: &[f64]| -> (f64, Vec<f64>, bool) {
        let s = slopes_of(theta);
        let feasible = s.iter().all(|&x| (lo..=hi).contains(&x));
        let mut cost = 0.0;
        let mut d_s = alloc::vec![0.0; cells];
        let mut d_m = alloc::vec![0.0; cells];
        let mut g = 0.0;
        for c in 0..cells {
            let m_c = g + 0.5 * h * s[c];
            let (pa, na) = mid[c];
            let (pb, rate) = position_with_rate(m_c, t);
            let x = grams.cross(pa, pb);
            let bb = grams.b_norm_sq(pb);
            let root = s[c].sqrt();
            cost += h * (na - 2.0 * root * x + s[c] * bb);
            d_s[c] = h * (-x / root + bb);
            if rate > 0.0 {
                let (dx, db) = grams.b_rates(pa, pb);
                d_m[c] = h * rate * (-2.0 * root * dx + s[c] * db);
            }
            g += h * s[c];
        }
        // m_c depends on s_k for k < c with weight h and on s_c with h/2.
        let mut tail = 0.0;
        for c in (0..cells).rev() {
            d_s[c] += 0.5 * h * d_m[c] + h * tail;
            tail += d_m[c];
        }
        let avg: f64 = d_s.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() * h;
        let grad = d_s.iter().zip(&s).map(|(a, b)| b * (a - avg)).collect();
        (cost, grad, feasible)
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let vals = gamma.values();
    let mut x: Vec<f64> = (0..cells)
        .map(|c| ((vals[c + 1] - vals[c]) / h).max(1e-12).ln())
        .collect();
    let (start_cost, mut gx, ok) = eval(&x);
    if !ok {
        return Ok(gamma.clone());
    }
    let mut fx = start_cost;
    let mut memory: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for _ in 0..max_iter {
        let mut q = gx.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let scale = match memory.last() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => {
                0.1 / gx
                    .iter()
                    .fold(0.0f64, |a, b| a.max(b.abs()))
                    .max(f64::MIN_POSITIVE)
            }
        };
        for v in q.iter_mut() {
            *v *= scale;
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &gx);
        if !(slope < 0.0) {
            memory.clear();
            dir = gx
                .iter()
                .map(|v| {
                    -0.1 * v
                        / gx.iter()
                            .fold(0.0f64, |a, b| a.max(b.abs()))
                            .max(f64::MIN_POSITIVE)
                })
                .collect();
            slope = dot(&dir, &gx);
            if !(slope < 0.0) {
                break;
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-12 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fnew, gnew, ok) = eval(&xn);
            if ok && fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            memory.push((s, y, 1.0 / sy));
            if memory.len() > 8 {
                memory.remove(0);
            }
        }
        let gain = fx - fnew;
        x = xn;
        fx = fnew;
        gx = gnew;
        if gain <= 1e-14 * fx.abs().max(1e-300) {
            break;
        }
    }
    // Rounding in an exact optimum is relative to the field energies.
    let energy = h * (grams.a_diag.iter().sum::<f64>() + grams.b_diag.iter().sum::<f64>());
    if !(fx < start_cost - 1e-12 * (start_cost.abs() + energy)) {
        return Ok(gamma.clone());
    }
    let s = slopes_of(&x);
    let mut values = Vec::with_capacity(n);
    let mut acc = 0.0;
    values.push(0.0);
    for v in &s[..cells - 1] {
        acc += h * v;
        values.push(acc.min(1.0));
    }
    values.push(1.0);
    WarpFn::new(values)
}

/// How the base curve between start points is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineMode {
    /// Geodesic between the start points, no shooting.
    #[default]
    Fast,
    /// Base path of the shot bundle geodesic.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegisterOptions {
    pub grid: usize,
    /// Stop once the DP update is this close to the identity in `L²`.
    pub tol: f64,
    pub max_iter: usize,
    pub mode: BaselineMode,
    pub shoot: ShootOptions,
    /// L-BFGS iterations polishing each DP warp off the lattice; 0 keeps
    /// the lattice optimum.
    pub refine_iter: usize,
}

impl Default for RegisterOptions {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID,
            tol: 1e-3,
            max_iter: 10,
            mode: BaselineMode::Fast,
            shoot: ShootOptions::default(),
            refine_iter: 100,
        }
    }
}

impl RegisterOptions {
    pub fn full() -> Self {
        Self {
            mode: BaselineMode::Full,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    /// Accumulated warp applied to the second trajectory.
    pub gamma_star: WarpFn,
    pub d_q: f64,
    /// `d_c` before any alignment.
    pub d_c_before: f64,
    pub iterations: usize,
    /// The last DP update was within tolerance of the identity.
    pub converged: bool,
    /// The baseline was the start-point geodesic rather than a shot.
    pub approximate: bool,
    /// Objective after each accepted update, starting with `d_c_before`.
    pub objective_history: Vec<f64>,
    /// Set by [`register_symmetric`] when registering the first input to the
    /// second did better; `gamma_star` then warps the first input.
    pub reversed: bool,
}

fn baseline_for<M: Manifold>(
    m: &M,
    a: &TsrvfRepr<M>,
    b: &TsrvfRepr<M>,
    opts: &RegisterOptions,
) -> Result<Baseline<M>> {
    if a.start == b.start || opts.mode == BaselineMode::Fast {
        return Ok(Baseline::geodesic(a.start.clone(), b.start.clone()));
    }
    let shot = bundle_shoot(m, a, b, &opts.shoot)?;
    if !shot.converged {
        log::warn!("registration baseline from a non-converged shot");
    }
    Ok(shot.baseline(&b.start))
}

/// Alternates baseline computation and DP alignment of the second TSRVF,
/// carried back to the first start point, against the first.
pub fn register_tsrvf<M: Manifold>(
    m: &M,
    a: &TsrvfRepr<M>,
    b: &TsrvfRepr<M>,
    opts: &RegisterOptions,
) -> Result<RegistrationResult> {
    check_len(a.len(), b.len())?;
    let mut gamma_star = WarpFn::identity(opts.grid);
    let mut current = b.clone();
    let mut base = baseline_for(m, a, &current, opts)?;
    let d_c_before = base.distance(m, &a.q, &current.q)?;
    let mut best = d_c_before;
    let mut history = alloc::vec![best];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut back = current.q.clone();
        base.backward(m, &mut back)?;
        let gamma = dp_optimal_warp(m, &a.start, &a.q, &back, opts.grid)?;
        let gamma = refine_warp(m, &a.start, &a.q, &back, &gamma, opts.refine_iter)?;
        if gamma.l2_distance_to_identity() < opts.tol {
            converged = true;
            break;
        }
        let cand_warp = gamma_star.compose(&gamma);
        let cand = TsrvfRepr::new(b.start.clone(), warp_tsrvf(&b.q, &cand_warp))?;
        let cand_base = baseline_for(m, a, &cand, opts)?;
        let value = cand_base.distance(m, &a.q, &cand.q)?;
        if value >= best {
            log::debug!("registration stalled at iteration {iterations}: {value:.6e} ≥ {best:.6e}");
            break;
        }
        best = value;
        history.push(value);
        gamma_star = cand_warp;
        current = cand;
        base = cand_base;
    }
    Ok(RegistrationResult {
        gamma_star,
        d_q: best,
        d_c_before,
        iterations,
        converged,
        approximate: opts.mode == BaselineMode::Fast && a.start != b.start,
        objective_history: history,
        reversed: false,
    })
}

/// Registers in both directions and keeps the smaller `d_q`.
///
/// The alternation is one-sided, and on strongly warped pairs the two
/// directions can settle in different local optima several percent apart.
/// Both are upper bounds of the same infimum, so the smaller is the better
/// estimate, and the result is exactly symmetric in `a` and `b`.
/// `d_c_before` always refers to `b` registered to `a`; when `reversed` is
/// set, `gamma_star` is the warp of `a` that attains `d_q`. Inverting it to
/// warp `b` instead does not reproduce `d_q` on sampled data.
pub fn register_symmetric<M: Manifold>(
    m: &M,
    a: &TsrvfRepr<M>,
    b: &TsrvfRepr<M>,
    opts: &RegisterOptions,
) -> Result<RegistrationResult> {
    let forward = register_tsrvf(m, a, b, opts)?;
    let backward = register_tsrvf(m, b, a, opts)?;
    if !(backward.d_q < forward.d_q) {
        return Ok(forward);
    }
    Ok(RegistrationResult {
        gamma_star: backward.gamma_star,
        d_q: backward.d_q,
        d_c_before: forward.d_c_before,
        iterations: forward.iterations + backward.iterations,
        converged: backward.converged,
        approximate: backward.approximate,
        objective_history: backward.objective_history,
        reversed: true,
    })
}

/// Registers `b` to `a`; both must share the sample count.
pub fn pairwise_register<M: Manifold>(
    m: &M,
    a: &Trajectory<M>,
    b: &Trajectory<M>,
    opts: &RegisterOptions,
) -> Result<RegistrationResult> {
    check_len(a.len(), b.len())?;
    register_tsrvf(m, &tsrvf_of(m, a)?, &tsrvf_of(m, b)?, opts)
}

/// [`pairwise_register`] with the start-point geodesic as baseline.
pub fn fast_register<M: Manifold>(
    m: &M,
    a: &Trajectory<M>,
    b: &Trajectory<M>,
    opts: &RegisterOptions,
) -> Result<RegistrationResult> {
    let opts = RegisterOptions {
        mode: BaselineMode::Fast,
        ..*opts
    };
    pairwise_register(m, a, b, &opts)
}

pub fn quotient_distance_dq<M: Manifold>(
    m: &M,
    a: &Trajectory<M>,
    b: &Trajectory<M>,
    opts: &RegisterOptions,
) -> Result<f64> {
    Ok(pairwise_register(m, a, b, opts)?.d_q)
}

/// `min_γ ∫ d(α₁(t), α₂(γ(t))) dt` by classic time warping on the sample
/// grid. Steps that only advance `α₂` are free, which is what lets the
/// optimum pinch. Kept as a baseline; it is neither symmetric nor a metric.
pub fn naive_warped_distance<M: Manifold>(
    m: &M,
    a: &Trajectory<M>,
    b: &Trajectory<M>,
) -> Result<(f64, WarpFn)> {
    check_len(a.len(), b.len())?;
    let n = a.len();
    let h = 1.0 / (n - 1) as f64;
    let w = |i: usize| if i == 0 || i == n - 1 { 0.5 * h } else { h };
    let mut d = alloc::vec![0.0; n * n];
    for (i, x) in a.points().iter().enumerate() {
        for (j, y) in b.points().iter().enumerate() {
            d[i * n + j] = m.distance(x, y)?;
        }
    }
    let idx = |i: usize, j: usize| i * n + j;
    let mut cost = alloc::vec![f64::INFINITY; n * n];
    // 0: from (i−1, j−1), 1: from (i−1, j), 2: from (i, j−1)
    let mut from = alloc::vec![0u8; n * n];
    cost[0] = w(0) * d[0];
    for i in 0..n {
        for j in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            let arrive = w(i) * d[idx(i, j)];
            let mut best = f64::INFINITY;
            let mut mv = 0;
            if i > 0 && j > 0 && cost[idx(i - 1, j - 1)] + arrive < best {
                best = cost[idx(i - 1, j - 1)] + arrive;
                mv = 0;
            }
            if i > 0 && cost[idx(i - 1, j)] + arrive < best {
                best = cost[idx(i - 1, j)] + arrive;
                mv = 1;
            }
            if j > 0 && cost[idx(i, j - 1)] < best {
                best = cost[idx(i, j - 1)];
                mv = 2;
            }
            cost[idx(i, j)] = best;
            from[idx(i, j)] = mv;
        }
    }
    // γ(t_i) is the first α₂ sample matched to α₁ sample i.
    let mut values = alloc::vec![0.0; n];
    let (mut i, mut j) = (n - 1, n - 1);
    loop {
        values[i] = j as f64 * h;
        if i == 0 && j == 0 {
            break;
        }
        match from[idx(i, j)] {
            0 => {
                i -= 1;
                j -= 1;
            }
            1 => i -= 1,
            _ => j -= 1,
        }
    }
    values[n - 1] = 1.0;
    Ok((cost[idx(n - 1, n - 1)], WarpFn::new(values)?))
}
