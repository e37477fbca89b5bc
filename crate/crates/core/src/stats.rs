//! Karcher means of trajectories under `d_q`, groupwise alignment and
//! cross-sectional summaries.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;

use crate::bundle::{bundle_exp, bundle_shoot, initial_direction, BundleTangent};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, TangentVector};
use crate::registration::{register_tsrvf, BaselineMode, RegisterOptions};
use crate::tsrvf::{
    check_len, reconstruct, tsrvf_of, warp_trajectory, warp_tsrvf, Trajectory, TsrvfRepr,
};
use crate::warp::WarpFn;

#[cfg(feature = "parallel")]
fn map_all<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_all<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Sum by recursive halving, so rounding does not depend on a long
/// left-to-right chain.
pub fn pairwise_sum<V: TangentVector>(items: &[V]) -> Option<V> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let (a, b) = items.split_at(n / 2);
            Some(pairwise_sum(a)?.plus(&pairwise_sum(b)?))
        }
    }
}

fn mean_of<V: TangentVector>(items: &[V]) -> Option<V> {
    Some(pairwise_sum(items)?.scaled(1.0 / items.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanOptions {
    pub register: RegisterOptions,
    /// Step along the average direction.
    pub step: f64,
    /// Stop once both average-direction norms fall below this fraction of
    /// their first values.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Step halvings tried when an update increases the objective.
    pub max_halvings: usize,
}

impl Default for MeanOptions {
    fn default() -> Self {
        Self {
            register: RegisterOptions::default(),
            step: 0.5,
            rel_tol: 1e-3,
            max_iter: 20,
            max_halvings: 6,
        }
    }
}

pub struct MeanResult<M: Manifold> {
    pub mean_repr: TsrvfRepr<M>,
    pub mean_trajectory: Trajectory<M>,
    /// Each input warped onto the mean, with its warp.
    pub aligned: Vec<(Trajectory<M>, WarpFn)>,
    /// `Σ d_q(mean, αᵢ)²` at each accepted iterate.
    pub variance_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl<M: Manifold> core::fmt::Debug for MeanResult<M> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MeanResult")
            .field("variance_history", &self.variance_history)
            .field("iterations", &self.iterations)
            .field("converged", &self.converged)
            .finish_non_exhaustive()
    }
}

/// Alignment of every input to one candidate mean.
struct Alignment<M: Manifold> {
    warps: Vec<WarpFn>,
    /// Inputs with their TSRVFs warped onto the candidate.
    warped: Vec<TsrvfRepr<M>>,
    variance: f64,
}

fn align_all<M: Manifold>(
    m: &M,
    mean: &TsrvfRepr<M>,
    reps: &[TsrvfRepr<M>],
    opts: &RegisterOptions,
) -> Result<Alignment<M>> {
    let results = map_all(reps, |r| register_tsrvf(m, mean, r, opts));
    let mut warps = Vec::with_capacity(reps.len());
    let mut warped = Vec::with_capacity(reps.len());
    let mut sq = Vec::with_capacity(reps.len());
    for (res, r) in results.into_iter().zip(reps) {
        let res = res?;
        warped.push(TsrvfRepr::new(
            r.start.clone(),
            warp_tsrvf(&r.q, &res.gamma_star),
        )?);
        sq.push(res.d_q * res.d_q);
        warps.push(res.gamma_star);
    }
    Ok(Alignment {
        warps,
        warped,
        variance: sq.iter().sum(),
    })
}

/// Average inverse-exponential direction from `mean` to the aligned inputs.
fn average_direction<M: Manifold>(
    m: &M,
    mean: &TsrvfRepr<M>,
    warped: &[TsrvfRepr<M>],
    opts: &RegisterOptions,
) -> Result<BundleTangent<M>> {
    let dirs = map_all(warped, |r| -> Result<BundleTangent<M>> {
        if opts.mode == BaselineMode::Full && r.start != mean.start {
            let shot = bundle_shoot(m, mean, r, &opts.shoot)?;
            if !shot.converged {
                log::warn!("mean direction from a non-converged shot");
            }
            Ok(shot.direction)
        } else {
            initial_direction(m, mean, r)
        }
    });
    let dirs = dirs.into_iter().collect::<Result<Vec<_>>>()?;
    let us: Vec<M::Tangent> = dirs.iter().map(|d| d.u.clone()).collect();
    let u = mean_of(&us).expect("nonempty");
    let t = mean.len();
    let mut w = Vec::with_capacity(t);
    let mut column = Vec::with_capacity(dirs.len());
    for k in 0..t {
        column.clear();
        column.extend(dirs.iter().map(|d| d.w[k].clone()));
        w.push(mean_of(&column).expect("nonempty"));
    }
    Ok(BundleTangent { u, w })
}

fn step_mean<M: Manifold>(
    m: &M,
    mean: &TsrvfRepr<M>,
    dir: &BundleTangent<M>,
    steps: usize,
) -> Result<TsrvfRepr<M>> {
    let path = bundle_exp(m, mean, dir, steps)?;
    TsrvfRepr::new(path.end_point().clone(), path.end_fiber().to_vec())
}

/// Index of the input with the smallest total `d_q` to the others.
pub fn medoid<M: Manifold>(m: &M, reps: &[TsrvfRepr<M>], opts: &RegisterOptions) -> Result<usize> {
    if reps.is_empty() {
        return Err(Error::invalid("medoid of an empty set"));
    }
    let rows = map_all(&(0..reps.len()).collect::<Vec<_>>(), |&i| -> Result<f64> {
        let mut s = 0.0;
        for (j, r) in reps.iter().enumerate() {
            if i != j {
                s += register_tsrvf(m, &reps[i], r, opts)?.d_q;
            }
        }
        Ok(s)
    });
    let mut best = (0, f64::INFINITY);
    for (i, s) in rows.into_iter().enumerate() {
        let s = s?;
        if s < best.1 {
            best = (i, s);
        }
    }
    Ok(best.0)
}

/// Karcher mean under `d_q`: align all inputs to the current mean, average
/// the inverse-exponential directions and step along the bundle geodesic.
/// A step that increases `Σ d_q²` is retried at half length.
pub fn karcher_mean<M: Manifold>(
    m: &M,
    trajectories: &[Trajectory<M>],
    opts: &MeanOptions,
) -> Result<MeanResult<M>> {
    if trajectories.is_empty() {
        return Err(Error::invalid("the mean of no trajectories"));
    }
    let t = trajectories[0].len();
    for a in trajectories {
        check_len(t, a.len())?;
    }
    let reps = trajectories
        .iter()
        .map(|a| tsrvf_of(m, a))
        .collect::<Result<Vec<_>>>()?;
    let fast = RegisterOptions {
        mode: BaselineMode::Fast,
        ..opts.register
    };
    let start = if reps.len() > 2 {
        medoid(m, &reps, &fast)?
    } else {
        0
    };
    let steps = opts.register.shoot.steps;

    let mut mean = reps[start].clone();
    let mut aligned = align_all(m, &mean, &reps, &opts.register)?;
    let mut history = alloc::vec![aligned.variance];
    let mut first: Option<(f64, f64)> = None;
    let mut iterations = 0;
    let mut converged = false;
    'outer: while iterations < opts.max_iter {
        iterations += 1;
        let dir = average_direction(m, &mean, &aligned.warped, &opts.register)?;
        let (un, wn) = dir.norms_sq(m, &mean.start);
        let (un, wn) = (un.sqrt(), wn.sqrt());
        let (u0, w0) = *first.get_or_insert((un, wn));
        if un <= opts.rel_tol * u0 + 1e-12 && wn <= opts.rel_tol * w0 + 1e-12 {
            converged = true;
            break;
        }
        let mut eps = opts.step;
        for _ in 0..=opts.max_halvings {
            let cand = step_mean(m, &mean, &dir.scaled(eps), steps)?;
            let cand_aligned = align_all(m, &cand, &reps, &opts.register)?;
            if cand_aligned.variance <= aligned.variance + 1e-12 {
                mean = cand;
                aligned = cand_aligned;
                history.push(aligned.variance);
                continue 'outer;
            }
            eps *= 0.5;
        }
        log::debug!("mean update stalled after {iterations} iterations");
        break;
    }
    let aligned_out = trajectories
        .iter()
        .zip(aligned.warps)
        .map(|(a, g)| Ok((warp_trajectory(m, a, &g)?, g)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeanResult {
        mean_trajectory: reconstruct(m, &mean)?,
        mean_repr: mean,
        aligned: aligned_out,
        variance_history: history,
        iterations,
        converged,
    })
}

/// Registers every input to `template`; failures are kept per input.
pub fn groupwise_align<M: Manifold>(
    m: &M,
    trajectories: &[Trajectory<M>],
    template: &TsrvfRepr<M>,
    opts: &RegisterOptions,
) -> Vec<Result<(Trajectory<M>, WarpFn)>> {
    map_all(trajectories, |a| {
        check_len(template.len(), a.len())?;
        let r = register_tsrvf(m, template, &tsrvf_of(m, a)?, opts)?;
        Ok((warp_trajectory(m, a, &r.gamma_star)?, r.gamma_star))
    })
}

/// Karcher mean of points by fixed-point iteration on the average log.
pub fn pointwise_mean<M: Manifold>(m: &M, points: &[M::Point]) -> Result<M::Point> {
    let Some(first) = points.first() else {
        return Err(Error::invalid("the mean of no points"));
    };
    let mut mu = first.clone();
    for _ in 0..100 {
        let logs = points
            .iter()
            .map(|x| m.log(&mu, x))
            .collect::<Result<Vec<_>>>()?;
        let g = mean_of(&logs).expect("nonempty");
        if m.norm(&mu, &g) < 1e-12 {
            break;
        }
        mu = m.exp(&mu, &g)?;
    }
    Ok(mu)
}

/// Mean over samples of `(1/n)·Σᵢ d(μ(t), αᵢ(t))²`, with `μ(t)` the
/// pointwise Karcher mean.
pub fn cross_sectional_variance<M: Manifold>(m: &M, trajectories: &[Trajectory<M>]) -> Result<f64> {
    let Some(first) = trajectories.first() else {
        return Err(Error::invalid("the variance of no trajectories"));
    };
    let t = first.len();
    for a in trajectories {
        check_len(t, a.len())?;
    }
    let n = trajectories.len() as f64;
    let mut total = 0.0;
    for k in 0..t {
        let pts: Vec<M::Point> = trajectories.iter().map(|a| a.points()[k].clone()).collect();
        let mu = pointwise_mean(m, &pts)?;
        let mut s = 0.0;
        for x in &pts {
            let d = m.distance(&mu, x)?;
            s += d * d;
        }
        total += s / n;
    }
    Ok(total / t as f64)
}
