//! Covariance descriptors of per-pixel image features.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
#[cfg(not(feature = "std"))]
use nalgebra::{ComplexField, RealField};

use crate::error::{Error, Result};
use crate::spd::{SpdManifold, SpdPoint};
use crate::tsrvf::Trajectory;

/// Overlap fraction used when splitting a frame into quadrants.
pub const DEFAULT_OVERLAP: f64 = 0.1;

/// Below this total gradient magnitude a HOG block is emitted as zeros.
const HOG_GUARD: f64 = 1e-12;

/// Grayscale frame with intensities stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image"));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Copy of the `w × h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid("crop window exceeds the frame"));
        }
        Self::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y))
    }

    /// Bilinear resampling to `w × h` with pixel centres aligned.
    pub fn resized(&self, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || self.width == 0 || self.height == 0 {
            return Err(Error::invalid("cannot resize an empty frame"));
        }
        if w == self.width && h == self.height {
            return Ok(self.clone());
        }
        let sx = self.width as f64 / w as f64;
        let sy = self.height as f64 / h as f64;
        let axis = |u: f64, len: usize| -> (usize, usize, f64) {
            let u = u.clamp(0.0, (len - 1) as f64);
            let i = (u.floor() as usize).min(len - 1);
            let j = (i + 1).min(len - 1);
            (i, j, u - i as f64)
        };
        Self::from_fn(w, h, |x, y| {
            let (x0, x1, fx) = axis((x as f64 + 0.5) * sx - 0.5, self.width);
            let (y0, y1, fy) = axis((y as f64 + 0.5) * sy - 0.5, self.height);
            let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
            let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
            top * (1.0 - fy) + bottom * fy
        })
    }
}

/// Per-pixel feature vectors on a `width × height` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("feature dimension must be at least 2"));
        }
        if values.len() != width * height * dim {
            return Err(Error::DimensionMismatch {
                expected: width * height * dim,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map"));
        }
        Ok(FeatureMap {
            width,
            height,
            dim,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature vector of pixel `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let k = (y * self.width + x) * self.dim;
        &self.values[k..k + self.dim]
    }

    /// Iterator over all feature vectors in row order.
    pub fn pixels(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Single channel as an image.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.pixels().map(|f| f[c]).collect()
    }
}

/// Empirical covariance `(1/|I|) Σ (f − f̄)(f − f̄)ᵀ`, one pass (Welford).
pub fn feature_covariance(map: &FeatureMap) -> Result<DMatrix<f64>> {
    if map.len() < 2 {
        return Err(Error::invalid("covariance needs at least two pixels"));
    }
    let d = map.dim();
    let mut mean = vec![0.0; d];
    let mut delta = vec![0.0; d];
    let mut m2 = DMatrix::<f64>::zeros(d, d);
    for (k, f) in map.pixels().enumerate() {
        let n = (k + 1) as f64;
        for i in 0..d {
            delta[i] = f[i] - mean[i];
            mean[i] += delta[i] / n;
        }
        // co-moment update uses the old delta on one side and the new residual on the other
        for i in 0..d {
            let r = f[i] - mean[i];
            for j in 0..d {
                m2[(i, j)] += r * delta[j];
            }
        }
    }
    let m2 = (&m2 + m2.transpose()) * 0.5;
    Ok(m2 / map.len() as f64)
}

/// Regularized covariance of all pixel features as a point of 𝒫̃(d).
pub fn covariance_descriptor(map: &FeatureMap) -> Result<SpdPoint> {
    SpdPoint::regularized(feature_covariance(map)?)
}

/// Interior stencil value along one axis, copied from the nearest interior pixel at the border.
#[inline]
fn interior(i: usize, len: usize) -> usize {
    i.clamp(1, len - 2)
}

/// The seven intensity features `(x, y, I, |I_x|, |I_y|, |I_xx|, |I_yy|)`.
///
/// Coordinates and derivatives are taken with respect to `[0, 1]`-normalized
/// positions. Central differences are computed on interior pixels and the
/// border pixels repeat the nearest interior value.
pub fn intensity_features(img: &GrayImage) -> Result<FeatureMap> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::invalid(
            "intensity features need a frame of at least 3×3",
        ));
    }
    let sx = (w - 1) as f64;
    let sy = (h - 1) as f64;
    let mut values = Vec::with_capacity(w * h * 7);
    for y in 0..h {
        let yc = interior(y, h);
        for x in 0..w {
            let xc = interior(x, w);
            let ix = (img.get(xc + 1, y) - img.get(xc - 1, y)) * 0.5 * sx;
            let iy = (img.get(x, yc + 1) - img.get(x, yc - 1)) * 0.5 * sy;
            let ixx = (img.get(xc + 1, y) - 2.0 * img.get(xc, y) + img.get(xc - 1, y)) * sx * sx;
            let iyy = (img.get(x, yc + 1) - 2.0 * img.get(x, yc) + img.get(x, yc - 1)) * sy * sy;
            values.extend_from_slice(&[
                x as f64 / sx,
                y as f64 / sy,
                img.get(x, y),
                ix.abs(),
                iy.abs(),
                ixx.abs(),
                iyy.abs(),
            ]);
        }
    }
    FeatureMap::new(w, h, 7, values)
}

/// Cell, block and orientation layout of the HOG features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HogParams {
    /// Cell side in pixels.
    pub cell: usize,
    /// Block side in cells.
    pub block: usize,
    /// Unsigned orientation bins over `[0, π)`.
    pub bins: usize,
}

impl Default for HogParams {
    fn default() -> Self {
        HogParams {
            cell: 8,
            block: 2,
            bins: 7,
        }
    }
}

/// Raw per-cell orientation histograms, `cells_x × cells_y × bins` in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellHistograms {
    pub cells_x: usize,
    pub cells_y: usize,
    pub bins: usize,
    pub values: Vec<f64>,
}

impl CellHistograms {
    pub fn cell(&self, cx: usize, cy: usize) -> &[f64] {
        let k = (cy * self.cells_x + cx) * self.bins;
        &self.values[k..k + self.bins]
    }
}

/// Pixel gradient by clamped central differences, in intensity per pixel.
#[inline]
fn pixel_gradient(img: &GrayImage, x: usize, y: usize) -> (f64, f64) {
    let (w, h) = (img.width(), img.height());
    let gx = img.get((x + 1).min(w - 1), y) - img.get(x.saturating_sub(1), y);
    let gy = img.get(x, (y + 1).min(h - 1)) - img.get(x, y.saturating_sub(1));
    (gx * 0.5, gy * 0.5)
}

/// Unsigned gradient histograms of every full cell.
///
/// Each pixel votes its gradient magnitude into the two bins whose centres
/// `kπ/bins` bracket its orientation, split linearly.
pub fn cell_histograms(img: &GrayImage, params: &HogParams) -> Result<CellHistograms> {
    if params.cell == 0 || params.block == 0 || params.bins < 2 {
        return Err(Error::invalid(
            "HOG needs a nonzero cell and block and at least two bins",
        ));
    }
    let cells_x = img.width() / params.cell;
    let cells_y = img.height() / params.cell;
    let bins = params.bins;
    let width = PI / bins as f64;
    let mut values = vec![0.0; cells_x * cells_y * bins];
    for y in 0..cells_y * params.cell {
        for x in 0..cells_x * params.cell {
            let (gx, gy) = pixel_gradient(img, x, y);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut theta = gy.atan2(gx);
            if theta < 0.0 {
                theta += PI;
            }
            let pos = theta / width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = (lo as usize) % bins;
            let hi = (lo + 1) % bins;
            let k = ((y / params.cell) * cells_x + x / params.cell) * bins;
            values[k + lo] += mag * (1.0 - frac);
            values[k + hi] += mag * frac;
        }
    }
    Ok(CellHistograms {
        cells_x,
        cells_y,
        bins,
        values,
    })
}

/// Block-normalized HOG vectors, one feature vector per block position.
///
/// Blocks of `block × block` cells slide by one cell; their cell histograms
/// are summed and L2-normalized.
pub fn hog_features(img: &GrayImage, params: &HogParams) -> Result<FeatureMap> {
    let side = params.cell * params.block;
    if img.width() < side || img.height() < side {
        return Err(Error::invalid("frame is smaller than one HOG block"));
    }
    let cells = cell_histograms(img, params)?;
    let bx = cells.cells_x + 1 - params.block;
    let by = cells.cells_y + 1 - params.block;
    let bins = params.bins;
    let mut values = Vec::with_capacity(bx * by * bins);
    let mut acc = vec![0.0; bins];
    for y in 0..by {
        for x in 0..bx {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for cy in y..y + params.block {
                for cx in x..x + params.block {
                    for (a, v) in acc.iter_mut().zip(cells.cell(cx, cy)) {
                        *a += v;
                    }
                }
            }
            let mass: f64 = acc.iter().sum();
            if mass < HOG_GUARD {
                values.extend(core::iter::repeat_n(0.0, bins));
            } else {
                let norm = acc.iter().map(|a| a * a).sum::<f64>().sqrt();
                values.extend(acc.iter().map(|a| a / norm));
            }
        }
    }
    FeatureMap::new(bx, by, bins, values)
}

/// Per-pixel feature extractor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureKind {
    Intensity,
    Hog(HogParams),
}

impl FeatureKind {
    pub fn extract(&self, img: &GrayImage) -> Result<FeatureMap> {
        match self {
            FeatureKind::Intensity => intensity_features(img),
            FeatureKind::Hog(p) => hog_features(img, p),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureKind::Intensity => 7,
            FeatureKind::Hog(p) => p.bins,
        }
    }
}

/// Side of one overlapping quadrant: `⌈(0.5 + ρ)·len⌉`, at most `len`.
pub fn quadrant_side(len: usize, overlap: f64) -> usize {
    (((0.5 + overlap) * len as f64).ceil() as usize).min(len)
}

/// Upper-left, upper-right, lower-left and lower-right windows as `(x0, y0, w, h)`.
pub fn quadrant_windows(
    width: usize,
    height: usize,
    overlap: f64,
) -> [(usize, usize, usize, usize); 4] {
    let qw = quadrant_side(width, overlap);
    let qh = quadrant_side(height, overlap);
    let (rx, ry) = (width - qw, height - qh);
    [
        (0, 0, qw, qh),
        (rx, 0, qw, qh),
        (0, ry, qw, qh),
        (rx, ry, qw, qh),
    ]
}

/// Covariance descriptors of the four overlapping quadrants.
pub fn quadrant_descriptors(
    img: &GrayImage,
    kind: &FeatureKind,
    overlap: f64,
) -> Result<[SpdPoint; 4]> {
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::invalid("quadrants need a frame of at least 2×2"));
    }
    if !(0.0..=0.5).contains(&overlap) {
        return Err(Error::Domain {
            what: "overlap",
            value: overlap,
            domain: "[0, 0.5]",
        });
    }
    let w = quadrant_windows(img.width(), img.height(), overlap);
    let one = |k: usize| -> Result<SpdPoint> {
        let (x0, y0, qw, qh) = w[k];
        covariance_descriptor(&kind.extract(&img.crop(x0, y0, qw, qh)?)?)
    };
    Ok([one(0)?, one(1)?, one(2)?, one(3)?])
}

/// How a video is turned into descriptors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    /// Split every frame into four overlapping quadrants with this overlap.
    pub quadrants: Option<f64>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            kind: FeatureKind::Intensity,
            quadrants: None,
        }
    }
}

/// Descriptor trajectory of a whole video, or one per quadrant.
#[derive(Debug, Clone, PartialEq)]
pub enum VideoDescriptor {
    Whole(Trajectory<SpdManifold>),
    Quadrants(Box<[Trajectory<SpdManifold>; 4]>),
}

impl VideoDescriptor {
    pub fn frames(&self) -> usize {
        match self {
            VideoDescriptor::Whole(t) => t.len(),
            VideoDescriptor::Quadrants(q) => q[0].len(),
        }
    }

    pub fn parts(&self) -> &[Trajectory<SpdManifold>] {
        match self {
            VideoDescriptor::Whole(t) => core::slice::from_ref(t),
            VideoDescriptor::Quadrants(q) => &q[..],
        }
    }
}

fn frame_descriptors(img: &GrayImage, config: &FeatureConfig) -> Result<Vec<SpdPoint>> {
    match config.quadrants {
        None => Ok(vec![covariance_descriptor(&config.kind.extract(img)?)?]),
        Some(rho) => Ok(quadrant_descriptors(img, &config.kind, rho)?.into()),
    }
}

/// Per-frame covariance descriptors assembled into trajectories on a uniform grid.
///
/// All frames must share one size; errors name the offending frame.
pub fn video_to_trajectory(
    frames: &[GrayImage],
    config: &FeatureConfig,
) -> Result<VideoDescriptor> {
    if frames.len() < 2 {
        return Err(Error::invalid("a video needs at least two frames"));
    }
    let (w, h) = (frames[0].width(), frames[0].height());
    for (index, f) in frames.iter().enumerate() {
        if f.width() != w || f.height() != h {
            return Err(Error::Frame {
                index,
                source: Box::new(Error::DimensionMismatch {
                    expected: w * h,
                    found: f.width() * f.height(),
                }),
            });
        }
    }
    let per_frame = |(index, f): (usize, &GrayImage)| {
        frame_descriptors(f, config).map_err(|e| Error::Frame {
            index,
            source: Box::new(e),
        })
    };
    #[cfg(feature = "parallel")]
    let descriptors: Vec<Result<Vec<SpdPoint>>> = {
        use rayon::prelude::*;
        frames.par_iter().enumerate().map(per_frame).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let descriptors: Vec<Result<Vec<SpdPoint>>> =
        frames.iter().enumerate().map(per_frame).collect();

    let descriptors = descriptors.into_iter().collect::<Result<Vec<_>>>()?;
    let parts = descriptors[0].len();
    let mut tracks: Vec<Vec<SpdPoint>> = (0..parts)
        .map(|_| Vec::with_capacity(frames.len()))
        .collect();
    for d in descriptors {
        for (track, p) in tracks.iter_mut().zip(d) {
            track.push(p);
        }
    }
    let mut tracks = tracks.into_iter().map(Trajectory::new);
    if parts == 1 {
        Ok(VideoDescriptor::Whole(tracks.next().unwrap()?))
    } else {
        let ul = tracks.next().unwrap()?;
        let ur = tracks.next().unwrap()?;
        let ll = tracks.next().unwrap()?;
        let lr = tracks.next().unwrap()?;
        Ok(VideoDescriptor::Quadrants(Box::new([ul, ur, ll, lr])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use crate::spd::regularization;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| rng.random_range(0.0..1.0)).unwrap()
    }

    fn random_map(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMap {
        let v = (0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect();
        FeatureMap::new(n, 1, d, v).unwrap()
    }

    fn two_pass(map: &FeatureMap) -> DMatrix<f64> {
        let d = map.dim();
        let n = map.len() as f64;
        let mut mean = vec![0.0; d];
        for f in map.pixels() {
            for i in 0..d {
                mean[i] += f[i] / n;
            }
        }
        DMatrix::from_fn(d, d, |i, j| {
            map.pixels()
                .map(|f| (f[i] - mean[i]) * (f[j] - mean[j]))
                .sum::<f64>()
                / n
        })
    }

    /// Correlation of the replicate-padded image with a 3-tap kernel along one axis.
    fn stencil(img: &GrayImage, kernel: [f64; 3], horizontal: bool, x: usize, y: usize) -> f64 {
        let (w, h) = (img.width() as isize, img.height() as isize);
        let (x, y) = (x as isize, y as isize);
        let (cx, cy) = if horizontal {
            (x.clamp(1, w - 2), y)
        } else {
            (x, y.clamp(1, h - 2))
        };
        (-1..=1)
            .map(|k: isize| {
                let (px, py) = if horizontal {
                    (cx + k, cy)
                } else {
                    (cx, cy + k)
                };
                kernel[(k + 1) as usize] * img.get(px as usize, py as usize)
            })
            .sum()
    }

    #[test]
    fn constant_map_gives_regularized_zero() {
        let map = FeatureMap::new(4, 4, 3, vec![0.7; 48]).unwrap();
        let p = covariance_descriptor(&map).unwrap();
        let eps = regularization(&DMatrix::zeros(3, 3));
        assert_relative_eq!(
            p.mat().clone(),
            DMatrix::identity(3, 3) * eps,
            epsilon = 1e-20
        );
    }

    #[test]
    fn two_pixel_covariance_by_hand() {
        let map = FeatureMap::new(2, 1, 2, vec![0.0, 0.0, 2.0, 0.0]).unwrap();
        let c = feature_covariance(&map).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let p = covariance_descriptor(&map).unwrap();
        let eps = regularization(&c);
        assert_relative_eq!(p.mat()[(0, 0)], 1.0 + eps, epsilon = 1e-15);
        assert_relative_eq!(p.mat()[(1, 1)], eps, epsilon = 1e-15);
    }

    #[test]
    fn covariance_matches_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for d in [2, 5, 7] {
            let map = random_map(&mut rng, 500, d);
            let c = feature_covariance(&map).unwrap();
            assert!((c - two_pass(&map)).amax() < 1e-12);
        }
    }

    #[test]
    fn covariance_rejects_tiny_maps() {
        assert!(FeatureMap::new(0, 0, 2, vec![])
            .and_then(|m| feature_covariance(&m))
            .is_err());
        assert!(FeatureMap::new(1, 1, 2, vec![1.0, 2.0])
            .and_then(|m| feature_covariance(&m))
            .is_err());
        assert!(FeatureMap::new(2, 1, 1, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn constant_image_has_flat_derivatives() {
        let img = GrayImage::new(6, 5, vec![0.3; 30]).unwrap();
        let f = intensity_features(&img).unwrap();
        assert_eq!(f.dim(), 7);
        for c in 3..7 {
            assert!(f.channel(c).iter().all(|&v| v == 0.0));
        }
        assert_eq!(f.pixel(5, 4)[..3], [1.0, 1.0, 0.3]);
    }

    #[test]
    fn ramp_has_unit_slope() {
        let img = GrayImage::from_fn(9, 4, |x, _| x as f64 / 8.0).unwrap();
        let f = intensity_features(&img).unwrap();
        for p in f.pixels() {
            assert_relative_eq!(p[3], 1.0, epsilon = 1e-12);
            assert_eq!(p[4], 0.0);
            assert!(p[5].abs() < 1e-12);
            assert_eq!(p[6], 0.0);
        }
    }

    #[test]
    fn derivatives_match_stencil_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_image(&mut rng, 11, 7);
        let f = intensity_features(&img).unwrap();
        let (sx, sy) = (10.0, 6.0);
        for y in 0..7 {
            for x in 0..11 {
                let p = f.pixel(x, y);
                let expect = [
                    (stencil(&img, [-0.5, 0.0, 0.5], true, x, y) * sx).abs(),
                    (stencil(&img, [-0.5, 0.0, 0.5], false, x, y) * sy).abs(),
                    (stencil(&img, [1.0, -2.0, 1.0], true, x, y) * sx * sx).abs(),
                    (stencil(&img, [1.0, -2.0, 1.0], false, x, y) * sy * sy).abs(),
                ];
                for (a, b) in p[3..].iter().zip(expect) {
                    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn intensity_rejects_small_frames() {
        let img = GrayImage::new(2, 5, vec![0.0; 10]).unwrap();
        assert!(intensity_features(&img).is_err());
    }

    #[test]
    fn hog_of_constant_image_is_zero() {
        let img = GrayImage::new(32, 24, vec![0.5; 32 * 24]).unwrap();
        let f = hog_features(&img, &HogParams::default()).unwrap();
        assert_eq!((f.width(), f.height(), f.dim()), (3, 2, 7));
        assert!(f.pixels().all(|p| p.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn vertical_edge_votes_horizontal_bin() {
        let img = GrayImage::from_fn(32, 32, |x, _| if x < 13 { 0.0 } else { 1.0 }).unwrap();
        let cells = cell_histograms(&img, &HogParams::default()).unwrap();
        let total: f64 = cells.values.iter().sum();
        let bin0: f64 = cells.values.chunks(7).map(|c| c[0]).sum();
        assert!(total > 0.0);
        assert_relative_eq!(bin0, total, epsilon = 1e-12);
        let f = hog_features(&img, &HogParams::default()).unwrap();
        for p in f.pixels() {
            if p.iter().any(|&v| v != 0.0) {
                assert_relative_eq!(p[0], 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn histogram_mass_equals_gradient_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let img = random_image(&mut rng, 37, 29);
        let params = HogParams::default();
        let cells = cell_histograms(&img, &params).unwrap();
        let mut total = 0.0;
        for y in 0..24 {
            for x in 0..32 {
                let gx = img.get((x + 1).min(36), y) - img.get(x.saturating_sub(1), y);
                let gy = img.get(x, (y + 1).min(28)) - img.get(x, y.saturating_sub(1));
                total += 0.5 * gx.hypot(gy);
            }
        }
        let mass: f64 = cells.values.iter().sum();
        assert!((mass - total).abs() < 1e-9);
        let f = hog_features(&img, &params).unwrap();
        for p in f.pixels() {
            assert_relative_eq!(p.iter().map(|v| v * v).sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hog_rejects_frames_below_one_block() {
        let img = GrayImage::new(15, 40, vec![0.0; 600]).unwrap();
        assert!(hog_features(&img, &HogParams::default()).is_err());
    }

    #[test]
    fn periodic_image_gives_equal_quadrants() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (w, h, rho) in [(20, 16, 0.0), (20, 20, DEFAULT_OVERLAP)] {
            let (px, py) = (w - quadrant_side(w, rho), h - quadrant_side(h, rho));
            let tile = random_image(&mut rng, px, py);
            let img = GrayImage::from_fn(w, h, |x, y| tile.get(x % px, y % py)).unwrap();
            let q = quadrant_descriptors(&img, &FeatureKind::Intensity, rho).unwrap();
            for k in 1..4 {
                assert!((q[k].mat() - q[0].mat()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_overlap_gives_exact_quarters() {
        let w = quadrant_windows(20, 14, 0.0);
        assert_eq!(
            w,
            [(0, 0, 10, 7), (10, 0, 10, 7), (0, 7, 10, 7), (10, 7, 10, 7)]
        );
    }

    #[test]
    fn quadrant_sizes_match_closed_form() {
        for (w, h) in [(20, 20), (37, 23), (64, 48), (5, 3)] {
            let side_w = ((0.6 * w as f64).ceil() as usize).min(w);
            let side_h = ((0.6 * h as f64).ceil() as usize).min(h);
            for (x0, y0, qw, qh) in quadrant_windows(w, h, DEFAULT_OVERLAP) {
                assert_eq!(qw * qh, side_w * side_h);
                assert!(x0 + qw <= w && y0 + qh <= h);
            }
        }
    }

    fn blob(w: usize, h: usize, cx: f64, cy: f64) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| {
            let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            (-r2 / 18.0).exp()
        })
        .unwrap()
    }

    #[test]
    fn identical_frames_give_constant_trajectory() {
        let img = blob(24, 24, 10.0, 12.0);
        let v = video_to_trajectory(&[img.clone(), img], &FeatureConfig::default()).unwrap();
        let VideoDescriptor::Whole(t) = v else {
            panic!()
        };
        assert_eq!(t.len(), 2);
        assert_eq!(t.points()[0], t.points()[1]);
    }

    #[test]
    fn moving_blob_gives_moving_trajectory() {
        let frames: Vec<_> = (0..10)
            .map(|k| blob(48, 48, 8.0 + 3.0 * k as f64, 24.0))
            .collect();
        let m = SpdManifold::new();
        let v = video_to_trajectory(&frames, &FeatureConfig::default()).unwrap();
        assert_eq!(v.frames(), 10);
        let t = &v.parts()[0];
        assert!(t.points().iter().all(|p| p.dim() == 7));
        assert!(m.distance(&t.points()[0], &t.points()[9]).unwrap() > 0.1);

        let hog = FeatureConfig {
            kind: FeatureKind::Hog(HogParams::default()),
            quadrants: Some(DEFAULT_OVERLAP),
        };
        let v = video_to_trajectory(&frames, &hog).unwrap();
        assert_eq!(v.parts().len(), 4);
        assert!(v
            .parts()
            .iter()
            .all(|t| t.len() == 10 && t.start().dim() == 7));
    }

    #[test]
    fn translated_blob_changes_descriptor() {
        let m = SpdManifold::new();
        let a =
            covariance_descriptor(&intensity_features(&blob(24, 24, 8.0, 8.0)).unwrap()).unwrap();
        let b =
            covariance_descriptor(&intensity_features(&blob(24, 24, 15.0, 8.0)).unwrap()).unwrap();
        assert!(m.distance(&a, &b).unwrap() > 0.1);
    }

    #[test]
    fn frame_errors_carry_the_index() {
        let ok = blob(24, 24, 8.0, 8.0);
        let small = GrayImage::new(2, 2, vec![0.0; 4]).unwrap();
        let err = video_to_trajectory(&[ok.clone(), ok.clone(), small], &FeatureConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::Frame { index: 2, .. }));
        let hog = FeatureConfig {
            kind: FeatureKind::Hog(HogParams::default()),
            quadrants: None,
        };
        let tiny: Vec<_> = (0..3).map(|_| blob(12, 12, 4.0, 4.0)).collect();
        let err = video_to_trajectory(&tiny, &hog).unwrap_err();
        assert!(matches!(err, Error::Frame { index: 0, .. }));
        assert!(video_to_trajectory(&[ok], &FeatureConfig::default()).is_err());
    }

    #[test]
    fn resize_keeps_constants_and_identity() {
        let img = GrayImage::new(7, 5, vec![0.25; 35]).unwrap();
        let r = img.resized(13, 9).unwrap();
        assert!(r.data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(&mut rng, 6, 4);
        assert_eq!(img.resized(6, 4).unwrap(), img);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn descriptor_is_valid_and_order_invariant(seed in 0u64..1000, n in 2usize..40, d in 2usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let map = random_map(&mut rng, n, d);
            let p = covariance_descriptor(&map).unwrap();
            prop_assert!(p.eigenvalues().iter().all(|&l| l > 0.0));
            let mut rows: Vec<Vec<f64>> = map.pixels().map(|f| f.to_vec()).collect();
            rows.reverse();
            rows.rotate_left(seed as usize % n);
            let shuffled = FeatureMap::new(n, 1, d, rows.concat()).unwrap();
            let q = covariance_descriptor(&shuffled).unwrap();
            prop_assert!((p.mat() - q.mat()).amax() < 1e-10 * (1.0 + p.mat().amax()));
        }
    }
}
