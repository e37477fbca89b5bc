//! SPD matrices as the warped product of the unit-determinant manifold and
//! the log-determinant line.
//!
//! A point `P̃ = e^x · P` is split into its unit-determinant part `P` and the
//! coordinate `x = (1/n) log det P̃`. Tangent vectors are stored in body
//! coordinates `Ã = P̃⁻¹ Ṽ`, which are symmetric; `Ã = A + v·I` with `A`
//! trace-free (the unit component) and `v` the log-determinant velocity.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    asymmetry, bracket, frobenius_inner, symmetrize, MatrixFunction, SymEigen, TAU_PD_REL, TAU_SYM,
};
use crate::manifold::{Manifold, TangentVector};

/// Relative size of the ridge added to covariance estimates.
pub const REGULARIZATION_REL: f64 = 1e-6;
/// Absolute lower bound on the ridge, for all-zero covariances.
pub const REGULARIZATION_FLOOR: f64 = 1e-10;
/// Body coordinates of an ambient tangent must be symmetric to this tolerance.
const TAU_BODY_SYM: f64 = 1e-8;

/// Symmetric positive-definite matrix with its warped-product decomposition.
#[derive(Debug, Clone)]
pub struct SpdPoint {
    mat: DMatrix<f64>,
    unit: DMatrix<f64>,
    logdet_coord: f64,
    vectors: DMatrix<f64>,
    unit_values: DVector<f64>,
}

impl PartialEq for SpdPoint {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl SpdPoint {
    /// Validates `mat` and caches its decomposition.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(Error::invalid("empty matrix"));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SPD matrix"));
        }
        let asym = asymmetry(&mat);
        if asym > TAU_SYM {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let mat = symmetrize(&mat);
        let eig = SymEigen::new(&mat)?;
        let max = eig.max_value();
        let min = eig.min_value();
        if !(max > 0.0) || min <= TAU_PD_REL * max {
            return Err(Error::NotPositiveDefinite { eigenvalue: min });
        }
        let n = mat.nrows() as f64;
        let logs = eig.values.map(f64::ln);
        let x = logs.sum() / n;
        let unit_values = logs.map(|l| (l - x).exp());
        let unit = rebuild(&eig.vectors, &unit_values);
        Ok(Self {
            mat,
            unit,
            logdet_coord: x,
            vectors: eig.vectors,
            unit_values,
        })
    }

    /// `mat + ε·I` with `ε = 1e-6·tr(mat)/n` (floored), then validated.
    pub fn regularized(mat: DMatrix<f64>) -> Result<Self> {
        let n = mat.nrows();
        if !mat.is_square() || n == 0 {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: mat.ncols(),
            });
        }
        let eps = regularization(&mat);
        Self::new(symmetrize(&mat) + DMatrix::identity(n, n) * eps)
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    /// `c·I`; `c` must be positive.
    pub fn scaled_identity(n: usize, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite(), "scale must be positive");
        Self {
            mat: DMatrix::identity(n, n) * c,
            unit: DMatrix::identity(n, n),
            logdet_coord: c.ln(),
            vectors: DMatrix::identity(n, n),
            unit_values: DVector::from_element(n, 1.0),
        }
    }

    /// Builds a point from eigenvectors, unit-determinant eigenvalues and
    /// the log-determinant coordinate.
    fn from_spectrum(vectors: DMatrix<f64>, unit_values: DVector<f64>, x: f64) -> Result<Self> {
        if !x.is_finite() || unit_values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::NumericalRange {
                function: "exp",
                eigenvalue: unit_values.min(),
            });
        }
        let scale = x.exp();
        let unit = rebuild(&vectors, &unit_values);
        let mat = rebuild(&vectors, &unit_values.map(|u| u * scale));
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalRange {
                function: "exp",
                eigenvalue: x,
            });
        }
        Ok(Self {
            mat,
            unit,
            logdet_coord: x,
            vectors,
            unit_values,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// The unit-determinant factor `P`.
    pub fn unit_part(&self) -> &DMatrix<f64> {
        &self.unit
    }

    /// `x = (1/n) log det P̃`.
    pub fn logdet_coord(&self) -> f64 {
        self.logdet_coord
    }

    /// Eigenvalues of `P̃`.
    pub fn eigenvalues(&self) -> DVector<f64> {
        let s = self.logdet_coord.exp();
        self.unit_values.map(|u| u * s)
    }

    /// `P^p` for the unit-determinant part.
    pub fn unit_pow(&self, p: f64) -> DMatrix<f64> {
        rebuild(&self.vectors, &self.unit_values.map(|u| u.powf(p)))
    }

    /// `P̃²`, sharing the eigenvectors.
    pub fn squared(&self) -> Self {
        Self::from_spectrum(
            self.vectors.clone(),
            self.unit_values.map(|u| u * u),
            2.0 * self.logdet_coord,
        )
        .expect("square of a valid point")
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.mat[(i, j)]);
            }
        }
        out
    }

    pub fn from_row_major(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, values))
    }
}

fn rebuild(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let scaled = vectors * DMatrix::from_diagonal(values);
    symmetrize(&(scaled * vectors.transpose()))
}

/// Ridge used by [`SpdPoint::regularized`].
pub fn regularization(mat: &DMatrix<f64>) -> f64 {
    let n = mat.nrows().max(1) as f64;
    (REGULARIZATION_REL * mat.trace() / n).max(REGULARIZATION_FLOOR)
}

/// Tangent vector in body coordinates `Ã = P̃⁻¹ Ṽ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdTangent {
    body: DMatrix<f64>,
}

impl SpdTangent {
    pub fn zero(n: usize) -> Self {
        Self {
            body: DMatrix::zeros(n, n),
        }
    }

    /// From a symmetric body matrix `A + v·I`.
    pub fn from_body(body: DMatrix<f64>) -> Result<Self> {
        if !body.is_square() {
            return Err(Error::DimensionMismatch {
                expected: body.nrows(),
                found: body.ncols(),
            });
        }
        if body.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tangent"));
        }
        let asym = asymmetry(&body);
        if asym > TAU_SYM {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self {
            body: symmetrize(&body),
        })
    }

    /// From a unit component `A ∈ 𝔭(n)` (its trace is projected out) and the
    /// scalar component `v`.
    pub fn from_parts(unit_body: &DMatrix<f64>, scalar: f64) -> Result<Self> {
        let n = unit_body.nrows();
        let mut body = Self::from_body(unit_body.clone())?.body;
        let shift = scalar - body.trace() / n as f64;
        for i in 0..n {
            body[(i, i)] += shift;
        }
        Ok(Self { body })
    }

    /// From an ambient tangent `Ṽ` at `base`; requires `P̃⁻¹Ṽ` symmetric.
    pub fn from_ambient(base: &SpdPoint, ambient: &DMatrix<f64>) -> Result<Self> {
        check_dim(base.dim(), ambient.nrows())?;
        let inv = base.unit_pow(-1.0) * (-base.logdet_coord).exp();
        let body = inv * ambient;
        let asym = asymmetry(&body);
        if asym > TAU_BODY_SYM {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Self::from_body(symmetrize(&body))
    }

    /// Ambient representation `P̃ Ã`.
    pub fn to_ambient(&self, base: &SpdPoint) -> DMatrix<f64> {
        base.mat() * &self.body
    }

    pub fn dim(&self) -> usize {
        self.body.nrows()
    }

    pub fn body(&self) -> &DMatrix<f64> {
        &self.body
    }

    /// Log-determinant velocity `v = tr(Ã)/n`.
    pub fn scalar(&self) -> f64 {
        self.body.trace() / self.dim() as f64
    }

    /// Trace-free part `A`.
    pub fn unit_body(&self) -> DMatrix<f64> {
        let mut a = self.body.clone();
        let v = self.scalar();
        for i in 0..self.dim() {
            a[(i, i)] -= v;
        }
        a
    }

    /// Unit component in the `T_P(𝒫)` chart, `V = P A`.
    pub fn unit_ambient(&self, base: &SpdPoint) -> DMatrix<f64> {
        base.unit_part() * self.unit_body()
    }

    pub fn is_zero(&self) -> bool {
        self.body.iter().all(|v| *v == 0.0)
    }
}

impl TangentVector for SpdTangent {
    fn zero_like(&self) -> Self {
        Self::zero(self.dim())
    }

    fn scaled(&self, alpha: f64) -> Self {
        Self {
            body: &self.body * alpha,
        }
    }

    fn add_scaled(&mut self, alpha: f64, other: &Self) {
        self.body.zip_apply(&other.body, |a, b| *a += alpha * b);
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Parallel transport between two fixed points: `Ã ↦ Tᵀ Ã T` with
/// `T = P₁₂⁻¹ P₁⁻¹ P₂` orthogonal.
#[derive(Debug, Clone)]
pub struct SpdTransport {
    rotation: Option<DMatrix<f64>>,
}

impl SpdTransport {
    /// `None` when the endpoints coincide.
    pub fn rotation(&self) -> Option<&DMatrix<f64>> {
        self.rotation.as_ref()
    }
}

/// The warped product `𝒫 × ℝ` with metric `g_P + ψ² dx²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpdManifold {
    log_det_weight_sq: Option<f64>,
}

impl SpdManifold {
    /// `ψ² = n`.
    pub fn new() -> Self {
        Self::default()
    }

    /// Overrides the warping weight `ψ` of the log-determinant direction.
    pub fn with_log_det_weight(psi: f64) -> Self {
        assert!(psi > 0.0 && psi.is_finite(), "weight must be positive");
        Self {
            log_det_weight_sq: Some(psi * psi),
        }
    }

    pub fn log_det_weight_sq(&self, n: usize) -> f64 {
        self.log_det_weight_sq.unwrap_or(n as f64)
    }

    /// Spectral decomposition of `P₁⁻¹ P₂² P₁⁻¹` and the factor `P₁⁻¹ P₂`.
    fn relative(&self, p: &SpdPoint, q: &SpdPoint) -> Result<(DMatrix<f64>, SymEigen)> {
        check_dim(p.dim(), q.dim())?;
        let x = p.unit_pow(-1.0) * q.unit_part();
        let m = &x * x.transpose();
        let eig = SymEigen::new(&m)?;
        eig.check_positive("log")?;
        Ok((x, eig))
    }

    /// `A₁₂ = log √(P₁⁻¹P₂²P₁⁻¹)` projected onto trace-free matrices.
    pub fn unit_log(&self, p: &SpdPoint, q: &SpdPoint) -> Result<DMatrix<f64>> {
        let (_, eig) = self.relative(p, q)?;
        let half_logs = eig.values.map(|m| 0.5 * m.ln());
        let mean = half_logs.mean();
        Ok(eig.map(|m| 0.5 * m.ln() - mean))
    }

    /// Distance under the classic affine-invariant metric, halved so that
    /// `spd_distance(P₁, P₂) == classic_affine_distance(P₁², P₂²)` under the
    /// default weight. The factor is [`CLASSIC_SCALE`].
    pub fn classic_affine_distance(q1: &SpdPoint, q2: &SpdPoint) -> Result<f64> {
        check_dim(q1.dim(), q2.dim())?;
        let r = SymEigen::new(q1.mat())?.apply(MatrixFunction::Pow(-0.5))?;
        let s = &r * q2.mat() * &r;
        let eig = SymEigen::new(&s)?;
        eig.check_positive("log")?;
        let sq: f64 = eig.values.iter().map(|l| l.ln().powi(2)).sum();
        Ok(CLASSIC_SCALE * sq.sqrt())
    }
}

/// Ratio between this metric's distance and the classic affine-invariant
/// distance `‖log(Q₁^{-1/2} Q₂ Q₁^{-1/2})‖_F` of the squared points.
pub const CLASSIC_SCALE: f64 = 0.5;

impl Manifold for SpdManifold {
    type Point = SpdPoint;
    type Tangent = SpdTangent;
    type Transport = SpdTransport;

    fn name(&self) -> &'static str {
        "spd"
    }

    fn zero(&self, p: &SpdPoint) -> SpdTangent {
        SpdTangent::zero(p.dim())
    }

    fn exp(&self, p: &SpdPoint, v: &SpdTangent) -> Result<SpdPoint> {
        check_dim(p.dim(), v.dim())?;
        if v.is_zero() {
            return Ok(p.clone());
        }
        let a = v.unit_body();
        let e2a = SymEigen::new(&a)?.map(|l| (2.0 * l).exp());
        if e2a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalRange {
                function: "exp",
                eigenvalue: SymEigen::new(&a)?.max_value(),
            });
        }
        let m = p.unit_part() * e2a * p.unit_part();
        let eig = SymEigen::new(&m)?;
        eig.check_positive("sqrt")?;
        let n = p.dim() as f64;
        let roots = eig.values.map(f64::sqrt);
        let g = roots.iter().map(|r| r.ln()).sum::<f64>() / n;
        let unit_values = roots.map(|r| (r.ln() - g).exp());
        SpdPoint::from_spectrum(eig.vectors, unit_values, p.logdet_coord + v.scalar() + g)
    }

    fn log(&self, p: &SpdPoint, q: &SpdPoint) -> Result<SpdTangent> {
        check_dim(p.dim(), q.dim())?;
        if p == q {
            return Ok(SpdTangent::zero(p.dim()));
        }
        let mut body = self.unit_log(p, q)?;
        let v = q.logdet_coord - p.logdet_coord;
        for i in 0..p.dim() {
            body[(i, i)] += v;
        }
        Ok(SpdTangent { body })
    }

    fn distance(&self, p: &SpdPoint, q: &SpdPoint) -> Result<f64> {
        check_dim(p.dim(), q.dim())?;
        if p == q {
            return Ok(0.0);
        }
        let (_, eig) = self.relative(p, q)?;
        let half_logs = eig.values.map(|m| 0.5 * m.ln());
        let mean = half_logs.mean();
        let unit_sq: f64 = half_logs.iter().map(|l| (l - mean).powi(2)).sum();
        let dx = q.logdet_coord - p.logdet_coord;
        Ok((unit_sq + self.log_det_weight_sq(p.dim()) * dx * dx).sqrt())
    }

    fn inner(&self, p: &SpdPoint, u: &SpdTangent, v: &SpdTangent) -> f64 {
        let n = p.dim();
        frobenius_inner(&u.body, &v.body)
            + (self.log_det_weight_sq(n) - n as f64) * u.scalar() * v.scalar()
    }

    fn transporter(&self, p: &SpdPoint, q: &SpdPoint) -> Result<SpdTransport> {
        check_dim(p.dim(), q.dim())?;
        if p == q {
            return Ok(SpdTransport { rotation: None });
        }
        let (x, eig) = self.relative(p, q)?;
        let inv_root = eig.map(|m| 1.0 / m.sqrt());
        Ok(SpdTransport {
            rotation: Some(inv_root * x),
        })
    }

    fn apply_transport(&self, t: &SpdTransport, v: &SpdTangent) -> SpdTangent {
        match &t.rotation {
            None => v.clone(),
            Some(r) => SpdTangent {
                body: symmetrize(&(r.transpose() * &v.body * r)),
            },
        }
    }

    /// `−[[A, B], C]` on the unit components.
    fn curvature(
        &self,
        _p: &SpdPoint,
        x: &SpdTangent,
        y: &SpdTangent,
        z: &SpdTangent,
    ) -> SpdTangent {
        let k = bracket(&x.unit_body(), &y.unit_body());
        SpdTangent {
            body: -bracket(&k, &z.unit_body()),
        }
    }

    /// Brackets are bilinear, so the sum collapses to `−[Σ cₖ[Vₖ, Wₖ], Z]`.
    fn curvature_integral(
        &self,
        p: &SpdPoint,
        vs: &[SpdTangent],
        ws: &[SpdTangent],
        weights: &[f64],
        z: &SpdTangent,
    ) -> SpdTangent {
        let n = p.dim();
        let mut k = DMatrix::zeros(n, n);
        for ((v, w), &c) in vs.iter().zip(ws).zip(weights) {
            if c != 0.0 {
                k += bracket(&v.body, &w.body) * c;
            }
        }
        SpdTangent {
            body: -bracket(&k, &z.unit_body()),
        }
    }
}
