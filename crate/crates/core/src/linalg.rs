//! Eigendecomposition-based functions of symmetric matrices.
//!
//! Every closed-form formula on the SPD manifold is a composition of square
//! roots, logarithms and exponentials of symmetric matrices, so they all go
//! through [`SymEigen`]: decompose once, map the eigenvalues, rebuild, and
//! re-symmetrize.

#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on `‖M − Mᵀ‖ / ‖M‖` accepted as symmetric.
pub const TAU_SYM: f64 = 1e-9;
/// Eigenvalues must exceed `TAU_PD_REL × λ_max` to count as positive.
pub const TAU_PD_REL: f64 = 1e-12;
/// General numerical tolerance for reconstruction identities.
pub const TAU_NUM: f64 = 1e-8;

/// Scalar function applied to the spectrum of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixFunction {
    Sqrt,
    Log,
    Exp,
    /// Real power; non-integer powers require a positive-definite argument.
    Pow(f64),
}

impl MatrixFunction {
    fn name(self) -> &'static str {
        match self {
            MatrixFunction::Sqrt => "sqrt",
            MatrixFunction::Log => "log",
            MatrixFunction::Exp => "exp",
            MatrixFunction::Pow(_) => "pow",
        }
    }

    fn needs_positive(self) -> bool {
        match self {
            MatrixFunction::Sqrt | MatrixFunction::Log => true,
            MatrixFunction::Exp => false,
            MatrixFunction::Pow(p) => p.fract() != 0.0 || p < 0.0,
        }
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            MatrixFunction::Sqrt => x.sqrt(),
            MatrixFunction::Log => x.ln(),
            MatrixFunction::Exp => x.exp(),
            MatrixFunction::Pow(p) => x.powf(p),
        }
    }
}

/// Spectral decomposition `M = U diag(λ) Uᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// Decomposes the symmetric part of `m`.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("symmetric eigendecomposition"));
        }
        let eig = symmetrize(m).symmetric_eigen();
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Fails with the offending eigenvalue unless the spectrum is positive.
    pub fn check_positive(&self, function: &'static str) -> Result<()> {
        let max = self.max_value();
        let min = self.min_value();
        if !(max > 0.0) || min <= TAU_PD_REL * max {
            return Err(Error::NumericalRange {
                function,
                eigenvalue: min,
            });
        }
        Ok(())
    }

    /// `U diag(f(λ)) Uᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mapped = self.values.map(f);
        let scaled = &self.vectors * DMatrix::from_diagonal(&mapped);
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    pub fn apply(&self, f: MatrixFunction) -> Result<DMatrix<f64>> {
        if f.needs_positive() {
            self.check_positive(f.name())?;
        }
        let out = self.map(|x| f.eval(x));
        if out.iter().any(|x| !x.is_finite()) {
            let eigenvalue = if matches!(f, MatrixFunction::Exp) {
                self.max_value()
            } else {
                self.min_value()
            };
            return Err(Error::NumericalRange {
                function: f.name(),
                eigenvalue,
            });
        }
        Ok(out)
    }
}

/// Applies `f` to the eigenvalues of the symmetric matrix `m`.
pub fn sym_matrix_function(m: &DMatrix<f64>, f: MatrixFunction) -> Result<DMatrix<f64>> {
    SymEigen::new(m)?.apply(f)
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Relative asymmetry `‖M − Mᵀ‖_F / max(‖M‖_F, 1)`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let diff = (m - m.transpose()).norm();
    diff / m.norm().max(1.0)
}

/// Lie bracket `AB − BA`.
pub fn bracket(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// `tr(A Bᵀ)`, the Frobenius inner product.
pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

pub fn trace(m: &DMatrix<f64>) -> f64 {
    m.trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_of_identity_is_zero() {
        let out = sym_matrix_function(&DMatrix::identity(4, 4), MatrixFunction::Log).unwrap();
        assert_relative_eq!(out.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let out = sym_matrix_function(&m, MatrixFunction::Sqrt).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        assert_relative_eq!(out, expected, epsilon = 1e-14);
    }

    #[test]
    fn log_rejects_indefinite_and_names_eigenvalue() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -0.5]));
        match sym_matrix_function(&m, MatrixFunction::Log) {
            Err(Error::NumericalRange {
                function,
                eigenvalue,
            }) => {
                assert_eq!(function, "log");
                assert_relative_eq!(eigenvalue, -0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exp_overflow_is_reported() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1e4, 0.0]));
        assert!(matches!(
            sym_matrix_function(&m, MatrixFunction::Exp),
            Err(Error::NumericalRange {
                function: "exp",
                ..
            })
        ));
    }

    #[test]
    fn integer_power_of_indefinite_matrix_is_allowed() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -2.0]));
        let sq = sym_matrix_function(&m, MatrixFunction::Pow(2.0)).unwrap();
        assert_relative_eq!(sq, &m * &m, epsilon = 1e-12);
    }

    #[test]
    fn exp_log_roundtrip_on_random_spd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 7] {
            for _ in 0..20 {
                let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let m = &g * g.transpose() + DMatrix::identity(n, n) * 0.1;
                let log = sym_matrix_function(&m, MatrixFunction::Log).unwrap();
                let back = sym_matrix_function(&log, MatrixFunction::Exp).unwrap();
                assert!((&back - &m).norm() <= 1e-10 * m.norm().max(1.0));
            }
        }
    }
}
