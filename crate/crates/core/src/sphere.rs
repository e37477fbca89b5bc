//! The unit sphere in ℝ³, used to validate the bundle machinery on a
//! manifold whose geodesics are known in closed form.

use nalgebra::Vector3;
#[cfg(not(feature = "std"))]
use nalgebra::{ComplexField, RealField};

use crate::error::{Error, Result};
use crate::linalg::TAU_NUM;
use crate::manifold::{Manifold, TangentVector};

/// Cosine below which two points are treated as antipodal.
const ANTIPODAL_COS: f64 = -1.0 + 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(Vector3<f64>);

impl SpherePoint {
    /// Accepts a vector of unit length (within `TAU_NUM`). It is renormalized
    /// unless already unit to rounding, so stored points read back bitwise.
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("sphere point"));
        }
        let n = v.norm();
        if (n - 1.0).abs() > TAU_NUM {
            return Err(Error::Domain {
                what: "point norm",
                value: n,
                domain: "{1}",
            });
        }
        if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Self(v));
        }
        Ok(Self(v / n))
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalized(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        Ok(Self(v / n))
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereTangent(pub Vector3<f64>);

impl SphereTangent {
    /// Removes any component along `base`.
    pub fn projected(base: &SpherePoint, v: Vector3<f64>) -> Self {
        let p = base.vector();
        Self(v - p * p.dot(&v))
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }
}

impl TangentVector for SphereTangent {
    fn zero_like(&self) -> Self {
        Self(Vector3::zeros())
    }

    fn scaled(&self, alpha: f64) -> Self {
        Self(self.0 * alpha)
    }

    fn add_scaled(&mut self, alpha: f64, other: &Self) {
        self.0 += other.0 * alpha;
    }
}

/// Transport from `from` to `to`; `None` when they coincide.
#[derive(Debug, Clone, Copy)]
pub struct SphereTransport {
    ends: Option<(Vector3<f64>, Vector3<f64>)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sphere;

impl Manifold for Sphere {
    type Point = SpherePoint;
    type Tangent = SphereTangent;
    type Transport = SphereTransport;

    fn name(&self) -> &'static str {
        "sphere"
    }

    fn zero(&self, _p: &SpherePoint) -> SphereTangent {
        SphereTangent(Vector3::zeros())
    }

    fn exp(&self, p: &SpherePoint, v: &SphereTangent) -> Result<SpherePoint> {
        let theta = v.0.norm();
        if !theta.is_finite() {
            return Err(Error::NonFinite("sphere exp"));
        }
        if theta == 0.0 {
            return Ok(*p);
        }
        let out = p.0 * theta.cos() + v.0 * (theta.sin() / theta);
        SpherePoint::normalized(out)
    }

    fn log(&self, p: &SpherePoint, q: &SpherePoint) -> Result<SphereTangent> {
        if p == q {
            return Ok(SphereTangent(Vector3::zeros()));
        }
        let c = p.0.dot(&q.0);
        if c <= ANTIPODAL_COS {
            return Err(Error::Antipodal);
        }
        let w = q.0 - p.0 * c;
        let s = w.norm();
        if s == 0.0 {
            return Ok(SphereTangent(Vector3::zeros()));
        }
        let theta = s.atan2(c);
        Ok(SphereTangent(w * (theta / s)))
    }

    fn distance(&self, p: &SpherePoint, q: &SpherePoint) -> Result<f64> {
        if p == q {
            return Ok(0.0);
        }
        Ok(p.0.cross(&q.0).norm().atan2(p.0.dot(&q.0)))
    }

    fn inner(&self, _p: &SpherePoint, u: &SphereTangent, v: &SphereTangent) -> f64 {
        u.0.dot(&v.0)
    }

    fn transporter(&self, p: &SpherePoint, q: &SpherePoint) -> Result<SphereTransport> {
        if p == q {
            return Ok(SphereTransport { ends: None });
        }
        if p.0.dot(&q.0) <= ANTIPODAL_COS {
            return Err(Error::Antipodal);
        }
        Ok(SphereTransport {
            ends: Some((p.0, q.0)),
        })
    }

    fn apply_transport(&self, t: &SphereTransport, v: &SphereTangent) -> SphereTangent {
        match t.ends {
            None => *v,
            Some((p, q)) => {
                let k = q.dot(&v.0) / (1.0 + p.dot(&q));
                SphereTangent(v.0 - (p + q) * k)
            }
        }
    }

    /// `⟨Y, Z⟩X − ⟨X, Z⟩Y`
    fn curvature(
        &self,
        _p: &SpherePoint,
        x: &SphereTangent,
        y: &SphereTangent,
        z: &SphereTangent,
    ) -> SphereTangent {
        SphereTangent(x.0 * y.0.dot(&z.0) - y.0 * x.0.dot(&z.0))
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::Rng;

    pub fn random_point<R: Rng>(rng: &mut R) -> SpherePoint {
        loop {
            let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                return SpherePoint::normalized(v).unwrap();
            }
        }
    }

    pub fn random_tangent<R: Rng>(rng: &mut R, p: &SpherePoint, norm: f64) -> SphereTangent {
        let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let t = SphereTangent::projected(p, v);
        t.scaled(norm / t.0.norm().max(1e-12))
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn examples() {
        let s = Sphere;
        let north = SpherePoint::new(Vector3::z()).unwrap();
        let east = SpherePoint::new(Vector3::x()).unwrap();
        assert_eq!(s.log(&north, &north).unwrap().0, Vector3::zeros());
        assert_relative_eq!(
            s.distance(&north, &east).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        let south = SpherePoint::new(-Vector3::z()).unwrap();
        assert_eq!(s.log(&north, &south), Err(Error::Antipodal));
        assert!(SpherePoint::new(Vector3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn exp_log_roundtrip() {
        let s = Sphere;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let p = random_point(&mut rng);
            let norm = rng.random_range(0.0..3.1);
            let v = random_tangent(&mut rng, &p, norm);
            let back = s.log(&p, &s.exp(&p, &v).unwrap()).unwrap();
            assert!((back.0 - v.0).norm() < 1e-12);
        }
    }

    #[test]
    fn transport_is_isometric_and_tangent() {
        let s = Sphere;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = random_point(&mut rng);
            let q = random_point(&mut rng);
            if p.vector().dot(q.vector()) < -0.95 {
                continue;
            }
            let u = random_tangent(&mut rng, &p, 1.0);
            let v = random_tangent(&mut rng, &p, 0.5);
            let tu = s.transport(&p, &q, &u).unwrap();
            let tv = s.transport(&p, &q, &v).unwrap();
            assert_relative_eq!(tu.0.dot(&tv.0), u.0.dot(&v.0), epsilon = 1e-12);
            assert!(tu.0.dot(q.vector()).abs() < 1e-12);
            let vel = s.log(&p, &q).unwrap();
            let moved = s.transport(&p, &q, &vel).unwrap();
            let back = s.log(&q, &p).unwrap();
            assert!((moved.0 + back.0).norm() < 1e-10);
        }
    }

    #[test]
    fn geodesic_constant_speed() {
        let s = Sphere;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_point(&mut rng);
        let q = random_point(&mut rng);
        let d = s.distance(&p, &q).unwrap();
        let a = s.geodesic(&p, &q, 0.25).unwrap();
        let b = s.geodesic(&p, &q, 0.75).unwrap();
        assert_relative_eq!(s.distance(&a, &b).unwrap(), 0.5 * d, epsilon = 1e-12);
    }

    #[test]
    fn curvature_is_one() {
        let s = Sphere;
        let p = SpherePoint::new(Vector3::z()).unwrap();
        let x = SphereTangent(Vector3::x());
        let y = SphereTangent(Vector3::y());
        assert_relative_eq!(s.inner(&p, &s.curvature(&p, &x, &y, &y), &x), 1.0);
    }
}
