//! Fixed-size complex linear algebra: scalars, 2-vectors and 2×2 matrices.
//!
//! Everything here is value-semantic and allocation free. The 2×2
//! eigendecomposition is closed form (characteristic quadratic), which keeps
//! results exact to rounding and bit-reproducible across runs.

use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::math;

/// Relative singularity threshold used by [`ComplexMat2::inv`].
pub const SINGULAR_RTOL: f64 = 1e-12;
/// Eigenvalues closer than this (relative to ‖A‖_F) count as repeated.
pub const REPEATED_EIG_RTOL: f64 = 1e-10;
/// Components of a unit vector smaller than this are skipped when fixing the phase.
pub const PHASE_EPS: f64 = 1e-12;
/// Vectors with a smaller norm are rejected as zero.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };
    pub const ONE: Complex = Complex { re: 1.0, im: 0.0 };
    pub const I: Complex = Complex { re: 0.0, im: 1.0 };

    #[inline]
    pub const fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    #[inline]
    pub const fn real(re: f64) -> Self {
        Complex { re, im: 0.0 }
    }

    #[inline]
    pub fn conj(self) -> Self {
        Complex::new(self.re, -self.im)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn abs(self) -> f64 {
        math::hypot(self.re, self.im)
    }

    #[inline]
    pub fn scale(self, k: f64) -> Self {
        Complex::new(self.re * k, self.im * k)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// Principal square root (branch cut on the negative real axis).
    pub fn sqrt(self) -> Self {
        let r = self.abs();
        if r == 0.0 {
            return Complex::ZERO;
        }
        if self.re >= 0.0 {
            let t = math::sqrt(0.5 * (r + self.re));
            Complex::new(t, self.im / (2.0 * t))
        } else {
            let t = math::sqrt(0.5 * (r - self.re));
            let im = if self.im < 0.0 { -t } else { t };
            Complex::new(self.im.abs() / (2.0 * t), im)
        }
    }

    pub fn recip(self) -> Self {
        let d = self.norm_sqr();
        Complex::new(self.re / d, -self.im / d)
    }
}

impl fmt::Debug for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0.0 {
            write!(f, "{:?}-{:?}i", self.re, -self.im)
        } else {
            write!(f, "{:?}+{:?}i", self.re, self.im)
        }
    }
}

impl Add for Complex {
    type Output = Complex;
    #[inline]
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl AddAssign for Complex {
    #[inline]
    fn add_assign(&mut self, o: Complex) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl Sub for Complex {
    type Output = Complex;
    #[inline]
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    #[inline]
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Mul<f64> for Complex {
    type Output = Complex;
    #[inline]
    fn mul(self, k: f64) -> Complex {
        self.scale(k)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Complex {
    type Output = Complex;
    #[inline]
    fn div(self, o: Complex) -> Complex {
        self * o.recip()
    }
}

impl Neg for Complex {
    type Output = Complex;
    #[inline]
    fn neg(self) -> Complex {
        Complex::new(-self.re, -self.im)
    }
}

/// Column vector in ℂ².
#[derive(Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComplexVec2(pub [Complex; 2]);

impl ComplexVec2 {
    #[inline]
    pub const fn new(e0: Complex, e1: Complex) -> Self {
        ComplexVec2([e0, e1])
    }

    pub const fn from_real(e0: f64, e1: f64) -> Self {
        ComplexVec2([Complex::real(e0), Complex::real(e1)])
    }

    pub const E0: ComplexVec2 = ComplexVec2::from_real(1.0, 0.0);
    pub const E1: ComplexVec2 = ComplexVec2::from_real(0.0, 1.0);

    #[inline]
    pub fn e0(&self) -> Complex {
        self.0[0]
    }

    #[inline]
    pub fn e1(&self) -> Complex {
        self.0[1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        math::hypot(self.0[0].abs(), self.0[1].abs())
    }

    /// Hermitian inner product `self† · other`.
    #[inline]
    pub fn dot(&self, other: &ComplexVec2) -> Complex {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    pub fn scale(&self, k: Complex) -> ComplexVec2 {
        ComplexVec2([self.0[0] * k, self.0[1] * k])
    }

    pub fn is_finite(&self) -> bool {
        self.0[0].is_finite() && self.0[1].is_finite()
    }

    /// Unit vector along `self`, phase-canonicalized.
    pub fn normalize(&self) -> Result<ComplexVec2> {
        let n = self.norm();
        if !(n > ZERO_NORM) {
            return Err(Error::ZeroVector);
        }
        let inv = 1.0 / n;
        Ok(ComplexVec2([self.0[0] * inv, self.0[1] * inv]).canonical_phase())
    }

    /// Rotates the global phase so that the first component with modulus
    /// above [`PHASE_EPS`] is real and positive.
    pub fn canonical_phase(&self) -> ComplexVec2 {
        for idx in 0..2 {
            let e = self.0[idx];
            let m = e.abs();
            if m > PHASE_EPS {
                let rot = e.conj().scale(1.0 / m);
                let mut out = self.scale(rot);
                out.0[idx] = Complex::real(m);
                return out;
            }
        }
        *self
    }

    pub fn max_abs_diff(&self, other: &ComplexVec2) -> f64 {
        (self.0[0] - other.0[0])
            .abs()
            .max((self.0[1] - other.0[1]).abs())
    }
}

impl fmt::Debug for ComplexVec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]", self.0[0], self.0[1])
    }
}

impl Add for ComplexVec2 {
    type Output = ComplexVec2;
    fn add(self, o: ComplexVec2) -> ComplexVec2 {
        ComplexVec2([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for ComplexVec2 {
    type Output = ComplexVec2;
    fn sub(self, o: ComplexVec2) -> ComplexVec2 {
        ComplexVec2([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

/// Unit vector orthogonal to `w`: `(−conj(b), conj(a))` normalized, so `u† w = 0`.
pub fn unit_orth_complement(w: &ComplexVec2) -> Result<ComplexVec2> {
    if !(w.norm() > ZERO_NORM) {
        return Err(Error::ZeroVector);
    }
    ComplexVec2([-w.0[1].conj(), w.0[0].conj()]).normalize()
}

/// 2×2 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComplexMat2(pub [Complex; 4]);

/// Eigenpairs of a 2×2 matrix, ordered by descending eigenvalue modulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigen2 {
    pub values: [Complex; 2],
    pub vectors: [ComplexVec2; 2],
}

impl ComplexMat2 {
    pub const IDENTITY: ComplexMat2 =
        ComplexMat2([Complex::ONE, Complex::ZERO, Complex::ZERO, Complex::ONE]);

    #[inline]
    pub const fn new(a: Complex, b: Complex, c: Complex, d: Complex) -> Self {
        ComplexMat2([a, b, c, d])
    }

    pub const fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        ComplexMat2([
            Complex::real(a),
            Complex::real(b),
            Complex::real(c),
            Complex::real(d),
        ])
    }

    pub const fn diag(d0: Complex, d1: Complex) -> Self {
        ComplexMat2([d0, Complex::ZERO, Complex::ZERO, d1])
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex {
        self.0[row * 2 + col]
    }

    pub fn adjoint(&self) -> ComplexMat2 {
        let [a, b, c, d] = self.0;
        ComplexMat2([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    pub fn det(&self) -> Complex {
        let [a, b, c, d] = self.0;
        a * d - b * c
    }

    pub fn trace(&self) -> Complex {
        self.0[0] + self.0[3]
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius(&self) -> f64 {
        math::sqrt(self.frobenius_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }

    pub fn scale(&self, k: Complex) -> ComplexMat2 {
        ComplexMat2(self.0.map(|z| z * k))
    }

    /// Multiplies row `r` by `k[r]`, i.e. `diag(k) · self`.
    pub fn scale_rows(&self, k: [f64; 2]) -> ComplexMat2 {
        let [a, b, c, d] = self.0;
        ComplexMat2([a * k[0], b * k[0], c * k[1], d * k[1]])
    }

    #[inline]
    pub fn mul_vec(&self, v: &ComplexVec2) -> ComplexVec2 {
        let [a, b, c, d] = self.0;
        ComplexVec2([a * v.0[0] + b * v.0[1], c * v.0[0] + d * v.0[1]])
    }

    pub fn max_abs_diff(&self, other: &ComplexMat2) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(x, y)| (*x - *y).abs())
            .fold(0.0, f64::max)
    }

    /// Inverse via the adjugate. Fails when `|det| ≤ 1e-12 · ‖A‖_F²`.
    pub fn inv(&self) -> Result<ComplexMat2> {
        if !self.is_finite() {
            return Err(Error::Domain("non-finite matrix entry"));
        }
        let det = self.det();
        let threshold = SINGULAR_RTOL * self.frobenius_sqr();
        if !(det.abs() > threshold) {
            return Err(Error::SingularMatrix {
                det: det.abs(),
                threshold,
            });
        }
        let r = det.recip();
        let [a, b, c, d] = self.0;
        Ok(ComplexMat2([d * r, -b * r, -c * r, a * r]))
    }

    /// Closed-form eigendecomposition.
    ///
    /// Eigenvalues come from `tr/2 ± sqrt(((a−d)/2)² + bc)` and are ordered by
    /// descending modulus, then descending real part, then descending
    /// imaginary part. Eigenvectors are unit norm and phase-canonicalized.
    pub fn eig2(&self) -> Result<Eigen2> {
        if !self.is_finite() {
            return Err(Error::Domain("non-finite matrix entry"));
        }
        let [a, b, c, d] = self.0;
        let scale = self.frobenius();
        let half_tr = (a + d).scale(0.5);
        let half_diff = (a - d).scale(0.5);
        let disc = (half_diff * half_diff + b * c).sqrt();
        let l_plus = half_tr + disc;
        let l_minus = half_tr - disc;

        if (l_plus - l_minus).abs() <= REPEATED_EIG_RTOL * scale {
            let lambda = half_tr;
            let shifted = ComplexMat2([a - lambda, b, c, d - lambda]);
            if shifted.frobenius() <= REPEATED_EIG_RTOL * scale {
                return Ok(Eigen2 {
                    values: [lambda, lambda],
                    vectors: [ComplexVec2::E0, ComplexVec2::E1],
                });
            }
            return Err(Error::DefectiveMatrix);
        }

        let (first, second) = if eig_precedes(l_minus, l_plus) {
            (l_minus, l_plus)
        } else {
            (l_plus, l_minus)
        };
        Ok(Eigen2 {
            values: [first, second],
            vectors: [self.eigvec_for(first)?, self.eigvec_for(second)?],
        })
    }

    fn eigvec_for(&self, lambda: Complex) -> Result<ComplexVec2> {
        let [a, b, c, d] = self.0;
        // Each row of (A − λI) gives a null vector; keep the better scaled one.
        let from_row0 = ComplexVec2([b, lambda - a]);
        let from_row1 = ComplexVec2([lambda - d, c]);
        if from_row0.norm_sqr() >= from_row1.norm_sqr() {
            from_row0.normalize()
        } else {
            from_row1.normalize()
        }
    }
}

/// Ordering rule for eigenvalues: true when `x` sorts strictly before `y`.
fn eig_precedes(x: Complex, y: Complex) -> bool {
    let (mx, my) = (x.abs(), y.abs());
    let tol = 1e-12 * mx.max(my);
    if (mx - my).abs() > tol {
        return mx > my;
    }
    if x.re != y.re {
        return x.re > y.re;
    }
    x.im > y.im
}

impl fmt::Debug for ComplexMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{:?}, {:?}], [{:?}, {:?}]]",
            self.0[0], self.0[1], self.0[2], self.0[3]
        )
    }
}

impl Mul for ComplexMat2 {
    type Output = ComplexMat2;
    #[inline]
    fn mul(self, o: ComplexMat2) -> ComplexMat2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        ComplexMat2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

impl Mul<ComplexVec2> for ComplexMat2 {
    type Output = ComplexVec2;
    #[inline]
    fn mul(self, v: ComplexVec2) -> ComplexVec2 {
        self.mul_vec(&v)
    }
}

impl Add for ComplexMat2 {
    type Output = ComplexMat2;
    fn add(self, o: ComplexMat2) -> ComplexMat2 {
        let mut out = self;
        for (x, y) in out.0.iter_mut().zip(o.0) {
            *x += y;
        }
        out
    }
}

impl Sub for ComplexMat2 {
    type Output = ComplexMat2;
    fn sub(self, o: ComplexMat2) -> ComplexMat2 {
        let mut out = self;
        for (x, y) in out.0.iter_mut().zip(o.0) {
            *x = *x - y;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = core::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn inverse_of_identity_and_diagonal() {
        assert_eq!(ComplexMat2::IDENTITY.inv().unwrap(), ComplexMat2::IDENTITY);
        let d = ComplexMat2::from_real(2.0, 0.0, 0.0, 4.0).inv().unwrap();
        assert!(d.max_abs_diff(&ComplexMat2::from_real(0.5, 0.0, 0.0, 0.25)) < 1e-15);
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = ComplexMat2::from_real(1.0, 2.0, 2.0, 4.0);
        assert!(matches!(m.inv(), Err(Error::SingularMatrix { .. })));
        assert!(matches!(
            ComplexMat2::default().inv(),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn non_finite_rejected() {
        let m = ComplexMat2::from_real(f64::NAN, 0.0, 0.0, 1.0);
        assert!(matches!(m.inv(), Err(Error::Domain(_))));
        assert!(matches!(m.eig2(), Err(Error::Domain(_))));
    }

    #[test]
    fn eig_of_diagonal() {
        let e = ComplexMat2::from_real(1.0, 0.0, 0.0, 3.0).eig2().unwrap();
        assert_eq!(e.values, [Complex::real(3.0), Complex::real(1.0)]);
        assert!(e.vectors[0].max_abs_diff(&ComplexVec2::E1) < 1e-15);
        assert!(e.vectors[1].max_abs_diff(&ComplexVec2::E0) < 1e-15);
    }

    #[test]
    fn eig_of_swap_matrix() {
        let e = ComplexMat2::from_real(0.0, 1.0, 1.0, 0.0).eig2().unwrap();
        assert!((e.values[0] - Complex::real(1.0)).abs() < 1e-15);
        assert!((e.values[1] - Complex::real(-1.0)).abs() < 1e-15);
        assert!(e.vectors[0].max_abs_diff(&ComplexVec2::from_real(S, S)) < 1e-15);
        assert!(e.vectors[1].max_abs_diff(&ComplexVec2::from_real(S, -S)) < 1e-15);
    }

    #[test]
    fn eig_scalar_matrix_and_defective_jordan_block() {
        let e = ComplexMat2::from_real(2.0, 0.0, 0.0, 2.0).eig2().unwrap();
        assert_eq!(e.values, [Complex::real(2.0); 2]);
        assert_eq!(e.vectors, [ComplexVec2::E0, ComplexVec2::E1]);
        let j = ComplexMat2::from_real(2.0, 1.0, 0.0, 2.0);
        assert_eq!(j.eig2(), Err(Error::DefectiveMatrix));
    }

    #[test]
    fn orth_complement_examples() {
        let u = unit_orth_complement(&ComplexVec2::E0).unwrap();
        assert!(u.max_abs_diff(&ComplexVec2::E1) < 1e-15);
        let u = unit_orth_complement(&ComplexVec2::from_real(S, S)).unwrap();
        // (−1, 1)/√2 up to phase; canonical form flips the sign.
        assert!(u.max_abs_diff(&ComplexVec2::from_real(S, -S)) < 1e-15);
        assert_eq!(
            unit_orth_complement(&ComplexVec2::default()),
            Err(Error::ZeroVector)
        );
    }

    #[test]
    fn complex_sqrt_branches() {
        for z in [
            Complex::new(-4.0, 0.0),
            Complex::new(-4.0, -1e-300),
            Complex::new(3.0, 4.0),
            Complex::new(-3.0, -4.0),
            Complex::new(0.0, 2.0),
        ] {
            let r = z.sqrt();
            assert!((r * r - z).abs() < 1e-14 * z.abs().max(1.0));
            assert!(r.re >= 0.0);
        }
    }

    #[test]
    fn canonical_phase_makes_leading_component_positive() {
        let v = ComplexVec2::new(Complex::new(0.0, -0.6), Complex::new(0.8, 0.0));
        let c = v.canonical_phase();
        assert_eq!(c.e0(), Complex::real(0.6));
        assert!((c.e1() - Complex::new(0.0, 0.8)).abs() < 1e-15);
    }
}
