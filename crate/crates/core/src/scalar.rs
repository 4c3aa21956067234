//! Real scalar abstraction shared by every numeric kernel in the crate.
//!
//! The physics is written once over `T: Real`; `f64` is the production
//! precision and `f32` is supported for cheap exploratory runs. Dense
//! complex products dispatch to the matching `matrixmultiply` kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Largest `‖A‖₁` for which the degree-13 Padé approximant of `exp(A)`
    /// is accurate to this type's unit roundoff.
    const PADE_THETA: f64;

    /// Row-major `c ← a · b` for an `m × k` times `k × n` product.
    fn complex_gemm(m: usize, k: usize, n: usize, a: &[Complex<Self>], b: &[Complex<Self>], c: &mut [Complex<Self>]);

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($t:ty, $theta:expr, $gemm:path) => {
        impl Real for $t {
            const PADE_THETA: f64 = $theta;

            fn complex_gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Complex<Self>],
                b: &[Complex<Self>],
                c: &mut [Complex<Self>],
            ) {
                assert_eq!(a.len(), m * k);
                assert_eq!(b.len(), k * n);
                assert_eq!(c.len(), m * n);
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: Complex<T> is repr(C) {re, im}, layout-identical to
                // [T; 2]; the slice lengths were checked above and the strides
                // describe dense row-major storage.
                unsafe {
                    $gemm(
                        matrixmultiply::CGemmOption::Standard,
                        matrixmultiply::CGemmOption::Standard,
                        m,
                        k,
                        n,
                        [1.0, 0.0],
                        a.as_ptr() as *const [$t; 2],
                        k as isize,
                        1,
                        b.as_ptr() as *const [$t; 2],
                        n as isize,
                        1,
                        [0.0, 0.0],
                        c.as_mut_ptr() as *mut [$t; 2],
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_real!(f64, 5.371_920_351_148_152, matrixmultiply::zgemm);
impl_real!(f32, 3.925_724_783_138_660, matrixmultiply::cgemm);

#[inline]
pub(crate) fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive<T: Real>(m: usize, k: usize, n: usize, a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); m * n];
        for i in 0..m {
            for j in 0..n {
                for l in 0..k {
                    out[i * n + j] = out[i * n + j] + a[i * k + l] * b[l * n + j];
                }
            }
        }
        out
    }

    fn check<T: Real>(tol: f64) {
        let (m, k, n) = (3, 5, 4);
        let a: Vec<Complex<T>> = (0..m * k).map(|i| c(i as f64 * 0.3 - 1.0, (i % 3) as f64)).collect();
        let b: Vec<Complex<T>> = (0..k * n).map(|i| c((i % 5) as f64, 0.5 - i as f64 * 0.1)).collect();
        let mut got = vec![Complex::new(T::zero(), T::zero()); m * n];
        T::complex_gemm(m, k, n, &a, &b, &mut got);
        for (x, y) in got.iter().zip(naive(m, k, n, &a, &b)) {
            assert!((*x - y).norm().as_f64() < tol);
        }
    }

    #[test]
    fn gemm_matches_triple_loop() {
        check::<f64>(1e-12);
        check::<f32>(1e-4);
    }
}
