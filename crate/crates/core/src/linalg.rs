//! Dense complex matrices: products, LU solves, the matrix exponential and a
//! Cholesky-based positive-definiteness test.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular to working precision")]
    Singular,
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Shape(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        T::complex_gemm(self.rows, self.cols, other.cols, &self.data, &other.data, &mut out.data);
        Ok(out)
    }

    /// `y ← A x`. Hot path of the trajectory integrator.
    #[inline]
    pub fn matvec_into(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            let mut re = T::zero();
            let mut im = T::zero();
            for (a, b) in row.iter().zip(x) {
                re = re + a.re * b.re - a.im * b.im;
                im = im + a.re * b.im + a.im * b.re;
            }
            *yi = Complex::new(re, im);
        }
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut y = vec![Complex::zero(); self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, other: &Self, s: Complex<T>) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(Complex::zero(), |a, b| a + b)
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).fold(T::zero(), |a, b| a + b))
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).map(|(a, b)| (*a - *b).norm()).fold(T::zero(), T::max)
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Solve `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if !self.is_square() || self.rows != rhs.rows {
            return Err(LinalgError::Shape(format!(
                "solve {}x{} with rhs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, a[i * n + k].norm()))
                    .fold((k, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == T::zero() || !pmax.is_finite() {
                return Err(LinalgError::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                for j in 0..m {
                    b.swap(k * m + j, p * m + j);
                }
            }
            let inv = Complex::<T>::one() / a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] * inv;
                if f.is_zero() {
                    continue;
                }
                for j in k..n {
                    let t = a[k * n + j];
                    a[i * n + j] = a[i * n + j] - f * t;
                }
                for j in 0..m {
                    let t = b[k * m + j];
                    b[i * m + j] = b[i * m + j] - f * t;
                }
            }
        }
        for k in (0..n).rev() {
            let inv = Complex::<T>::one() / a[k * n + k];
            for j in 0..m {
                let mut s = b[k * m + j];
                for l in k + 1..n {
                    s = s - a[k * n + l] * b[l * m + j];
                }
                b[k * m + j] = s * inv;
            }
        }
        Ok(Self { rows: n, cols: m, data: b })
    }

    /// `self^k` by binary powering.
    pub fn pow(&self, mut k: u64) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Shape("power of non-square matrix".into()));
        }
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        let mut first = true;
        while k > 0 {
            if k & 1 == 1 {
                result = if first { base.clone() } else { result.matmul(&base)? };
                first = false;
            }
            k >>= 1;
            if k > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(result)
    }

    /// Matrix exponential by scaling and squaring with a degree-13 Padé
    /// approximant.
    pub fn expm(&self) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Shape("exponential of non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(self.clone());
        }
        let norm = self.norm1().as_f64();
        let squarings = if norm > T::PADE_THETA { (norm / T::PADE_THETA).log2().ceil() as i32 } else { 0 };
        let a = self.scale(Complex::new(T::lit(0.5f64.powi(squarings)), T::zero()));

        let b = PADE13.map(|x| Complex::new(T::lit(x), T::zero()));
        let eye = Self::identity(n);
        let a2 = a.matmul(&a)?;
        let a4 = a2.matmul(&a2)?;
        let a6 = a4.matmul(&a2)?;

        let u_inner = a6.scale(b[13]).add_scaled(&a4, b[11]).add_scaled(&a2, b[9]);
        let u_outer = a6
            .matmul(&u_inner)?
            .add_scaled(&a6, b[7])
            .add_scaled(&a4, b[5])
            .add_scaled(&a2, b[3])
            .add_scaled(&eye, b[1]);
        let u = a.matmul(&u_outer)?;

        let v_inner = a6.scale(b[12]).add_scaled(&a4, b[10]).add_scaled(&a2, b[8]);
        let v = a6
            .matmul(&v_inner)?
            .add_scaled(&a6, b[6])
            .add_scaled(&a4, b[4])
            .add_scaled(&a2, b[2])
            .add_scaled(&eye, b[0]);

        let one = Complex::<T>::one();
        let numer = v.add_scaled(&u, one);
        let denom = v.add_scaled(&u, -one);
        let mut r = denom.solve(&numer)?;
        for _ in 0..squarings {
            r = r.matmul(&r)?;
        }
        Ok(r)
    }

    /// True iff the Hermitian part of `self + shift·I` admits a Cholesky
    /// factorisation, i.e. its smallest eigenvalue exceeds `-shift`.
    pub fn is_positive_definite_shifted(&self, shift: T) -> bool {
        assert!(self.is_square());
        let n = self.rows;
        let half = T::lit(0.5);
        let mut l = vec![Complex::<T>::zero(); n * n];
        for j in 0..n {
            let mut d = ((self[(j, j)] + self[(j, j)].conj()) * half).re + shift;
            for k in 0..j {
                d = d - l[j * n + k].norm_sqr();
            }
            if !(d > T::zero()) {
                return false;
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex::new(djj, T::zero());
            for i in j + 1..n {
                let mut s = (self[(i, j)] + self[(j, i)].conj()) * half;
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        true
    }

    /// Smallest eigenvalue of the Hermitian part, bracketed by bisection on
    /// Cholesky feasibility (Sylvester inertia) to within `tol`.
    pub fn min_eigenvalue_hermitian(&self, tol: T) -> T {
        let bound = self.norm1() + T::one();
        // λ_min ∈ [-bound, bound]; shift s is feasible iff λ_min > -s.
        let (mut lo, mut hi) = (-bound, bound);
        while hi - lo > tol {
            let mid = (lo + hi) * T::lit(0.5);
            if self.is_positive_definite_shifted(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        -(lo + hi) * T::lit(0.5)
    }
}

impl<T: Real> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    type M = DenseMatrix<f64>;

    /// Independent route: truncated Taylor series after enough halvings that
    /// the norm is below 1/8, then repeated squaring.
    fn taylor_expm(a: &M) -> M {
        let mut s = 0;
        let mut norm = a.norm1();
        while norm > 0.125 {
            norm /= 2.0;
            s += 1;
        }
        let a = a.scale(c(0.5f64.powi(s), 0.0));
        let mut term = M::identity(a.rows());
        let mut sum = term.clone();
        for k in 1..30 {
            term = term.matmul(&a).unwrap().scale(c(1.0 / k as f64, 0.0));
            sum = sum.add_scaled(&term, c(1.0, 0.0));
        }
        for _ in 0..s {
            sum = sum.matmul(&sum).unwrap();
        }
        sum
    }

    fn sample(n: usize, scale: f64) -> M {
        M::from_fn(n, n, |i, j| {
            let x = ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.5;
            let y = ((i * 7 + j * 29) % 11) as f64 / 11.0 - 0.5;
            c(scale * x, scale * y)
        })
    }

    #[test]
    fn expm_matches_taylor_for_small_and_large_norms() {
        for scale in [0.01, 1.0, 30.0] {
            let a = sample(9, scale);
            let e1 = a.expm().unwrap();
            let e2 = taylor_expm(&a);
            let rel = e1.max_abs_diff(&e2) / e2.norm1().max(1.0);
            assert!(rel < 1e-10, "scale {scale}: rel {rel}");
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(-iθσx) = cos θ I − i sin θ σx
        let theta = 1.234;
        let a = M::from_fn(2, 2, |i, j| if i != j { c(0.0, -theta) } else { c(0.0, 0.0) });
        let e = a.expm().unwrap();
        assert!((e[(0, 0)] - c(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - c(0.0, -theta.sin())).norm() < 1e-14);
    }

    #[test]
    fn expm_inverse_property() {
        let a = sample(7, 5.0);
        let prod = a.expm().unwrap().matmul(&a.scale(c(-1.0, 0.0)).expm().unwrap()).unwrap();
        assert!(prod.max_abs_diff(&M::identity(7)) < 1e-9);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = sample(6, 1.0).add_scaled(&M::identity(6), c(3.0, 0.0));
        let x = sample(6, 2.0);
        let b = a.matmul(&x).unwrap();
        assert!(a.solve(&b).unwrap().max_abs_diff(&x) < 1e-12);
        assert_eq!(M::zeros(3, 3).solve(&M::identity(3)), Err(LinalgError::Singular));
    }

    #[test]
    fn pow_matches_repeated_product() {
        let a = sample(4, 0.7);
        let mut expect = a.clone();
        for _ in 1..11 {
            expect = expect.matmul(&a).unwrap();
        }
        assert!(a.pow(11).unwrap().max_abs_diff(&expect) < 1e-12);
        assert_eq!(a.pow(0).unwrap(), M::identity(4));
    }

    #[test]
    fn cholesky_inertia_locates_smallest_eigenvalue() {
        // Hermitian 2x2 with eigenvalues 1 ± √2 (entries [[1, 1+i],[1-i, 1]]).
        let a = M::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(1.0, 1.0),
            (1, 0) => c(1.0, -1.0),
            _ => c(1.0, 0.0),
        });
        let lmin = a.min_eigenvalue_hermitian(1e-12);
        assert!((lmin - (1.0 - 2f64.sqrt())).abs() < 1e-10);
        assert!(!a.is_positive_definite_shifted(0.0));
        assert!(a.is_positive_definite_shifted(0.5));
    }

    #[test]
    fn matvec_matches_matmul() {
        let a = sample(5, 1.0);
        let x = M::from_fn(5, 1, |i, _| c(i as f64, -(i as f64)));
        let y = a.matvec(x.as_slice());
        let y2 = a.matmul(&x).unwrap();
        for (u, v) in y.iter().zip(y2.as_slice()) {
            assert!((u - v).norm() < 1e-13);
        }
    }
}
