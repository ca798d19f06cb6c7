//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All kernels are written against [`Scalar`]; `f64` is the working
//! precision used by the loaders, the synthetic laboratory and the CLI.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Storage type of an embedding file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    const DTYPE: Dtype;

    /// Conversion from `f64`, rounding to nearest for narrower types.
    fn of(x: f64) -> Self;

    fn from_count(n: usize) -> Self {
        Self::of(n as f64)
    }

    fn as_f64(self) -> f64;

    /// `c = a * b^T` for row-major `a` (m x k), `b` (n x k) and `c` (m x n).
    fn gemm_abt(m: usize, n: usize, k: usize, a: &[Self], b: &[Self], c: &mut [Self]);
}

fn check_gemm_shapes<T>(m: usize, n: usize, k: usize, a: &[T], b: &[T], c: &[T]) {
    assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
}

impl Scalar for f32 {
    const DTYPE: Dtype = Dtype::F32;

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    fn gemm_abt(m: usize, n: usize, k: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
        check_gemm_shapes(m, n, k, a, b, c);
        // SAFETY: shapes checked above; strides describe dense row-major data.
        unsafe {
            matrixmultiply::sgemm(
                m, k, n, 1.0, a.as_ptr(), k as isize, 1, b.as_ptr(), 1, k as isize, 0.0,
                c.as_mut_ptr(), n as isize, 1,
            )
        }
    }
}

impl Scalar for f64 {
    const DTYPE: Dtype = Dtype::F64;

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    fn gemm_abt(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
        check_gemm_shapes(m, n, k, a, b, c);
        // SAFETY: shapes checked above; strides describe dense row-major data.
        unsafe {
            matrixmultiply::dgemm(
                m, k, n, 1.0, a.as_ptr(), k as isize, 1, b.as_ptr(), 1, k as isize, 0.0,
                c.as_mut_ptr(), n as isize, 1,
            )
        }
    }
}
