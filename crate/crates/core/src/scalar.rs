//! Scalar abstraction: the numerics are generic over the real floating-point
//! type, with dense eigensolves provided by LAPACK for `f32`/`f64`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, SVD};
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use crate::error::Error;

/// Real scalar type underlying all lattice computations (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Shorthand for pulling literal constants into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Real scalar with a dense non-symmetric complex eigensolver behind it.
pub trait EigScalar: Real {
    /// Eigenvalues and right eigenvectors (columns) of a dense complex matrix.
    fn eig(
        matrix: &Array2<Complex<Self>>,
    ) -> Result<(Array1<Complex<Self>>, Array2<Complex<Self>>), Error>;

    /// Singular values of a dense complex matrix, descending.
    fn singular_values(matrix: &Array2<Complex<Self>>) -> Result<Array1<Self>, Error>;
}

macro_rules! impl_eig_scalar {
    ($t:ty) => {
        impl EigScalar for $t {
            fn eig(
                matrix: &Array2<Complex<Self>>,
            ) -> Result<(Array1<Complex<Self>>, Array2<Complex<Self>>), Error> {
                matrix
                    .eig()
                    .map_err(|e| Error::Eigensolver(e.to_string()))
            }

            fn singular_values(
                matrix: &Array2<Complex<Self>>,
            ) -> Result<Array1<Self>, Error> {
                let (_, s, _) = matrix
                    .svd(false, false)
                    .map_err(|e| Error::Eigensolver(e.to_string()))?;
                Ok(s)
            }
        }
    };
}

impl_eig_scalar!(f32);
impl_eig_scalar!(f64);
