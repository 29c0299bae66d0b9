//! Small dense complex linear algebra helpers: 1-norm, LU solve, and a
//! Pade scaling-and-squaring matrix exponential. The exponential avoids any
//! eigendecomposition so it stays valid for defective matrices (the lattice
//! Hamiltonian is defective at the PT-breaking threshold).

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::Error;
use crate::scalar::Real;

pub type CMatrix<R> = Array2<Complex<R>>;
pub type CVector<R> = Array1<Complex<R>>;

/// Maximum absolute column sum.
pub fn one_norm<R: Real>(a: &CMatrix<R>) -> R {
    let mut best = R::zero();
    for col in a.columns() {
        let s = col.iter().map(|z| z.norm()).fold(R::zero(), |acc, x| acc + x);
        if s > best {
            best = s;
        }
    }
    best
}

pub fn identity<R: Real>(n: usize) -> CMatrix<R> {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = Complex::new(R::one(), R::zero());
    }
    m
}

/// Solve `A X = B` for dense complex `A` by LU with partial pivoting.
pub fn solve_matrix<R: Real>(a: &CMatrix<R>, b: &CMatrix<R>) -> Result<CMatrix<R>, Error> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    let mut lu = a.clone();
    let mut x = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        // pivot
        let mut p = k;
        let mut best = lu[[k, k]].norm_sqr();
        for i in (k + 1)..n {
            let v = lu[[i, k]].norm_sqr();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == R::zero() {
            return Err(Error::Eigensolver("singular matrix in LU solve".into()));
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let tmp = lu[[k, j]];
                lu[[k, j]] = lu[[p, j]];
                lu[[p, j]] = tmp;
            }
            for j in 0..x.ncols() {
                let tmp = x[[k, j]];
                x[[k, j]] = x[[p, j]];
                x[[p, j]] = tmp;
            }
        }
        let piv = lu[[k, k]];
        for i in (k + 1)..n {
            let factor = lu[[i, k]] / piv;
            lu[[i, k]] = factor;
            if factor != Complex::new(R::zero(), R::zero()) {
                for j in (k + 1)..n {
                    let sub = factor * lu[[k, j]];
                    lu[[i, j]] -= sub;
                }
                for j in 0..x.ncols() {
                    let sub = factor * x[[k, j]];
                    x[[i, j]] -= sub;
                }
            }
        }
    }

    // back substitution
    for j in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut acc = x[[i, j]];
            for l in (i + 1)..n {
                acc -= lu[[i, l]] * x[[l, j]];
            }
            x[[i, j]] = acc / lu[[i, i]];
        }
    }
    Ok(x)
}

// Pade numerator coefficients for orders 3..13 (Higham 2005).
const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068e0;
const THETA13: f64 = 5.371920351148152e0;

fn cr<R: Real>(x: f64) -> Complex<R> {
    Complex::new(R::of(x), R::zero())
}

/// Evaluate the order-m Pade approximant (m <= 9) from the even powers of A.
fn pade_low<R: Real>(a: &CMatrix<R>, a2: &CMatrix<R>, b: &[f64]) -> (CMatrix<R>, CMatrix<R>) {
    let n = a.nrows();
    // powers a2^j, j = 0..(m-1)/2
    let half = (b.len() - 1) / 2;
    let mut powers: Vec<CMatrix<R>> = Vec::with_capacity(half + 1);
    powers.push(identity(n));
    for j in 1..=half {
        let next = powers[j - 1].dot(a2);
        powers.push(next);
    }
    let mut u_inner: CMatrix<R> = Array2::zeros((n, n));
    let mut v: CMatrix<R> = Array2::zeros((n, n));
    for j in 0..=half {
        if 2 * j + 1 < b.len() {
            u_inner = u_inner + powers[j].mapv(|z| z * cr::<R>(b[2 * j + 1]));
        }
        v = v + powers[j].mapv(|z| z * cr::<R>(b[2 * j]));
    }
    (a.dot(&u_inner), v)
}

fn pade13<R: Real>(a: &CMatrix<R>, a2: &CMatrix<R>) -> (CMatrix<R>, CMatrix<R>) {
    let b = &B13;
    let a4 = a2.dot(a2);
    let a6 = a4.dot(a2);
    let w1 = a6.mapv(|z| z * cr::<R>(b[13]))
        + a4.mapv(|z| z * cr::<R>(b[11]))
        + a2.mapv(|z| z * cr::<R>(b[9]));
    let w2 = a6.mapv(|z| z * cr::<R>(b[7]))
        + a4.mapv(|z| z * cr::<R>(b[5]))
        + a2.mapv(|z| z * cr::<R>(b[3]))
        + identity::<R>(a.nrows()).mapv(|z| z * cr::<R>(b[1]));
    let u = a.dot(&(a6.dot(&w1) + w2));
    let z1 = a6.mapv(|z| z * cr::<R>(b[12]))
        + a4.mapv(|z| z * cr::<R>(b[10]))
        + a2.mapv(|z| z * cr::<R>(b[8]));
    let v = a6.dot(&z1)
        + a6.mapv(|z| z * cr::<R>(b[6]))
        + a4.mapv(|z| z * cr::<R>(b[4]))
        + a2.mapv(|z| z * cr::<R>(b[2]))
        + identity::<R>(a.nrows()).mapv(|z| z * cr::<R>(b[0]));
    (u, v)
}

/// Matrix exponential by scaling and squaring with a Pade rational core.
///
/// Fails with [`Error::ScaleOverflow`] when `exp(A)` cannot be represented in
/// the working precision (judged from the 1-norm upper bound on its log).
pub fn expm<R: Real>(a: &CMatrix<R>) -> Result<CMatrix<R>, Error> {
    let norm = one_norm(a).as_f64();
    if !norm.is_finite() {
        return Err(Error::Eigensolver("non-finite entries in expm input".into()));
    }
    let max_log = R::max_value().ln().as_f64();
    if norm > 0.9 * max_log {
        return Err(Error::ScaleOverflow { log_norm: norm });
    }

    let a2 = a.dot(a);
    let (u, v, squarings) = if norm <= THETA3 {
        let (u, v) = pade_low(a, &a2, &B3);
        (u, v, 0u32)
    } else if norm <= THETA5 {
        let (u, v) = pade_low(a, &a2, &B5);
        (u, v, 0)
    } else if norm <= THETA7 {
        let (u, v) = pade_low(a, &a2, &B7);
        (u, v, 0)
    } else if norm <= THETA9 {
        let (u, v) = pade_low(a, &a2, &B9);
        (u, v, 0)
    } else {
        let s = ((norm / THETA13).log2().ceil().max(0.0)) as u32;
        let scale = cr::<R>(0.5f64.powi(s as i32));
        let a_s = a.mapv(|z| z * scale);
        let a2_s = a_s.dot(&a_s);
        let (u, v) = pade13(&a_s, &a2_s);
        (u, v, s)
    };

    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve_matrix(&q, &p)?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}
