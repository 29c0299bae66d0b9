//! Dimer-lattice Hamiltonians: dense and Bloch-block forms, spectra,
//! PT-breaking thresholds, and the topological winding number.
//!
//! Site ordering is part of the public contract: sites are interleaved as
//! (m = -M, G), (m = -M, L), (m = -M+1, G), ... ascending in the dimer index,
//! gain site first within each dimer. All dense matrices and exported fields
//! use this order.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::Error;
use crate::linalg::CMatrix;
use crate::scalar::{EigScalar, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Balanced gain/loss `+i gamma` on G, `-i gamma` on L.
    PtSymmetric,
    /// Neutral G site, `-2i gamma` on L.
    Lossy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sublattice {
    Gain,
    Loss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteIndex {
    pub dimer: i64,
    pub sublattice: Sublattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseLabel {
    PtSymmetric,
    PtBroken,
}

/// Lattice geometry and couplings. `n_dimers` is odd, `N = 2M + 1`, with the
/// dimer index running over `-M..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams<R> {
    n_dimers: usize,
    pub nu: R,
    pub nu_prime: R,
    pub gamma: R,
    pub boundary: Boundary,
    pub model: ModelKind,
}

impl<R: Real> LatticeParams<R> {
    pub fn new(
        n_dimers: usize,
        nu: R,
        nu_prime: R,
        gamma: R,
        boundary: Boundary,
        model: ModelKind,
    ) -> Result<Self, Error> {
        if n_dimers < 3 || n_dimers % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "n_dimers must be odd and >= 3, got {n_dimers}"
            )));
        }
        if !(nu > R::zero()) || !nu.is_finite() {
            return Err(Error::InvalidParams(format!(
                "nu must be > 0 and finite, got {nu}"
            )));
        }
        if !(nu_prime >= R::zero()) || !nu_prime.is_finite() {
            return Err(Error::InvalidParams(format!(
                "nu_prime must be >= 0 and finite, got {nu_prime}"
            )));
        }
        if !(gamma >= R::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "gamma must be >= 0 and finite, got {gamma}"
            )));
        }
        Ok(Self {
            n_dimers,
            nu,
            nu_prime,
            gamma,
            boundary,
            model,
        })
    }

    pub fn n_dimers(&self) -> usize {
        self.n_dimers
    }

    pub fn n_sites(&self) -> usize {
        2 * self.n_dimers
    }

    /// `M` in `N = 2M + 1`.
    pub fn half_width(&self) -> i64 {
        (self.n_dimers as i64 - 1) / 2
    }

    /// Dimer indices `-M..=M` in site order.
    pub fn dimer_indices(&self) -> impl Iterator<Item = i64> {
        let m = self.half_width();
        -m..=m
    }

    /// Flat index of a site in the interleaved ordering.
    pub fn site(&self, index: SiteIndex) -> Result<usize, Error> {
        let m = self.half_width();
        if index.dimer < -m || index.dimer > m {
            return Err(Error::DimerOutOfRange {
                dimer: index.dimer,
                half_width: m,
            });
        }
        let base = 2 * (index.dimer + m) as usize;
        Ok(match index.sublattice {
            Sublattice::Gain => base,
            Sublattice::Loss => base + 1,
        })
    }

    pub fn with_model(self, model: ModelKind) -> Self {
        Self { model, ..self }
    }

    pub fn with_gamma(self, gamma: R) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_boundary(self, boundary: Boundary) -> Self {
        Self { boundary, ..self }
    }
}

/// Per-momentum 2x2 Hamiltonian data for the PT-symmetric model:
/// `h = [[i gamma, -nu_k^*], [-nu_k, -i gamma]]` in the (G, L) basis.
#[derive(Debug, Clone)]
pub struct BlochBlock<R: Real> {
    pub k: R,
    pub nu_k: Complex<R>,
    pub h: [[Complex<R>; 2]; 2],
    /// Sign-paired spectrum `(+eps_k, -eps_k)` with the principal square root
    /// of `|nu_k|^2 - gamma^2`.
    pub eps_k: (Complex<R>, Complex<R>),
    pub gamma: R,
}

impl<R: Real> BlochBlock<R> {
    /// The lossy-model block, shifted down by `i gamma` on the diagonal.
    pub fn h_lossy(&self) -> [[Complex<R>; 2]; 2] {
        let shift = Complex::new(R::zero(), self.gamma);
        [
            [self.h[0][0] - shift, self.h[0][1]],
            [self.h[1][0] - shift, self.h[1][1]],
        ]
    }

    /// `|nu_k|^2 - gamma^2`; negative in a broken block.
    pub fn eps_sq(&self) -> R {
        self.nu_k.norm_sqr() - self.gamma * self.gamma
    }
}

/// Finite and infinite-lattice PT-breaking thresholds.
#[derive(Debug, Clone)]
pub struct ThresholdReport<R> {
    /// `|nu - nu_prime|`, the infinite-lattice threshold.
    pub gamma_pt_infinite: R,
    /// `min_k |nu_k|` over the lattice's eigenmomentum grid.
    pub gamma_pt_finite: R,
    pub momenta: Vec<R>,
}

/// Dense spectrum with phase classification and an exceptional-point
/// proximity diagnostic (condition number of the eigenvector matrix).
#[derive(Debug, Clone)]
pub struct SpectrumReport<R: Real> {
    pub eigenvalues: Vec<Complex<R>>,
    pub phase: PhaseLabel,
    pub max_abs_imag: R,
    pub eigvec_condition: R,
}

/// Dense Hamiltonian in the interleaved site ordering.
pub fn build_hamiltonian<R: Real>(params: &LatticeParams<R>) -> CMatrix<R> {
    let n = params.n_sites();
    let mut h: CMatrix<R> = Array2::zeros((n, n));
    let zero = R::zero();
    let (diag_g, diag_l) = match params.model {
        ModelKind::PtSymmetric => (
            Complex::new(zero, params.gamma),
            Complex::new(zero, -params.gamma),
        ),
        ModelKind::Lossy => (
            Complex::new(zero, zero),
            Complex::new(zero, -(params.gamma + params.gamma)),
        ),
    };
    let m_nu = Complex::new(-params.nu, zero);
    let m_nu_prime = Complex::new(-params.nu_prime, zero);

    for d in 0..params.n_dimers {
        let g = 2 * d;
        let l = 2 * d + 1;
        h[[g, g]] = diag_g;
        h[[l, l]] = diag_l;
        h[[g, l]] = m_nu;
        h[[l, g]] = m_nu;
        if d + 1 < params.n_dimers {
            let g_next = 2 * (d + 1);
            h[[l, g_next]] = m_nu_prime;
            h[[g_next, l]] = m_nu_prime;
        }
    }
    if params.boundary == Boundary::Periodic {
        let l_last = 2 * params.n_dimers - 1;
        h[[l_last, 0]] = m_nu_prime;
        h[[0, l_last]] = m_nu_prime;
    }
    h
}

/// The 2x2 momentum-space block of the PT-symmetric model at momentum `k`.
pub fn bloch_block<R: Real>(params: &LatticeParams<R>, k: R) -> BlochBlock<R> {
    let zero = R::zero();
    let nu_k = Complex::new(params.nu, zero) + Complex::from_polar(params.nu_prime, k);
    let ig = Complex::new(zero, params.gamma);
    let h = [[ig, -nu_k.conj()], [-nu_k, -ig]];
    let eps_sq = Complex::new(nu_k.norm_sqr() - params.gamma * params.gamma, zero);
    let eps = eps_sq.sqrt();
    BlochBlock {
        k,
        nu_k,
        h,
        eps_k: (eps, -eps),
        gamma: params.gamma,
    }
}

/// Eigenmomentum grid: `k_n = n pi / (N+1)`, `1 <= n <= N` for open
/// boundaries; `k_n = 2 pi n / N`, `|n| <= N/2` for periodic ones.
pub fn eigenmomenta<R: Real>(params: &LatticeParams<R>) -> Vec<R> {
    let n = params.n_dimers;
    match params.boundary {
        Boundary::Open => (1..=n)
            .map(|j| R::of(j as f64) * R::PI() / R::of((n + 1) as f64))
            .collect(),
        Boundary::Periodic => {
            let m = params.half_width();
            (-m..=m)
                .map(|j| R::of(2.0 * j as f64) * R::PI() / R::of(n as f64))
                .collect()
        }
    }
}

/// Dense eigenvalues with PT phase classification.
///
/// Classification tolerance is `1e-9 * max(nu, gamma)`, absorbing the
/// spurious imaginary parts a dense eigensolver produces at machine scale.
pub fn spectrum<R: EigScalar>(params: &LatticeParams<R>) -> Result<SpectrumReport<R>, Error> {
    let h = build_hamiltonian(params);
    let (eigenvalues, vectors) = R::eig(&h)?;
    let max_abs_imag = eigenvalues
        .iter()
        .map(|z| z.im.abs())
        .fold(R::zero(), R::max);
    let tol_imag = R::of(1e-9) * params.nu.max(params.gamma);
    let phase = if max_abs_imag < tol_imag {
        PhaseLabel::PtSymmetric
    } else {
        PhaseLabel::PtBroken
    };
    let sv = R::singular_values(&vectors)?;
    let smin = sv.iter().cloned().fold(R::infinity(), R::min);
    let smax = sv.iter().cloned().fold(R::zero(), R::max);
    let eigvec_condition = if smin > R::zero() {
        smax / smin
    } else {
        R::infinity()
    };
    Ok(SpectrumReport {
        eigenvalues: eigenvalues.to_vec(),
        phase,
        max_abs_imag,
        eigvec_condition,
    })
}

/// Finite-grid and infinite-lattice PT thresholds.
pub fn pt_threshold<R: Real>(params: &LatticeParams<R>) -> ThresholdReport<R> {
    let momenta = eigenmomenta(params);
    let gamma_pt_finite = momenta
        .iter()
        .map(|&k| {
            (Complex::new(params.nu, R::zero()) + Complex::from_polar(params.nu_prime, k)).norm()
        })
        .fold(R::infinity(), R::min);
    ThresholdReport {
        gamma_pt_infinite: (params.nu - params.nu_prime).abs(),
        gamma_pt_finite,
        momenta,
    }
}

/// Winding number of `nu_k^* = nu + nu_prime exp(-ik)` over `k in [0, 2 pi)`.
///
/// The sign convention makes the result 0 for `nu_prime < nu` and -1 for
/// `nu_prime > nu`.
pub fn winding_number<R: Real>(nu: R, nu_prime: R, k_samples: usize) -> Result<i32, Error> {
    let samples = k_samples.max(64);
    let tol_origin = R::of(1e-8) * nu;
    let point = |j: usize| -> Complex<R> {
        let k = R::of(2.0 * j as f64) * R::PI() / R::of(samples as f64);
        Complex::new(nu, R::zero()) + Complex::from_polar(nu_prime, -k)
    };
    let mut min_abs = R::infinity();
    let mut total_phase = R::zero();
    let mut prev = point(0);
    for j in 1..=samples {
        let cur = point(j % samples);
        min_abs = min_abs.min(prev.norm());
        total_phase += (cur / prev).arg();
        prev = cur;
    }
    if min_abs < tol_origin {
        return Err(Error::DegenerateWinding {
            min_abs: min_abs.as_f64(),
            tol: tol_origin.as_f64(),
        });
    }
    let winding = (total_phase / (R::of(2.0) * R::PI())).round();
    Ok(winding.as_f64() as i32)
}
