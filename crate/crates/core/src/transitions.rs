//! Absorbed-probability distributions, the scaled mean displacement, phase
//! classification over parameter grids, transition curves, and disorder
//! robustness.
//!
//! The defining time integral is evaluated in the lossy frame, where all
//! amplitudes decay; the two frames are related by a non-hermitian shift
//! proportional to the identity, so the integrands agree exactly while the
//! lossy one is immune to overflow. The PT-frame path is retained behind
//! [`Frame::Pt`] for cross-checking.

use ndarray::Array2;
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::lattice::{
    build_hamiltonian, spectrum, winding_number, Boundary, LatticeParams, ModelKind, PhaseLabel,
};
use crate::linalg::{CMatrix, CVector};
use crate::propagation::{initial_state, propagator, InitialSpec};
use crate::scalar::{EigScalar, Real};

const MAX_DOUBLINGS: u32 = 6;

/// Discretization of the absorption-time integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings<R> {
    /// Initial integration horizon (doubled adaptively, at most 6 times).
    pub t_max: R,
    /// Steps across the initial horizon; rounded up to even internally.
    pub n_steps: usize,
    /// Residual-mass cutoff deciding convergence.
    pub tail_tol: R,
}

impl<R: Real> QuadratureSettings<R> {
    pub fn new(t_max: R, n_steps: usize, tail_tol: R) -> Result<Self, Error> {
        if !(t_max > R::zero()) {
            return Err(Error::InvalidParams("quadrature t_max must be > 0".into()));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParams("quadrature n_steps must be >= 1".into()));
        }
        if !(tail_tol > R::zero() && tail_tol < R::one()) {
            return Err(Error::InvalidParams("tail_tol must be in (0, 1)".into()));
        }
        Ok(Self { t_max, n_steps, tail_tol })
    }

    /// Horizon `20/gamma` and a step bounded by `0.01 / max(nu + nu', gamma)`,
    /// which the composite-Simpson accumulation turns into completeness at
    /// the 1e-6 level.
    pub fn for_params(params: &LatticeParams<R>) -> Result<Self, Error> {
        if !(params.gamma > R::zero()) {
            return Err(Error::GammaZero);
        }
        let t_max = R::of(20.0) / params.gamma;
        let rate = (params.nu + params.nu_prime).max(params.gamma);
        let dt = R::of(0.01) / rate;
        let n_steps = (t_max / dt).as_f64().ceil() as usize;
        Self::new(t_max, n_steps, R::of(1e-6))
    }
}

/// Which model the time integral is evaluated in. Both frames compute the
/// same quantity; `Lossy` is the numerically safe default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lossy,
    Pt,
}

/// Scaled mean displacement with its absorbed distribution and diagnostics.
#[derive(Debug, Clone)]
pub struct TransitionReport<R: Real> {
    pub delta_m_pt: R,
    /// Quadrature error estimate (Simpson vs trapezoid on the same grid).
    pub quad_error: R,
    /// `P(m)`, absorbed probability per dimer, in dimer order `-M..=M`.
    pub absorbed: Vec<R>,
    /// `1 - sum P(m)`: probability not yet absorbed at the final horizon.
    pub residual: R,
    /// Winding number of the tunneling amplitude; `None` when degenerate.
    pub winding: Option<i32>,
    /// Bulk PT phase (periodic-boundary spectrum of the gain/loss model).
    pub phase: PhaseLabel,
    /// False when the residual was still above `tail_tol` after the maximum
    /// number of horizon doublings; the report then carries a partial result.
    pub converged: bool,
    pub t_final: R,
}

struct AbsorptionQuad<R> {
    p_simpson: Vec<R>,
    p_trapezoid: Vec<R>,
    residual: R,
    t_final: R,
    converged: bool,
}

/// Accumulate `integral 4 gamma e^{-2 shift t} I_L(m, t) dt` along a
/// fixed-step evolution of `h`. `shift = 0` with the lossy Hamiltonian or
/// `shift = gamma` with the gain/loss one give the same integrand.
fn integrate_absorption<R: Real>(
    h: &CMatrix<R>,
    gamma: R,
    shift: R,
    init: &CVector<R>,
    q: &QuadratureSettings<R>,
) -> Result<AbsorptionQuad<R>, Error> {
    let n_dimers = init.len() / 2;
    let base_steps = q.n_steps + q.n_steps % 2;
    let dt = q.t_max / R::of(base_steps as f64);
    let u = propagator(h, dt)?;

    let mut state = init.clone();
    let mut log_norm = R::zero();
    let norm0: R = state.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt();
    if norm0 > R::zero() {
        let inv = norm0.recip();
        state.mapv_inplace(|z| z * Complex::new(inv, R::zero()));
        log_norm = norm0.ln();
    }

    let four_gamma = R::of(4.0) * gamma;
    let sample = |state: &CVector<R>, log_norm: R, t: R, out: &mut Vec<R>| {
        let scale = four_gamma * ((log_norm - shift * t) * R::of(2.0)).exp();
        out.clear();
        for d in 0..n_dimers {
            out.push(state[2 * d + 1].norm_sqr() * scale);
        }
    };

    let mut p_simpson = vec![R::zero(); n_dimers];
    let mut p_trapezoid = vec![R::zero(); n_dimers];
    let mut f_prev2 = Vec::with_capacity(n_dimers);
    let mut f_prev1 = Vec::with_capacity(n_dimers);
    let mut f_cur = Vec::with_capacity(n_dimers);
    sample(&state, log_norm, R::zero(), &mut f_prev2);

    let mut total_steps = base_steps;
    let mut doublings = 0;
    let mut step = 0usize;
    let (residual, t_final, converged) = loop {
        step += 1;
        state = u.dot(&state);
        let n2: R = state.iter().map(|z| z.norm_sqr()).sum();
        let n = n2.sqrt();
        if n > R::zero() && n.is_finite() {
            let inv = n.recip();
            state.mapv_inplace(|z| z * Complex::new(inv, R::zero()));
            log_norm += n.ln();
        }
        let t = dt * R::of(step as f64);
        if step % 2 == 1 {
            sample(&state, log_norm, t, &mut f_prev1);
        } else {
            sample(&state, log_norm, t, &mut f_cur);
            let third = dt / R::of(3.0);
            let half = dt / R::of(2.0);
            for d in 0..n_dimers {
                p_simpson[d] +=
                    third * (f_prev2[d] + R::of(4.0) * f_prev1[d] + f_cur[d]);
                p_trapezoid[d] +=
                    half * (f_prev2[d] + R::of(2.0) * f_prev1[d] + f_cur[d]);
            }
            std::mem::swap(&mut f_prev2, &mut f_cur);
        }

        if step == total_steps {
            let residual = ((log_norm - shift * t) * R::of(2.0)).exp();
            if residual < q.tail_tol {
                break (residual, t, true);
            }
            if doublings == MAX_DOUBLINGS {
                break (residual, t, false);
            }
            doublings += 1;
            total_steps *= 2;
        }
    };

    Ok(AbsorptionQuad {
        p_simpson,
        p_trapezoid,
        residual,
        t_final,
        converged,
    })
}

fn delta_m_of<R: Real>(params: &LatticeParams<R>, p: &[R]) -> R {
    params
        .dimer_indices()
        .zip(p.iter())
        .map(|(m, &pm)| R::of(m as f64) * pm)
        .fold(R::zero(), |acc, x| acc + x)
}

/// Bulk PT phase: classify from the periodic-boundary spectrum of the
/// gain/loss model, which is free of edge modes.
pub fn classify_bulk_phase<R: EigScalar>(params: &LatticeParams<R>) -> Result<PhaseLabel, Error> {
    let bulk = params
        .with_model(ModelKind::PtSymmetric)
        .with_boundary(Boundary::Periodic);
    Ok(spectrum(&bulk)?.phase)
}

fn report_from_quad<R: EigScalar>(
    params: &LatticeParams<R>,
    quad: AbsorptionQuad<R>,
) -> Result<TransitionReport<R>, Error> {
    let delta_m_pt = delta_m_of(params, &quad.p_simpson);
    let delta_m_trap = delta_m_of(params, &quad.p_trapezoid);
    let phase = classify_bulk_phase(params)?;
    let winding = winding_number(params.nu, params.nu_prime, 1024).ok();
    Ok(TransitionReport {
        delta_m_pt,
        quad_error: (delta_m_pt - delta_m_trap).abs(),
        absorbed: quad.p_simpson,
        residual: quad.residual,
        winding,
        phase,
        converged: quad.converged,
        t_final: quad.t_final,
    })
}

/// Absorbed distribution `P(m)` and scaled mean displacement, evaluated in
/// the lossy frame.
pub fn absorbed_distribution<R: EigScalar>(
    params: &LatticeParams<R>,
    init: &InitialSpec<R>,
    q: &QuadratureSettings<R>,
) -> Result<TransitionReport<R>, Error> {
    absorbed_distribution_in_frame(params, init, q, Frame::Lossy)
}

/// Frame-selectable variant; both frames must agree (and are tested to).
pub fn absorbed_distribution_in_frame<R: EigScalar>(
    params: &LatticeParams<R>,
    init: &InitialSpec<R>,
    q: &QuadratureSettings<R>,
    frame: Frame,
) -> Result<TransitionReport<R>, Error> {
    if !(params.gamma > R::zero()) {
        return Err(Error::GammaZero);
    }
    let init_state = initial_state(params, init)?;
    let (h, shift) = match frame {
        Frame::Lossy => (
            build_hamiltonian(&params.with_model(ModelKind::Lossy)),
            R::zero(),
        ),
        Frame::Pt => (
            build_hamiltonian(&params.with_model(ModelKind::PtSymmetric)),
            params.gamma,
        ),
    };
    let quad = integrate_absorption(&h, params.gamma, shift, &init_state, q)?;
    report_from_quad(params, quad)
}

/// Spread of the scaled mean displacement over a list of gain/loss strengths.
pub fn gamma_independence_check<R: EigScalar>(
    params: &LatticeParams<R>,
    init: &InitialSpec<R>,
    gammas: &[R],
) -> Result<R, Error> {
    let mut lo = R::infinity();
    let mut hi = R::neg_infinity();
    for &g in gammas {
        let p = params.with_gamma(g);
        let q = QuadratureSettings::for_params(&p)?;
        let report = absorbed_distribution(&p, init, &q)?;
        lo = lo.min(report.delta_m_pt);
        hi = hi.max(report.delta_m_pt);
    }
    Ok(hi - lo)
}

/// One point of a transition curve.
#[derive(Debug, Clone)]
pub struct CurvePoint<R: Real> {
    pub nu_prime_over_nu: R,
    pub delta_m_pt: Option<R>,
    pub report: Option<TransitionReport<R>>,
    /// Set when the winding is undefined or the quadrature did not converge
    /// (finite-size softening near the transition).
    pub near_degenerate: bool,
    pub error: Option<String>,
}

/// Scaled mean displacement against the tunneling ratio. Per-point failures
/// are flagged; the curve is still returned, ordered by increasing ratio.
pub fn transition_curve<R: EigScalar>(
    nu: R,
    gamma: R,
    init: &InitialSpec<R>,
    nu_prime_list: &[R],
    n_dimers: usize,
    boundary: Boundary,
) -> Vec<CurvePoint<R>> {
    let mut ratios: Vec<R> = nu_prime_list.to_vec();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ratios
        .into_iter()
        .map(|ratio| {
            let point = LatticeParams::new(
                n_dimers,
                nu,
                ratio * nu,
                gamma,
                boundary,
                ModelKind::PtSymmetric,
            )
            .and_then(|p| {
                let q = QuadratureSettings::for_params(&p)?;
                absorbed_distribution(&p, init, &q)
            });
            match point {
                Ok(report) => CurvePoint {
                    nu_prime_over_nu: ratio,
                    delta_m_pt: Some(report.delta_m_pt),
                    near_degenerate: !report.converged || report.winding.is_none(),
                    report: Some(report),
                    error: None,
                },
                Err(e) => CurvePoint {
                    nu_prime_over_nu: ratio,
                    delta_m_pt: None,
                    report: None,
                    near_degenerate: true,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// One cell of a parameter sweep.
#[derive(Debug, Clone)]
pub struct SweepCell<R: Real> {
    pub nu_prime_over_nu: R,
    pub gamma_over_nu: R,
    pub phase: Option<PhaseLabel>,
    /// True when the cell straddles the infinite-lattice phase boundary
    /// `gamma/nu = |1 - nu'/nu|` within the grid resolution.
    pub boundary_cell: bool,
    pub delta_m_pt: Option<R>,
    pub n_peaks_g: Option<usize>,
    pub n_peaks_l: Option<usize>,
    pub max_log10_intensity: Option<R>,
    pub failed: Option<String>,
}

/// Rectangular sweep over `(nu'/nu, gamma/nu)`, cells stored row-major with
/// the gamma index outermost.
#[derive(Debug, Clone)]
pub struct SweepGrid<R: Real> {
    pub nu_prime_over_nu: Vec<R>,
    pub gamma_over_nu: Vec<R>,
    pub cells: Vec<SweepCell<R>>,
}

impl<R: Real> SweepGrid<R> {
    pub fn cell(&self, gamma_idx: usize, nu_prime_idx: usize) -> &SweepCell<R> {
        &self.cells[gamma_idx * self.nu_prime_over_nu.len() + nu_prime_idx]
    }
}

/// Phase classification over a `(nu'/nu, gamma/nu)` grid via the bulk
/// (periodic) dense spectrum at `nu = 1`.
pub fn phase_classify_grid<R: EigScalar>(
    nu_prime_over_nu: &[R],
    gamma_over_nu: &[R],
    n_dimers: usize,
) -> SweepGrid<R> {
    let min_spacing = |xs: &[R]| {
        let mut best = R::infinity();
        for w in xs.windows(2) {
            best = best.min((w[1] - w[0]).abs());
        }
        best
    };
    let res = min_spacing(nu_prime_over_nu)
        .min(min_spacing(gamma_over_nu))
        .min(R::one());
    let half_res = res / R::of(2.0);

    let mut cells = Vec::with_capacity(nu_prime_over_nu.len() * gamma_over_nu.len());
    for &g in gamma_over_nu {
        for &np in nu_prime_over_nu {
            let boundary_cell = ((R::one() - np).abs() - g).abs() <= half_res;
            let phase = LatticeParams::new(
                n_dimers,
                R::one(),
                np,
                g,
                Boundary::Periodic,
                ModelKind::PtSymmetric,
            )
            .and_then(|p| spectrum(&p))
            .map(|s| s.phase);
            match phase {
                Ok(phase) => cells.push(SweepCell {
                    nu_prime_over_nu: np,
                    gamma_over_nu: g,
                    phase: Some(phase),
                    boundary_cell,
                    delta_m_pt: None,
                    n_peaks_g: None,
                    n_peaks_l: None,
                    max_log10_intensity: None,
                    failed: None,
                }),
                Err(e) => cells.push(SweepCell {
                    nu_prime_over_nu: np,
                    gamma_over_nu: g,
                    phase: None,
                    boundary_cell,
                    delta_m_pt: None,
                    n_peaks_g: None,
                    n_peaks_l: None,
                    max_log10_intensity: None,
                    failed: Some(e.to_string()),
                }),
            }
        }
    }
    SweepGrid {
        nu_prime_over_nu: nu_prime_over_nu.to_vec(),
        gamma_over_nu: gamma_over_nu.to_vec(),
        cells,
    }
}

/// Disorder-averaged scaled mean displacement.
#[derive(Debug, Clone)]
pub struct DisorderReport<R> {
    pub mean: R,
    pub stddev: R,
    pub samples: Vec<R>,
}

/// Uniform multiplicative tunneling disorder: every bond strength is scaled
/// by `1 + u` with `u` uniform in `[-strength, strength]`. On-site terms are
/// untouched, preserving the bipartite structure. Realizations are seeded
/// from `(seed, index)` so results are schedule-independent.
pub fn disorder_robustness<R: EigScalar>(
    params: &LatticeParams<R>,
    init: &InitialSpec<R>,
    strength: R,
    n_realizations: usize,
    seed: u64,
) -> Result<DisorderReport<R>, Error> {
    if !(strength >= R::zero()) {
        return Err(Error::InvalidParams("disorder strength must be >= 0".into()));
    }
    if n_realizations == 0 {
        return Err(Error::InvalidParams("need at least one realization".into()));
    }
    if !(params.gamma > R::zero()) {
        return Err(Error::GammaZero);
    }
    let init_state = initial_state(params, init)?;
    let q = QuadratureSettings::for_params(params)?;
    let n = params.n_dimers();

    let mut samples = Vec::with_capacity(n_realizations);
    for r in 0..n_realizations {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let s = strength.as_f64();
        let mut h = build_hamiltonian(&params.with_model(ModelKind::Lossy));
        // intra-dimer bonds, then inter-dimer bonds, in dimer order
        for d in 0..n {
            let u = R::of(rng.gen_range(-s..=s));
            let factor = Complex::new(R::one() + u, R::zero());
            h[[2 * d, 2 * d + 1]] = h[[2 * d, 2 * d + 1]] * factor;
            h[[2 * d + 1, 2 * d]] = h[[2 * d + 1, 2 * d]] * factor;
        }
        for d in 0..n {
            let u = R::of(rng.gen_range(-s..=s));
            let factor = Complex::new(R::one() + u, R::zero());
            if d + 1 < n {
                h[[2 * d + 1, 2 * d + 2]] = h[[2 * d + 1, 2 * d + 2]] * factor;
                h[[2 * d + 2, 2 * d + 1]] = h[[2 * d + 2, 2 * d + 1]] * factor;
            } else if params.boundary == Boundary::Periodic {
                h[[2 * n - 1, 0]] = h[[2 * n - 1, 0]] * factor;
                h[[0, 2 * n - 1]] = h[[0, 2 * n - 1]] * factor;
            }
        }
        let quad = integrate_absorption(&h, params.gamma, R::zero(), &init_state, &q)?;
        samples.push(delta_m_of(params, &quad.p_simpson));
    }

    let count = R::of(samples.len() as f64);
    let mean = samples.iter().cloned().fold(R::zero(), |a, x| a + x) / count;
    let var = samples
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .fold(R::zero(), |a, x| a + x)
        / count;
    Ok(DisorderReport {
        mean,
        stddev: var.sqrt(),
        samples,
    })
}

/// Dense lossy Hamiltonian hook for callers that need the absorption
/// integral on a custom matrix (kept for parity with `disorder_robustness`).
pub fn absorbed_on_matrix<R: Real>(
    h_lossy: &Array2<Complex<R>>,
    gamma: R,
    init: &CVector<R>,
    q: &QuadratureSettings<R>,
) -> Result<(Vec<R>, R, bool), Error> {
    if !(gamma > R::zero()) {
        return Err(Error::GammaZero);
    }
    let quad = integrate_absorption(h_lossy, gamma, R::zero(), init, q)?;
    Ok((quad.p_simpson, quad.residual, quad.converged))
}
