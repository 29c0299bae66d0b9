//! Closed-form broken-phase propagator and the long-time Gaussian
//! wavefunctions on the two sublattices, node positions, and modality
//! classification of intensity profiles.

use num_complex::Complex;

use crate::error::Error;
use crate::lattice::{BlochBlock, Sublattice};
use crate::scalar::Real;

/// Derived broken-phase scales: amplification rate `Gamma` and diffusion
/// constant `D = nu nu' / Gamma`. Only constructible above threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticParams<R> {
    pub gamma_pt: R,
    pub big_gamma: R,
    pub diffusion: R,
}

impl<R: Real> AsymptoticParams<R> {
    pub fn new(nu: R, nu_prime: R, gamma: R) -> Result<Self, Error> {
        let gamma_pt = (nu - nu_prime).abs();
        if !(gamma > gamma_pt) {
            return Err(Error::NotAmplifying {
                gamma: gamma.as_f64(),
                gamma_pt: gamma_pt.as_f64(),
            });
        }
        let big_gamma = (gamma * gamma - gamma_pt * gamma_pt).sqrt();
        Ok(Self {
            gamma_pt,
            big_gamma,
            diffusion: nu * nu_prime / big_gamma,
        })
    }
}

/// `cosh(Gamma_k t) 1 - i (H_k / Gamma_k) sinh(Gamma_k t)` for a broken
/// block (`|nu_k| < gamma`).
pub fn broken_block_propagator<R: Real>(
    block: &BlochBlock<R>,
    t: R,
) -> Result<[[Complex<R>; 2]; 2], Error> {
    let d = block.eps_sq();
    if d >= R::zero() {
        return Err(Error::NotBroken {
            nu_k_abs: block.nu_k.norm().as_f64(),
            gamma: block.gamma.as_f64(),
        });
    }
    let big_gamma = (-d).sqrt();
    let c = Complex::new((big_gamma * t).cosh(), R::zero());
    let s = Complex::new(R::zero(), (big_gamma * t).sinh() / big_gamma);
    Ok([
        [c - s * block.h[0][0], -s * block.h[0][1]],
        [-s * block.h[1][0], -s * block.h[1][1] + c],
    ])
}

/// Analytic long-time wavefunctions on both sublattices.
#[derive(Debug, Clone)]
pub struct AnalyticProfiles<R: Real> {
    pub m_values: Vec<i64>,
    pub psi_g: Vec<Complex<R>>,
    pub psi_l: Vec<Complex<R>>,
    /// False when `Gamma t < 3` or `D t < 1`, outside the stationary-phase
    /// validity domain; the values are still returned.
    pub in_validity_domain: bool,
}

/// Long-time broken-phase wavefunctions for an initial state on one
/// sublattice of the central dimer: diffusing Gaussians with the
/// `(-1)^m exp(Gamma t) / sqrt(8 pi D t)` prefactor.
pub fn analytic_wavefunctions<R: Real>(
    nu: R,
    nu_prime: R,
    gamma: R,
    init_sublattice: Sublattice,
    m_values: &[i64],
    t: R,
) -> Result<AnalyticProfiles<R>, Error> {
    if !(nu_prime > R::zero()) {
        return Err(Error::InvalidParams(
            "analytic wavefunctions need nu_prime > 0".into(),
        ));
    }
    let ap = AsymptoticParams::new(nu, nu_prime, gamma)?;
    let big_gamma = ap.big_gamma;
    let d = ap.diffusion;
    let in_validity_domain = big_gamma * t >= R::of(3.0) && d * t >= R::one();

    let two_dt = R::of(2.0) * d * t;
    let prefactor = (big_gamma * t).exp() / (R::of(8.0) * R::PI() * d * t).sqrt();
    let sign = |m: i64| {
        if m.rem_euclid(2) == 0 {
            R::one()
        } else {
            -R::one()
        }
    };
    let gauss = |x: R| (-(x * x) / two_dt).exp();

    let mut psi_g = Vec::with_capacity(m_values.len());
    let mut psi_l = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let mf = R::of(m as f64);
        let s = sign(m) * prefactor;
        match init_sublattice {
            Sublattice::Gain => {
                // gain: pure Gaussian; loss: difference of Gaussians at 0 and -1
                let g = s * (R::one() + gamma / big_gamma) * gauss(mf);
                psi_g.push(Complex::new(g, R::zero()));
                let l = s / big_gamma * (nu * gauss(mf) - nu_prime * gauss(mf + R::one()));
                psi_l.push(Complex::new(R::zero(), l));
            }
            Sublattice::Loss => {
                // gain: difference of Gaussians at 0 and +1
                let g = s / big_gamma * (nu * gauss(mf) - nu_prime * gauss(mf - R::one()));
                psi_g.push(Complex::new(R::zero(), g));
                // loss: Gaussian with the mixed-order bracket
                let bracket = R::one()
                    - (gamma / big_gamma)
                        * (R::one() + R::one() / (R::of(2.0) * big_gamma * t)
                            - mf * mf / (R::of(2.0) * nu * nu_prime * t * t));
                let l = s * gauss(mf) * bracket;
                psi_l.push(Complex::new(l, R::zero()));
            }
        }
    }
    Ok(AnalyticProfiles {
        m_values: m_values.to_vec(),
        psi_g,
        psi_l,
        in_validity_domain,
    })
}

/// Node positions of the loss-sublattice intensity at the topological
/// transition (`nu = nu'`): `m* = +/- sqrt(nu^2 t / gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePositions<R> {
    pub minus: R,
    pub plus: R,
    /// Set at `t = 0`, where both nodes collapse onto the origin.
    pub degenerate: bool,
}

pub fn node_positions<R: Real>(nu: R, gamma: R, t: R) -> Result<NodePositions<R>, Error> {
    if !(gamma > R::zero()) || t < R::zero() {
        return Err(Error::InvalidParams(
            "node positions need gamma > 0 and t >= 0".into(),
        ));
    }
    let node = (nu * nu * t / gamma).sqrt();
    Ok(NodePositions {
        minus: -node,
        plus: node,
        degenerate: node == R::zero(),
    })
}

/// Peak structure of a nonnegative profile.
#[derive(Debug, Clone)]
pub struct ModalityReport<R> {
    pub n_peaks: usize,
    /// Peak indices into the profile, ascending; plateaus count once at
    /// their leftmost index.
    pub peak_positions: Vec<i64>,
    /// Reflection center (in index units, may be half-integer), reported
    /// only when the reflection residual is below 5%.
    pub symmetry_axis: Option<R>,
    /// Interior strict local minima.
    pub minima_positions: Vec<i64>,
}

impl<R: Real> ModalityReport<R> {
    /// Shift index-based positions to dimer indices starting at `m0`.
    pub fn shifted(mut self, m0: i64) -> Self {
        for p in &mut self.peak_positions {
            *p += m0;
        }
        for p in &mut self.minima_positions {
            *p += m0;
        }
        if let Some(axis) = self.symmetry_axis {
            self.symmetry_axis = Some(axis + R::of(m0 as f64));
        }
        self
    }
}

/// Count strict local maxima above `rel_threshold * max(profile)`.
pub fn modality<R: Real>(profile: &[R], rel_threshold: R) -> Result<ModalityReport<R>, Error> {
    let n = profile.len();
    let max = profile.iter().cloned().fold(R::zero(), R::max);
    if !(max > R::zero()) {
        return Err(Error::AllZeroProfile);
    }
    let thr = rel_threshold * max;
    let at = |i: isize| -> R {
        if i < 0 || i as usize >= n {
            R::neg_infinity()
        } else {
            profile[i as usize]
        }
    };

    let mut peak_positions = Vec::new();
    let mut minima_positions = Vec::new();
    let mut i: usize = 0;
    while i < n {
        // plateau run [i, j)
        let mut j = i + 1;
        while j < n && profile[j] == profile[i] {
            j += 1;
        }
        let left = at(i as isize - 1);
        let right = at(j as isize);
        let v = profile[i];
        if v > left && v > right && v > thr {
            peak_positions.push(i as i64);
        }
        if i > 0 && j < n && v < left && v < right {
            minima_positions.push(i as i64);
        }
        i = j;
    }

    // intensity-weighted reflection center
    let total: R = profile.iter().cloned().sum();
    let centroid = profile
        .iter()
        .enumerate()
        .map(|(idx, &v)| R::of(idx as f64) * v)
        .fold(R::zero(), |a, x| a + x)
        / total;
    let s = (centroid * R::of(2.0)).round();
    let s_idx = s.as_f64() as i64;
    let mut residual = R::zero();
    for idx in 0..n as i64 {
        let mirrored = s_idx - idx;
        let other = if mirrored >= 0 && (mirrored as usize) < n {
            profile[mirrored as usize]
        } else {
            R::zero()
        };
        residual += (profile[idx as usize] - other).abs();
    }
    residual = residual / (R::of(2.0) * total);
    let symmetry_axis = if residual < R::of(0.05) {
        Some(s / R::of(2.0))
    } else {
        None
    };

    Ok(ModalityReport {
        n_peaks: peak_positions.len(),
        peak_positions,
        symmetry_axis,
        minima_positions,
    })
}

/// Relative L2 distance between two profiles, each normalized to unit sum.
/// Callers restrict the window (typically `|m| <= 3 sqrt(D t)`) beforehand.
pub fn compare_profiles<R: Real>(numeric: &[R], analytic: &[R]) -> Result<R, Error> {
    if numeric.len() != analytic.len() {
        return Err(Error::ShapeMismatch {
            left: numeric.len(),
            right: analytic.len(),
        });
    }
    let sum_n: R = numeric.iter().cloned().sum();
    let sum_a: R = analytic.iter().cloned().sum();
    if !(sum_n > R::zero()) || !(sum_a > R::zero()) {
        return Err(Error::AllZeroProfile);
    }
    let mut diff2 = R::zero();
    let mut ref2 = R::zero();
    for (&x, &y) in numeric.iter().zip(analytic.iter()) {
        let xn = x / sum_n;
        let ya = y / sum_a;
        diff2 += (xn - ya) * (xn - ya);
        ref2 += ya * ya;
    }
    Ok((diff2 / ref2).sqrt())
}

/// Indices of `m_values` with `|m| <= limit`.
pub fn window_indices<R: Real>(m_values: &[i64], limit: R) -> Vec<usize> {
    m_values
        .iter()
        .enumerate()
        .filter(|(_, &m)| R::of(m as f64).abs() <= limit)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{bloch_block, Boundary, LatticeParams, ModelKind};

    #[test]
    fn asymptotic_params_guard() {
        assert!(AsymptoticParams::new(1.0, 0.5, 0.4).is_err());
        let ap = AsymptoticParams::new(1.0f64, 1.0, 0.5).unwrap();
        assert!((ap.big_gamma - 0.5).abs() < 1e-15);
        assert!((ap.diffusion - 2.0).abs() < 1e-15);
    }

    #[test]
    fn broken_propagator_t_zero_identity() {
        let p = LatticeParams::new(5, 1.0, 1.0, 0.5, Boundary::Open, ModelKind::PtSymmetric)
            .unwrap();
        let b = bloch_block(&p, std::f64::consts::PI);
        let g = broken_block_propagator(&b, 0.0).unwrap();
        assert!((g[0][0].re - 1.0).abs() < 1e-15);
        assert!(g[0][1].norm() < 1e-15);
        assert!((g[1][1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn broken_propagator_rejects_symmetric_block() {
        let p = LatticeParams::new(5, 1.0, 0.5, 0.1, Boundary::Open, ModelKind::PtSymmetric)
            .unwrap();
        let b = bloch_block(&p, 0.5);
        assert!(matches!(
            broken_block_propagator(&b, 1.0),
            Err(Error::NotBroken { .. })
        ));
    }

    #[test]
    fn broken_propagator_decoupled_momentum() {
        // nu_k = 0 (nu = nu', k = pi): diag(e^{gamma t}, e^{-gamma t})
        let p = LatticeParams::new(5, 1.0, 1.0, 0.7, Boundary::Open, ModelKind::PtSymmetric)
            .unwrap();
        let b = bloch_block(&p, std::f64::consts::PI);
        let t = 2.0;
        let g = broken_block_propagator(&b, t).unwrap();
        assert!((g[0][0].re - (0.7 * t).exp()).abs() < 1e-10);
        assert!((g[1][1].re - (-0.7 * t).exp()).abs() < 1e-10);
        assert!(g[0][1].norm() < 1e-12);
        assert!(g[1][0].norm() < 1e-12);
    }

    #[test]
    fn broken_propagator_long_time_rank_one() {
        let p = LatticeParams::new(5, 1.0, 1.2, 0.9, Boundary::Open, ModelKind::PtSymmetric)
            .unwrap();
        let b = bloch_block(&p, std::f64::consts::PI);
        let big_gamma = (-b.eps_sq()).sqrt();
        let t = 12.0;
        let g = broken_block_propagator(&b, t).unwrap();
        let scale = (big_gamma * t).exp() / 2.0;
        for i in 0..2 {
            for j in 0..2 {
                let ident = if i == j {
                    num_complex::Complex64::new(1.0, 0.0)
                } else {
                    num_complex::Complex64::new(0.0, 0.0)
                };
                let want = (ident
                    - num_complex::Complex64::i() * b.h[i][j] / big_gamma)
                    * scale;
                // the discarded decaying branch is bounded by
                // exp(-Gamma t) * |1 + i H / Gamma| / 2 relative to `scale`
                let rel = (g[i][j] - want).norm() / scale;
                assert!(rel < (-2.0 * big_gamma * t).exp() * 10.0 + 1e-12);
            }
        }
    }

    #[test]
    fn gain_profile_is_gaussian_with_variance_dt() {
        let ms: Vec<i64> = (-60..=60).collect();
        let prof = analytic_wavefunctions(1.0f64, 1.0, 0.5, Sublattice::Gain, &ms, 10.0).unwrap();
        assert!(prof.in_validity_domain);
        let d_t = 2.0 * 10.0; // D = nu nu' / Gamma = 2
        let total: f64 = prof.psi_g.iter().map(|z| z.norm_sqr()).sum();
        let var: f64 = ms
            .iter()
            .zip(prof.psi_g.iter())
            .map(|(&m, z)| (m as f64).powi(2) * z.norm_sqr())
            .sum::<f64>()
            / total;
        // |psi|^2 halves the Gaussian variance: var = D t / 2... the profile
        // itself has variance Dt in amplitude, Dt/2 in intensity
        assert!((var - d_t / 2.0).abs() / (d_t / 2.0) < 0.01);
    }

    #[test]
    fn loss_profile_reflection_symmetry_at_transition() {
        let ms: Vec<i64> = (-30..=30).collect();
        let prof = analytic_wavefunctions(1.0f64, 1.0, 0.5, Sublattice::Gain, &ms, 10.0).unwrap();
        for (i, &m) in ms.iter().enumerate() {
            let j = ms.iter().position(|&x| x == -1 - m);
            if let Some(j) = j {
                let a = prof.psi_l[i].norm();
                let b = prof.psi_l[j].norm();
                assert!((a - b).abs() <= 1e-12 * a.max(b).max(1e-300));
            }
        }
    }

    #[test]
    fn sign_structure_does_not_affect_intensity() {
        let ms: Vec<i64> = (-20..=20).collect();
        let prof = analytic_wavefunctions(1.0f64, 1.3, 0.8, Sublattice::Loss, &ms, 9.0).unwrap();
        for (i, &m) in ms.iter().enumerate() {
            let signless = prof.psi_l[i] * Complex::new(if m % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
            assert_eq!(signless.norm_sqr(), prof.psi_l[i].norm_sqr());
        }
    }

    #[test]
    fn node_position_examples() {
        let n = node_positions(1.0f64, 0.5, 10.0).unwrap();
        assert!((n.plus - 20.0f64.sqrt()).abs() < 1e-12);
        assert!((n.minus + 20.0f64.sqrt()).abs() < 1e-12);
        assert!(!n.degenerate);

        let n = node_positions(1.0f64, 1.0, 4.0).unwrap();
        assert!((n.plus - 2.0).abs() < 1e-12);

        let n = node_positions(1.0f64, 0.5, 0.0).unwrap();
        assert!(n.degenerate);
    }

    #[test]
    fn eq12_nodes_at_sqrt_dt() {
        // nu = nu' = 1, gamma = 0.5, t = 10: psi_L vanishes at +/- sqrt(20)
        let t: f64 = 10.0;
        let node = (20.0f64).sqrt();
        let ms: Vec<i64> = (-10..=10).collect();
        let prof = analytic_wavefunctions(1.0f64, 1.0, 0.5, Sublattice::Loss, &ms, t).unwrap();
        // strip the (-1)^m alternation; the bracket changes sign at the node
        let vals: Vec<f64> = ms
            .iter()
            .zip(prof.psi_l.iter())
            .map(|(&m, z)| z.re * if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 })
            .collect();
        let at = |m: i64| vals[(m + 10) as usize];
        assert!(at(4) * at(5) < 0.0, "node between 4 and 5 (sqrt(20)={node})");
        assert!(at(-5) * at(-4) < 0.0);
    }

    #[test]
    fn modality_single_gaussian() {
        let profile: Vec<f64> = (-20..=20)
            .map(|m| (-(m as f64).powi(2) / 30.0).exp())
            .collect();
        let rep = modality(&profile, 1e-3).unwrap();
        assert_eq!(rep.n_peaks, 1);
        assert_eq!(rep.peak_positions, vec![20]);
        let rep = rep.shifted(-20);
        assert_eq!(rep.peak_positions, vec![0]);
        assert_eq!(rep.symmetry_axis, Some(0.0));
    }

    #[test]
    fn modality_bimodal_eq10_profile() {
        let ms: Vec<i64> = (-30..=30).collect();
        let prof = analytic_wavefunctions(1.0f64, 1.0, 0.5, Sublattice::Gain, &ms, 10.0).unwrap();
        let intensity: Vec<f64> = prof.psi_l.iter().map(|z| z.norm_sqr()).collect();
        let rep = modality(&intensity, 1e-3).unwrap().shifted(-30);
        assert_eq!(rep.n_peaks, 2);
        assert_eq!(rep.symmetry_axis, Some(-0.5));
    }

    #[test]
    fn modality_trimodal_eq12_profile() {
        let ms: Vec<i64> = (-40..=40).collect();
        let prof = analytic_wavefunctions(1.0f64, 1.0, 0.5, Sublattice::Loss, &ms, 12.0).unwrap();
        let intensity: Vec<f64> = prof.psi_l.iter().map(|z| z.norm_sqr()).collect();
        let rep = modality(&intensity, 1e-3).unwrap().shifted(-40);
        assert_eq!(rep.n_peaks, 3);
        // minima near +/- sqrt(Dt), D = 2
        let node = (2.0f64 * 12.0).sqrt();
        assert!(rep
            .minima_positions
            .iter()
            .any(|&m| ((m as f64) - node).abs() <= 1.0));
        assert!(rep
            .minima_positions
            .iter()
            .any(|&m| ((m as f64) + node).abs() <= 1.0));
    }

    #[test]
    fn modality_rejects_zero_profile() {
        let profile = vec![0.0f64; 11];
        assert!(matches!(modality(&profile, 1e-3), Err(Error::AllZeroProfile)));
    }

    #[test]
    fn compare_profiles_identical_is_zero() {
        let p: Vec<f64> = (0..21).map(|i| ((i as f64) - 10.0).powi(2).exp().recip()).collect();
        let err = compare_profiles(&p, &p).unwrap();
        assert_eq!(err, 0.0);
        // scale invariance through normalization
        let q: Vec<f64> = p.iter().map(|x| 7.5 * x).collect();
        assert!(compare_profiles(&p, &q).unwrap() < 1e-14);
    }

    #[test]
    fn compare_profiles_shape_mismatch() {
        assert!(matches!(
            compare_profiles(&[1.0, 2.0], &[1.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
