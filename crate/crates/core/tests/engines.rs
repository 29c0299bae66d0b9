//! Cross-validation of the three evolution engines and the bookkeeping
//! identities that tie the PT-symmetric and lossy models together.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use ptdimer_core::lattice::{
    build_hamiltonian, eigenmomenta, pt_threshold, spectrum, Boundary, LatticeParams, ModelKind,
    PhaseLabel,
};
use ptdimer_core::propagation::{
    evolve, evolve_bloch, evolve_oracle, initial_state, InitialSpec, Trajectory,
};

fn pt_params(
    n: usize,
    nu_prime: f64,
    gamma: f64,
    boundary: Boundary,
) -> LatticeParams<f64> {
    LatticeParams::new(n, 1.0, nu_prime, gamma, boundary, ModelKind::PtSymmetric).unwrap()
}

/// Largest pairwise relative deviation in site intensities over the common
/// time grid. Sites below `1e-5` of the instantaneous maximum are skipped:
/// engine errors mix across sites, so per-site relative agreement is only
/// meaningful within a few decades of the peak in double precision.
fn max_intensity_deviation(a: &Trajectory<f64>, b: &Trajectory<f64>) -> f64 {
    assert_eq!(a.n_times(), b.n_times());
    let mut worst: f64 = 0.0;
    for i in 0..a.n_times() {
        let mut max_i: f64 = 0.0;
        for d in 0..a.n_dimers() {
            max_i = max_i.max(a.intensity_g[[d, i]]).max(a.intensity_l[[d, i]]);
        }
        let floor = 1e-5 * max_i;
        for d in 0..a.n_dimers() {
            for (ga, gb) in [
                (a.intensity_g[[d, i]], b.intensity_g[[d, i]]),
                (a.intensity_l[[d, i]], b.intensity_l[[d, i]]),
            ] {
                if ga > floor || gb > floor {
                    worst = worst.max((ga - gb).abs() / ga.max(gb));
                }
            }
        }
    }
    worst
}

#[test]
fn engine_agreement_periodic() {
    let p = pt_params(41, 1.5, 0.7, Boundary::Periodic);
    let psi0 = initial_state(&p, &InitialSpec::gain_site(0)).unwrap();
    let n_steps = 200;
    let t_max = 10.0;
    let dense = evolve(&p, &psi0, t_max, n_steps).unwrap();
    let oracle = evolve_oracle(&p, &psi0, t_max, n_steps).unwrap();
    let bloch = evolve_bloch(&p, &psi0, &dense.times).unwrap();

    let d_o = max_intensity_deviation(&dense, &oracle);
    let d_b = max_intensity_deviation(&dense, &bloch);
    let o_b = max_intensity_deviation(&oracle, &bloch);
    assert!(d_o < 1e-7, "dense vs oracle {d_o:e}");
    assert!(d_b < 1e-7, "dense vs bloch {d_b:e}");
    assert!(o_b < 1e-7, "oracle vs bloch {o_b:e}");
}

#[test]
fn shift_equivalence() {
    // PT amplitudes = e^{gamma t} * lossy amplitudes, elementwise.
    let p = pt_params(21, 1.2, 0.8, Boundary::Open);
    let psi0 = initial_state(&p, &InitialSpec::gain_site(0)).unwrap();
    let t_max = 10.0 / p.gamma; // gamma t <= 10
    let n_steps = 100;
    let pt = evolve(&p, &psi0, t_max, n_steps).unwrap();
    let lossy = evolve(&p.clone().with_model(ModelKind::Lossy), &psi0, t_max, n_steps).unwrap();

    for i in 0..pt.n_times() {
        let t = pt.times[i];
        // compare in log scale to survive the e^{2 gamma t} range
        let log_ratio = pt.log_norm(i) - (lossy.log_norm(i) + p.gamma * t);
        assert!(
            log_ratio.abs() < 1e-9,
            "norm ratio off at t={t}: {log_ratio:e}"
        );
        let a = pt.unit_state(i);
        let b = lossy.unit_state(i);
        for s in 0..a.len() {
            assert!((a[s] - b[s]).norm() < 1e-9, "unit state differs at t={t}");
        }
    }
}

#[test]
fn bounded_in_pt_symmetric_phase() {
    // gamma below the finite-lattice threshold: intensity stays bounded and
    // recurs below twice its initial value.
    let p = pt_params(41, 0.5, 0.2, Boundary::Open);
    assert!(p.gamma < pt_threshold(&p).gamma_pt_finite);
    let psi0 = initial_state(&p, &InitialSpec::gain_site(0)).unwrap();
    let traj = evolve(&p, &psi0, 50.0, 2000).unwrap();
    let sup = traj.total.iter().cloned().fold(0.0f64, f64::max);
    assert!(sup.is_finite());
    let revisits = traj.total.iter().skip(1).filter(|&&x| x < 2.0).count();
    assert!(revisits > 0, "no recurrence below 2 I(0), sup = {sup}");
}

#[test]
fn exponential_growth_slope_above_full_breaking() {
    // gamma > nu + nu': every Fourier component grows; log I(t) approaches
    // slope 2 Gamma_max with Gamma_max^2 = gamma^2 - min_k |nu_k|^2.
    let p = pt_params(41, 0.5, 2.0, Boundary::Open);
    assert!(p.gamma > p.nu + p.nu_prime);
    let min_nu_k = pt_threshold(&p).gamma_pt_finite;
    let gamma_max = (p.gamma * p.gamma - min_nu_k * min_nu_k).sqrt();

    let psi0 = initial_state(&p, &InitialSpec::gain_site(0)).unwrap();
    let t_max = 12.0;
    let n_steps = 600;
    let traj = evolve(&p, &psi0, t_max, n_steps).unwrap();

    // least squares on the final decade of the time grid
    let start = (n_steps as f64 * 0.9) as usize;
    let pts: Vec<(f64, f64)> = (start..=n_steps)
        .map(|i| (traj.times[i], 2.0 * traj.log_norm(i)))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    let target = 2.0 * gamma_max;
    assert!(
        (slope - target).abs() < 0.05 * target,
        "slope {slope} vs 2 Gamma_max {target}"
    );
}

#[test]
fn loss_profile_reflection_symmetry_at_transition() {
    // nu = nu', init |0G>: I_L(m, t) = I_L(-1-m, t) before edge contact.
    let p = pt_params(41, 1.0, 0.5, Boundary::Open);
    let psi0 = initial_state(&p, &InitialSpec::gain_site(0)).unwrap();
    let traj = evolve(&p, &psi0, 8.0, 400).unwrap();
    assert!(traj.edge_contact.is_none() || traj.edge_contact.unwrap() > 8.0);

    let m0 = p.half_width();
    for i in 0..traj.n_times() {
        let max_l = (0..p.n_dimers())
            .map(|d| traj.intensity_l[[d, i]])
            .fold(0.0f64, f64::max);
        if max_l == 0.0 {
            continue;
        }
        for m in -m0..=m0 {
            let mirror = -1 - m;
            if mirror < -m0 || mirror > m0 {
                continue;
            }
            let a = traj.intensity_l[[(m + m0) as usize, i]];
            let b = traj.intensity_l[[(mirror + m0) as usize, i]];
            assert!(
                (a - b).abs() <= 1e-6 * max_l.max(a.max(b)),
                "asymmetry at m={m}, t index {i}: {a:e} vs {b:e}"
            );
        }
    }
}

#[test]
fn dense_spectrum_matches_bloch_blocks_periodic() {
    let p = pt_params(41, 1.3, 0.6, Boundary::Periodic);
    let mut dense: Vec<C64> = spectrum(&p).unwrap().eigenvalues;
    let blocks: Vec<C64> = eigenmomenta(&p)
        .into_iter()
        .flat_map(|k| {
            let b = ptdimer_core::lattice::bloch_block(&p, k);
            [b.eps_k.0, b.eps_k.1]
        })
        .collect();
    assert_eq!(dense.len(), blocks.len());

    // minimum-distance matching without replacement
    for b in &blocks {
        let (best, dist) = dense
            .iter()
            .enumerate()
            .map(|(i, d)| (i, (d - b).norm()))
            .min_by(|a, c| a.1.partial_cmp(&c.1).unwrap())
            .unwrap();
        assert!(dist < 1e-9, "no dense eigenvalue near block value {b}");
        dense.swap_remove(best);
    }
    assert!(dense.is_empty());
}

#[test]
fn spectral_pairing_under_conjugation_and_negation() {
    let p = pt_params(21, 1.4, 0.9, Boundary::Open);
    let eigs = spectrum(&p).unwrap().eigenvalues;
    for map in [|z: C64| z.conj(), |z: C64| -z] {
        for &e in &eigs {
            let image = map(e);
            let nearest = eigs
                .iter()
                .map(|&x| (x - image).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-9, "no partner for {e} under the symmetry map");
        }
    }
}

#[test]
fn threshold_bisection_matches_min_nu_k() {
    // The dense-spectrum phase label flips exactly at min_k |nu_k| on a
    // periodic lattice; locate the flip by bisection.
    let p = pt_params(41, 0.5, 0.0, Boundary::Periodic);
    let predicted = pt_threshold(&p).gamma_pt_finite;
    let classify = |gamma: f64| spectrum(&p.clone().with_gamma(gamma)).unwrap().phase;
    assert_eq!(classify(0.01), PhaseLabel::PtSymmetric);
    assert_eq!(classify(1.0), PhaseLabel::PtBroken);

    let (mut lo, mut hi) = (0.01f64, 1.0f64);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if classify(mid) == PhaseLabel::PtSymmetric {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let found = 0.5 * (lo + hi);
    assert!(
        (found - predicted).abs() < 1e-6,
        "bisected {found} vs predicted {predicted}"
    );
}

#[test]
fn order_of_magnitude_gap_between_sublattices() {
    // Fig. 2 regime: nu'/nu = 1, gamma = 0.5, init |0G>; late-time gain
    // intensity dominates the loss intensity by about a decade.
    let p = pt_params(41, 1.0, 0.5, Boundary::Open);
    let psi0 = initial_state(&p, &InitialSpec::gain_site(0)).unwrap();
    let traj = evolve(&p, &psi0, 10.0, 500).unwrap();
    let last = traj.n_times() - 1;
    let sum_g: f64 = (0..p.n_dimers()).map(|d| traj.intensity_g[[d, last]]).sum();
    let sum_l: f64 = (0..p.n_dimers()).map(|d| traj.intensity_l[[d, last]]).sum();
    let ratio = sum_g / sum_l;
    assert!(ratio > 3.0, "gain/loss intensity ratio {ratio}");
}

#[test]
fn total_intensity_equals_sublattice_sum() {
    let p = pt_params(21, 1.0, 0.5, Boundary::Open);
    let psi0 = initial_state(&p, &InitialSpec::loss_site(0)).unwrap();
    let traj = evolve(&p, &psi0, 5.0, 200).unwrap();
    for i in 0..traj.n_times() {
        let s: f64 = (0..p.n_dimers())
            .map(|d| traj.intensity_g[[d, i]] + traj.intensity_l[[d, i]])
            .sum();
        assert!((s - traj.total[i]).abs() <= 1e-12 * traj.total[i]);
    }
    assert!((traj.total[0] - 1.0).abs() < 1e-12);
}

#[test]
fn oracle_rejects_bad_grid() {
    let p = pt_params(5, 0.5, 0.1, Boundary::Open);
    let psi0: Array1<C64> = initial_state(&p, &InitialSpec::gain_site(0)).unwrap();
    assert!(evolve_oracle(&p, &psi0, 0.0, 10).is_err());
    assert!(evolve_oracle(&p, &psi0, 1.0, 0).is_err());
    // mismatched state length
    let h = build_hamiltonian(&p);
    assert_eq!(h.nrows(), p.n_sites());
}
