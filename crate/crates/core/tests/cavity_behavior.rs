//! Cavity-coupled runs against closed forms: collective coupling of a
//! noninteracting pair, photon statistics of one trapped particle, and the
//! photon-ladder truncation search.

mod support;

use support::exact_photon_distribution;
use wigner1d_core::cavity::{
    exact_one_electron_polariton, photon_number_distribution, run_photon_truncation,
};
use wigner1d_core::svm::{grow_basis, refine_basis, OptimizerConfig};
use wigner1d_core::{CavitySpec, SystemSpec};

/// Without repulsion a trapped pair separates into a relative mode that
/// ignores the field and a centre-of-mass mode whose dipole couples with
/// strength λ√2, so the exact energy follows from the one-particle normal
/// modes at the collective coupling plus the free relative zero point.
#[test]
fn collective_coupling_follows_normal_modes() {
    let omega = 1.0;
    let cavity = CavitySpec { omega_p: 1.0, lambda: 0.35, n_max: 8 };
    let mut system = SystemSpec::harmonic(2, 0, omega);
    system.coulomb = false;
    system.cavity = Some(cavity);

    let collective = CavitySpec {
        omega_p: cavity.omega_p,
        lambda: cavity.lambda * 2.0f64.sqrt(),
        n_max: cavity.n_max,
    };
    let exact = exact_one_electron_polariton(omega, &collective) + 0.5 * omega;

    let config = OptimizerConfig {
        basis_max: 72,
        candidates_per_step: 18,
        refine_sweeps: 2,
        seed: 3,
        photon_cap: 3,
        ..OptimizerConfig::default()
    };
    let grown = grow_basis(&system, &config).unwrap();
    let refined = refine_basis(grown.basis, &config).unwrap();

    assert!(refined.energy >= exact - 1e-9, "variational bound violated");
    assert!(
        refined.energy - exact < 5e-3,
        "collective-coupling energy off: {} vs exact {}",
        refined.energy,
        exact
    );
}

/// The photon-number distribution of the variational ground state against
/// the grid reference built from the exact Gaussian state.
#[test]
fn photon_statistics_match_reference() {
    let omega = 1.0;
    let cavity = CavitySpec { omega_p: 1.5, lambda: 0.6, n_max: 8 };
    let mut system = SystemSpec::harmonic(1, 1, omega);
    system.cavity = Some(cavity);

    let config = OptimizerConfig {
        basis_max: 36,
        candidates_per_step: 14,
        refine_sweeps: 2,
        seed: 5,
        photon_cap: 4,
        ..OptimizerConfig::default()
    };
    let grown = grow_basis(&system, &config).unwrap();
    let refined = refine_basis(grown.basis, &config).unwrap();

    let exact = exact_one_electron_polariton(omega, &cavity);
    assert!(refined.energy >= exact - 1e-9);
    assert!(refined.energy - exact < 2e-3);

    let probs = photon_number_distribution(&refined.basis, &refined.coeff).unwrap();
    let reference = exact_photon_distribution(omega, cavity.omega_p, cavity.lambda, 6, 2001);
    for n in 0..=3 {
        assert!(
            (probs[n] - reference[n]).abs() < 2e-3,
            "P({n}) mismatch: {} vs reference {}",
            probs[n],
            reference[n]
        );
    }
    let total: f64 = probs.iter().sum();
    assert!((total - 1.0).abs() < 5e-3, "distribution sums to {total}");
}

/// The truncation search must deepen the ladder until the energy gain per
/// extra photon level drops below tolerance, report the matching ceiling,
/// and land on the closed-form energy.
#[test]
fn truncation_search_tracks_ladder_convergence() {
    let omega = 1.0;
    let cavity = CavitySpec { omega_p: 1.0, lambda: 0.45, n_max: 6 };
    let mut system = SystemSpec::harmonic(1, 1, omega);
    system.cavity = Some(cavity);

    let config = OptimizerConfig {
        basis_max: 40,
        candidates_per_step: 14,
        refine_sweeps: 0,
        seed: 11,
        plateau_window: 8,
        ..OptimizerConfig::default()
    };
    let tol = 2e-4;
    let run = run_photon_truncation(&system, &cavity, &config, tol).unwrap();

    // coupling this strong gains far more than tol from the first ladder
    // step, so convergence cannot be declared at the bare ceiling
    assert!(run.n_converged >= 1, "converged at ceiling {}", run.n_converged);
    for pair in run.cap_energies.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12, "energies not monotone: {pair:?}");
    }
    let gain = run.cap_energies[run.n_converged] - run.cap_energies[run.n_converged + 1];
    assert!(gain < tol, "reported ceiling not converged: gain {gain}");

    let exact = exact_one_electron_polariton(omega, &cavity);
    assert!(run.energy >= exact - 1e-9);
    assert!(
        run.energy - exact < 5e-3,
        "truncation energy off: {} vs exact {}",
        run.energy,
        exact
    );
}
