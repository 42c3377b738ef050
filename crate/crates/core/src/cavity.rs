//! Polaritonic ground states: trapped electrons coupled to one cavity mode.
//!
//! The light-matter Hamiltonian in length form adds to the electronic
//! problem a photon ladder ω_p(n+½), a dipole self-interaction ½λ²X², and
//! the bilinear coupling -√(ω_p/2)·λ·X(a+a†), where X = -Σᵢxᵢ is the dipole
//! of unit negative charges. Basis terms carry an explicit photon number
//! ([`crate::svm::BasisTerm`]), so the coupled problem stays one generalized
//! eigenproblem over cached spatial elements; this module adds the drivers
//! and observables specific to the photon degree of freedom.

pub use crate::system::CavitySpec;

use nalgebra::DVector;

use crate::ecg::density::{reduced_density_component, DensitySample, DENSITY_NORM_TOL};
use crate::error::{Error, Result};
use crate::svm::{BasisSet, GrowthResult, Optimizer, OptimizerConfig};
use crate::system::SystemSpec;

/// Exact polariton ground energy of one electron in a quadratic trap.
///
/// With a single electron the dipole is X = -x and the full Hamiltonian is
/// two bilinearly coupled oscillators: substituting a+a† = √(2ω_p)·q turns
/// the field part into p_q²/2 + ½ω_p²q² + λω_p·x·q, with the self-dipole
/// term shifting the electronic curvature to ω²+λ². The stiffness matrix
/// [[ω²+λ², λω_p], [λω_p, ω_p²]] has eigenvalues μ₁, μ₂ (both positive,
/// det = ω²ω_p²), and the ground energy is the summed zero-point motion
/// of the normal modes, ½(√μ₁ + √μ₂).
pub fn exact_one_electron_polariton(omega: f64, cavity: &CavitySpec) -> f64 {
    let a = omega * omega + cavity.lambda * cavity.lambda;
    let c = cavity.omega_p * cavity.omega_p;
    let b = cavity.lambda * cavity.omega_p;
    let half_tr = 0.5 * (a + c);
    let disc = (0.5 * (a - c)).hypot(b);
    // guard against rounding when the coupling nearly closes the lower mode
    let mu_hi = half_tr + disc;
    let mu_lo = (half_tr - disc).max(0.0);
    0.5 * (mu_hi.sqrt() + mu_lo.sqrt())
}

/// Probability of finding n photons in a normalised ground state:
/// P(n) = c_nᵀ S_n c_n over the overlap block of photon number n. The
/// entries sum to one for S-normalised coefficients.
pub fn photon_number_distribution(basis: &BasisSet, coeff: &DVector<f64>) -> Result<Vec<f64>> {
    if coeff.len() != basis.len() {
        return Err(Error::Usage(format!(
            "coefficient length {} does not match basis size {}",
            coeff.len(),
            basis.len()
        )));
    }
    if basis.is_empty() {
        return Err(Error::Usage("empty basis has no photon distribution".into()));
    }
    let (_, s) = basis.assemble();
    let mut p = vec![0.0; basis.max_photon() + 1];
    for (k, t) in basis.terms().iter().enumerate() {
        for (l, u) in basis.terms().iter().enumerate() {
            if t.photon_n == u.photon_n {
                p[t.photon_n] += coeff[k] * s[(k, l)] * coeff[l];
            }
        }
    }
    Ok(p)
}

/// Electron density of a polaritonic state: block densities add because
/// photon states of different number are orthogonal. Checks that the
/// accumulated analytic norm matches the particle count, which catches
/// unnormalised coefficient vectors.
pub fn polaritonic_density(
    basis: &BasisSet,
    coeff: &DVector<f64>,
    grid: &[f64],
) -> Result<DensitySample<f64>> {
    if coeff.len() != basis.len() {
        return Err(Error::Usage(format!(
            "coefficient length {} does not match basis size {}",
            coeff.len(),
            basis.len()
        )));
    }
    let mut sample = DensitySample::zeros(grid.len());
    for n in 0..=basis.max_photon() {
        let slots = basis.block_slots(n);
        if slots.is_empty() {
            continue;
        }
        let c: Vec<f64> = slots.iter().map(|&k| coeff[k]).collect();
        let state = basis.state_for_slots(&slots, &c)?;
        let block = reduced_density_component(&state, grid)?;
        sample.accumulate(&block);
    }
    let n_e = basis.system().n_electrons as f64;
    if (sample.analytic_norm - n_e).abs() > DENSITY_NORM_TOL * n_e {
        return Err(Error::Usage(format!(
            "polaritonic state not normalised: density integrates to {} for {} electrons",
            sample.analytic_norm, basis.system().n_electrons
        )));
    }
    Ok(sample)
}

/// One photon-truncation study: the basis is deepened one photon block at a
/// time until the ground energy stops moving.
pub struct TruncationRun {
    /// Smallest photon ceiling whose converged energy is within tolerance
    /// of the next deeper one.
    pub n_converged: usize,
    /// Ground energy of the deepest run performed.
    pub energy: f64,
    /// Converged ground energy at each ceiling 0, 1, … (last entry is the
    /// first one that gained less than the tolerance).
    pub cap_energies: Vec<f64>,
    /// Final basis and coefficients, at ceiling `n_converged + 1`.
    pub result: GrowthResult,
}

/// Deepens the photon ladder until the energy gain of one more block falls
/// below `tol`, returning the full study.
///
/// The electronic basis is first grown to a plateau a decade tighter than
/// `tol` (a config without a plateau tolerance gets `tol/10`), so energy
/// drops between ceilings are attributable to the new photon block rather
/// than leftover electronic convergence. Raising the ceiling copies every
/// term of the previous top block into the new one (free, the spatial
/// elements are cached) and then resumes stochastic growth over all blocks
/// until the next plateau. Reaching the ladder ceiling of the cavity
/// without converging is an error.
pub fn run_photon_truncation(
    system: &SystemSpec,
    cavity: &CavitySpec,
    config: &OptimizerConfig,
    tol: f64,
) -> Result<TruncationRun> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::Usage(format!("truncation tolerance must be positive, got {tol}")));
    }
    cavity.validate()?;
    let mut sys = system.clone();
    sys.cavity = Some(*cavity);

    let mut cfg = config.clone();
    cfg.photon_cap = 0;
    if cfg.plateau_tol.is_none() {
        cfg.plateau_tol = Some(tol / 10.0);
    }
    let allowance = cfg.basis_max;

    let mut opt = Optimizer::new(&sys, &cfg)?;
    opt.run_growth()?;
    let mut cap_energies = vec![opt.energy()];

    for cap in 1..=cavity.n_max {
        let e_prev = *cap_energies.last().expect("at least the first ceiling");
        opt.set_photon_cap(cap);
        let copied = opt.extend_block_from(cap - 1, cap)?;
        opt.raise_basis_max(copied + allowance);
        opt.run_growth()?;
        let e_new = opt.energy();
        cap_energies.push(e_new);
        if e_prev - e_new < tol {
            return Ok(TruncationRun {
                n_converged: cap - 1,
                energy: e_new,
                cap_energies,
                result: opt.into_result(),
            });
        }
    }
    let gain = cap_energies[cap_energies.len() - 2] - cap_energies[cap_energies.len() - 1];
    Err(Error::NonConvergence(format!(
        "photon ladder still gaining {gain:.3e} per block at the ceiling {}",
        cavity.n_max
    )))
}

/// The converged photon-number ceiling alone; see [`run_photon_truncation`].
pub fn converge_photon_truncation(
    system: &SystemSpec,
    cavity: &CavitySpec,
    config: &OptimizerConfig,
    tol: f64,
) -> Result<usize> {
    Ok(run_photon_truncation(system, cavity, config, tol)?.n_converged)
}
