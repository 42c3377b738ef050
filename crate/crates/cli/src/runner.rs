//! Executes one configured run and writes its artifacts: `summary.toml`,
//! `density.csv`, and for stochastic methods `checkpoint.toml` (plus
//! `photon.csv` for cavity runs). All artifacts are deterministic
//! functions of the config and seed; nothing carries timestamps.

use std::path::{Path, PathBuf};

use serde::Serialize;
use wigner1d_core::cavity::{photon_number_distribution, run_photon_truncation};
use wigner1d_core::dft::{scf, Grid1D};
use wigner1d_core::observables::{
    density_csv, density_diagnostics, dft_breakdown, dft_density, ecg_breakdown,
    ecg_density_on_grid, photon_csv, polaritonic_density_on_grid, DensityDiagnostics,
    EnergyBreakdown, GridDensity,
};
use wigner1d_core::svm::{Checkpoint, Optimizer, StepOutcome};
use wigner1d_core::SystemSpec;

use crate::config::{Method, RunConfig};
use crate::CliError;

/// accepted growth steps between checkpoint rewrites
const CHECKPOINT_EVERY: usize = 10;

/// What one finished run reports; rendered to `summary.toml`.
///
/// Scalar and array fields come before the table-valued ones so the TOML
/// stays flat at the top.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub method: &'static str,
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub energy: f64,
    pub density_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scf_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon_ceiling: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_converged_at: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ceiling_energies: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbital_energies_up: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbital_energies_down: Option<Vec<f64>>,
    pub breakdown: EnergyBreakdown,
    pub diagnostics: DensityDiagnostics,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))
}

/// Writes through a temporary sibling so an interrupted run never leaves a
/// torn checkpoint behind.
fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("toml.tmp");
    write_file(&tmp, text)?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Run(format!("cannot finalize {}: {e}", path.display())))
}

fn checkpoint_text(chk: &Checkpoint, sha: &str) -> Result<String, CliError> {
    let body = toml::to_string(chk)
        .map_err(|e| CliError::Run(format!("cannot serialize checkpoint: {e}")))?;
    Ok(format!("# config_sha256={sha}\n# seed={}\n{body}", chk.config.seed))
}

fn meta(sha: &str, seed: Option<u64>, method: Method) -> Vec<(&'static str, String)> {
    let mut m = vec![
        ("method", method.label().to_string()),
        ("config_sha256", sha.to_string()),
    ];
    if let Some(seed) = seed {
        m.push(("seed", seed.to_string()));
    }
    m
}

/// Drives a seeded optimizer to completion: growth with periodic
/// checkpoints, then `sweeps` refinement passes with a checkpoint after
/// each one.
fn drive_optimizer(
    opt: &mut Optimizer,
    sweeps: usize,
    checkpoint_path: &Path,
    sha: &str,
) -> Result<(), CliError> {
    let mut accepted = 0usize;
    loop {
        match opt.grow_step().map_err(|e| CliError::Run(e.to_string()))? {
            StepOutcome::Added(_) => {
                accepted += 1;
                if accepted % CHECKPOINT_EVERY == 0 {
                    write_atomic(checkpoint_path, &checkpoint_text(&opt.checkpoint(), sha)?)?;
                }
            }
            StepOutcome::Full | StepOutcome::Plateaued | StepOutcome::Saturated => break,
        }
    }
    write_atomic(checkpoint_path, &checkpoint_text(&opt.checkpoint(), sha)?)?;
    for _ in 0..sweeps {
        let improved = opt.refine_pass().map_err(|e| CliError::Run(e.to_string()))?;
        write_atomic(checkpoint_path, &checkpoint_text(&opt.checkpoint(), sha)?)?;
        if !improved {
            break;
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Run(format!("cannot create {}: {e}", dir.display())))
}

fn density_summary(
    density: &GridDensity,
    grid: &Grid1D,
) -> Result<(f64, DensityDiagnostics), CliError> {
    let total = density.total();
    let diag = density_diagnostics(grid, &total).map_err(|e| CliError::Run(e.to_string()))?;
    Ok((density.norm(), diag))
}

/// Runs a fully validated config and returns the summary that was written
/// to `<out_dir>/summary.toml`.
pub fn execute_run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let sha = config.sha256()?;
    ensure_dir(&config.out_dir)?;
    let summary = match config.method {
        Method::Dft => run_dft(config, &sha)?,
        Method::Ecg => run_ecg(config, &sha)?,
        Method::EcgCavity => run_cavity(config, &sha)?,
    };
    let text = toml::to_string(&summary)
        .map_err(|e| CliError::Run(format!("cannot serialize summary: {e}")))?;
    write_file(&config.out_dir.join("summary.toml"), &text)?;
    Ok(summary)
}

fn run_dft(config: &RunConfig, sha: &str) -> Result<RunSummary, CliError> {
    let system = config.resolved_system();
    let grid = config.resolved_grid();
    let state = scf(&system, &grid, &config.resolved_scf())
        .map_err(|e| CliError::Run(format!("scf failed: {e}")))?;
    let density = dft_density(&state);
    let (norm, diagnostics) = density_summary(&density, &grid)?;
    write_file(
        &config.out_dir.join("density.csv"),
        &density_csv(&density, &meta(sha, None, config.method)),
    )?;
    Ok(RunSummary {
        method: config.method.label(),
        config_sha256: sha.to_string(),
        seed: None,
        energy: state.energies.total,
        density_norm: norm,
        basis_size: None,
        accepted_steps: None,
        scf_iterations: Some(state.iterations),
        photon_ceiling: None,
        photon_mean: None,
        truncation_converged_at: None,
        ceiling_energies: None,
        orbital_energies_up: Some(state.eig_up.clone()),
        orbital_energies_down: Some(state.eig_dn.clone()),
        breakdown: dft_breakdown(&state),
        diagnostics,
    })
}

fn run_ecg(config: &RunConfig, sha: &str) -> Result<RunSummary, CliError> {
    let system = config.resolved_system();
    let opt_config = config.resolved_optimizer();
    let mut opt = Optimizer::new(&system, &opt_config).map_err(|e| CliError::Run(e.to_string()))?;
    drive_optimizer(&mut opt, opt_config.refine_sweeps, &config.out_dir.join("checkpoint.toml"), sha)?;
    finish_stochastic(config.method, config.seed, &config.out_dir, sha, opt, None)
}

fn run_cavity(config: &RunConfig, sha: &str) -> Result<RunSummary, CliError> {
    let system = config.resolved_system();
    let opt_config = config.resolved_optimizer();
    let checkpoint_path = config.out_dir.join("checkpoint.toml");
    if let Some(tol) = config.truncation_tol {
        // ladder search: the library interleaves growth with block raises,
        // so the checkpoint records the finished search instead of
        // punctuating it
        let cavity = config.cavity.expect("validated: cavity present");
        let mut electronic = system.clone();
        electronic.cavity = None;
        let run = run_photon_truncation(&electronic, &cavity, &opt_config, tol)
            .map_err(|e| CliError::Run(e.to_string()))?;
        let accepted = run.result.trace.len();
        let mut reached_config = opt_config.clone();
        reached_config.photon_cap = run.result.basis.max_photon();
        let opt = Optimizer::with_basis(run.result.basis, &reached_config)
            .map_err(|e| CliError::Run(e.to_string()))?;
        write_atomic(&checkpoint_path, &checkpoint_text(&opt.checkpoint(), sha)?)?;
        let mut summary = finish_stochastic(
            config.method,
            config.seed,
            &config.out_dir,
            sha,
            opt,
            Some(accepted),
        )?;
        summary.truncation_converged_at = Some(run.n_converged);
        summary.ceiling_energies = Some(run.cap_energies);
        Ok(summary)
    } else {
        let mut opt =
            Optimizer::new(&system, &opt_config).map_err(|e| CliError::Run(e.to_string()))?;
        drive_optimizer(&mut opt, opt_config.refine_sweeps, &checkpoint_path, sha)?;
        finish_stochastic(config.method, config.seed, &config.out_dir, sha, opt, None)
    }
}

/// Shared tail of every stochastic run: density, photon distribution for
/// cavity bases, and the summary fields read off the optimizer.
fn finish_stochastic(
    method: Method,
    seed: Option<u64>,
    out_dir: &Path,
    sha: &str,
    opt: Optimizer,
    accepted_override: Option<usize>,
) -> Result<RunSummary, CliError> {
    let energy = opt.energy();
    let accepted = accepted_override.unwrap_or_else(|| opt.trace().len());
    let basis_size = opt.basis().len();
    let result_coeff = opt.coeff().clone();
    let basis = opt.basis();
    let system: &SystemSpec = basis.system();
    let grid = Grid1D::standard();
    let run_err = |e: wigner1d_core::Error| CliError::Run(e.to_string());

    let breakdown = ecg_breakdown(basis, &result_coeff).map_err(run_err)?;
    let (density, photon) = if system.cavity.is_some() {
        let density = polaritonic_density_on_grid(basis, &result_coeff, &grid).map_err(run_err)?;
        let photon = photon_number_distribution(basis, &result_coeff).map_err(run_err)?;
        (density, Some(photon))
    } else {
        let state = basis.electronic_state(&result_coeff).map_err(run_err)?;
        (ecg_density_on_grid(&state, &grid).map_err(run_err)?, None)
    };
    let (norm, diagnostics) = density_summary(&density, &grid)?;
    write_file(&out_dir.join("density.csv"), &density_csv(&density, &meta(sha, seed, method)))?;

    let mut photon_ceiling = None;
    let mut photon_mean = None;
    if let Some(p) = &photon {
        write_file(&out_dir.join("photon.csv"), &photon_csv(p, &meta(sha, seed, method)))?;
        photon_ceiling = Some(basis.max_photon());
        photon_mean = Some(p.iter().enumerate().map(|(n, &w)| n as f64 * w).sum());
    }
    Ok(RunSummary {
        method: method.label(),
        config_sha256: sha.to_string(),
        seed,
        energy,
        density_norm: norm,
        basis_size: Some(basis_size),
        accepted_steps: Some(accepted),
        scf_iterations: None,
        photon_ceiling,
        photon_mean,
        truncation_converged_at: None,
        ceiling_energies: None,
        orbital_energies_up: None,
        orbital_energies_down: None,
        breakdown,
        diagnostics,
    })
}

/// Resumes a checkpointed optimization, finishing growth and refinement,
/// and writes a full artifact set next to the checkpoint (or into an
/// explicit output directory).
pub fn execute_resume(checkpoint: &Path, out_dir: Option<PathBuf>) -> Result<RunSummary, CliError> {
    let text = std::fs::read_to_string(checkpoint).map_err(|e| {
        CliError::Config(format!("cannot read checkpoint {}: {e}", checkpoint.display()))
    })?;
    let chk: Checkpoint = toml::from_str(&text).map_err(|e| {
        CliError::Config(format!("invalid checkpoint {}: {e}", checkpoint.display()))
    })?;
    let out_dir = match (out_dir, checkpoint.parent()) {
        (Some(dir), _) => dir,
        (None, Some(parent)) if !parent.as_os_str().is_empty() => parent.to_path_buf(),
        _ => PathBuf::from("."),
    };

    // reconstruct the run description for provenance: the checkpoint's
    // system already carries the cavity when one was configured
    let mut system = chk.system.clone();
    let cavity = system.cavity.take();
    let config = RunConfig {
        method: if cavity.is_some() { Method::EcgCavity } else { Method::Ecg },
        seed: Some(chk.config.seed),
        out_dir: out_dir.clone(),
        system,
        cavity,
        truncation_tol: None,
        optimizer: Some(chk.config.clone()),
        grid: None,
        scf: None,
    };
    config.validate()?;
    let sha = config.sha256()?;

    let mut opt = Optimizer::from_checkpoint(&chk).map_err(|e| CliError::Run(e.to_string()))?;
    ensure_dir(&out_dir)?;
    drive_optimizer(&mut opt, chk.config.refine_sweeps, &out_dir.join("checkpoint.toml"), &sha)?;
    let summary = finish_stochastic(config.method, config.seed, &out_dir, &sha, opt, None)?;
    let text = toml::to_string(&summary)
        .map_err(|e| CliError::Run(format!("cannot serialize summary: {e}")))?;
    write_file(&out_dir.join("summary.toml"), &text)?;
    Ok(summary)
}
