//! Parameter sweeps: one run per grid point off a template config, with a
//! collated CSV of energies and density diagnostics versus the swept
//! parameter. A failing point is recorded and the sweep continues.

use std::path::Path;

use wigner1d_core::Confinement;

use crate::config::{Method, RunConfig};
use crate::runner::{execute_run, RunSummary};
use crate::CliError;

/// Which knob the sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    /// Confinement frequency ω.
    Omega,
    /// Light-matter coupling λ (cavity runs only).
    Lambda,
    /// Photon mode frequency ω_p (cavity runs only).
    OmegaP,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::Omega => "omega",
            SweepParam::Lambda => "lambda",
            SweepParam::OmegaP => "omega_p",
        }
    }
}

/// The template with one grid point applied, writing into a per-point
/// subdirectory of the template's output directory.
fn point_config(template: &RunConfig, param: SweepParam, value: f64) -> Result<RunConfig, CliError> {
    let mut config = template.clone();
    match param {
        SweepParam::Omega => {
            config.system.confinement = match config.system.confinement {
                Confinement::Quadratic { .. } => Confinement::Quadratic { omega: value },
                Confinement::Quartic { .. } => Confinement::Quartic { omega: value },
            };
        }
        SweepParam::Lambda | SweepParam::OmegaP => {
            if template.method != Method::EcgCavity {
                return Err(CliError::Config(format!(
                    "sweeping {} needs method \"ecg+cavity\", the template uses \"{}\"",
                    param.label(),
                    template.method.label()
                )));
            }
            let cavity = config.cavity.as_mut().expect("validated: cavity present");
            match param {
                SweepParam::Lambda => cavity.lambda = value,
                SweepParam::OmegaP => cavity.omega_p = value,
                SweepParam::Omega => unreachable!(),
            }
        }
    }
    config.out_dir = template.out_dir.join(format!("{}_{}", param.label(), value));
    config.validate()?;
    Ok(config)
}

fn csv_row(value: f64, outcome: &Result<RunSummary, CliError>, dir: &Path) -> String {
    match outcome {
        Ok(s) => format!(
            "{value},ok,{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}\n",
            s.energy,
            s.breakdown.kinetic,
            s.breakdown.confinement,
            s.breakdown.interaction,
            s.breakdown.field,
            s.diagnostics.rms_spread,
            s.diagnostics.peak_count,
            dir.display()
        ),
        Err(e) => {
            // commas in the message would shear the row apart
            let msg = e.message().replace([',', '\n'], ";");
            format!("{value},failed,,,,,,,{},{msg}\n", dir.display())
        }
    }
}

/// Runs the whole grid and writes `sweep.csv` into the template's output
/// directory. Returns an error when the grid is empty or every artifact
/// write path is unusable; individual point failures only mark their row.
pub fn execute_sweep(
    template: &RunConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<usize, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    for &v in values {
        if !v.is_finite() {
            return Err(CliError::Config(format!("sweep values must be finite, got {v}")));
        }
    }
    let sha = template.sha256()?;
    let mut rows = String::new();
    rows.push_str(&format!("# template_sha256={sha}\n# parameter={}\n", param.label()));
    if let Some(seed) = template.seed {
        rows.push_str(&format!("# seed={seed}\n"));
    }
    rows.push_str(
        "value,status,energy,kinetic,confinement,interaction,field,rms_spread,peak_count,out_dir\n",
    );

    let mut failures = 0usize;
    for &value in values {
        let outcome = point_config(template, param, value).and_then(|c| execute_run(&c));
        let dir = template.out_dir.join(format!("{}_{}", param.label(), value));
        if let Err(e) = &outcome {
            failures += 1;
            eprintln!("point {}={value} failed: {}", param.label(), e.message());
        }
        rows.push_str(&csv_row(value, &outcome, &dir));
    }

    std::fs::create_dir_all(&template.out_dir)
        .map_err(|e| CliError::Run(format!("cannot create {}: {e}", template.out_dir.display())))?;
    let path = template.out_dir.join("sweep.csv");
    std::fs::write(&path, rows)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    Ok(failures)
}
