//! Run configuration: a plain TOML file describing one solver run, plus
//! validation, canonical serialization, and the provenance hash stamped on
//! every artifact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wigner1d_core::dft::{Grid1D, ScfOptions};
use wigner1d_core::svm::OptimizerConfig;
use wigner1d_core::{CavitySpec, SystemSpec};

use crate::CliError;

/// Which solver stack a run drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Correlated-Gaussian variational run, purely electronic.
    #[serde(rename = "ecg")]
    Ecg,
    /// Kohn-Sham grid run.
    #[serde(rename = "dft")]
    Dft,
    /// Correlated-Gaussian run coupled to one photon mode.
    #[serde(rename = "ecg+cavity")]
    EcgCavity,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ecg => "ecg",
            Method::Dft => "dft",
            Method::EcgCavity => "ecg+cavity",
        }
    }

    /// Whether the method runs the stochastic optimizer (and therefore
    /// needs a seed and accepts an `[optimizer]` table).
    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Ecg | Method::EcgCavity)
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One complete run description.
///
/// The top-level `seed` is the seed of record for stochastic methods; it
/// overrides any `seed` key inside `[optimizer]`. A cavity is configured
/// through the top-level `[cavity]` table, never `[system.cavity]`, so a
/// file states the photon mode exactly once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    /// Candidate-stream seed; required for stochastic methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Directory the run writes its artifacts into.
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub system: SystemSpec,
    /// Photon mode, present exactly when `method = "ecg+cavity"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavitySpec>,
    /// When set, the cavity run searches for the photon-number ceiling by
    /// deepening blocks until one more gains less than this; when absent
    /// the ceiling is the optimizer's `photon_cap` as given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_tol: Option<f64>,
    /// Stochastic-optimizer knobs; defaults apply when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
    /// Density-export grid, and the solver grid for `dft` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid1D>,
    /// Self-consistency controls for `dft` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scf: Option<ScfOptions>,
}

impl RunConfig {
    /// Parses a config file, reporting I/O and syntax problems with the
    /// file name and, for syntax, the line/field the parser points at.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| {
            CliError::Config(format!("invalid config {}: {e}", path.display()))
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Cross-field invariants not expressible in the type shape.
    pub fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, msg: String| CliError::Config(format!("{name}: {msg}"));
        self.system
            .validate()
            .map_err(|e| field("system", e.to_string()))?;
        if self.system.cavity.is_some() {
            return Err(field(
                "system.cavity",
                "configure the photon mode in the top-level [cavity] table".into(),
            ));
        }
        match (self.method, &self.cavity) {
            (Method::EcgCavity, None) => {
                return Err(field("cavity", "method \"ecg+cavity\" needs a [cavity] table".into()))
            }
            (Method::EcgCavity, Some(c)) => {
                c.validate().map_err(|e| field("cavity", e.to_string()))?
            }
            (_, Some(_)) => {
                return Err(field(
                    "cavity",
                    format!("a [cavity] table is only valid with method \"ecg+cavity\", not \"{}\"", self.method.label()),
                ))
            }
            (_, None) => {}
        }
        if self.method.is_stochastic() && self.seed.is_none() {
            return Err(field(
                "seed",
                format!("method \"{}\" draws random candidates; a seed is required", self.method.label()),
            ));
        }
        if !self.method.is_stochastic() && self.optimizer.is_some() {
            return Err(field("optimizer", "an [optimizer] table only applies to ecg methods".into()));
        }
        if self.method != Method::EcgCavity {
            if let Some(t) = self.truncation_tol {
                return Err(field(
                    "truncation_tol",
                    format!("only meaningful for method \"ecg+cavity\" (got {t})"),
                ));
            }
        }
        if let Some(t) = self.truncation_tol {
            if !(t > 0.0) || !t.is_finite() {
                return Err(field("truncation_tol", format!("must be finite and > 0, got {t}")));
            }
        }
        if self.method != Method::Dft && self.scf.is_some() {
            return Err(field("scf", "an [scf] table only applies to method \"dft\"".into()));
        }
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| field("grid", e.to_string()))?;
        }
        Ok(())
    }

    /// The system with the photon mode grafted in for cavity runs.
    pub fn resolved_system(&self) -> SystemSpec {
        let mut system = self.system.clone();
        if self.method == Method::EcgCavity {
            system.cavity = self.cavity;
        }
        system
    }

    /// The optimizer knobs with the seed of record applied.
    pub fn resolved_optimizer(&self) -> OptimizerConfig {
        let mut cfg = self.optimizer.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg
    }

    pub fn resolved_grid(&self) -> Grid1D {
        self.grid.unwrap_or_else(Grid1D::standard)
    }

    pub fn resolved_scf(&self) -> ScfOptions {
        self.scf.unwrap_or_default()
    }

    /// Canonical text form: the parsed value re-serialized, independent of
    /// the original file's formatting and comments.
    pub fn canonical_toml(&self) -> Result<String, CliError> {
        toml::to_string(self)
            .map_err(|e| CliError::Run(format!("cannot serialize config: {e}")))
    }

    /// Provenance hash stamped on every artifact: SHA-256 of the canonical
    /// text form with the output path normalized away, in hex. Two runs of
    /// the same physics into different directories carry the same hash.
    pub fn sha256(&self) -> Result<String, CliError> {
        let mut normalized = self.clone();
        normalized.out_dir = default_out_dir();
        Ok(hex::encode(Sha256::digest(normalized.canonical_toml()?.as_bytes())))
    }
}
