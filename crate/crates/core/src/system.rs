//! Physical system description shared by every solver stack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single quantized photon mode in dipole coupling to the total electric
/// dipole X = Σᵢ qᵢxᵢ with charges qᵢ = -1: the field part of the
/// Hamiltonian is ω_p(n+½) - √(ω_p/2)·λX(a+a†) + ½λ²X², and `n_max` caps
/// the photon-number ladder available to truncation searches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySpec {
    /// Photon mode frequency ω_p.
    pub omega_p: f64,
    /// Coupling strength λ.
    pub lambda: f64,
    /// Hard ceiling on the photon-number truncation.
    pub n_max: usize,
}

impl CavitySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_p.is_finite() && self.omega_p > 0.0) {
            return Err(Error::Usage(format!(
                "photon frequency must be finite and > 0, got {}",
                self.omega_p
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::Usage("coupling strength must be finite".into()));
        }
        Ok(())
    }
}

/// External confining potential acting on each electron.
///
/// Quadratic: v(x) = ½ω²x². Quartic: v(x) = ½ω²x⁴, taken literally with the
/// same prefactor convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Confinement {
    Quadratic { omega: f64 },
    Quartic { omega: f64 },
}

impl Confinement {
    pub fn omega(self) -> f64 {
        match self {
            Confinement::Quadratic { omega } | Confinement::Quartic { omega } => omega,
        }
    }
}

/// An N-electron system: particle count, total spin, confinement, whether the
/// soft-Coulomb repulsion is active, and an optional single-mode cavity.
///
/// Total spin is stored doubled (`total_spin_x2` = 2S) so half-integer spins
/// stay exact integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n_electrons: usize,
    pub total_spin_x2: u32,
    pub confinement: Confinement,
    /// Soft-Coulomb pair repulsion 1/√((xᵢ−xⱼ)²+1) on or off.
    pub coulomb: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavitySpec>,
}

impl SystemSpec {
    /// Plain electronic system with quadratic confinement and Coulomb on.
    pub fn harmonic(n_electrons: usize, total_spin_x2: u32, omega: f64) -> Self {
        SystemSpec {
            n_electrons,
            total_spin_x2,
            confinement: Confinement::Quadratic { omega },
            coulomb: true,
            cavity: None,
        }
    }

    /// Number of spin-up electrons in the highest-weight configuration,
    /// N/2 + S.
    pub fn n_up(&self) -> usize {
        (self.n_electrons + self.total_spin_x2 as usize) / 2
    }

    pub fn n_down(&self) -> usize {
        self.n_electrons - self.n_up()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_electrons;
        let s2 = self.total_spin_x2 as usize;
        if n == 0 {
            return Err(Error::Usage("n_electrons must be at least 1".into()));
        }
        if s2 > n {
            return Err(Error::Usage(format!(
                "total spin 2S={s2} exceeds the maximum {n} for {n} electrons"
            )));
        }
        if (n + s2) % 2 != 0 {
            return Err(Error::Usage(format!(
                "2S={s2} has the wrong parity for {n} electrons"
            )));
        }
        if !self.confinement.omega().is_finite() || self.confinement.omega() < 0.0 {
            return Err(Error::Usage("confinement strength must be finite and >= 0".into()));
        }
        if let Some(cavity) = &self.cavity {
            cavity.validate()?;
            // photon coupling acts on the dipole; only a confined system has
            // a bounded ground state
            if self.confinement.omega() <= 0.0 {
                return Err(Error::Usage(
                    "cavity runs require a confining potential with omega > 0".into(),
                ));
            }
        }
        Ok(())
    }
}
