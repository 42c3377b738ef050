//! Shared observable types and reports: grid densities from either solver
//! stack, energy decompositions, density shape diagnostics, and plain-text
//! artifact writers. Everything here is deterministic given its inputs; the
//! writers emit no timestamps or machine identifiers.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cavity::polaritonic_density;
use crate::dft::{Grid1D, KohnShamState};
use crate::ecg::density::{reduced_density, ManyBodyState};
use crate::error::{Error, Result};
use crate::svm::BasisSet;

/// Spin-resolved density on a uniform grid, the common currency between
/// the correlated and mean-field solvers.
#[derive(Clone, Debug)]
pub struct GridDensity {
    pub grid: Grid1D,
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: Grid1D, up: Vec<f64>, down: Vec<f64>) -> Result<Self> {
        if up.len() != grid.n || down.len() != grid.n {
            return Err(Error::Usage(format!(
                "density arrays ({}, {}) do not match the {}-point grid",
                up.len(),
                down.len(),
                grid.n
            )));
        }
        Ok(GridDensity { grid, up, down })
    }

    pub fn total(&self) -> Vec<f64> {
        self.up.iter().zip(&self.down).map(|(&u, &d)| u + d).collect()
    }

    /// Riemann integral of the total density, the particle number.
    pub fn norm(&self) -> f64 {
        self.total().iter().sum::<f64>() * self.grid.h
    }
}

/// Energy of a state split the way the result tables report it: kinetic,
/// confinement, interaction, plus the field pieces for cavity systems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub confinement: f64,
    pub interaction: f64,
    /// photon ladder + dipole self-energy + bilinear coupling; zero for
    /// purely electronic states
    pub field: f64,
    pub total: f64,
}

/// Decomposition of a correlated state from its basis and coefficients.
/// The pieces are expectation values of the Hamiltonian terms, so their
/// sum reproduces the variational ground energy.
pub fn ecg_breakdown(basis: &BasisSet, coeff: &DVector<f64>) -> Result<EnergyBreakdown> {
    let c = basis.expectation_components(coeff)?;
    Ok(EnergyBreakdown {
        kinetic: c.kinetic,
        confinement: c.confinement,
        interaction: c.repulsion,
        field: c.field_ladder + c.dipole_self + c.bilinear,
        total: c.total(),
    })
}

/// Decomposition of a converged mean-field state. The interaction entry is
/// the sum of mean-field repulsion and exchange-correlation energy, i.e.
/// everything beyond kinetic and confinement: total = T + V + interaction.
pub fn dft_breakdown(state: &KohnShamState) -> EnergyBreakdown {
    let e = &state.energies;
    EnergyBreakdown {
        kinetic: e.kinetic,
        confinement: e.confinement,
        interaction: e.hartree + e.exchange_correlation,
        field: 0.0,
        total: e.total,
    }
}

/// Samples a correlated state's density on a uniform grid.
pub fn ecg_density_on_grid(state: &ManyBodyState<f64>, grid: &Grid1D) -> Result<GridDensity> {
    grid.validate()?;
    let sample = reduced_density(state, &grid.points())?;
    GridDensity::new(*grid, sample.up, sample.down)
}

/// Samples a polaritonic state's electron density on a uniform grid by
/// summing its photon blocks.
pub fn polaritonic_density_on_grid(
    basis: &BasisSet,
    coeff: &DVector<f64>,
    grid: &Grid1D,
) -> Result<GridDensity> {
    grid.validate()?;
    let sample = polaritonic_density(basis, coeff, &grid.points())?;
    GridDensity::new(*grid, sample.up, sample.down)
}

/// The density a mean-field state already carries, rewrapped.
pub fn dft_density(state: &KohnShamState) -> GridDensity {
    GridDensity {
        grid: state.grid,
        up: state.rho_up.clone(),
        down: state.rho_dn.clone(),
    }
}

/// Shape summary of a one-dimensional density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityDiagnostics {
    /// Number of local maxima above threshold.
    pub peak_count: usize,
    /// Peak positions, parabolically refined below grid resolution,
    /// left to right.
    pub peak_positions: Vec<f64>,
    /// Root-mean-square spread √(∫x²ρ / ∫ρ).
    pub rms_spread: f64,
    /// Largest mirror asymmetry |ρ(x) - ρ(-x)| relative to the density
    /// maximum.
    pub symmetry_defect: f64,
}

/// fraction of the maximum below which structure is considered noise
const PEAK_THRESHOLD_RELATIVE: f64 = 1e-6;

/// Detects local maxima and shape measures of a sampled density. A point
/// counts as a peak if it exceeds its left neighbour strictly and its
/// right neighbour at least weakly (so a two-point plateau, which even
/// grids produce for densities peaked exactly between points, counts
/// once), and if it rises above a fixed fraction of the global maximum.
pub fn density_diagnostics(grid: &Grid1D, rho: &[f64]) -> Result<DensityDiagnostics> {
    if rho.len() != grid.n {
        return Err(Error::Usage(format!(
            "density length {} does not match the {}-point grid",
            rho.len(),
            grid.n
        )));
    }
    let max = rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::Usage("density has no positive values".into()));
    }
    let threshold = PEAK_THRESHOLD_RELATIVE * max;

    let mut peak_positions = Vec::new();
    for i in 1..grid.n - 1 {
        if rho[i] > rho[i - 1] && rho[i] >= rho[i + 1] && rho[i] > threshold {
            // parabola through the three points refines the position
            let denom = rho[i - 1] - 2.0 * rho[i] + rho[i + 1];
            let offset = if denom.abs() > 1e-300 {
                (0.5 * (rho[i - 1] - rho[i + 1]) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            peak_positions.push(grid.x(i) + offset * grid.h);
        }
    }

    let mut m0 = 0.0;
    let mut m2 = 0.0;
    for (i, &r) in rho.iter().enumerate() {
        let x = grid.x(i);
        m0 += r;
        m2 += x * x * r;
    }
    let rms_spread = (m2 / m0).sqrt();

    let mut defect: f64 = 0.0;
    for i in 0..grid.n {
        // the centered uniform grid maps x -> -x by index reflection
        let j = grid.n - 1 - i;
        defect = defect.max((rho[i] - rho[j]).abs());
    }

    Ok(DensityDiagnostics {
        peak_count: peak_positions.len(),
        peak_positions,
        rms_spread,
        symmetry_defect: defect / max,
    })
}

/// Side-by-side measures of two densities on the same grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityComparison {
    /// ∫|ρ_a - ρ_b| dx over the total densities.
    pub l1_difference: f64,
    pub peaks_a: DensityDiagnostics,
    pub peaks_b: DensityDiagnostics,
    /// Worst pairwise peak shift when both densities show the same number
    /// of peaks; None when the counts differ.
    pub max_peak_shift: Option<f64>,
}

pub fn compare_densities(a: &GridDensity, b: &GridDensity) -> Result<DensityComparison> {
    if a.grid != b.grid {
        return Err(Error::Usage("densities live on different grids".into()));
    }
    let ta = a.total();
    let tb = b.total();
    let l1 =
        ta.iter().zip(&tb).map(|(&x, &y)| (x - y).abs()).sum::<f64>() * a.grid.h;
    let da = density_diagnostics(&a.grid, &ta)?;
    let db = density_diagnostics(&b.grid, &tb)?;
    let max_peak_shift = if da.peak_count == db.peak_count && da.peak_count > 0 {
        Some(
            da.peak_positions
                .iter()
                .zip(&db.peak_positions)
                .map(|(&x, &y)| (x - y).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    Ok(DensityComparison { l1_difference: l1, peaks_a: da, peaks_b: db, max_peak_shift })
}

fn csv_header(meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out
}

/// Renders a density as CSV: `# key=value` metadata lines, a column
/// header, then one `x,up,down,total` row per grid point at fixed
/// scientific precision. Deterministic; no timestamps.
pub fn density_csv(density: &GridDensity, meta: &[(&str, String)]) -> String {
    let mut out = csv_header(meta);
    out.push_str("x,rho_up,rho_down,rho_total\n");
    for i in 0..density.grid.n {
        let u = density.up[i];
        let d = density.down[i];
        out.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e}\n",
            density.grid.x(i),
            u,
            d,
            u + d
        ));
    }
    out
}

/// Renders a photon-number distribution as CSV rows `n,probability`.
pub fn photon_csv(probabilities: &[f64], meta: &[(&str, String)]) -> String {
    let mut out = csv_header(meta);
    out.push_str("n,probability\n");
    for (n, &p) in probabilities.iter().enumerate() {
        out.push_str(&format!("{n},{p:.12e}\n"));
    }
    out
}
