//! Spin-resolved one-body densities of correlated-Gaussian states.
//!
//! For a normalised state Ψ = Σ_k c_k γ_k 𝒜(g_k ⊗ χ), the one-body density
//! ρ_σ(x) = N ∫ |Ψ|² δ(x - x_1) Π_σ reduces, like every other matrix
//! element, to the merged-pair measure: each (bra k, ket l, relabelling P,
//! slot i) contributes a scalar Gaussian N(x; m_i, (C⁻¹)_ii) weighted by
//! the pair overlap and the spin overlap projected onto spin σ at slot i.
//! The weights alone give the exact integral of the density, which is used
//! as a built-in normalisation check: ∫(ρ↑ + ρ↓) = N.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::perm::permutations_with_sign;
use crate::scalar::Scalar;

use super::elements::MergedPair;
use super::spin::{spin_overlap_projected, SpinFunction};
use super::GaussianBasisFunction;

/// A variational state over one spin function: terms g_k with per-term
/// normalisations γ_k and coefficients c_k such that Σ c_k γ_k 𝒜(g_k ⊗ χ)
/// has unit norm.
#[derive(Debug, Clone)]
pub struct ManyBodyState<S: Scalar> {
    terms: Vec<GaussianBasisFunction<S>>,
    norms: Vec<S>,
    coeff: Vec<S>,
    spin: SpinFunction,
}

impl<S: Scalar> ManyBodyState<S> {
    /// Validates dimensional consistency; normalisation is checked later
    /// against the analytic density integral.
    pub fn new(
        terms: Vec<GaussianBasisFunction<S>>,
        norms: Vec<S>,
        coeff: Vec<S>,
        spin: SpinFunction,
    ) -> Result<Self> {
        if terms.is_empty() || terms.len() != norms.len() || terms.len() != coeff.len() {
            return Err(Error::Usage(format!(
                "inconsistent state: {} terms, {} norms, {} coefficients",
                terms.len(),
                norms.len(),
                coeff.len()
            )));
        }
        if terms.iter().any(|g| g.n() != spin.n()) {
            return Err(Error::Usage("term dimension differs from spin function".into()));
        }
        Ok(Self { terms, norms, coeff, spin })
    }

    pub fn n(&self) -> usize {
        self.spin.n()
    }

    pub fn terms(&self) -> &[GaussianBasisFunction<S>] {
        &self.terms
    }

    pub fn spin(&self) -> &SpinFunction {
        &self.spin
    }
}

/// Spin-resolved density sampled on a grid, plus the grid-independent
/// analytic value of ∫(ρ↑ + ρ↓) dx.
#[derive(Debug, Clone)]
pub struct DensitySample<S: Scalar> {
    pub up: Vec<S>,
    pub down: Vec<S>,
    pub analytic_norm: S,
}

impl<S: Scalar> DensitySample<S> {
    pub fn total(&self) -> Vec<S> {
        self.up.iter().zip(&self.down).map(|(&u, &d)| u + d).collect()
    }

    /// All-zero sample, the identity for [`DensitySample::accumulate`].
    pub fn zeros(len: usize) -> Self {
        Self { up: vec![S::zero(); len], down: vec![S::zero(); len], analytic_norm: S::zero() }
    }

    /// Pointwise sum with another sample; block densities of a composite
    /// state add this way, and so do their analytic norms.
    pub fn accumulate(&mut self, other: &Self) {
        for (a, b) in self.up.iter_mut().zip(&other.up) {
            *a += *b;
        }
        for (a, b) in self.down.iter_mut().zip(&other.down) {
            *a += *b;
        }
        self.analytic_norm += other.analytic_norm;
    }
}

/// exponent cutoff for scalar Gaussian evaluation; beyond it the density
/// contribution is below e⁻⁴⁵ of the peak
const PDF_EXPONENT_CUTOFF: f64 = 45.0;

/// contributions with |weight| below this are dropped before any linear
/// algebra
const NEGLIGIBLE_CONTRIBUTION: f64 = 1e-16;

/// Relative tolerance on the analytic norm check of a full state.
pub const DENSITY_NORM_TOL: f64 = 1e-8;

/// One-body density of a normalised state on a strictly increasing grid.
/// Fails if the analytic integral deviates from the particle number by
/// more than [`DENSITY_NORM_TOL`] relative, which catches unnormalised
/// coefficient vectors.
pub fn reduced_density<S: Scalar>(
    state: &ManyBodyState<S>,
    grid: &[S],
) -> Result<DensitySample<S>> {
    let sample = reduced_density_component(state, grid)?;
    let n = S::lit(state.n() as f64);
    if (sample.analytic_norm - n).abs() > S::lit(DENSITY_NORM_TOL) * n {
        return Err(Error::Usage(format!(
            "state not normalised: density integrates to {} for {} particles",
            sample.analytic_norm.to_f64(),
            state.n()
        )));
    }
    Ok(sample)
}

/// [`reduced_density`] without the normalisation check, for states that are
/// one block of a larger normalised sum (densities add across blocks, and
/// so do the analytic norms).
pub fn reduced_density_component<S: Scalar>(
    state: &ManyBodyState<S>,
    grid: &[S],
) -> Result<DensitySample<S>> {
    let n = state.n();
    let k_terms = state.terms.len();
    let mut sample = DensitySample::zeros(grid.len());

    // signed per-slot spin projections, one set per relabelling
    struct PermProjection<S> {
        perm: Vec<usize>,
        up: Vec<S>,
        down: Vec<S>,
    }
    let projections: Vec<PermProjection<S>> = permutations_with_sign(n)
        .into_iter()
        .filter_map(|(perm, sign)| {
            let sg = S::lit(sign as f64);
            let up: Vec<S> = (0..n)
                .map(|i| sg * spin_overlap_projected(&state.spin, &perm, &state.spin, i, true))
                .collect();
            let down: Vec<S> = (0..n)
                .map(|i| sg * spin_overlap_projected(&state.spin, &perm, &state.spin, i, false))
                .collect();
            let keep = up
                .iter()
                .chain(&down)
                .any(|w| w.abs() >= S::lit(super::elements::NEGLIGIBLE_SPIN_WEIGHT));
            keep.then_some(PermProjection { perm, up, down })
        })
        .collect();

    let forms: Vec<_> = state.terms.iter().map(|g| g.quadratic_form()).collect();

    for k in 0..k_terms {
        for l in k..k_terms {
            let sym = if k == l { S::one() } else { S::lit(2.0) };
            let pref = sym * state.coeff[k] * state.coeff[l] * state.norms[k] * state.norms[l];
            if pref.abs() < S::lit(NEGLIGIBLE_CONTRIBUTION) {
                continue;
            }
            for proj in &projections {
                let ket_form = forms[l].permuted(&proj.perm);
                let merged = MergedPair::merge(&forms[k], &ket_form)?;
                let ov = merged.overlap();
                for i in 0..n {
                    let w_up = pref * proj.up[i] * ov;
                    let w_dn = pref * proj.down[i] * ov;
                    if w_up.abs() < S::lit(NEGLIGIBLE_CONTRIBUTION)
                        && w_dn.abs() < S::lit(NEGLIGIBLE_CONTRIBUTION)
                    {
                        continue;
                    }
                    let (mu, var) = merged.slot_stats(i);
                    sample.analytic_norm += w_up + w_dn;
                    add_scaled_gaussian(&mut sample.up, grid, mu, var, w_up);
                    add_scaled_gaussian(&mut sample.down, grid, mu, var, w_dn);
                }
            }
        }
    }
    Ok(sample)
}

/// Adds weight · N(x; mu, var) over the grid points where the exponent is
/// above the cutoff; the grid must be strictly increasing.
fn add_scaled_gaussian<S: Scalar>(acc: &mut [S], grid: &[S], mu: S, var: S, weight: S) {
    if weight == S::zero() {
        return;
    }
    let half = S::lit(0.5);
    let norm = weight / (S::two_pi() * var).sqrt();
    let radius = (S::lit(2.0 * PDF_EXPONENT_CUTOFF) * var).sqrt();
    let lo = grid.partition_point(|&x| x < mu - radius);
    let hi = grid.partition_point(|&x| x <= mu + radius);
    for idx in lo..hi {
        let z = grid[idx] - mu;
        acc[idx] += norm * (-half * z * z / var).exp();
    }
}

/// Uniform sampling grid covering [-half_width, half_width].
pub fn symmetric_grid<S: Scalar>(half_width: S, points: usize) -> Vec<S> {
    debug_assert!(points > 1);
    let step = S::lit(2.0) * half_width / S::lit((points - 1) as f64);
    (0..points).map(|i| -half_width + step * S::lit(i as f64)).collect()
}

/// Trapezoid integral of grid samples, for norm checks on uniform or
/// non-uniform grids.
pub fn trapezoid<S: Scalar>(grid: &[S], values: &[S]) -> S {
    let half = S::lit(0.5);
    let mut acc = S::zero();
    for i in 1..grid.len() {
        acc += half * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
    }
    acc
}

/// Weight vector picking a single coordinate, for moment elements.
pub fn unit_weight<S: Scalar>(n: usize, i: usize) -> DVector<S> {
    let mut w = DVector::zeros(n);
    w[i] = S::one();
    w
}
