//! Closed-form matrix elements between correlated Gaussians.
//!
//! For a bra/ket pair with canonical forms (A, b, c) and (A', b', c'), the
//! merged form C = A + A', d = b + b' is a Gaussian measure with mean
//! m = C⁻¹d and covariance C⁻¹. Every operator handled here reduces to
//! moments of linear maps wᵀx under that measure:
//!
//! overlap  ⟨g|g'⟩ = (2π)^{N/2} det(C)^{-1/2} exp(½dᵀm - c - c'),
//! kinetic  ⟨g|-½Σ∂²|g'⟩ = ½[Tr(A C⁻¹ A') + (Am-b)ᵀ(A'm-b')]·⟨g|g'⟩,
//! moments  ⟨(wᵀx)^p⟩ from the scalar mean μ = wᵀm, variance σ² = wᵀC⁻¹w,
//! pair kernel ⟨1/√((x_i-x_j)²+1)⟩ by quadrature over the same (μ, σ²).
//!
//! Antisymmetry enters as a one-sided sum over signed particle
//! relabellings of the ket, each weighted by the spin-function overlap of
//! the relabelling.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::perm::permutations_with_sign;
use crate::quad::soft_coulomb_expectation;
use crate::scalar::Scalar;

use super::quadform::QuadraticForm;
use super::spin::{spin_overlap, SpinFunction};
use super::GaussianBasisFunction;

/// Absolute tolerance for the pair-kernel quadrature.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;

/// Signed spin weights below this magnitude contribute nothing beyond
/// round-off and their permutations are skipped.
pub const NEGLIGIBLE_SPIN_WEIGHT: f64 = 1e-14;

/// The Gaussian measure induced by a bra/ket pair, holding the Cholesky
/// factorisation of C = A_bra + A_ket, the mean m = C⁻¹(b_bra + b_ket),
/// the covariance C⁻¹ and the pair overlap.
pub struct MergedPair<S: Scalar> {
    mean: DVector<S>,
    cov: DMatrix<S>,
    overlap: S,
}

impl<S: Scalar> MergedPair<S> {
    /// Merges two canonical forms. Fails with [`Error::IllConditionedPair`]
    /// when C loses positive definiteness to round-off.
    pub fn merge(bra: &QuadraticForm<S>, ket: &QuadraticForm<S>) -> Result<Self> {
        debug_assert_eq!(bra.n(), ket.n());
        let n = bra.n();
        let c_mat = &bra.a + &ket.a;
        let d = &bra.b + &ket.b;
        let chol = Cholesky::new(c_mat).ok_or(Error::IllConditionedPair)?;
        let mean = chol.solve(&d);
        let cov = chol.inverse();
        let half = S::lit(0.5);
        let log_det = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(S::zero(), |acc, &l| acc + l.ln())
            * S::lit(2.0);
        let log_overlap = S::lit(n as f64) * half * (S::two_pi()).ln() - half * log_det
            + half * d.dot(&mean)
            - bra.c
            - ket.c;
        Ok(Self { mean, cov, overlap: log_overlap.exp() })
    }

    /// ⟨g_bra|g_ket⟩.
    pub fn overlap(&self) -> S {
        self.overlap
    }

    /// Mean of wᵀx under the merged measure.
    pub fn mean_of(&self, w: &DVector<S>) -> S {
        w.dot(&self.mean)
    }

    /// Variance of wᵀx under the merged measure.
    pub fn variance_of(&self, w: &DVector<S>) -> S {
        w.dot(&(&self.cov * w))
    }

    /// Mean and variance of coordinate i (w = e_i), used for one-body
    /// densities and per-particle moments.
    pub fn slot_stats(&self, i: usize) -> (S, S) {
        (self.mean[i], self.cov[(i, i)])
    }

    /// Mean and variance of x_i - x_j.
    pub fn separation_stats(&self, i: usize, j: usize) -> (S, S) {
        let mu = self.mean[i] - self.mean[j];
        let two = S::lit(2.0);
        let var = self.cov[(i, i)] + self.cov[(j, j)] - two * self.cov[(i, j)];
        (mu, var)
    }

    /// Mean and variance of Σ_i x_i, the centre-of-mass coordinate times N;
    /// the electric dipole X = -Σ_i x_i has the negated mean and the same
    /// variance.
    pub fn total_coordinate_stats(&self) -> (S, S) {
        (self.mean.sum(), self.cov.sum())
    }

    /// ⟨(wᵀx)^power⟩ · overlap for power ∈ {0, 1, 2, 4}.
    pub fn moment(&self, w: &DVector<S>, power: u32) -> Result<S> {
        let (mu, var) = (self.mean_of(w), self.variance_of(w));
        Ok(self.overlap * gaussian_power_moment(mu, var, power)?)
    }

    /// ⟨-½ Σ_i ∂²/∂x_i²⟩ · overlap, needing both original forms.
    pub fn kinetic(&self, bra: &QuadraticForm<S>, ket: &QuadraticForm<S>) -> S {
        let half = S::lit(0.5);
        let trace = (&bra.a * &self.cov * &ket.a).trace();
        let u = &bra.a * &self.mean - &bra.b;
        let v = &ket.a * &self.mean - &ket.b;
        half * (trace + u.dot(&v)) * self.overlap
    }

    /// ⟨1/√((x_i-x_j)²+1)⟩ · overlap by adaptive quadrature.
    pub fn pair_kernel(&self, i: usize, j: usize, tol: S) -> Result<S> {
        let (mu, var) = self.separation_stats(i, j);
        Ok(self.overlap * soft_coulomb_expectation(mu, var, tol)?)
    }
}

/// Raw moment of a scalar Gaussian: E[ξ^p] for ξ ~ Normal(μ, σ²),
/// p ∈ {0, 1, 2, 4}.
pub fn gaussian_power_moment<S: Scalar>(mu: S, var: S, power: u32) -> Result<S> {
    let val = match power {
        0 => S::one(),
        1 => mu,
        2 => mu * mu + var,
        4 => {
            let mu2 = mu * mu;
            let six = S::lit(6.0);
            let three = S::lit(3.0);
            mu2 * mu2 + six * mu2 * var + three * var * var
        }
        p => return Err(Error::Usage(format!("unsupported moment power {p}"))),
    };
    Ok(val)
}

/// One-body and pair operators with closed-form or quadrature elements.
#[derive(Debug, Clone)]
pub enum Operator<S: Scalar> {
    /// Identity: the overlap itself.
    Overlap,
    /// -½ Σ_i ∂²/∂x_i².
    Kinetic,
    /// Σ_i x_i^power, the confinement sum (power 2 or 4).
    ConfinementSum { power: u32 },
    /// Σ_{i<j} 1/√((x_i-x_j)²+1).
    PairCoulomb,
    /// (wᵀx)^power for a fixed weight vector, power ∈ {0, 1, 2, 4}.
    Moment { weight: DVector<S>, power: u32 },
}

/// ⟨g_bra| Op |g_ket⟩ without antisymmetrisation.
pub fn spatial_element<S: Scalar>(
    op: &Operator<S>,
    bra: &GaussianBasisFunction<S>,
    ket: &GaussianBasisFunction<S>,
    tol: S,
) -> Result<S> {
    let bra_form = bra.quadratic_form();
    let ket_form = ket.quadratic_form();
    let merged = MergedPair::merge(&bra_form, &ket_form)?;
    merged_element(op, &merged, &bra_form, &ket_form, tol)
}

fn merged_element<S: Scalar>(
    op: &Operator<S>,
    merged: &MergedPair<S>,
    bra_form: &QuadraticForm<S>,
    ket_form: &QuadraticForm<S>,
    tol: S,
) -> Result<S> {
    let n = bra_form.n();
    match op {
        Operator::Overlap => Ok(merged.overlap()),
        Operator::Kinetic => Ok(merged.kinetic(bra_form, ket_form)),
        Operator::ConfinementSum { power } => {
            let mut acc = S::zero();
            for i in 0..n {
                let (mu, var) = merged.slot_stats(i);
                acc += gaussian_power_moment(mu, var, *power)?;
            }
            Ok(acc * merged.overlap())
        }
        Operator::PairCoulomb => {
            let mut acc = S::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    acc += merged.pair_kernel(i, j, tol)?;
                }
            }
            Ok(acc)
        }
        Operator::Moment { weight, power } => merged.moment(weight, *power),
    }
}

/// ⟨g_bra| (wᵀx)^power |g_ket⟩ for power ∈ {0, 1, 2, 4}.
pub fn gaussian_moment_element<S: Scalar>(
    bra: &GaussianBasisFunction<S>,
    ket: &GaussianBasisFunction<S>,
    weight: &DVector<S>,
    power: u32,
) -> Result<S> {
    spatial_element(
        &Operator::Moment { weight: weight.clone(), power },
        bra,
        ket,
        S::lit(DEFAULT_QUADRATURE_TOL),
    )
}

/// ⟨g_bra| -½ Σ_i ∂²/∂x_i² |g_ket⟩.
pub fn kinetic_element<S: Scalar>(
    bra: &GaussianBasisFunction<S>,
    ket: &GaussianBasisFunction<S>,
) -> Result<S> {
    spatial_element(&Operator::Kinetic, bra, ket, S::lit(DEFAULT_QUADRATURE_TOL))
}

/// ⟨g_bra| 1/√((x_i-x_j)²+1) |g_ket⟩ for one particle pair.
pub fn soft_coulomb_element<S: Scalar>(
    bra: &GaussianBasisFunction<S>,
    ket: &GaussianBasisFunction<S>,
    i: usize,
    j: usize,
) -> Result<S> {
    let bra_form = bra.quadratic_form();
    let ket_form = ket.quadratic_form();
    let merged = MergedPair::merge(&bra_form, &ket_form)?;
    merged.pair_kernel(i, j, S::lit(DEFAULT_QUADRATURE_TOL))
}

/// Signed spin weights of all particle relabellings:
/// (P, sign(P)·⟨χ_bra|P|χ_ket⟩), with negligible weights dropped. These
/// depend only on the spin functions, so callers building whole matrices
/// compute them once.
pub fn permutation_weights<S: Scalar>(
    bra_spin: &SpinFunction,
    ket_spin: &SpinFunction,
) -> Vec<(Vec<usize>, S)> {
    permutations_with_sign(ket_spin.n())
        .into_iter()
        .filter_map(|(perm, sign)| {
            let w: f64 = spin_overlap(bra_spin, &perm, ket_spin);
            let signed = sign as f64 * w;
            (signed.abs() >= NEGLIGIBLE_SPIN_WEIGHT).then(|| (perm, S::lit(signed)))
        })
        .collect()
}

/// ⟨g_bra ⊗ χ_bra| Op 𝒜 |g_ket ⊗ χ_ket⟩ with the antisymmetriser
/// 𝒜 = Σ_P sign(P) P applied to the ket side only (no 1/N! factor).
pub fn antisymmetrized_element<S: Scalar>(
    op: &Operator<S>,
    bra: (&GaussianBasisFunction<S>, &SpinFunction),
    ket: (&GaussianBasisFunction<S>, &SpinFunction),
    tol: S,
) -> Result<S> {
    let weights = permutation_weights(bra.1, ket.1);
    antisymmetrized_with_weights(op, bra.0, ket.0, &weights, tol)
}

/// [`antisymmetrized_element`] with precomputed spin weights.
pub fn antisymmetrized_with_weights<S: Scalar>(
    op: &Operator<S>,
    bra: &GaussianBasisFunction<S>,
    ket: &GaussianBasisFunction<S>,
    weights: &[(Vec<usize>, S)],
    tol: S,
) -> Result<S> {
    let bra_form = bra.quadratic_form();
    let ket_base = ket.quadratic_form();
    let mut acc = S::zero();
    for (perm, w) in weights {
        let ket_form = ket_base.permuted(perm);
        let merged = MergedPair::merge(&bra_form, &ket_form)?;
        acc += *w * merged_element(op, &merged, &bra_form, &ket_form, tol)?;
    }
    Ok(acc)
}
