//! Generalized symmetric eigenproblem Hc = ESc over a possibly
//! ill-conditioned overlap matrix.
//!
//! Nonorthogonal Gaussian bases routinely drive S towards singularity, so
//! the solver uses canonical orthogonalisation: diagonalise S, discard the
//! subspace of relative eigenvalue below a fixed cutoff, transform H into
//! the surviving whitened subspace and diagonalise there. The number of
//! discarded directions is reported so callers can treat any discard as a
//! rejection signal for candidate basis terms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative overlap-eigenvalue cutoff: directions with λ ≤ cutoff·λ_max are
/// dropped as numerically dependent.
pub const OVERLAP_EIGENVALUE_CUTOFF: f64 = 1e-10;

/// Eigenpairs of a generalized problem, ascending by eigenvalue.
#[derive(Debug, Clone)]
pub struct SpectrumResult<S: Scalar> {
    /// Eigenvalues in ascending order, one per kept direction.
    pub energies: Vec<S>,
    /// Coefficient columns, aligned with `energies`, S-orthonormal.
    pub coefficients: DMatrix<S>,
    /// Overlap directions removed by the conditioning cutoff.
    pub n_discarded: usize,
}

impl<S: Scalar> SpectrumResult<S> {
    /// Lowest eigenvalue.
    pub fn ground_energy(&self) -> S {
        self.energies[0]
    }

    /// Coefficients of the lowest state.
    pub fn ground_coefficients(&self) -> DVector<S> {
        self.coefficients.column(0).into_owned()
    }
}

/// Solves Hc = ESc with the default conditioning cutoff.
pub fn solve_generalized<S: Scalar>(
    h: &DMatrix<S>,
    s: &DMatrix<S>,
) -> Result<SpectrumResult<S>> {
    solve_generalized_with_cutoff(h, s, S::lit(OVERLAP_EIGENVALUE_CUTOFF))
}

/// [`solve_generalized`] with an explicit relative overlap cutoff.
pub fn solve_generalized_with_cutoff<S: Scalar>(
    h: &DMatrix<S>,
    s: &DMatrix<S>,
    cutoff: S,
) -> Result<SpectrumResult<S>> {
    let n = h.nrows();
    if h.ncols() != n || s.nrows() != n || s.ncols() != n || n == 0 {
        return Err(Error::Usage(format!(
            "generalized eigenproblem needs square same-size matrices, got {}x{} and {}x{}",
            h.nrows(),
            h.ncols(),
            s.nrows(),
            s.ncols()
        )));
    }

    let overlap_eig = SymmetricEigen::new(s.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        overlap_eig.eigenvalues[b]
            .partial_cmp(&overlap_eig.eigenvalues[a])
            .expect("finite overlap eigenvalues")
    });
    let lambda_max = overlap_eig.eigenvalues[order[0]];
    if !(lambda_max > S::zero()) {
        return Err(Error::DegenerateBasis);
    }
    let threshold = cutoff * lambda_max;
    let kept: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| overlap_eig.eigenvalues[i] > threshold)
        .collect();
    if kept.is_empty() {
        return Err(Error::DegenerateBasis);
    }
    let n_discarded = n - kept.len();

    // whitening map X = U diag(λ^{-1/2}) over the kept directions
    let mut x = DMatrix::zeros(n, kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let scale = S::one() / overlap_eig.eigenvalues[i].sqrt();
        x.column_mut(col)
            .copy_from(&(overlap_eig.eigenvectors.column(i) * scale));
    }

    let h_white = x.transpose() * h * &x;
    let inner = SymmetricEigen::new(h_white);
    let mut inner_order: Vec<usize> = (0..kept.len()).collect();
    inner_order.sort_by(|&a, &b| {
        inner.eigenvalues[a]
            .partial_cmp(&inner.eigenvalues[b])
            .expect("finite eigenvalues")
    });

    let mut energies = Vec::with_capacity(kept.len());
    let mut coefficients = DMatrix::zeros(n, kept.len());
    for (col, &i) in inner_order.iter().enumerate() {
        energies.push(inner.eigenvalues[i]);
        coefficients
            .column_mut(col)
            .copy_from(&(&x * inner.eigenvectors.column(i)));
    }
    Ok(SpectrumResult { energies, coefficients, n_discarded })
}
