//! Explicitly correlated Gaussian machinery.
//!
//! A spatial basis function over particle coordinates x ∈ ℝᴺ is
//!
//! g(x) = exp(-½ Σ_{i<j} α_ij (x_i-x_j)²) · exp(-Σ_i β_i (x_i-s_i)²),
//!
//! parametrised by symmetric pair couplings α, one-body widths β and shift
//! centres s. [`quadform`] canonicalises g into exp(-½xᵀAx + bᵀx - c),
//! [`elements`] evaluates closed-form matrix elements between two such
//! forms, [`spin`] supplies total-spin eigenfunctions and permutation
//! overlaps, and [`density`] reduces variational states to one-body
//! densities. Antisymmetry is imposed by summing signed permutations on one
//! side of each matrix element.

pub mod density;
pub mod elements;
pub mod quadform;
pub mod spin;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One correlated Gaussian over N particle coordinates.
///
/// Invariants (enforced at construction): `alpha` is N×N, symmetric, with
/// zero diagonal and finite entries; `beta` and `shift` have length N and
/// finite entries; the induced quadratic form is positive definite so the
/// function is normalisable.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBasisFunction<S: Scalar> {
    alpha: DMatrix<S>,
    beta: DVector<S>,
    shift: DVector<S>,
}

impl<S: Scalar> GaussianBasisFunction<S> {
    /// Validates parameters and the positive definiteness of the induced
    /// quadratic form.
    pub fn new(alpha: DMatrix<S>, beta: DVector<S>, shift: DVector<S>) -> Result<Self> {
        let n = beta.len();
        if n == 0 {
            return Err(Error::InvalidBasisTerm("no particles".into()));
        }
        if alpha.nrows() != n || alpha.ncols() != n || shift.len() != n {
            return Err(Error::InvalidBasisTerm(format!(
                "inconsistent dimensions: alpha {}x{}, beta {}, shift {}",
                alpha.nrows(),
                alpha.ncols(),
                n,
                shift.len()
            )));
        }
        for i in 0..n {
            if alpha[(i, i)] != S::zero() {
                return Err(Error::InvalidBasisTerm(format!("alpha[{i},{i}] nonzero")));
            }
            for j in 0..n {
                if !alpha[(i, j)].is_finite() {
                    return Err(Error::InvalidBasisTerm(format!("alpha[{i},{j}] not finite")));
                }
                if alpha[(i, j)] != alpha[(j, i)] {
                    return Err(Error::InvalidBasisTerm(format!("alpha[{i},{j}] asymmetric")));
                }
            }
            if !beta[i].is_finite() || !shift[i].is_finite() {
                return Err(Error::InvalidBasisTerm(format!("beta/shift[{i}] not finite")));
            }
        }
        let term = Self { alpha, beta, shift };
        let form = quadform::build_quadratic_form(&term);
        if Cholesky::new(form.a.clone()).is_none() {
            return Err(Error::InvalidBasisTerm(
                "quadratic form not positive definite".into(),
            ));
        }
        Ok(term)
    }

    /// Number of particle coordinates.
    pub fn n(&self) -> usize {
        self.beta.len()
    }

    /// Symmetric pair couplings, zero diagonal.
    pub fn alpha(&self) -> &DMatrix<S> {
        &self.alpha
    }

    /// One-body widths.
    pub fn beta(&self) -> &DVector<S> {
        &self.beta
    }

    /// One-body shift centres.
    pub fn shift(&self) -> &DVector<S> {
        &self.shift
    }

    /// The function with particle labels permuted: coordinate i of `self`
    /// becomes coordinate `perm[i]` of the result, so the result evaluates
    /// on a configuration x as `self` does on x∘perm.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        debug_assert_eq!(perm.len(), n);
        let mut alpha = DMatrix::zeros(n, n);
        let mut beta = DVector::zeros(n);
        let mut shift = DVector::zeros(n);
        for i in 0..n {
            beta[perm[i]] = self.beta[i];
            shift[perm[i]] = self.shift[i];
            for j in 0..n {
                alpha[(perm[i], perm[j])] = self.alpha[(i, j)];
            }
        }
        Self { alpha, beta, shift }
    }

    /// Canonical quadratic form of this function.
    pub fn quadratic_form(&self) -> quadform::QuadraticForm<S> {
        quadform::build_quadratic_form(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GaussianBasisFunction<f64> {
        let mut alpha = DMatrix::zeros(3, 3);
        alpha[(0, 1)] = 0.4;
        alpha[(1, 0)] = 0.4;
        alpha[(1, 2)] = 0.25;
        alpha[(2, 1)] = 0.25;
        GaussianBasisFunction::new(
            alpha,
            DVector::from_vec(vec![0.5, 0.8, 0.3]),
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
        )
        .unwrap()
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let r = GaussianBasisFunction::new(
            DMatrix::<f64>::zeros(2, 2),
            DVector::from_vec(vec![1.0, 1.0, 1.0]),
            DVector::zeros(3),
        );
        assert!(matches!(r, Err(Error::InvalidBasisTerm(_))));
    }

    #[test]
    fn rejects_nonzero_alpha_diagonal() {
        let mut alpha = DMatrix::zeros(2, 2);
        alpha[(0, 0)] = 0.1;
        let r = GaussianBasisFunction::new(
            alpha,
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::zeros(2),
        );
        assert!(matches!(r, Err(Error::InvalidBasisTerm(_))));
    }

    #[test]
    fn rejects_unnormalisable_form() {
        // negative width with no pair coupling: A has a negative eigenvalue
        let r = GaussianBasisFunction::new(
            DMatrix::zeros(2, 2),
            DVector::from_vec(vec![-0.5, 1.0]),
            DVector::zeros(2),
        );
        assert!(matches!(r, Err(Error::InvalidBasisTerm(_))));
    }

    #[test]
    fn accepts_negative_width_stabilised_by_pair_coupling() {
        // pair term can keep A positive definite with a slightly negative beta
        let mut alpha = DMatrix::zeros(2, 2);
        alpha[(0, 1)] = 2.0;
        alpha[(1, 0)] = 2.0;
        let r = GaussianBasisFunction::new(
            alpha,
            DVector::from_vec(vec![-0.1, 1.0]),
            DVector::zeros(2),
        );
        assert!(r.is_ok());
    }

    #[test]
    fn permutation_relabels_parameters() {
        let g = sample();
        // perm sends 0->1, 1->2, 2->0
        let p = g.permuted(&[1, 2, 0]);
        assert_eq!(p.beta()[1], g.beta()[0]);
        assert_eq!(p.beta()[2], g.beta()[1]);
        assert_eq!(p.beta()[0], g.beta()[2]);
        assert_eq!(p.shift()[2], g.shift()[1]);
        assert_eq!(p.alpha()[(1, 2)], g.alpha()[(0, 1)]);
        assert_eq!(p.alpha()[(2, 0)], g.alpha()[(1, 2)]);
    }

    #[test]
    fn permutation_by_identity_is_identity() {
        let g = sample();
        let p = g.permuted(&[0, 1, 2]);
        assert_eq!(g, p);
    }
}
