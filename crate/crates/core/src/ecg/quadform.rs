//! Canonical quadratic-form representation of a correlated Gaussian.
//!
//! Every basis function is rewritten as exp(-½xᵀAx + bᵀx - c) with A
//! symmetric positive definite. All matrix elements reduce to moments of
//! the merged form of a bra/ket pair, so this representation is the single
//! interface between basis parameters and integral evaluation.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

use super::GaussianBasisFunction;

/// exp(-½xᵀAx + bᵀx - c) with A symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<S: Scalar> {
    /// Symmetric positive definite coefficient matrix.
    pub a: DMatrix<S>,
    /// Linear coefficient vector.
    pub b: DVector<S>,
    /// Constant offset in the exponent.
    pub c: S,
}

impl<S: Scalar> QuadraticForm<S> {
    /// Number of coordinates.
    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// ln g(x) = -½xᵀAx + bᵀx - c, for spot checks against the parametrised
    /// form.
    pub fn log_value_at(&self, x: &DVector<S>) -> S {
        let half = S::lit(0.5);
        -half * (&self.a * x).dot(x) + self.b.dot(x) - self.c
    }

    /// The form with coordinates relabelled: coordinate i becomes
    /// coordinate `perm[i]`. Commutes with canonicalisation of the
    /// parametrised function.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        debug_assert_eq!(perm.len(), n);
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for i in 0..n {
            b[perm[i]] = self.b[i];
            for j in 0..n {
                a[(perm[i], perm[j])] = self.a[(i, j)];
            }
        }
        Self { a, b, c: self.c }
    }
}

/// Expands the pair/one-body parametrisation into the canonical form:
/// A_ii = Σ_{j≠i} α_ij + 2β_i, A_ij = -α_ij (i≠j), b_i = 2β_i s_i,
/// c = Σ_i β_i s_i².
pub fn build_quadratic_form<S: Scalar>(term: &GaussianBasisFunction<S>) -> QuadraticForm<S> {
    let n = term.n();
    let two = S::lit(2.0);
    let alpha = term.alpha();
    let beta = term.beta();
    let shift = term.shift();

    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    let mut c = S::zero();
    for i in 0..n {
        let mut diag = two * beta[i];
        for j in 0..n {
            if j != i {
                diag += alpha[(i, j)];
                a[(i, j)] = -alpha[(i, j)];
            }
        }
        a[(i, i)] = diag;
        b[i] = two * beta[i] * shift[i];
        c += beta[i] * shift[i] * shift[i];
    }
    QuadraticForm { a, b, c }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_log_value(term: &GaussianBasisFunction<f64>, x: &DVector<f64>) -> f64 {
        let n = term.n();
        let mut e = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = x[i] - x[j];
                e -= 0.5 * term.alpha()[(i, j)] * d * d;
            }
            let d = x[i] - term.shift()[i];
            e -= term.beta()[i] * d * d;
        }
        e
    }

    fn sample() -> GaussianBasisFunction<f64> {
        let mut alpha = DMatrix::zeros(3, 3);
        for (i, j, v) in [(0usize, 1usize, 0.7), (0, 2, 0.2), (1, 2, 1.3)] {
            alpha[(i, j)] = v;
            alpha[(j, i)] = v;
        }
        GaussianBasisFunction::new(
            alpha,
            DVector::from_vec(vec![0.4, 1.1, 0.6]),
            DVector::from_vec(vec![-1.5, 0.3, 2.0]),
        )
        .unwrap()
    }

    #[test]
    fn canonical_form_reproduces_parametrised_values() {
        let term = sample();
        let form = build_quadratic_form(&term);
        for x in [
            DVector::from_vec(vec![0.0, 0.0, 0.0]),
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
            DVector::from_vec(vec![-0.3, 0.9, -1.7]),
        ] {
            let expect = raw_log_value(&term, &x);
            let got = form.log_value_at(&x);
            assert!((expect - got).abs() < 1e-13, "{expect} vs {got}");
        }
    }

    #[test]
    fn coefficients_follow_the_expansion() {
        let term = sample();
        let form = build_quadratic_form(&term);
        // A_00 = alpha_01 + alpha_02 + 2 beta_0
        assert!((form.a[(0, 0)] - (0.7 + 0.2 + 2.0 * 0.4)).abs() < 1e-15);
        assert!((form.a[(0, 1)] - (-0.7)).abs() < 1e-15);
        assert!((form.a[(2, 1)] - (-1.3)).abs() < 1e-15);
        // b_1 = 2 beta_1 s_1
        assert!((form.b[1] - 2.0 * 1.1 * 0.3).abs() < 1e-15);
        // c = sum beta_i s_i^2
        let c = 0.4 * 1.5 * 1.5 + 1.1 * 0.3 * 0.3 + 0.6 * 4.0;
        assert!((form.c - c).abs() < 1e-15);
    }

    #[test]
    fn permutation_commutes_with_canonicalisation() {
        let term = sample();
        let perm = [2usize, 0, 1];
        let via_function = build_quadratic_form(&term.permuted(&perm));
        let via_form = build_quadratic_form(&term).permuted(&perm);
        let reference = build_quadratic_form(&term);
        for i in 0..3 {
            assert!((via_function.b[perm[i]] - reference.b[i]).abs() < 1e-15);
            assert!((via_form.b[perm[i]] - reference.b[i]).abs() < 1e-15);
            for j in 0..3 {
                assert!(
                    (via_function.a[(perm[i], perm[j])] - reference.a[(i, j)]).abs() < 1e-15
                );
                assert!((via_form.a[(perm[i], perm[j])] - reference.a[(i, j)]).abs() < 1e-15);
            }
        }
        assert!((via_function.c - reference.c).abs() < 1e-15);
        assert!((via_form.c - reference.c).abs() < 1e-15);
    }
}
