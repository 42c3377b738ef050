//! Error type shared by all solver stacks.

/// Failure modes of the solvers. Numerical guards reject rather than repair:
/// an ill-conditioned candidate or a non-converging quadrature is reported,
/// never silently degraded.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A basis term violates its invariants (non-positive width, asymmetric
    /// or negative pair exponents, or a quadratic form that is not positive
    /// definite).
    #[error("invalid basis term: {0}")]
    InvalidBasisTerm(String),

    /// The merged quadratic form of a bra/ket pair has no Cholesky factor;
    /// the caller discards the candidate pair.
    #[error("ill-conditioned Gaussian pair: merged form is not positive definite")]
    IllConditionedPair,

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    /// Every overlap eigenvalue fell below the conditioning threshold.
    #[error("degenerate basis: all overlap eigenvalues below threshold")]
    DegenerateBasis,

    /// A basis-growth step found no admissible candidate even after one
    /// widened redraw.
    #[error("optimization step failed: {0}")]
    StepFailed(String),

    /// An iterative driver (SCF, photon-truncation search) hit its ceiling.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// The caller broke a usage contract (mismatched sizes, unnormalized
    /// state, invalid system).
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
