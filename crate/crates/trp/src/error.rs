use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix {name} is not positive definite: {detail}")]
    NotPositiveDefinite { name: String, detail: String },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {offdiag:.3e})")]
    EigenNonConvergence { sweeps: usize, offdiag: f64 },

    #[error("input matrix is zero; the trace ratio is undefined at X = 0")]
    ZeroMatrix,

    #[error("input matrix is rank deficient (smallest Gram eigenvalue {0:.3e})")]
    RankDeficient(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("iteration cap of {cap} exceeded in {what}")]
    IterationCap { what: String, cap: usize },

    #[error("linear program solver failed: {0}")]
    Lp(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("S-lemma decision is boundary-degenerate: vertex minimum {m_star:.3e} lies in the tolerance band and no certificate was found")]
    BoundaryDegenerate { m_star: f64 },
}
