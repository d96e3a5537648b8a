use thiserror::Error;

/// Failures surfaced by the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("series truncation bound {achieved:.3e} above tolerance {requested:.3e} after {terms} terms")]
    Series {
        achieved: f64,
        requested: f64,
        terms: u64,
    },

    #[error("fit needs at least {needed} usable points, got {got}")]
    Fit { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
