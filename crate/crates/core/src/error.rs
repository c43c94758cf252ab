use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),

    #[error("index order violated: need j < l, got j={j}, l={l}")]
    IndexOrder { j: usize, l: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexBounds { index: usize, max: usize },

    #[error("series does not converge: |base| = {modulus} >= 1")]
    NonConvergence { modulus: f64 },

    #[error("argument outside the domain of definition: {0}")]
    Domain(String),

    #[error("degenerate input: |[v]| = {magnitude:e} is at a lattice zero")]
    Degenerate { magnitude: f64 },

    #[error("pole guard tripped: {what} has magnitude {magnitude:e}")]
    Pole { what: String, magnitude: f64 },

    #[error("mode sum diverges: effective ratio {ratio} >= 1")]
    Divergence { ratio: f64 },

    #[error("{skipped} sample draws hit the pole guard while collecting {wanted} points")]
    TooManyPoles { skipped: usize, wanted: usize },

    #[error("unknown exchange pair `{0}`")]
    UnknownPair(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("entry `{name}` requires c = 1, got c = {c}")]
    LevelMismatch { name: String, c: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Redraws allowed per requested sample point before a sampler gives up.
pub const MAX_REDRAWS_PER_POINT: usize = 20;

/// Fail once pole-guarded redraws exceed the budget for `wanted` points.
pub fn check_redraws(skipped: usize, wanted: usize) -> Result<()> {
    if skipped > MAX_REDRAWS_PER_POINT * wanted {
        return Err(Error::TooManyPoles { skipped, wanted });
    }
    Ok(())
}
