use thiserror::Error;

/// Errors raised by model construction, simulation, estimation and selection.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("density is not positive at {x:?} (value {value:e})")]
    NonPositiveDensity { x: Vec<f64>, value: f64 },

    #[error("kernel order {0} is not supported (maximum {max})", max = crate::kernel::MAX_ORDER)]
    UnsupportedOrder(usize),

    #[error("simulation diverged at step {step}")]
    Divergence { step: u64 },

    #[error("{diverged} of {replicates} replicates diverged at T = {horizon}, above the 1% budget")]
    DivergenceBudget { diverged: usize, replicates: usize, horizon: f64 },

    #[error("candidate grid is empty: {0}")]
    EmptyGrid(String),

    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
