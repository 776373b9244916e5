use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A token in a design file is not a ±1 level. Rows and columns are 1-based.
    #[error("invalid level {token:?} at row {row}, column {col} (expected -1 or 1)")]
    Format { row: usize, col: usize, token: String },

    /// Ragged or empty design text.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The submodel lattice is too large to enumerate.
    #[error(
        "submodel lattice has {size} nodes, above the cap of {cap}; \
         use the exchangeable weight engine for symmetric priors"
    )]
    Capacity { size: u128, cap: u128 },

    /// Every eligible submodel has zero prior probability.
    #[error("degenerate prior: all eligible submodels have zero probability")]
    DegeneratePrior,

    /// No eligible submodel is estimable, so the harmonic means are undefined.
    #[error("no eligible submodel is estimable for design {0:?}")]
    AllInestimable(String),

    /// A weight table expected to be exchangeable has unequal entries in one class.
    #[error("weight table is not symmetric: entry ({i}, {j}) = {value} differs from class value {expected}")]
    Symmetry {
        i: usize,
        j: usize,
        value: f64,
        expected: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
