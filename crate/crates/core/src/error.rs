use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("monomial count overflows for d={dim}, m={degree}")]
    CountOverflow { dim: usize, degree: usize },

    #[error("multi-index degree {0} exceeds the supported maximum of 12")]
    DegreeTooLarge(u32),

    #[error("polynomial system is singular: nodes are not unisolvent for the first {size} monomials")]
    SingularVandermonde { size: usize },

    #[error("saddle system is singular at center {center:?} (n={n}, m={degree}, condition estimate {condition:e})")]
    SingularSystem { center: Vec<f64>, n: usize, degree: usize, condition: f64 },

    #[error("degree extension is degenerate at center {center:?}: reduced matrix is numerically singular")]
    DegenerateExtension { center: Vec<f64> },

    #[error("kernel derivatives of order {0} are not supported")]
    UnsupportedOrder(u32),

    #[error("invalid cell: {0}")]
    InvalidCell(String),

    #[error("need {needed} nodes, have {available}")]
    InsufficientNodes { needed: usize, available: usize },

    #[error("point {0:?} lies outside the domain [-1, 1]^d")]
    OutsideDomain(Vec<f64>),

    #[error("all input points are collinear")]
    DegenerateInput,

    #[error("adaptive trapezoid exceeded the maximum recursion depth of {0}")]
    MaxDepth(usize),

    #[error("fixture error: {0}")]
    Fixture(String),

    #[error("output error: {0}")]
    Output(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Output(e.to_string())
    }
}
