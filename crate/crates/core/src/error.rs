use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("edge ({lender}, {borrower}) in layer {layer} has an endpoint outside [0, {n})")]
    EdgeOutOfRange {
        layer: usize,
        lender: u32,
        borrower: u32,
        n: usize,
    },

    #[error("duplicate edge ({lender}, {borrower}) in layer {layer}")]
    DuplicateEdge {
        layer: usize,
        lender: u32,
        borrower: u32,
    },

    #[error("stub totals differ: {out_total} out-stubs vs {in_total} in-stubs")]
    StubMismatch { out_total: u64, in_total: u64 },

    #[error("malformed network text at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("weight function returned a non-finite value at loans {loans:?}")]
    NonFiniteWeight { loans: Vec<usize> },

    #[error("cascade window is not closed: lambda_max = {lambda_max} >= 1 at r = {r} (r_max = {r_max})")]
    WindowNotClosed { r: f64, lambda_max: f64, r_max: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
