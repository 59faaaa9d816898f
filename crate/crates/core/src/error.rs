use thiserror::Error;

/// Errors shared across the kernel, propagator, tree and flow layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("unsupported derivative order {0} (supported orders are 0..=3)")]
    DerivativeOrder(usize),

    #[error("numerical error: {context} (achieved {achieved:.3e}, requested {requested:.3e})")]
    Numerical {
        context: String,
        achieved: f64,
        requested: f64,
    },

    #[error("scheduling error: {0}")]
    Scheduling(String),

    #[error("enumeration error: {0}")]
    Enumeration(String),

    #[error("positivity error: {0}")]
    Positivity(String),

    #[error("accuracy error: {context} (deviation {deviation:.3e} on scale range [{lo:.3e}, {hi:.3e}])")]
    Accuracy {
        context: String,
        deviation: f64,
        lo: f64,
        hi: f64,
    },

    #[error("channel error: {0}")]
    Channel(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
