use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision error: {message} (requires at least {required_bits} bits)")]
    Precision { message: String, required_bits: u32 },

    #[error("resource limit: coefficient {index} needs {bits} bits, budget is {budget}")]
    Resource { index: usize, bits: u64, budget: u64 },

    /// The computed orbit point is too close to the pole to evaluate the
    /// observable with a certified error; the caller should raise the precision.
    #[error("orbit point {step} lies within {bound:e} of the singularity (distance {distance:e}); raise the precision")]
    NearSingularity { step: u64, distance: f64, bound: f64 },

    #[error("integration failure: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
