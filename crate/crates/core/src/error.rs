use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Parameters outside the domain where a quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested object would exceed a configured size cap.
    #[error("capacity exceeded: {what} needs {needed}, cap is {cap}")]
    Capacity {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("unknown vertex ({layer}, {index})")]
    UnknownVertex { layer: u32, index: u32 },

    #[error("size mismatch: configuration has {config} sites, lattice has {lattice}")]
    SizeMismatch { config: usize, lattice: usize },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
