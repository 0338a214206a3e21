use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("adiabatic elimination undefined (detuning = 0)")]
    ZeroDetuning,

    #[error("basis size {size} exceeds the configured maximum {max} (set BLOCKADE_SIM_MAX_BASIS to override)")]
    BasisTooLarge { size: usize, max: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("norm blow-up at t = {time}: norm {norm:.3e} exceeds 1 + 1e-6 (dt = {dt:.3e}; reduce the step size)")]
    NormBlowUp { time: f64, norm: f64, dt: f64 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("no root in search bracket [{lo}, {hi}]: area ranges over [{area_lo}, {area_hi}], target {target}")]
    NoRootInBracket {
        lo: f64,
        hi: f64,
        area_lo: f64,
        area_hi: f64,
        target: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("oracle limit exceeded: {0}")]
    OracleLimit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SimError {
    fn from(err: std::io::Error) -> Self {
        SimError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
