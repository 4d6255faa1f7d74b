use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot normalize a zero spinor")]
    ZeroSpinor,

    #[error("t = {t} lies outside the drive interval [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },

    #[error("invalid drive protocol: {0}")]
    InvalidDrive(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unit error: {0}")]
    Units(String),

    #[error("config syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("i/o error at {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
