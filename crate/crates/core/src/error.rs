use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid driver error model: {0}")]
    InvalidModel(String),

    #[error("signal schedule exhausted at intersection {intersection} for t = {time} s")]
    ScheduleExhausted { intersection: usize, time: f64 },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("zero fuel consumed over {distance} m; mpg undefined")]
    ZeroFuel { distance: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
