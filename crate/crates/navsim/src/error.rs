use thiserror::Error;

#[derive(Debug, Error)]
pub enum NavError {
    #[error("bad environment parameters: {0}")]
    BadParams(String),
    #[error("unknown viewpoint {0}")]
    UnknownViewpoint(usize),
    #[error("viewpoints {0} and {1} are disconnected")]
    Disconnected(usize, usize),
}
