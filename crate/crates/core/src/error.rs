use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite point ({0}, {1})")]
    InvalidPoint(f64, f64),
    #[error("piece {0} is degenerate: {1}")]
    DegeneratePiece(usize, String),
    #[error("piece {0} is not invertible (determinant {1})")]
    NonInvertible(usize, f64),
    #[error("the composed linear part has an eigenvalue 1; the periodic orbit is not unique")]
    NonUniqueOrbit,
    #[error("no sign change over the bracket [{0}, {1}]")]
    Bracket(f64, f64),
    #[error("orbit escaped (radius {0}) at iterate {1}")]
    Escape(f64, usize),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("not a saddle: {0}")]
    NotASaddle(String),
    #[error("genericity violated: {0}")]
    Genericity(String),
    #[error("map is not observable: {0}")]
    NonObservable(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("operation requires affine pieces; piece {0} is polynomial")]
    NotAffine(usize),
    #[error("invalid itinerary label {0} (map has {1} pieces)")]
    BadLabel(usize, usize),
    #[error("continuation stalled at step {0}")]
    Stall(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
