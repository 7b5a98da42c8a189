use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("points {first} and {second} coincide (distance {distance:e})")]
    CoincidentPoints { first: usize, second: usize, distance: f64 },

    #[error("abscissas must be strictly increasing (violated at index {index})")]
    NotIncreasing { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    Divergence { iterations: usize, residual: f64 },

    #[error("jacobian is singular beyond the rotational zero mode")]
    SingularJacobian,

    #[error("ode integration failed: {0}")]
    Integration(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("fit rejected: relative residual {residual:e} exceeds {limit:e} ({what})")]
    PoorFit {
        what: &'static str,
        residual: f64,
        limit: f64,
    },

    #[error("sparse solve failed: {0}")]
    LinearSolve(String),

    #[error("outside the asymptotic regime: {0}")]
    Regime(String),

    #[error("evaluation at a singular point")]
    SingularPoint,
}

pub type Result<T> = std::result::Result<T, Error>;
