//! Primal-dual penalty and augmented Lagrangian methods on compact boxes.
//!
//! The crate is organized around a single abstraction: a merit function
//! `F(x, mu) = f(x) + phi(x, mu)` whose parameter `mu` is driven by a dual
//! update rule. Four method drivers are provided (plain penalty, rounded
//! weighted l1 penalty, cone augmented Lagrangian, and a kernel-based
//! multiplier method), all sharing one certified global inner solver and
//! one trace format. A monitor replays finished traces against problems
//! with certified optima and reports which convergence guarantees the run
//! actually exhibited.

pub mod cones;
pub mod config;
pub mod experiment;
pub mod expr;
pub mod merit;
pub mod methods;
pub mod monitor;
pub mod problems;
pub mod solver;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("evaluation budget exhausted after {evaluations} evaluations (best merit {best_value:e})")]
    BudgetExhausted {
        best_x: Vec<f64>,
        best_value: f64,
        evaluations: u64,
    },
    #[error("no grid point is feasible within slack {slack:e} at resolution {resolution:e}")]
    InfeasibleAtResolution { resolution: f64, slack: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
