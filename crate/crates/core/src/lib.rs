pub mod baselines;
pub mod cascade;
pub mod cma;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod objectives;
pub mod par;
pub mod point;
pub mod seeding;
pub mod selection;

pub use error::{Error, Result};
