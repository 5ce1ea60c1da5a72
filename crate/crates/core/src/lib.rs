pub mod cheb;
pub mod cli;
pub mod error;
pub mod extract;
pub mod ltv;
pub mod moment;
pub mod ode;
pub mod pipeline;
pub mod problems;
pub mod sdp;

pub use error::{Error, Result};
