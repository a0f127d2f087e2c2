pub mod copulas;
pub mod distributions;
pub mod error;
pub mod inference;
pub mod marginal;
pub mod market_data;
pub mod optimize;
pub mod risk;
pub use error::{Error, Result};
