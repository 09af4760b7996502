pub mod arith;
pub mod error;
pub mod group;
pub mod set;
pub mod sumset;
pub mod obstruct;
pub mod critical;
pub mod constructive;
pub mod elliptic;
pub mod codes;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
pub use group::{GroupSpec, QuotientMap, Subgroup};
pub use set::ElementSet;
