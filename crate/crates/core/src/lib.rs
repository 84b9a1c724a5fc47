pub mod arith;
pub mod error;
pub mod field;
pub mod quadratic;
pub mod conditions;
pub mod certificates;
pub mod units;
pub mod splitting;
pub mod verdict;
pub mod iwasawa;
pub mod report;

pub use error::{Error, Result};
pub use field::{FieldRef, Interval, MQElement, MQField, SignPattern};
