//! Rate, reliability and detection analysis for a dirty-paper-coded ISAC
//! transmitter that serves eMBB traffic and sensing-triggered URLLC
//! traffic over short blocks.

pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod optimizer;
pub mod rate;
pub mod reliability;
pub mod sensing;
pub mod stats;

pub use channel::{BlockKind, CodingParams, NullNoncentrality, SicVarianceVariant, SystemConfig};
pub use error::{IsacError, Result};
pub use montecarlo::{EmpiricalCdf, RngStream};
pub use optimizer::{AxisSpec, GridSpec, Scheme, TimeFractions, TradeoffPoint};
pub use rate::{Decoding, RateBound};
pub use stats::GeneralizedChiSquare;
