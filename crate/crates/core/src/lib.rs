//! Unit-root testing, Johansen cointegration and a Monte Carlo harness for
//! auditing spurious cointegration claims on short annual series.

pub mod johansen;
pub mod level;
pub mod montecarlo;
pub mod pipeline;
pub mod regress;
pub mod series;
pub mod unitroot;

pub use level::SignificanceLevel;
pub use series::TimeSeries;
