use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The three conventional test sizes the tables support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(try_from = "f64", into = "f64")]
pub enum SignificanceLevel {
    Ten,
    #[default]
    Five,
    One,
}

impl SignificanceLevel {
    pub const ALL: [SignificanceLevel; 3] = [Self::Ten, Self::Five, Self::One];

    pub fn value(self) -> f64 {
        match self {
            Self::Ten => 0.10,
            Self::Five => 0.05,
            Self::One => 0.01,
        }
    }

    /// True when `p` rejects the null at this level.
    pub fn rejects(self, p: f64) -> bool {
        p < self.value()
    }
}

impl TryFrom<f64> for SignificanceLevel {
    type Error = String;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::ALL
            .into_iter()
            .find(|l| (l.value() - v).abs() < 1e-12)
            .ok_or_else(|| format!("unsupported significance level {v}; use 0.10, 0.05 or 0.01"))
    }
}

impl From<SignificanceLevel> for f64 {
    fn from(l: SignificanceLevel) -> f64 {
        l.value()
    }
}

impl FromStr for SignificanceLevel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| format!("unparseable significance level `{s}`"))?;
        Self::try_from(v)
    }
}

impl fmt::Display for SignificanceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.value())
    }
}
