//! Score scales and conversions.
//!
//! Three scales appear at module boundaries:
//!
//! * [`Scale::Unit`] — probabilities and normalised scores in `[0, 1]`.
//! * [`Scale::ZeroToTen`] — human assertiveness ratings and scorer raw output.
//! * [`Scale::ZeroToHundred`] — elicited confidence scores.
//!
//! All cross-scale traffic goes through [`Scale::to_unit`] / [`Scale::from_unit`]
//! so the conversion (a plain division) lives in exactly one place.

use serde::{Deserialize, Serialize};

/// The numeric range a score is expressed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// `[0, 1]`
    Unit,
    /// `[0, 10]`
    ZeroToTen,
    /// `[0, 100]`
    ZeroToHundred,
}

impl Scale {
    /// Upper bound of the scale; the lower bound is always zero.
    pub fn max(self) -> f64 {
        match self {
            Scale::Unit => 1.0,
            Scale::ZeroToTen => 10.0,
            Scale::ZeroToHundred => 100.0,
        }
    }

    /// Whether `value` lies inside the scale (inclusive on both ends).
    pub fn contains(self, value: f64) -> bool {
        value.is_finite() && (0.0..=self.max()).contains(&value)
    }

    /// Clamp `value` into the scale's range.
    pub fn clamp(self, value: f64) -> f64 {
        value.clamp(0.0, self.max())
    }

    /// Map a value on this scale to `[0, 1]`.
    pub fn to_unit(self, value: f64) -> f64 {
        value / self.max()
    }

    /// Map a `[0, 1]` value onto this scale.
    pub fn from_unit(self, unit: f64) -> f64 {
        unit * self.max()
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scale::Unit => write!(f, "unit"),
            Scale::ZeroToTen => write!(f, "zero_to_ten"),
            Scale::ZeroToHundred => write!(f, "zero_to_hundred"),
        }
    }
}
