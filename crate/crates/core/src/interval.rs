//! Probability intervals returned by the reasoners.

use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntervalError {
    #[error("interval bound {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("interval lower bound {lower} exceeds upper bound {upper}")]
    Inverted { lower: f64, upper: f64 },
}

/// A closed subinterval of `[0, 1]`, or `Vacuous` when the body of the query
/// is empty in every model and so every interval is entailed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbInterval {
    Bounds { lower: f64, upper: f64 },
    Vacuous,
}

impl ProbInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self, IntervalError> {
        for b in [lower, upper] {
            if !(0.0..=1.0).contains(&b) {
                return Err(IntervalError::OutOfRange(b));
            }
        }
        if lower > upper {
            return Err(IntervalError::Inverted { lower, upper });
        }
        Ok(ProbInterval::Bounds { lower, upper })
    }

    /// `[p, p]`.
    pub fn point(p: f64) -> Result<Self, IntervalError> {
        Self::new(p, p)
    }

    /// The whole unit interval.
    pub fn unit() -> Self {
        ProbInterval::Bounds { lower: 0.0, upper: 1.0 }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            ProbInterval::Bounds { lower, upper } => Some((lower, upper)),
            ProbInterval::Vacuous => None,
        }
    }

    /// Bounds with `Vacuous` read as `[0, 1]`.
    pub fn bounds_or_unit(&self) -> (f64, f64) {
        self.bounds().unwrap_or((0.0, 1.0))
    }

    pub fn is_vacuous(&self) -> bool {
        matches!(self, ProbInterval::Vacuous)
    }

    /// True if `other ⊆ self` up to `slack` on each side. A vacuous `self`
    /// contains everything; a vacuous `other` is only inside a vacuous `self`.
    pub fn contains(&self, other: &ProbInterval, slack: f64) -> bool {
        match (self.bounds(), other.bounds()) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((l, u)), Some((ol, ou))) => ol >= l - slack && ou <= u + slack,
        }
    }

    pub fn contains_value(&self, p: f64, slack: f64) -> bool {
        match self.bounds() {
            None => true,
            Some((l, u)) => p >= l - slack && p <= u + slack,
        }
    }
}

impl fmt::Display for ProbInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbInterval::Bounds { lower, upper } => write!(f, "{lower} {upper}"),
            ProbInterval::Vacuous => f.write_str("VACUOUS"),
        }
    }
}
