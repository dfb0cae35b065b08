//! Observed search counts and the prior/search-procedure scenarios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CountsError;

/// The observed triple from two independent searches of the same set.
///
/// `n_a` and `n_b` are the numbers of items found by searchers A and B,
/// `n_ab` the number found by both. Construction enforces
/// `n_ab <= min(n_a, n_b)`, so the derived counts below are never negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCounts", into = "RawCounts")]
pub struct SearchCounts {
    n_a: u64,
    n_b: u64,
    n_ab: u64,
}

#[derive(Serialize, Deserialize)]
struct RawCounts {
    n_a: u64,
    n_b: u64,
    n_ab: u64,
}

impl TryFrom<RawCounts> for SearchCounts {
    type Error = CountsError;

    fn try_from(raw: RawCounts) -> Result<Self, Self::Error> {
        SearchCounts::new(raw.n_a, raw.n_b, raw.n_ab)
    }
}

impl From<SearchCounts> for RawCounts {
    fn from(c: SearchCounts) -> Self {
        RawCounts {
            n_a: c.n_a,
            n_b: c.n_b,
            n_ab: c.n_ab,
        }
    }
}

impl SearchCounts {
    pub fn new(n_a: u64, n_b: u64, n_ab: u64) -> Result<Self, CountsError> {
        if n_ab > n_a.min(n_b) {
            return Err(CountsError::OverlapExceedsFound { n_a, n_b, n_ab });
        }
        // n_a + n_b must stay representable; counts this large are not meaningful anyway.
        if n_a.checked_add(n_b).is_none() || n_a.max(n_b) > MAX_COUNT {
            return Err(CountsError::TooLarge { limit: MAX_COUNT });
        }
        Ok(SearchCounts { n_a, n_b, n_ab })
    }

    pub fn n_a(&self) -> u64 {
        self.n_a
    }

    pub fn n_b(&self) -> u64 {
        self.n_b
    }

    pub fn n_ab(&self) -> u64 {
        self.n_ab
    }

    /// Items found only by A.
    pub fn x_a(&self) -> u64 {
        self.n_a - self.n_ab
    }

    /// Items found only by B.
    pub fn x_b(&self) -> u64 {
        self.n_b - self.n_ab
    }

    /// Distinct items found by either searcher.
    pub fn n_f(&self) -> u64 {
        self.n_a + self.n_b - self.n_ab
    }

    /// Adds `s` to all three counts, leaving `x_a` and `x_b` unchanged.
    pub fn shifted(&self, s: u32) -> SearchCounts {
        let s = u64::from(s);
        SearchCounts {
            n_a: self.n_a + s,
            n_b: self.n_b + s,
            n_ab: self.n_ab + s,
        }
    }

    /// The same counts with the two searchers' roles exchanged.
    pub fn swapped(&self) -> SearchCounts {
        SearchCounts {
            n_a: self.n_b,
            n_b: self.n_a,
            n_ab: self.n_ab,
        }
    }
}

impl fmt::Display for SearchCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n_a={}, n_b={}, n_ab={})", self.n_a, self.n_b, self.n_ab)
    }
}

/// Largest accepted individual count. Keeps every intermediate product of a
/// handful of counts comfortably inside `f64` range.
pub const MAX_COUNT: u64 = 1 << 40;

/// Which posterior family applies to the observed counts.
///
/// Every family in the model reduces to the fixed-sample posterior after
/// replacing `(n_a, n_b, n_ab)` by `(n_a + s, n_b + s, n_ab + s)`; the
/// integer `s` is the prior shift returned by [`Scenario::shift`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Each searcher stops after a predetermined number of finds; flat prior
    /// on `N`. Shift 0.
    FixedSample,
    /// One searcher finds a predetermined number, the other searches
    /// everything; flat prior. Shift 1.
    PartialPlusComprehensive,
    /// Both search everything with prior `P(N) = k (N+1)/(N+2)`. Shift 2.
    FullSearchAlmostConstantPrior,
    /// Both search everything with the normalisable prior
    /// `P(N) = k (N+1)/((N+2)(N+3)(N+4))`. Shift 4.
    FullSearchNormalisablePrior,
    /// Any other non-negative shift.
    Shift(u32),
}

impl Scenario {
    pub const NAMED: [Scenario; 4] = [
        Scenario::FixedSample,
        Scenario::PartialPlusComprehensive,
        Scenario::FullSearchAlmostConstantPrior,
        Scenario::FullSearchNormalisablePrior,
    ];

    /// Canonical scenario for a shift: one of the named presets when it
    /// matches, otherwise [`Scenario::Shift`].
    pub fn from_shift(s: u32) -> Scenario {
        match s {
            0 => Scenario::FixedSample,
            1 => Scenario::PartialPlusComprehensive,
            2 => Scenario::FullSearchAlmostConstantPrior,
            4 => Scenario::FullSearchNormalisablePrior,
            other => Scenario::Shift(other),
        }
    }

    pub fn shift(&self) -> u32 {
        match self {
            Scenario::FixedSample => 0,
            Scenario::PartialPlusComprehensive => 1,
            Scenario::FullSearchAlmostConstantPrior => 2,
            Scenario::FullSearchNormalisablePrior => 4,
            Scenario::Shift(s) => *s,
        }
    }

    /// Returns the preset form, so `Shift(2)` and
    /// `FullSearchAlmostConstantPrior` compare equal after normalising.
    pub fn normalized(&self) -> Scenario {
        Scenario::from_shift(self.shift())
    }

    pub fn label(&self) -> &'static str {
        match self.normalized() {
            Scenario::FixedSample => "fixed-sample",
            Scenario::PartialPlusComprehensive => "partial+comprehensive",
            Scenario::FullSearchAlmostConstantPrior => "full-search, prior k(N+1)/(N+2)",
            Scenario::FullSearchNormalisablePrior => "full-search, prior k(N+1)/((N+2)(N+3)(N+4))",
            Scenario::Shift(_) => "custom shift",
        }
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::FullSearchAlmostConstantPrior
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.normalized() {
            Scenario::FixedSample => f.write_str("fixed"),
            Scenario::PartialPlusComprehensive => f.write_str("partial"),
            Scenario::FullSearchAlmostConstantPrior => f.write_str("full"),
            Scenario::FullSearchNormalisablePrior => f.write_str("proper-prior"),
            Scenario::Shift(s) => write!(f, "shift:{s}"),
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    /// Accepts `fixed`, `partial`, `full`, `proper-prior` and `shift:<s>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(Scenario::FixedSample),
            "partial" => Ok(Scenario::PartialPlusComprehensive),
            "full" => Ok(Scenario::FullSearchAlmostConstantPrior),
            "proper-prior" => Ok(Scenario::FullSearchNormalisablePrior),
            other => match other.strip_prefix("shift:") {
                Some(n) => n
                    .parse::<u32>()
                    .map(Scenario::from_shift)
                    .map_err(|_| format!("invalid shift in scenario '{s}'")),
                None => Err(format!(
                    "unknown scenario '{s}' (expected fixed, full, partial, proper-prior or shift:<s>)"
                )),
            },
        }
    }
}
