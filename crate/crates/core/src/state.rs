use core::fmt;
use core::str::FromStr;

use crate::Error;

pub const N_STATES: usize = 5;

/// The five conflict states of a cell-year.
///
/// Discriminants double as matrix indices; `NC` is always index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum StateSymbol {
    /// No conflict.
    NC = 0,
    /// Clustered, low intensity.
    CL = 1,
    /// Clustered, high intensity.
    CH = 2,
    /// Dispersed, low intensity.
    DL = 3,
    /// Dispersed, high intensity.
    DH = 4,
}

pub const VIOLENT_STATES: [StateSymbol; 4] = [
    StateSymbol::CL,
    StateSymbol::CH,
    StateSymbol::DL,
    StateSymbol::DH,
];

impl StateSymbol {
    pub const ALL: [StateSymbol; N_STATES] = [
        StateSymbol::NC,
        StateSymbol::CL,
        StateSymbol::CH,
        StateSymbol::DL,
        StateSymbol::DH,
    ];

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    #[inline]
    pub const fn is_violent(self) -> bool {
        !matches!(self, StateSymbol::NC)
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            StateSymbol::NC => "NC",
            StateSymbol::CL => "CL",
            StateSymbol::CH => "CH",
            StateSymbol::DL => "DL",
            StateSymbol::DH => "DH",
        }
    }

    /// Builds the symbol from its two classification axes.
    pub const fn from_axes(clustered: bool, high: bool) -> Self {
        match (clustered, high) {
            (true, true) => StateSymbol::CH,
            (true, false) => StateSymbol::CL,
            (false, true) => StateSymbol::DH,
            (false, false) => StateSymbol::DL,
        }
    }
}

impl fmt::Display for StateSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateSymbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "NC" => Ok(StateSymbol::NC),
            "CL" => Ok(StateSymbol::CL),
            "CH" => Ok(StateSymbol::CH),
            "DL" => Ok(StateSymbol::DL),
            "DH" => Ok(StateSymbol::DH),
            other => Err(Error::InvalidArgument(alloc::format!(
                "unknown state symbol {other:?}"
            ))),
        }
    }
}
