use std::ops::{BitAnd, BitOr, Not};

use serde::Serialize;

/// Kleene three-valued truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TriBool {
    True,
    False,
    Unknown,
}

impl TriBool {
    pub const ALL: [TriBool; 3] = [TriBool::True, TriBool::False, TriBool::Unknown];

    pub fn is_true(self) -> bool {
        self == TriBool::True
    }
}

impl From<bool> for TriBool {
    fn from(b: bool) -> Self {
        if b {
            TriBool::True
        } else {
            TriBool::False
        }
    }
}

impl From<Option<bool>> for TriBool {
    fn from(b: Option<bool>) -> Self {
        b.map_or(TriBool::Unknown, TriBool::from)
    }
}

impl BitAnd for TriBool {
    type Output = TriBool;

    fn bitand(self, rhs: TriBool) -> TriBool {
        use TriBool::*;
        match (self, rhs) {
            (False, _) | (_, False) => False,
            (True, True) => True,
            _ => Unknown,
        }
    }
}

impl BitOr for TriBool {
    type Output = TriBool;

    fn bitor(self, rhs: TriBool) -> TriBool {
        use TriBool::*;
        match (self, rhs) {
            (True, _) | (_, True) => True,
            (False, False) => False,
            _ => Unknown,
        }
    }
}

impl Not for TriBool {
    type Output = TriBool;

    fn not(self) -> TriBool {
        match self {
            TriBool::True => TriBool::False,
            TriBool::False => TriBool::True,
            TriBool::Unknown => TriBool::Unknown,
        }
    }
}
