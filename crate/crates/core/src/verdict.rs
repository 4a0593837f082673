//! Three-valued answers for properties of infinite words seen through finite prefixes.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Finite evidence for a `Fails` verdict. Positions are 0-based letter offsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Two factors of equal length whose counts of `letter` differ by at least 2.
    FactorPair {
        u: String,
        u_start: usize,
        v: String,
        v_start: usize,
        letter: char,
    },
    /// More than one left special factor of the same length.
    SpecialFactors { length: usize, factors: Vec<String> },
    /// A factor whose reversal never occurs although it was seen well inside the prefix.
    MissingReversal {
        factor: String,
        reversal: String,
        last_end: usize,
    },
    /// A left special factor that is not a prefix.
    NonPrefixSpecial { factor: String },
    /// A factor occurring exactly once.
    UniqueOccurrence { factor: String, position: usize },
    /// The suffix starting at `start` is smaller: it first differs from the word at `offset`.
    SmallerSuffix { start: usize, offset: usize },
    /// `f^n(w) ≠ w` for every tested `n`; each pair is `(n, first differing position)`.
    NotFixed { mismatches: Vec<(usize, usize)> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails { witness: Witness },
    /// Nothing decisive within the inspected depth.
    Unknown { depth: usize },
}

impl Verdict {
    pub fn fails(witness: Witness) -> Self {
        Verdict::Fails { witness }
    }

    pub fn is_holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn is_fails(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Fails { witness } => Some(witness),
            _ => None,
        }
    }

    /// 0 for Holds, 1 for Fails, 2 for Unknown.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails { .. } => 1,
            Verdict::Unknown { .. } => 2,
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::FactorPair {
                u,
                u_start,
                v,
                v_start,
                letter,
            } => write!(
                f,
                "factors {u}@{u_start} and {v}@{v_start} differ by more than one '{letter}'"
            ),
            Witness::SpecialFactors { length, factors } => {
                write!(f, "{} left special factors of length {length}: {}", factors.len(), factors.join(", "))
            }
            Witness::MissingReversal {
                factor,
                reversal,
                last_end,
            } => write!(
                f,
                "{factor} occurs (last ending at {last_end}) but its reversal {reversal} does not"
            ),
            Witness::NonPrefixSpecial { factor } => {
                write!(f, "left special factor {factor} is not a prefix")
            }
            Witness::UniqueOccurrence { factor, position } => {
                write!(f, "{factor} occurs only once, at {position}")
            }
            Witness::SmallerSuffix { start, offset } => write!(
                f,
                "suffix at {start} is smaller (first difference after {offset} letters)"
            ),
            Witness::NotFixed { mismatches } => {
                write!(f, "not fixed:")?;
                for (n, p) in mismatches {
                    write!(f, " f^{n} differs at {p};")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => write!(f, "Holds"),
            Verdict::Fails { witness } => write!(f, "Fails: {witness}"),
            Verdict::Unknown { depth } => write!(f, "Unknown (depth {depth})"),
        }
    }
}
