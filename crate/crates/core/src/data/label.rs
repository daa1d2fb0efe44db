use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target class derived from the final course grade.
///
/// The declaration order `G < F < W` is also the severity order: `W` is the
/// worst outcome and wins every tie-break so at-risk students get flagged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelClass {
    G,
    F,
    W,
}

impl LabelClass {
    pub const ALL: [LabelClass; 3] = [LabelClass::G, LabelClass::F, LabelClass::W];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<LabelClass> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelClass::G => "G",
            LabelClass::F => "F",
            LabelClass::W => "W",
        }
    }

    /// Index of the highest score. Scores within `tol` of the maximum count
    /// as tied, and ties go to the worse class.
    pub fn argmax_worse_on_tie(scores: &[f64], tol: f64) -> usize {
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        scores.iter().rposition(|&s| s >= best - tol).unwrap_or(0)
    }

    /// Class with the most votes, ties toward the worse class.
    pub fn majority(counts: &[usize; 3]) -> LabelClass {
        let mut best = 0;
        for i in 1..3 {
            if counts[i] >= counts[best] {
                best = i;
            }
        }
        LabelClass::ALL[best]
    }
}

impl fmt::Display for LabelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LabelClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "G" => Ok(LabelClass::G),
            "F" => Ok(LabelClass::F),
            "W" => Ok(LabelClass::W),
            other => Err(Error::domain(format!("unknown label `{other}`"))),
        }
    }
}

/// 70-100 is Good, 51-69 Fair, 0-50 Weak.
pub fn derive_label(final_grade: i64) -> Result<LabelClass> {
    match final_grade {
        70..=100 => Ok(LabelClass::G),
        51..=69 => Ok(LabelClass::F),
        0..=50 => Ok(LabelClass::W),
        g => Err(Error::domain(format!("final grade {g} outside 0..=100"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries() {
        assert_eq!(derive_label(85).unwrap(), LabelClass::G);
        assert_eq!(derive_label(70).unwrap(), LabelClass::G);
        assert_eq!(derive_label(100).unwrap(), LabelClass::G);
        assert_eq!(derive_label(69).unwrap(), LabelClass::F);
        assert_eq!(derive_label(51).unwrap(), LabelClass::F);
        assert_eq!(derive_label(50).unwrap(), LabelClass::W);
        assert_eq!(derive_label(0).unwrap(), LabelClass::W);
        assert!(derive_label(-1).is_err());
        assert!(derive_label(101).is_err());
    }

    #[test]
    fn total_and_monotone() {
        let mut prev = derive_label(0).unwrap();
        for g in 1..=100 {
            let cur = derive_label(g).unwrap();
            assert!(cur <= prev, "grade {g} mapped to a worse class");
            prev = cur;
        }
    }

    #[test]
    fn tie_breaks() {
        assert_eq!(LabelClass::argmax_worse_on_tie(&[0.2, 0.3, 0.5], 0.0), 2);
        assert_eq!(LabelClass::argmax_worse_on_tie(&[0.4, 0.4, 0.2], 0.0), 1);
        assert_eq!(LabelClass::majority(&[2, 2, 1]), LabelClass::F);
        assert_eq!(LabelClass::majority(&[3, 0, 0]), LabelClass::G);
    }
}
