//! Words in the free group on two generators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

/// One of `g1`, `g1^-1`, `g2`, `g2^-1`, written `a`, `A`, `b`, `B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    G1,
    G1Inv,
    G2,
    G2Inv,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::G1, Letter::G1Inv, Letter::G2, Letter::G2Inv];

    pub fn inverse(self) -> Self {
        match self {
            Letter::G1 => Letter::G1Inv,
            Letter::G1Inv => Letter::G1,
            Letter::G2 => Letter::G2Inv,
            Letter::G2Inv => Letter::G2,
        }
    }

    /// Position in [`Letter::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::G1 => 'a',
            Letter::G1Inv => 'A',
            Letter::G2 => 'b',
            Letter::G2Inv => 'B',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'a' => Ok(Letter::G1),
            'A' => Ok(Letter::G1Inv),
            'b' => Ok(Letter::G2),
            'B' => Ok(Letter::G2Inv),
            other => Err(Error::ParseWord(other)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Length `l(w)`, counting every letter.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// No adjacent mutually inverse pair.
    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| w[0] != w[1].inverse())
    }

    /// Reduced and additionally first and last letters are not inverse.
    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && match (self.letters.first(), self.letters.last()) {
                (Some(&f), Some(&l)) if self.letters.len() > 1 => f != l.inverse(),
                _ => true,
            }
    }

    /// The unique reduced word freely equal to `self`.
    pub fn free_reduce(&self) -> GroupWord {
        let mut stack: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            if stack.last() == Some(&l.inverse()) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        GroupWord { letters: stack }
    }

    /// Length of the free reduction.
    pub fn reduced_len(&self) -> usize {
        let mut stack: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            if stack.last() == Some(&l.inverse()) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        stack.len()
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// Exact product `w(g1, g2)` with letters multiplied left to right.
    pub fn evaluate(&self, g1: &IntMatrix, g2: &IntMatrix) -> Result<IntMatrix> {
        evaluate_word(self, g1, g2)
    }
}

/// Exact value of `w` at `(g1, g2)`; the empty word maps to the identity.
///
/// Both generators must be unimodular since inverse letters are evaluated
/// exactly.
pub fn evaluate_word(w: &GroupWord, g1: &IntMatrix, g2: &IntMatrix) -> Result<IntMatrix> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim(),
            found: g2.dim(),
        });
    }
    let g1_inv = if w.letters.contains(&Letter::G1Inv) {
        Some(g1.inverse()?)
    } else {
        None
    };
    let g2_inv = if w.letters.contains(&Letter::G2Inv) {
        Some(g2.inverse()?)
    } else {
        None
    };
    let mut acc = IntMatrix::identity(g1.dim());
    for &l in &w.letters {
        let factor = match l {
            Letter::G1 => g1,
            Letter::G2 => g2,
            Letter::G1Inv => g1_inv.as_ref().expect("inverse computed above"),
            Letter::G2Inv => g2_inv.as_ref().expect("inverse computed above"),
        };
        acc = &acc * factor;
    }
    Ok(acc)
}

/// Free reduction; see [`GroupWord::free_reduce`].
pub fn free_reduce(w: &GroupWord) -> GroupWord {
    w.free_reduce()
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for GroupWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(Letter::from_char)
            .collect::<Result<Vec<_>>>()
            .map(GroupWord::new)
    }
}

impl FromIterator<Letter> for GroupWord {
    fn from_iter<T: IntoIterator<Item = Letter>>(iter: T) -> Self {
        GroupWord::new(iter.into_iter().collect())
    }
}

impl Serialize for GroupWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupWord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
