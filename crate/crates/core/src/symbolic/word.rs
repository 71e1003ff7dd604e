use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::ShiftModel;

/// A finite word over the alphabet `0..k`. The empty word names the whole space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Lexicographically least rotation.
    pub fn least_rotation(&self) -> Word {
        let n = self.0.len();
        (0..n.max(1))
            .map(|r| {
                let mut v = self.0[r.min(n)..].to_vec();
                v.extend_from_slice(&self.0[..r.min(n)]);
                v
            })
            .min()
            .map(Word)
            .unwrap_or_default()
    }

    /// True when the word is not a proper power of a shorter word.
    pub fn is_primitive(&self) -> bool {
        let n = self.0.len();
        n > 0
            && (1..n)
                .filter(|p| n % p == 0)
                .all(|p| (0..n).any(|i| self.0[i] != self.0[i % p]))
    }
}

impl From<Vec<usize>> for Word {
    fn from(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }
}

impl From<&[usize]> for Word {
    fn from(symbols: &[usize]) -> Self {
        Word(symbols.to_vec())
    }
}

fn symbol_char(s: usize) -> char {
    std::char::from_digit(s as u32, 36).expect("alphabet is limited to 36 symbols")
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{}", symbol_char(s))?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Symbols are single base-36 digits: `0`-`9`, then `a`-`z`.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                c.to_digit(36)
                    .map(|d| d as usize)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad symbol {c:?} in word {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An eventually periodic point `prefix · period^∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point {
    prefix: Word,
    period: Word,
}

impl Point {
    pub fn new(model: &ShiftModel, prefix: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidArgument("period must be non-empty".into()));
        }
        let mut probe = prefix.symbols().to_vec();
        probe.extend_from_slice(period.symbols());
        probe.extend_from_slice(period.symbols());
        model.check_admissible(&probe)?;
        Ok(Point { prefix, period })
    }

    pub fn periodic(model: &ShiftModel, period: Word) -> Result<Self> {
        Point::new(model, Word::empty(), period)
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn period(&self) -> &Word {
        &self.period
    }

    pub fn symbol(&self, i: usize) -> usize {
        let p = self.prefix.len();
        if i < p {
            self.prefix.0[i]
        } else {
            self.period.0[(i - p) % self.period.len()]
        }
    }

    /// The first `depth` symbols.
    pub fn cylinder(&self, depth: usize) -> Word {
        Word((0..depth).map(|i| self.symbol(i)).collect())
    }

    /// The image under the shift.
    pub fn shift(&self) -> Point {
        if self.prefix.is_empty() {
            let mut p = self.period.0[1..].to_vec();
            p.push(self.period.0[0]);
            Point {
                prefix: Word::empty(),
                period: Word(p),
            }
        } else {
            Point {
                prefix: Word(self.prefix.0[1..].to_vec()),
                period: self.period.clone(),
            }
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})^inf", self.prefix, self.period)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let w: Word = "0110".parse().unwrap();
        assert_eq!(w.symbols(), &[0, 1, 1, 0]);
        assert_eq!(w.to_string(), "0110");
        assert!("01-".parse::<Word>().is_err());
    }

    #[test]
    fn rotations_and_primitivity() {
        let w: Word = "101".parse().unwrap();
        assert_eq!(w.least_rotation().to_string(), "011");
        assert!(w.is_primitive());
        assert!(!"0101".parse::<Word>().unwrap().is_primitive());
    }

    #[test]
    fn unrolled_point() {
        let m = ShiftModel::full_shift(2).unwrap();
        let p = Point::periodic(&m, "10".parse().unwrap()).unwrap();
        assert_eq!(p.cylinder(3).to_string(), "101");
        assert_eq!(p.shift().cylinder(3).to_string(), "010");
        let q = Point::new(&m, "1".parse().unwrap(), "0".parse().unwrap()).unwrap();
        assert_eq!(q.cylinder(4).to_string(), "1000");
        assert!(Point::periodic(&ShiftModel::golden_mean(), "11".parse().unwrap()).is_err());
    }
}
