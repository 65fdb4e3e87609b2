use std::cmp::Ordering;
use std::fmt;

/// Gradient level. Only values reachable by repeated halving from 1 exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Zero,
    /// `2^-j` with `j >= 1`.
    Fraction(u32),
    One,
}

impl Level {
    pub fn halved(self) -> Level {
        match self {
            Level::Zero => Level::Zero,
            Level::One => Level::Fraction(1),
            Level::Fraction(j) => Level::Fraction(j + 1),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Level::Zero => 0.0,
            Level::One => 1.0,
            Level::Fraction(j) => 0.5f64.powi(j as i32),
        }
    }

    pub fn is_zero(self) -> bool {
        self == Level::Zero
    }

    /// Halvings below 1, or `None` for zero.
    pub fn depth(self) -> Option<u32> {
        match self {
            Level::Zero => None,
            Level::One => Some(0),
            Level::Fraction(j) => Some(j),
        }
    }
}

impl Ord for Level {
    fn cmp(&self, other: &Self) -> Ordering {
        fn rank(l: &Level) -> (u8, i64) {
            match l {
                Level::Zero => (0, 0),
                Level::Fraction(j) => (1, -i64::from(*j)),
                Level::One => (2, 0),
            }
        }
        rank(self).cmp(&rank(other))
    }
}

impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Zero => f.write_str("0"),
            Level::One => f.write_str("1"),
            Level::Fraction(j) => write!(f, "2^-{j}"),
        }
    }
}
