//! Energies in ℝ ∪ {+∞}.
//!
//! Hard-core overlaps are carried as an explicit variant so that an infinite
//! energy never enters floating point arithmetic as a sentinel value.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Energy {
    Finite(f64),
    Infinite,
}

impl Energy {
    pub const ZERO: Energy = Energy::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Energy::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Energy::Finite(e) => Some(e),
            Energy::Infinite => None,
        }
    }

    /// Boltzmann factor `exp(-beta * E)`; exactly zero for `+∞`.
    pub fn boltzmann(self, beta: f64) -> f64 {
        match self {
            Energy::Finite(e) => (-beta * e).exp(),
            Energy::Infinite => 0.0,
        }
    }

    /// Difference `self - other`. `None` when both are infinite or when the
    /// result would be `-∞` (an overlapping state being left).
    pub fn minus(self, other: Energy) -> Option<Energy> {
        match (self, other) {
            (Energy::Finite(a), Energy::Finite(b)) => Some(Energy::Finite(a - b)),
            (Energy::Infinite, Energy::Finite(_)) => Some(Energy::Infinite),
            _ => None,
        }
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        match (self, rhs) {
            (Energy::Finite(a), Energy::Finite(b)) => Energy::Finite(a + b),
            _ => Energy::Infinite,
        }
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        *self = *self + rhs;
    }
}

impl Neg for Energy {
    type Output = Option<Energy>;
    fn neg(self) -> Option<Energy> {
        self.finite().map(|e| Energy::Finite(-e))
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        let mut total = 0.0;
        for e in iter {
            match e {
                Energy::Finite(v) => total += v,
                Energy::Infinite => return Energy::Infinite,
            }
        }
        Energy::Finite(total)
    }
}

impl From<f64> for Energy {
    fn from(v: f64) -> Self {
        Energy::Finite(v)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Energy::Finite(e) => write!(f, "{e}"),
            Energy::Infinite => write!(f, "+inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_sums() {
        let total: Energy = [Energy::Finite(1.0), Energy::Infinite, Energy::Finite(-3.0)]
            .into_iter()
            .sum();
        assert_eq!(total, Energy::Infinite);
        assert_eq!(Energy::Finite(1.0) + Energy::Finite(2.0), Energy::Finite(3.0));
    }

    #[test]
    fn boltzmann_of_infinity_is_zero() {
        assert_eq!(Energy::Infinite.boltzmann(1.0), 0.0);
        assert!((Energy::Finite(1.0).boltzmann(2.0) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn differences() {
        assert_eq!(Energy::Infinite.minus(Energy::Finite(2.0)), Some(Energy::Infinite));
        assert_eq!(Energy::Finite(2.0).minus(Energy::Infinite), None);
        assert_eq!(Energy::Finite(2.0).minus(Energy::Finite(0.5)), Some(Energy::Finite(1.5)));
    }
}
