use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n + m` accepted without an explicit override. The angular
/// quadrature is two dimensional for every `(n, m)`, but the elliptic
/// stencil symmetrization and test budgets were tuned up to this value.
pub const DEFAULT_COST_CAP: u32 = 4;

/// The rotation multiplicities `(n, m)`; the ambient dimension is `n + m + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSymmetry")]
pub struct SymmetryConfig {
    n: u32,
    m: u32,
}

#[derive(Deserialize)]
struct RawSymmetry {
    n: i64,
    m: i64,
}

impl TryFrom<RawSymmetry> for SymmetryConfig {
    type Error = Error;
    fn try_from(raw: RawSymmetry) -> Result<Self> {
        SymmetryConfig::new(raw.n, raw.m)
    }
}

impl SymmetryConfig {
    pub fn new(n: i64, m: i64) -> Result<Self> {
        if n < 1 || m < 1 || n > u32::MAX as i64 || m > u32::MAX as i64 {
            return Err(Error::BadMultiplicity { n, m });
        }
        Ok(SymmetryConfig {
            n: n as u32,
            m: m as u32,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn d(&self) -> u32 {
        self.n + self.m + 2
    }

    pub fn check_cost(&self, cap: u32) -> Result<()> {
        let sum = self.n + self.m;
        if sum > cap {
            return Err(Error::CostCap { sum, cap });
        }
        Ok(())
    }

    /// The invariant density `r^n s^m`.
    #[inline]
    pub fn weight(&self, r: f64, s: f64) -> f64 {
        r.powi(self.n as i32) * s.powi(self.m as i32)
    }
}

/// A point of the closed quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantPoint {
    pub r: f64,
    pub s: f64,
}

impl QuadrantPoint {
    pub fn new(r: f64, s: f64) -> Self {
        debug_assert!(r >= 0.0 && s >= 0.0, "point outside the quadrant");
        QuadrantPoint { r, s }
    }

    pub fn dist(&self, other: &QuadrantPoint) -> f64 {
        (self.r - other.r).hypot(self.s - other.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_and_errors() {
        let c = SymmetryConfig::new(1, 2).unwrap();
        assert_eq!(c.d(), 5);
        assert!(matches!(
            SymmetryConfig::new(0, 1),
            Err(Error::BadMultiplicity { n: 0, m: 1 })
        ));
        assert!(SymmetryConfig::new(2, -1).is_err());
        assert!(SymmetryConfig::new(3, 2).unwrap().check_cost(4).is_err());
        assert!(SymmetryConfig::new(3, 2).unwrap().check_cost(5).is_ok());
    }

    #[test]
    fn deserialize_validates() {
        let c: SymmetryConfig = serde_json::from_str(r#"{"n":2,"m":1}"#).unwrap();
        assert_eq!((c.n(), c.m()), (2, 1));
        assert!(serde_json::from_str::<SymmetryConfig>(r#"{"n":0,"m":1}"#).is_err());
    }
}
