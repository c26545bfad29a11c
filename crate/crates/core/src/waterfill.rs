//! Water-filling over a set of floors: allocation `max(level - floor_i, 0)` with a fixed total.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct WaterFilling {
    pub allocation: Vec<f64>,
    /// The water level `1/mu`.
    pub level: f64,
}

impl WaterFilling {
    /// The water-level parameter `mu = 1 / level`.
    pub fn mu(&self) -> f64 {
        1.0 / self.level
    }
}

/// Finds the level by bisection, then snaps it to the exact value for the active set.
///
/// Infinite floors (zero-gain channels) never receive power.
pub fn fill(floors: &[f64], budget: f64) -> Result<WaterFilling> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidParameter { name: "budget", reason: format!("{budget} is not a positive power") });
    }
    let lowest = floors.iter().copied().filter(|f| f.is_finite()).fold(f64::INFINITY, f64::min);
    if !lowest.is_finite() {
        return Err(Error::Degenerate("every gain is zero, nothing to fill"));
    }
    let poured = |level: f64| -> f64 { floors.iter().map(|&f| (level - f).max(0.0)).sum() };

    let (mut lo, mut hi) = (lowest, lowest + budget);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if poured(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if (poured(hi) - budget).abs() <= 1e-12 * budget {
            break;
        }
    }
    let mut level = hi;

    let active: Vec<f64> = floors.iter().copied().filter(|&f| f < level).collect();
    if !active.is_empty() {
        let exact = (budget + active.iter().sum::<f64>()) / active.len() as f64;
        let consistent = floors.iter().all(|&f| (f < level) == (f < exact));
        if consistent {
            level = exact;
        }
    }
    let allocation = floors.iter().map(|&f| (level - f).max(0.0)).collect();
    Ok(WaterFilling { allocation, level })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_floors_split_evenly() {
        let w = fill(&[1.0, 1.0, 1.0], 3.0).unwrap();
        assert!(w.allocation.iter().all(|&p| (p - 1.0).abs() < 1e-12));
        assert!((w.level - 2.0).abs() < 1e-12);
    }

    #[test]
    fn high_floor_gets_nothing() {
        let w = fill(&[0.1, 100.0, f64::INFINITY], 1.0).unwrap();
        assert!((w.allocation[0] - 1.0).abs() < 1e-12);
        assert_eq!(w.allocation[1], 0.0);
        assert_eq!(w.allocation[2], 0.0);
    }

    #[test]
    fn budget_is_met() {
        let floors = [0.3, 0.01, 2.5, 0.7, 0.05];
        for budget in [1e-3, 0.5, 1.0, 17.0] {
            let w = fill(&floors, budget).unwrap();
            let total: f64 = w.allocation.iter().sum();
            assert!((total - budget).abs() <= 1e-9 * budget);
        }
    }

    #[test]
    fn rejects_degenerate() {
        assert!(fill(&[f64::INFINITY], 1.0).is_err());
        assert!(fill(&[1.0], 0.0).is_err());
        assert!(fill(&[], 1.0).is_err());
    }
}
