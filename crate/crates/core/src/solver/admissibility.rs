use serde::{Deserialize, Serialize};

/// Outcome of the energy-inequality check over all ordered time pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub tolerance: f64,
    /// Largest `(E(tau2) - E(tau1)) / E_ref` over `tau1 < tau2`, where
    /// `E_ref` is the largest ledger entry (or 1 for an all-zero ledger).
    pub max_violation: f64,
    /// Earliest `tau2` whose increase exceeds the tolerance, with the `tau1`
    /// that maximises it (ledger indices).
    pub first_violation: Option<(usize, usize)>,
    pub pass: bool,
}

/// Checks that the energy ledger is non-increasing up to a relative tolerance.
pub fn admissibility_check(ledger: &[f64], tolerance: f64) -> AdmissibilityReport {
    let top = ledger.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let scale = if top > 0.0 { top } else { 1.0 };
    let mut max_violation = 0.0f64;
    let mut first_violation = None;
    let mut min_idx = 0;
    for j in 1..ledger.len() {
        if ledger[j - 1] < ledger[min_idx] {
            min_idx = j - 1;
        }
        let v = (ledger[j] - ledger[min_idx]) / scale;
        max_violation = max_violation.max(v);
        if first_violation.is_none() && v > tolerance {
            first_violation = Some((min_idx, j));
        }
    }
    AdmissibilityReport {
        tolerance,
        max_violation,
        first_violation,
        pass: first_violation.is_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_decreasing_ledgers_pass() {
        let r = admissibility_check(&[0.0; 5], 1e-7);
        assert!(r.pass && r.max_violation == 0.0);
        assert!(admissibility_check(&[3.0, 2.0, 2.0, 1.0], 0.0).pass);
    }

    #[test]
    fn reports_first_violating_pair() {
        let r = admissibility_check(&[1.0, 0.9, 0.95, 1.2, 0.5], 1e-7);
        assert!(!r.pass);
        assert_eq!(r.first_violation, Some((1, 2)));
        assert!((r.max_violation - 0.3 / 1.2).abs() < 1e-12);
    }
}
