//! Repeat-until-success bookkeeping for a computation of `N` probabilistic
//! gates restarted up to `M` times.
//!
//! A single run of `N` gates succeeds with probability `P0^N`, so all `M`
//! runs fail with probability `(1 − P0^N)^M`. Everything is evaluated in the
//! log domain since `P0^N` underflows quickly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub p0: f64,
    pub n_gates: u64,
    pub m_runs: u64,
    pub target_success: f64,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        check_p0(self.p0)?;
        if self.n_gates == 0 {
            return Err(Error::Parameter { name: "n_gates", reason: "must be at least 1".into() });
        }
        if self.m_runs == 0 {
            return Err(Error::Parameter { name: "m_runs", reason: "must be at least 1".into() });
        }
        check_target(self.target_success)
    }
}

fn check_p0(p0: f64) -> Result<()> {
    if !(p0 > 0.0 && p0 <= 1.0) {
        return Err(Error::Parameter { name: "p0", reason: format!("must lie in (0, 1], got {p0}") });
    }
    Ok(())
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Parameter { name: "target_success", reason: format!("must lie in (0, 1), got {target}") });
    }
    Ok(())
}

/// `ln(1 − P0^N)`; `-inf` when `P0 = 1`.
fn ln_single_failure(p0: f64, n_gates: u64) -> f64 {
    let ln_success = n_gates as f64 * p0.ln();
    let success = ln_success.exp();
    if success < 0.5 {
        (-success).ln_1p()
    } else {
        (-ln_success.exp_m1()).ln()
    }
}

/// Beyond this the repeat count is not representable exactly in an `f64`.
const MAX_REPEATS: f64 = 9.007_199_254_740_992e15;

/// `(1 − P0^N)^M`.
pub fn p_no_result(p0: f64, n_gates: u64, m_runs: u64) -> Result<f64> {
    check_p0(p0)?;
    if m_runs == 0 {
        return Ok(1.0);
    }
    let l = ln_single_failure(p0, n_gates);
    Ok((m_runs as f64 * l).exp())
}

/// Smallest `M` with `(1 − P0^N)^M ≤ 1 − target`.
pub fn min_repeats(p0: f64, n_gates: u64, target_success: f64) -> Result<u64> {
    check_p0(p0)?;
    check_target(target_success)?;
    let l = ln_single_failure(p0, n_gates);
    if l == f64::NEG_INFINITY {
        return Ok(1);
    }
    let bound = (1.0 - target_success).ln();
    if l == 0.0 || bound / l > MAX_REPEATS {
        return Err(Error::Infeasible { p0, n_gates });
    }
    let mut m = (bound / l).ceil().max(1.0) as u64;
    // the ceiling may be off by one from rounding in the ratio
    while m > 1 && (m - 1) as f64 * l <= bound {
        m -= 1;
    }
    while m as f64 * l > bound {
        m += 1;
    }
    Ok(m)
}

/// Relative error of `exp(−M P0^N)` as an approximation of `(1 − P0^N)^M`.
pub fn exponential_approx_error(p0: f64, n_gates: u64, m_runs: u64) -> Result<f64> {
    check_p0(p0)?;
    if m_runs == 0 {
        return Ok(0.0);
    }
    let ln_success = n_gates as f64 * p0.ln();
    let ln_exact = m_runs as f64 * ln_single_failure(p0, n_gates);
    let ln_approx = -(m_runs as f64) * ln_success.exp();
    if ln_exact == f64::NEG_INFINITY {
        return Ok(if ln_approx.exp() == 0.0 { 0.0 } else { f64::INFINITY });
    }
    // |e^a − e^b| / e^b = |e^(a−b) − 1|
    Ok((ln_approx - ln_exact).exp_m1().abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub p0: f64,
    pub n_gates: u64,
    pub m_runs: u64,
    pub p_no_result: f64,
    pub success: f64,
    pub exponential_approx: f64,
    pub relative_error: f64,
    pub min_repeats: Option<u64>,
}

/// One row per `(p0, N, M)` combination, in the order given.
pub fn campaign_table(p0s: &[f64], ns: &[u64], ms: &[u64], target_success: f64) -> Result<Vec<CampaignRow>> {
    let mut rows = Vec::new();
    for &p0 in p0s {
        for &n in ns {
            let min_m = match min_repeats(p0, n, target_success) {
                Ok(m) => Some(m),
                Err(Error::Infeasible { .. }) => None,
                Err(e) => return Err(e),
            };
            for &m in ms {
                let p = p_no_result(p0, n, m)?;
                let approx = (-(m as f64) * (n as f64 * p0.ln()).exp()).exp();
                rows.push(CampaignRow {
                    p0,
                    n_gates: n,
                    m_runs: m,
                    p_no_result: p,
                    success: 1.0 - p,
                    exponential_approx: approx,
                    relative_error: exponential_approx_error(p0, n, m)?,
                    min_repeats: min_m,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct(p0: f64, n: u64, m: u64) -> f64 {
        (1.0 - p0.powi(n as i32)).powi(m as i32)
    }

    #[test]
    fn worked_example() {
        let p = p_no_result(0.95, 50, 50).unwrap();
        assert!((p - direct(0.95, 50, 50)).abs() < 1e-15);
        assert!((0.015..=0.020).contains(&p));
        assert!(1.0 - p > 0.98);
    }

    #[test]
    fn trivial_values() {
        assert_eq!(p_no_result(1.0, 7, 1).unwrap(), 0.0);
        assert!((p_no_result(0.5, 1, 1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(p_no_result(0.5, 3, 0).unwrap(), 1.0);
        assert_eq!(min_repeats(1.0, 1000, 0.999).unwrap(), 1);
        assert!(p_no_result(0.0, 1, 1).is_err());
        assert!(p_no_result(1.1, 1, 1).is_err());
        assert!(min_repeats(0.9, 1, 1.0).is_err());
    }

    #[test]
    fn underflow_is_handled() {
        // 0.5^2000 underflows; the result is 1 but finite
        assert_eq!(p_no_result(0.5, 2000, 10).unwrap(), 1.0);
        assert!(matches!(min_repeats(0.5, 2000, 0.5), Err(Error::Infeasible { .. })));
        // large N with p0 close to 1 stays accurate
        let p = p_no_result(1.0 - 1e-9, 1_000_000, 3).unwrap();
        let q = 1.0 - (-1e-3f64).exp();
        assert!((p / q.powi(3) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn min_repeats_matches_scan() {
        for &(p0, n, target) in &[(0.95, 50, 0.98), (0.9, 10, 0.99), (0.73, 5, 0.9), (0.99, 1, 0.5)] {
            let m = min_repeats(p0, n, target).unwrap();
            let scan = (1..10_000u64).find(|&k| direct(p0, n, k) <= 1.0 - target).unwrap();
            assert_eq!(m, scan, "{p0} {n} {target}");
        }
        assert!(min_repeats(0.95, 50, 0.98).unwrap() <= 50);
    }

    #[test]
    fn exponential_approximation() {
        assert_eq!(exponential_approx_error(0.95, 50, 0).unwrap(), 0.0);
        let e = exponential_approx_error(0.95, 50, 50).unwrap();
        let exact = direct(0.95, 50, 50);
        let approx = (-50.0 * 0.95f64.powi(50)).exp();
        assert!((e - (exact - approx).abs() / exact).abs() < 1e-12);
        // with M·P0^N held at 1 the approximation becomes exact
        let errs: Vec<f64> = [10u64, 40, 160, 640]
            .iter()
            .map(|&n| {
                let m = (1.0 / 0.99f64.powi(n as i32)).round() as u64;
                exponential_approx_error(0.99, n, m).unwrap()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] < 1e-2);
    }

    #[test]
    fn table_shape() {
        let rows = campaign_table(&[0.9, 0.95], &[10, 50], &[1, 50], 0.98).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!((rows[7].p0, rows[7].n_gates, rows[7].m_runs), (0.95, 50, 50));
    }

    proptest! {
        #[test]
        fn monotone(p0 in 0.05f64..0.999, n in 1u64..200, m in 1u64..200) {
            let p = p_no_result(p0, n, m).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p_no_result(p0, n, m + 1).unwrap() <= p);
            prop_assert!(p_no_result((p0 + 1e-3).min(1.0), n, m).unwrap() <= p);
            prop_assert!(p_no_result(p0, n + 1, m).unwrap() >= p);
        }

        #[test]
        fn min_repeats_is_tight(p0 in 0.5f64..0.999, n in 1u64..40, target in 0.05f64..0.999) {
            let m = min_repeats(p0, n, target).unwrap();
            prop_assert!(p_no_result(p0, n, m).unwrap() <= 1.0 - target);
            if m > 1 {
                prop_assert!(p_no_result(p0, n, m - 1).unwrap() > 1.0 - target);
            }
        }
    }
}
