//! Small binomial helpers for attack campaigns.

use libm::sqrt;

/// Successes out of trials with a confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// z for a two-sided 95% interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

impl RateEstimate {
    /// Wilson score interval at `z`.
    pub fn wilson(successes: u64, trials: u64, z: f64) -> Self {
        if trials == 0 {
            return Self {
                trials,
                successes,
                rate: 0.0,
                ci_low: 0.0,
                ci_high: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = z * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
        Self {
            trials,
            successes,
            rate: p,
            ci_low: if successes == 0 {
                0.0
            } else {
                (centre - half).max(0.0)
            },
            ci_high: if successes == trials {
                1.0
            } else {
                (centre + half).min(1.0)
            },
        }
    }
}

/// Half-width of a `k`-sigma normal envelope around `p` for `n` trials.
pub fn binomial_envelope(p: f64, n: u64, k: f64) -> f64 {
    k * sqrt(p * (1.0 - p) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 10 of 100 at 95%: [0.0552, 0.1744]
        let r = RateEstimate::wilson(10, 100, Z_95);
        assert!((r.rate - 0.1).abs() < 1e-12);
        assert!((r.ci_low - 0.05522).abs() < 1e-4, "{}", r.ci_low);
        assert!((r.ci_high - 0.17437).abs() < 1e-4, "{}", r.ci_high);
        let zero = RateEstimate::wilson(0, 1000, Z_95);
        assert_eq!(zero.ci_low, 0.0);
        assert!(zero.ci_high > 0.0 && zero.ci_high < 0.005);
        assert_eq!(RateEstimate::wilson(0, 0, Z_95).ci_high, 1.0);
    }

    #[test]
    fn guessing_envelope() {
        let e = binomial_envelope(1.0 / 27.0, 10_000, 3.0);
        assert!((e - 0.00566).abs() < 1e-4);
        assert!(e < 0.006);
    }
}
