//! Authentication time budget and frame-length feasibility.
//!
//! A vehicle at distance `d` travelling at `v` has `d / v` seconds before it
//! passes the camera. Sending `n` bits at `t_f` seconds each plus `t_c`
//! seconds of computation must fit in that window.

use libm::floor;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum TimingError {
    #[error("speed must be positive, got {0} m/s")]
    NonPositiveSpeed(f64),
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("flash duration must be positive, got {0} s")]
    NonPositiveFlash(f64),
    #[error("computation time must be non-negative, got {0} s")]
    NegativeComputation(f64),
    #[error("bit count must be positive and even, got {0}")]
    BadBitCount(u32),
    #[error("no time left for flashing: d/v = {available} s <= t_c = {computation} s")]
    Infeasible { available: f64, computation: f64 },
}

/// Scenario timing: camera distance, speed, flash duration, computation time
/// and frame length in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParams {
    pub distance_m: f64,
    pub speed_mps: f64,
    pub flash_s: f64,
    pub compute_s: f64,
    pub bits: u32,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            distance_m: 25.0,
            speed_mps: 8.3,
            flash_s: 0.15,
            compute_s: 0.2,
            bits: crate::frame::FRAME_BITS as u32,
        }
    }
}

impl TimingParams {
    pub fn validate(&self) -> Result<(), TimingError> {
        if !(self.distance_m > 0.0) {
            return Err(TimingError::NonPositiveDistance(self.distance_m));
        }
        if !(self.speed_mps > 0.0) {
            return Err(TimingError::NonPositiveSpeed(self.speed_mps));
        }
        if !(self.flash_s > 0.0) {
            return Err(TimingError::NonPositiveFlash(self.flash_s));
        }
        if !(self.compute_s >= 0.0) {
            return Err(TimingError::NegativeComputation(self.compute_s));
        }
        if self.bits == 0 || self.bits % 2 != 0 {
            return Err(TimingError::BadBitCount(self.bits));
        }
        Ok(())
    }

    pub fn auth_window(&self) -> Result<f64, TimingError> {
        auth_window(self.distance_m, self.speed_mps)
    }

    pub fn latency(&self) -> f64 {
        latency(self.bits, self.flash_s, self.compute_s)
    }

    /// True when the bit-serial latency fits inside the authentication window.
    pub fn is_feasible(&self) -> bool {
        self.auth_window().is_ok_and(|w| self.latency() <= w)
    }
}

/// Time available before the vehicle passes the camera, `d / v`.
pub fn auth_window(distance_m: f64, speed_mps: f64) -> Result<f64, TimingError> {
    if !(speed_mps > 0.0) {
        return Err(TimingError::NonPositiveSpeed(speed_mps));
    }
    Ok(distance_m / speed_mps)
}

/// Bit-serial latency `n · t_f + t_c`.
pub fn latency(bits: u32, flash_s: f64, compute_s: f64) -> f64 {
    f64::from(bits) * flash_s + compute_s
}

/// Largest `n` with `n · t_f + t_c <= d / v`.
pub fn max_bits(
    distance_m: f64,
    speed_mps: f64,
    compute_s: f64,
    flash_s: f64,
) -> Result<u32, TimingError> {
    if !(flash_s > 0.0) {
        return Err(TimingError::NonPositiveFlash(flash_s));
    }
    let available = auth_window(distance_m, speed_mps)?;
    if available <= compute_s {
        return Err(TimingError::Infeasible {
            available,
            computation: compute_s,
        });
    }
    let mut n = floor((available - compute_s) / flash_s) as u32;
    // floor() of a quotient can land one off when the exact answer is an integer
    while n > 0 && latency(n, flash_s, compute_s) > available {
        n -= 1;
    }
    while latency(n + 1, flash_s, compute_s) <= available {
        n += 1;
    }
    Ok(n)
}

/// Wall-clock length of the flash sequence when both emitters send one bit
/// each per flash: `(n / 2) · t_f`.
pub fn flash_schedule_duration(bits: u32, flash_s: f64) -> Result<f64, TimingError> {
    if bits % 2 != 0 {
        return Err(TimingError::BadBitCount(bits));
    }
    Ok(f64::from(bits / 2) * flash_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn auth_window_examples() {
        let slow = auth_window(25.0, 8.3).unwrap();
        assert!((slow - 3.012).abs() < 1e-3, "{slow}");
        let fast = auth_window(25.0, 16.6).unwrap();
        assert!((fast - 1.506).abs() < 1e-3, "{fast}");
        assert_eq!(auth_window(0.0, 5.0), Ok(0.0));
        assert_eq!(
            auth_window(25.0, 0.0),
            Err(TimingError::NonPositiveSpeed(0.0))
        );
        assert!(auth_window(25.0, -1.0).is_err());
    }

    #[test]
    fn latency_examples() {
        assert!((latency(14, 0.15, 0.0) - 2.10).abs() < 1e-12);
        assert_eq!(latency(0, 0.15, 0.5), 0.5);
        // brute-force per-bit summation
        let summed = (0..14).fold(0.4, |acc, _| acc + 0.15);
        assert!((latency(14, 0.15, 0.4) - 2.50).abs() < 1e-12);
        assert!((latency(14, 0.15, 0.4) - summed).abs() < 1e-12);
    }

    #[test]
    fn max_bits_examples() {
        for (v, expected) in [(8.3, 16), (16.6, 6)] {
            let n = max_bits(25.0, v, 0.5, 0.15).unwrap();
            assert_eq!(n, expected);
            let window = 25.0 / v;
            assert!(f64::from(n) * 0.15 + 0.5 <= window);
            assert!(f64::from(n + 1) * 0.15 + 0.5 > window);
        }
        assert!(matches!(
            max_bits(10.0, 5.0, 2.0, 0.15),
            Err(TimingError::Infeasible { .. })
        ));
    }

    #[test]
    fn schedule_duration_examples() {
        assert_eq!(flash_schedule_duration(14, 0.15).unwrap(), 7.0 * 0.15);
        assert!((flash_schedule_duration(14, 0.15).unwrap() - 1.05).abs() < 1e-12);
        assert_eq!(flash_schedule_duration(2, 0.15).unwrap(), 0.15);
        assert!((flash_schedule_duration(14, 0.10).unwrap() - 0.70).abs() < 1e-12);
        assert_eq!(
            flash_schedule_duration(13, 0.15),
            Err(TimingError::BadBitCount(13))
        );
    }

    #[test]
    fn params_validation() {
        assert!(TimingParams::default().validate().is_ok());
        assert!(TimingParams::default().is_feasible());
        let odd = TimingParams {
            bits: 13,
            ..Default::default()
        };
        assert!(odd.validate().is_err());
        let fast = TimingParams {
            speed_mps: 16.6,
            ..Default::default()
        };
        assert!(!fast.is_feasible());
    }

    proptest! {
        #[test]
        fn latency_increasing(n in 0u32..1000, tf in 1e-3f64..1.0, tc in 0.0f64..5.0) {
            prop_assert!(latency(n + 1, tf, tc) > latency(n, tf, tc));
        }

        #[test]
        fn max_bits_is_tight(d in 1.0f64..200.0, v in 0.5f64..40.0, tc in 0.0f64..1.0, tf in 0.01f64..0.5) {
            prop_assume!(d / v > tc);
            let n = max_bits(d, v, tc, tf).unwrap();
            let w = auth_window(d, v).unwrap();
            prop_assert!(latency(n, tf, tc) <= w);
            prop_assert!(w < latency(n + 1, tf, tc));
        }

        #[test]
        fn schedule_is_half_serial(half in 0u32..500, tf in 1e-3f64..1.0) {
            let n = 2 * half;
            let d = flash_schedule_duration(n, tf).unwrap();
            prop_assert!((d - latency(n, tf, 0.0) / 2.0).abs() <= 1e-9 * (1.0 + d));
        }
    }
}
