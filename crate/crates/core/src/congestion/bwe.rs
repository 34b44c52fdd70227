//! SACK-clocked bandwidth estimation with a two-tap low-pass filter.
//!
//! Each SACK that newly acknowledges `d` bytes sent on a path yields a raw
//! sample `d / (t_k - t_{k-1})`, where `t_{k-1}` is the previous SACK that
//! acknowledged data on the same path. Samples are smoothed with
//! `p * B_hat + (1 - p) * (B_k + B_{k-1}) / 2`.

use crate::engine::SimTime;

/// Default filter constant.
pub const DEFAULT_FILTER_GAIN: f64 = 0.9;

/// Raw bandwidth sample in bytes per second. Returns `None` when the two
/// timestamps coincide and no rate can be formed.
pub fn bwe_sample(acked: u64, t_k: SimTime, t_prev: SimTime) -> Option<f64> {
    debug_assert!(acked > 0);
    let dt = t_k - t_prev;
    if dt <= 0.0 {
        return None;
    }
    Some(acked as f64 / dt)
}

pub fn bwe_filter(b_hat_prev: f64, b_k: f64, b_prev: f64, p: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&p));
    p * b_hat_prev + (1.0 - p) * (b_k + b_prev) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BweUpdate {
    /// No bytes acknowledged for this path.
    NoData,
    /// Same timestamp as the previous sample.
    Suppressed,
    Sampled { raw: f64, filtered: f64 },
}

/// Per-path estimator state. Rates are in bytes per second.
#[derive(Debug, Clone, PartialEq)]
pub struct BweState {
    b_prev: f64,
    b_hat: f64,
    t_prev: SimTime,
    samples: u64,
}

impl BweState {
    /// `start` is the reference time for the very first sample.
    pub fn new(start: SimTime) -> Self {
        BweState {
            b_prev: 0.0,
            b_hat: 0.0,
            t_prev: start,
            samples: 0,
        }
    }

    pub fn estimate(&self) -> f64 {
        self.b_hat
    }

    pub fn last_sample(&self) -> f64 {
        self.b_prev
    }

    pub fn last_sample_time(&self) -> SimTime {
        self.t_prev
    }

    pub fn sample_count(&self) -> u64 {
        self.samples
    }

    pub fn on_ack(&mut self, acked: u64, now: SimTime, p: f64) -> BweUpdate {
        if acked == 0 {
            return BweUpdate::NoData;
        }
        let Some(b_k) = bwe_sample(acked, now, self.t_prev) else {
            return BweUpdate::Suppressed;
        };
        self.b_hat = if self.samples == 0 {
            // seed the filter with the first sample
            b_k
        } else {
            bwe_filter(self.b_hat, b_k, self.b_prev, p)
        };
        self.b_prev = b_k;
        self.t_prev = now;
        self.samples += 1;
        BweUpdate::Sampled {
            raw: b_k,
            filtered: self.b_hat,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    #[test]
    fn raw_sample_examples() {
        assert_eq!(bwe_sample(1452, t(0.01), t(0.0)), Some(145_200.0));
        let b = bwe_sample(2904, t(1.02), t(1.0)).unwrap();
        assert!((b - 145_200.0).abs() < 1e-6);
        assert_eq!(bwe_sample(1452, t(1.0), t(1.0)), None);
    }

    #[test]
    fn filter_example() {
        assert_eq!(bwe_filter(1000.0, 2000.0, 1000.0, 0.9), 1050.0);
    }

    #[test]
    fn filter_fixed_point() {
        let c = 123_456.0;
        let mut b_hat = c;
        for _ in 0..50 {
            b_hat = bwe_filter(b_hat, c, c, 0.9);
            assert_eq!(b_hat, c);
        }
    }

    #[test]
    fn filter_step_response_matches_closed_form() {
        // zero start, raw samples held at c: B_hat_k = c (1 - 0.9^k)
        let c = 1.0e6;
        let mut b_hat = 0.0;
        for k in 1..=50 {
            b_hat = bwe_filter(b_hat, c, c, 0.9);
            let closed = c * (1.0 - 0.9f64.powi(k));
            assert!((b_hat - closed).abs() < 1e-6 * c, "k={k}");
        }
    }

    #[test]
    fn first_sample_seeds_filter() {
        let mut s = BweState::new(t(0.0));
        let up = s.on_ack(1452, t(0.01), 0.9);
        assert_eq!(
            up,
            BweUpdate::Sampled {
                raw: 145_200.0,
                filtered: 145_200.0
            }
        );
        // same rate again: fixed point
        s.on_ack(1452, t(0.02), 0.9);
        assert!((s.estimate() - 145_200.0).abs() < 1e-6);
        assert_eq!(s.sample_count(), 2);
    }

    #[test]
    fn zero_bytes_leave_state_untouched() {
        let mut s = BweState::new(t(0.0));
        s.on_ack(1000, t(0.5), 0.9);
        let before = s.clone();
        assert_eq!(s.on_ack(0, t(0.7), 0.9), BweUpdate::NoData);
        assert_eq!(s, before);
        assert_eq!(s.on_ack(500, t(0.5), 0.9), BweUpdate::Suppressed);
        assert_eq!(s, before);
    }

    #[test]
    fn alternating_rates_match_recurrence() {
        // Independent evaluation: raw samples and the filter recurrence
        // written out longhand.
        let times = [0.010, 0.030, 0.035, 0.055, 0.060, 0.080, 0.085, 0.105];
        let bytes = [1452u64, 2904, 1452, 2904, 1452, 2904, 1452, 2904];
        let mut expect = Vec::new();
        let (mut prev_t, mut prev_raw, mut hat) = (0.0f64, 0.0f64, 0.0f64);
        for (i, (&tm, &d)) in times.iter().zip(&bytes).enumerate() {
            let raw = d as f64 / (tm - prev_t);
            hat = if i == 0 {
                raw
            } else {
                0.9 * hat + 0.1 * (raw + prev_raw) / 2.0
            };
            expect.push(hat);
            prev_t = tm;
            prev_raw = raw;
        }
        let mut s = BweState::new(t(0.0));
        for ((&tm, &d), e) in times.iter().zip(&bytes).zip(expect) {
            s.on_ack(d, t(tm), 0.9);
            assert!((s.estimate() - e).abs() <= 1e-9 * e);
        }
    }
}
