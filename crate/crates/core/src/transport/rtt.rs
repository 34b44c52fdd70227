/// Smoothed RTT and retransmission timeout of one path (RFC 4960 style).
#[derive(Debug, Clone, PartialEq)]
pub struct RttEstimator {
    srtt: Option<f64>,
    rttvar: f64,
    rto: f64,
    backoff: u32,
    rto_min: f64,
    rto_max: f64,
}

impl RttEstimator {
    pub fn new(rto_initial: f64, rto_min: f64, rto_max: f64) -> Self {
        assert!(rto_min > 0.0 && rto_min <= rto_max);
        RttEstimator {
            srtt: None,
            rttvar: 0.0,
            rto: rto_initial.clamp(rto_min, rto_max),
            backoff: 1,
            rto_min,
            rto_max,
        }
    }

    pub fn srtt(&self) -> Option<f64> {
        self.srtt
    }

    pub fn rttvar(&self) -> f64 {
        self.rttvar
    }

    pub fn rto(&self) -> f64 {
        self.rto
    }

    pub fn backoff(&self) -> u32 {
        self.backoff
    }

    /// Feeds a sample taken from a never-retransmitted chunk.
    pub fn update(&mut self, sample: f64) {
        assert!(sample > 0.0 && sample.is_finite(), "invalid RTT sample {sample}");
        match self.srtt {
            None => {
                self.srtt = Some(sample);
                self.rttvar = sample / 2.0;
            }
            Some(srtt) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (srtt - sample).abs();
                self.srtt = Some(0.875 * srtt + 0.125 * sample);
            }
        }
        let srtt = self.srtt.expect("set above");
        self.rto = (srtt + 4.0 * self.rttvar).clamp(self.rto_min, self.rto_max);
        self.backoff = 1;
    }

    /// Doubles the timeout after an expiry.
    pub fn back_off(&mut self) {
        self.rto = (self.rto * 2.0).min(self.rto_max);
        self.backoff = self.backoff.saturating_mul(2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est() -> RttEstimator {
        RttEstimator::new(1.0, 1.0, 60.0)
    }

    #[test]
    fn first_sample() {
        let mut r = est();
        r.update(0.1);
        assert_eq!(r.srtt(), Some(0.1));
        assert_eq!(r.rttvar(), 0.05);
        // srtt + 4 rttvar = 0.3, clamped up to rto_min
        assert_eq!(r.rto(), 1.0);

        let mut r = RttEstimator::new(1.0, 0.01, 60.0);
        r.update(0.1);
        assert!((r.rto() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn second_equal_sample() {
        let mut r = est();
        r.update(0.1);
        r.update(0.1);
        assert!((r.srtt().unwrap() - 0.1).abs() < 1e-15);
        assert!((r.rttvar() - 0.0375).abs() < 1e-15);
    }

    #[test]
    fn constant_samples_converge_monotonically() {
        let mut r = RttEstimator::new(1.0, 0.2, 60.0);
        let mut last_var = f64::INFINITY;
        let mut last_rto = f64::INFINITY;
        for _ in 0..100 {
            r.update(0.05);
            assert!(r.rttvar() <= last_var);
            assert!(r.rto() <= last_rto);
            last_var = r.rttvar();
            last_rto = r.rto();
        }
        assert!((r.srtt().unwrap() - 0.05).abs() < 1e-12);
        assert!(r.rttvar() < 1e-12);
        assert_eq!(r.rto(), 0.2);
    }

    #[test]
    fn backoff_doubles_and_clamps() {
        let mut r = est();
        r.back_off();
        assert_eq!(r.rto(), 2.0);
        let mut r = RttEstimator::new(32.0, 1.0, 60.0);
        r.back_off();
        assert_eq!(r.rto(), 60.0);
        assert_eq!(r.backoff(), 2);
        r.update(0.1);
        assert_eq!(r.backoff(), 1);
        assert_eq!(r.rto(), 1.0);
    }

    #[test]
    #[should_panic]
    fn non_positive_sample_is_a_fault() {
        est().update(0.0);
    }
}
