//! Resource-pooling coefficients shared by the coupled controllers.

/// Per-path share of the pooled bandwidth. Before any estimate exists the
/// share is uniform.
pub fn compute_beta(estimates: &[f64]) -> Vec<f64> {
    let n = estimates.len();
    assert!(n >= 1, "at least one path required");
    debug_assert!(estimates.iter().all(|b| *b >= 0.0 && b.is_finite()));
    let total: f64 = estimates.iter().sum();
    if total > 0.0 {
        estimates.iter().map(|b| b / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

/// Aggressiveness factor:
/// `2 * w_T * max_i(beta_i * w_i / srtt_i^2) / (sum_i w_i / srtt_i)^2`.
///
/// With `beta_i = 0.5` this is the linked-increase alpha.
pub fn compute_alpha(cwnd: &[f64], srtt: &[f64], beta: &[f64]) -> f64 {
    assert!(cwnd.len() == srtt.len() && cwnd.len() == beta.len());
    debug_assert!(srtt.iter().all(|s| *s > 0.0));
    let total: f64 = cwnd.iter().sum();
    let best = cwnd
        .iter()
        .zip(srtt)
        .zip(beta)
        .map(|((w, s), b)| b * w / (s * s))
        .fold(0.0f64, f64::max);
    let rate_sum: f64 = cwnd.iter().zip(srtt).map(|(w, s)| w / s).sum();
    2.0 * total * best / (rate_sum * rate_sum)
}

/// Congestion-avoidance increment for one path:
/// `min(alpha * P_a * MTU / w_T, P_a * MTU / w_i)`.
pub fn coupled_increase(alpha: f64, partial_bytes_acked: f64, mtu: f64, total_cwnd: f64, cwnd: f64) -> f64 {
    let coupled = alpha * partial_bytes_acked * mtu / total_cwnd;
    let uncoupled = partial_bytes_acked * mtu / cwnd;
    coupled.min(uncoupled)
}

/// Slow-start increment: at most one MTU per SACK.
pub fn slow_start_increase(acked: u64, mtu: f64) -> f64 {
    (acked as f64).min(mtu)
}

/// New slow-start threshold after a loss: `max(w - beta * w, floor)`.
pub fn pooled_threshold(cwnd: f64, beta: f64, floor: f64) -> f64 {
    (cwnd - beta * cwnd).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn beta_examples() {
        assert_eq!(compute_beta(&[1e6, 1e6]), vec![0.5, 0.5]);
        assert_eq!(compute_beta(&[3e6, 1e6]), vec![0.75, 0.25]);
        assert_eq!(compute_beta(&[0.0, 0.0]), vec![0.5, 0.5]);
        assert_eq!(compute_beta(&[0.0, 0.0, 0.0, 0.0]), vec![0.25; 4]);
    }

    #[test]
    fn alpha_single_path_is_one() {
        assert!((compute_alpha(&[30_000.0], &[0.05], &[0.5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_symmetric_two_paths_is_half() {
        let a = compute_alpha(&[20_000.0, 20_000.0], &[0.08, 0.08], &[0.5, 0.5]);
        assert!((a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn alpha_asymmetric_example() {
        // Worked by hand:
        //   w_T = 45000
        //   beta*w/srtt^2 = 0.75*30000/0.0025 = 9.0e6 ; 0.25*15000/0.01 = 3.75e5
        //   sum w/srtt = 600000 + 150000 = 750000
        //   alpha = 2 * 45000 * 9.0e6 / 750000^2 = 1.44
        let a = compute_alpha(&[30_000.0, 15_000.0], &[0.05, 0.1], &[0.75, 0.25]);
        assert!((a - 1.44).abs() < 1e-12, "alpha = {a}");
    }

    #[test]
    fn increase_examples() {
        let mtu = 1500.0;
        // alpha = 1, one path, P_a = w: one MTU
        assert_eq!(coupled_increase(1.0, 30_000.0, mtu, 30_000.0, 30_000.0), mtu);
        // two equal paths, alpha = 0.5, P_a = w_i, w_T = 2 w_i
        let d = coupled_increase(0.5, 30_000.0, mtu, 60_000.0, 30_000.0);
        assert_eq!(d, mtu / 4.0);
    }

    #[test]
    fn threshold_examples() {
        let floor = 6000.0;
        assert_eq!(pooled_threshold(100_000.0, 0.25, floor), 75_000.0);
        assert_eq!(pooled_threshold(5000.0, 0.9, floor), 6000.0);
        assert_eq!(pooled_threshold(20_000.0, 0.5, floor), 10_000.0);
        assert_eq!(slow_start_increase(2904, 1500.0), 1500.0);
        assert_eq!(slow_start_increase(1000, 1500.0), 1000.0);
    }

    proptest! {
        #[test]
        fn alpha_degenerate_identity(w in 1500.0f64..1.0e6, s in 0.001f64..1.0) {
            prop_assert!((compute_alpha(&[w], &[s], &[0.5]) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn beta_normalized(b in proptest::collection::vec(0.0f64..1e8, 1..6)) {
            let beta = compute_beta(&b);
            let sum: f64 = beta.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(beta.iter().all(|x| (0.0..=1.0).contains(x)));
        }

        #[test]
        fn coupled_never_exceeds_uncoupled(
            alpha in 0.0f64..4.0,
            pa in 0.0f64..1e6,
            w1 in 1500.0f64..1e6,
            w2 in 1500.0f64..1e6,
        ) {
            let d = coupled_increase(alpha, pa, 1500.0, w1 + w2, w1);
            prop_assert!(d <= pa * 1500.0 / w1);
        }

        #[test]
        fn half_beta_matches_halving(w in 1500.0f64..1e7) {
            prop_assert_eq!(pooled_threshold(w, 0.5, 6000.0), (w / 2.0).max(6000.0));
        }
    }
}
