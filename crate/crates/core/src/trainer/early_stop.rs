/// Slack for floating-point noise in F1 differences, so a gain of exactly
/// `min_delta` counts as progress.
const GAIN_TOLERANCE: f64 = 1e-12;

/// Whether training should stop: the best F1 of the last `window` epochs
/// beats the best before them by less than `min_delta`.
///
/// Returns `false` until more than `window` epochs have been recorded.
pub fn early_stop(f1_history: &[f64], window: usize, min_delta: f64) -> bool {
    if window == 0 || f1_history.len() <= window {
        return false;
    }
    let (before, recent) = f1_history.split_at(f1_history.len() - window);
    let best = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    best(recent) - best(before) < min_delta - GAIN_TOLERANCE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_gains_never_stop() {
        let h: Vec<f64> = (0..40).map(|i| 0.1 + 0.02 * i as f64).collect();
        for n in 1..=h.len() {
            assert!(!early_stop(&h[..n], 15, 0.01), "stopped at {n}");
        }
    }

    #[test]
    fn flat_window_stops() {
        let h = vec![0.7; 16];
        assert!(!early_stop(&h[..15], 15, 0.01));
        assert!(early_stop(&h, 15, 0.01));
    }

    #[test]
    fn gain_of_exactly_min_delta_continues() {
        let mut h = vec![0.80; 10];
        h.extend([0.81; 15]);
        assert!(!early_stop(&h, 15, 0.01));
        let mut h = vec![0.80; 10];
        h.extend([0.8099; 15]);
        assert!(early_stop(&h, 15, 0.01));
    }

    #[test]
    fn short_histories_never_stop() {
        assert!(!early_stop(&[0.5], 15, 0.01));
        assert!(!early_stop(&[], 15, 0.01));
        assert!(!early_stop(&[0.5, 0.5], 0, 0.01));
    }
}
