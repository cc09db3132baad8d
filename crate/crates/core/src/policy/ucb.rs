use super::{argmax, ArmCounts};

/// UCB with bonus `c·σ·√(2 ln n / N_i)`; unpulled arms are played first,
/// lowest index first.
pub fn ucb_select(counts: &ArmCounts, step: u64, sigma: f64, c: f64) -> usize {
    let scales = vec![sigma; counts.num_arms()];
    ucb_select_scaled(counts, step, &scales, c)
}

/// UCB with an arm-specific noise scale `σ_i`.
pub fn ucb_select_scaled(counts: &ArmCounts, step: u64, sigmas: &[f64], c: f64) -> usize {
    if let Some(i) = counts.counts().iter().position(|&n| n == 0) {
        return i;
    }
    let log_n = (step.max(1) as f64).ln();
    argmax((0..counts.num_arms()).map(|i| {
        let n = counts.count(i) as f64;
        counts.mean(i) + c * sigmas[i] * (2.0 * log_n / n).sqrt()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(data: &[(u64, f64)]) -> ArmCounts {
        let mut c = ArmCounts::new(data.len());
        for (i, &(n, m)) in data.iter().enumerate() {
            c.set(i, n, n as f64 * m);
        }
        c
    }

    #[test]
    fn forced_initialization() {
        assert_eq!(ucb_select(&counts(&[(0, 0.0), (5, 1.0)]), 5, 1.0, 1.0), 0);
        assert_eq!(ucb_select(&counts(&[(3, 0.0), (0, 0.0), (0, 0.0)]), 3, 1.0, 1.0), 1);
    }

    #[test]
    fn equal_bonus_takes_best_mean() {
        for n in [20, 1000, 1_000_000] {
            assert_eq!(ucb_select(&counts(&[(10, 1.0), (10, 0.0)]), n, 1.0, 1.0), 0);
        }
    }

    #[test]
    fn larger_bonus_for_rare_arm() {
        assert_eq!(ucb_select(&counts(&[(100, 0.0), (2, 0.0)]), 102, 1.0, 1.0), 1);
    }

    #[test]
    fn ties_go_low() {
        assert_eq!(ucb_select(&counts(&[(4, 0.5), (4, 0.5)]), 8, 1.0, 1.0), 0);
    }

    #[test]
    fn scaled_bonus_respects_sigma() {
        // equal counts and means: the noisier arm has the larger bonus
        assert_eq!(ucb_select_scaled(&counts(&[(10, 0.0), (10, 0.0)]), 20, &[1.0, 3.0], 1.0), 1);
    }
}
