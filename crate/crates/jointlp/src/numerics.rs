//! Small numerical helpers shared across the decoders: stable
//! log-sum-exp, the soft minimum, the Gaussian tail function and entropy.

/// Stable log-sum-exp: `ln(sum_i exp(x_i))` with max subtraction.
///
/// Returns `f64::NEG_INFINITY` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Soft minimum at temperature `k`: `-(1/k) ln sum_i exp(-k x_i)`.
///
/// Converges to `min(xs)` from below as `k` grows; for any `k > 0` it obeys
/// `min(xs) - ln(len)/k <= softmin <= min(xs)`.
pub fn softmin(k: f64, xs: &[f64]) -> f64 {
    assert!(k > 0.0, "softmin temperature must be positive");
    let scaled: Vec<f64> = xs.iter().map(|&x| -k * x).collect();
    -log_sum_exp(&scaled) / k
}

/// Gaussian tail probability `Q(x) = P(Z > x)` for standard normal `Z`.
///
/// Evaluated through the complementary error function, so the relative
/// error stays below 1e-7 far into the tail.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Entropy `H(x) = -sum_i x_i ln x_i` of a distribution, with `0 ln 0 = 0`.
pub fn entropy(xs: &[f64]) -> f64 {
    -xs.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_sum_exp_matches_naive_on_moderate_inputs() {
        let xs = [0.3f64, -1.2, 2.5, 0.0];
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(log_sum_exp(&xs), naive, max_relative = 1e-14);
    }

    #[test]
    fn log_sum_exp_survives_large_magnitudes() {
        let xs = [-1000.0, -1000.5];
        let v = log_sum_exp(&xs);
        assert_relative_eq!(v, -1000.0 + (1.0 + (-0.5f64).exp()).ln(), epsilon = 1e-12);
    }

    #[test]
    fn softmin_sandwich() {
        let xs = [1.0, 2.0, 3.0, 0.5];
        for &k in &[1.0, 10.0, 100.0, 1000.0] {
            let s = softmin(k, &xs);
            let min = 0.5;
            assert!(s <= min);
            assert!(s >= min - (xs.len() as f64).ln() / k);
        }
    }

    #[test]
    fn q_function_reference_points() {
        // 0.5 erfc(x/sqrt(2)) against tabulated normal tails.
        assert_relative_eq!(q_function(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(q_function(1.0), 0.158655253931457, epsilon = 1e-12);
        assert_relative_eq!(q_function(3.0), 1.349898031630095e-3, max_relative = 1e-10);
    }

    #[test]
    fn entropy_point_mass_and_uniform() {
        assert_eq!(entropy(&[1.0, 0.0, 0.0]), 0.0);
        assert_relative_eq!(entropy(&[0.25; 4]), 4.0f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(entropy(&[0.5, 0.5, 0.0, 0.0]), 2.0f64.ln(), epsilon = 1e-14);
    }
}
