//! Small statistics helpers shared by the Monte-Carlo harnesses.

/// Pairwise (cascade) summation; deterministic and accurate to ~1e-12
/// relative for the replicate counts used here.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample standard deviation (n-1 normalization).
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let devs: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    (pairwise_sum(&devs) / (xs.len() as f64 - 1.0)).sqrt()
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    sample_std(xs) / (xs.len() as f64).sqrt()
}

/// Mean and standard error in one pass.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    (mean(xs), std_error(xs))
}

/// Ordinary least squares slope and intercept of y against x.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let _ = n;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_for_small_inputs() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((pairwise_sum(&xs) - 15.0).abs() < 1e-15);
        assert!((mean(&xs) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn std_error_behaves() {
        let xs = [1.0, 1.0, 1.0];
        assert_eq!(std_error(&xs), 0.0);
        let ys = [0.0, 2.0];
        assert!((sample_std(&ys) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (slope, intercept) = ols_slope(&xs, &ys);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 1.0).abs() < 1e-12);
    }
}
