//! Small sample-statistics helpers shared by the Monte Carlo code.

/// Sample mean and standard error of the mean (unbiased variance).
/// A single sample has standard error zero, and identical samples return
/// their common value exactly.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let r = values.len();
    if r == 0 {
        return (f64::NAN, f64::NAN);
    }
    let shift = values[0];
    let mean = shift + values.iter().map(|x| x - shift).sum::<f64>() / r as f64;
    if r == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (r - 1) as f64 / r as f64).sqrt())
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_error_of_known_sample() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // variance 5/3, se = sqrt(5/12)
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
        let x = 0.005_822_990_484_549_528;
        assert_eq!(mean_stderr(&[x, x, x]), (x, 0.0));
    }

    #[test]
    fn pairwise_matches_exact_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
