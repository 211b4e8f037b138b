//! Order-fixed reductions used by the Monte Carlo drivers.

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation. The result depends only on the order of
/// `values`, never on how the slice was produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample variance (two-pass).
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&dev) / (n - 1) as f64
}

/// Pearson correlation of paired samples.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let cross: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let sy: Vec<f64> = ys.iter().map(|y| (y - my) * (y - my)).collect();
    pairwise_sum(&cross) / (pairwise_sum(&sx) * pairwise_sum(&sy)).sqrt()
}

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Half-width of the Wilson score interval for `successes` out of `n`.
pub fn wilson_halfwidth(successes: u64, n: u64) -> f64 {
    wilson_interval(successes, n).1
}

/// Wilson score interval at 95%, returned as `(center, halfwidth)`.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center, half)
}
