//! Binomial confidence intervals.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` out of `trials` at quantile `z`.
///
/// Panics if `errors > trials` or `trials == 0`.
pub fn wilson(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0, "no trials");
    assert!(errors <= trials, "more errors than trials");
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The closed form is exact at the boundaries; clamp rounding only.
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn wilson95(errors: u64, trials: u64) -> (f64, f64) {
    wilson(errors, trials, Z95)
}
