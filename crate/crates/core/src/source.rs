//! The correlated Gaussian source.
//!
//! Both parties observe one component of a zero-mean bivariate normal pair.
//! After rescaling to unit variance the pair is described by a single
//! correlation coefficient `rho`, which fixes the SNR and the mutual
//! information.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SourceError {
    #[error("SNR must be positive, got {0}")]
    Snr(f64),
    #[error("correlation coefficient must satisfy |rho| < 1, got {0}")]
    Rho(f64),
    #[error("standard deviation must be positive, got {0}")]
    Sigma(f64),
    #[error("frame length must be at least 1")]
    EmptyFrame,
}

/// `rho = sqrt(snr / (1 + snr))`.
pub fn snr_to_rho(snr: f64) -> Result<f64, SourceError> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(SourceError::Snr(snr));
    }
    Ok((snr / (1.0 + snr)).sqrt())
}

/// `snr = rho² / (1 - rho²)`.
pub fn rho_to_snr(rho: f64) -> Result<f64, SourceError> {
    check_rho(rho)?;
    let r2 = rho * rho;
    Ok(r2 / (1.0 - r2))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// `rho` for an SNR given in decibels.
pub fn snr_db_to_rho(snr_db: f64) -> Result<f64, SourceError> {
    snr_to_rho(db_to_linear(snr_db))
}

/// `I(Y_A; Y_B) = -½ log2(1 - rho²)` in bits per symbol.
pub fn mutual_information(rho: f64) -> Result<f64, SourceError> {
    check_rho(rho)?;
    Ok(-0.5 * (-rho * rho).ln_1p() / std::f64::consts::LN_2)
}

/// `½ log2(2πe σ²)`, the differential entropy of a normal with variance `var`.
pub fn gaussian_entropy(var: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).log2()
}

/// `h(Y_A)` of the unit-variance source.
pub fn entropy_a() -> f64 {
    gaussian_entropy(1.0)
}

/// `h(Y_A | Y_B)`; the conditional variance does not depend on `y_b`.
pub fn conditional_entropy_a(rho: f64) -> Result<f64, SourceError> {
    check_rho(rho)?;
    Ok(gaussian_entropy(1.0 - rho * rho))
}

pub(crate) fn check_rho(rho: f64) -> Result<(), SourceError> {
    if rho.is_finite() && rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(SourceError::Rho(rho))
    }
}

/// The unscaled pair `(X_A, X_B)`: marginal deviations plus correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    rho: f64,
    sigma_a: f64,
    sigma_b: f64,
}

impl SourceModel {
    pub fn new(rho: f64, sigma_a: f64, sigma_b: f64) -> Result<Self, SourceError> {
        check_rho(rho)?;
        for s in [sigma_a, sigma_b] {
            if !(s > 0.0) || !s.is_finite() {
                return Err(SourceError::Sigma(s));
            }
        }
        Ok(Self { rho, sigma_a, sigma_b })
    }

    /// Unit-variance model.
    pub fn scaled(rho: f64) -> Result<Self, SourceError> {
        Self::new(rho, 1.0, 1.0)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma_a(&self) -> f64 {
        self.sigma_a
    }

    pub fn sigma_b(&self) -> f64 {
        self.sigma_b
    }

    /// Covariance of the unscaled pair.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let c = self.rho * self.sigma_a * self.sigma_b;
        [[self.sigma_a * self.sigma_a, c], [c, self.sigma_b * self.sigma_b]]
    }

    /// Covariance after dividing each component by its deviation.
    pub fn scaled_covariance(&self) -> [[f64; 2]; 2] {
        [[1.0, self.rho], [self.rho, 1.0]]
    }

    /// Mean and variance of the scaled `Y_A` given `Y_B = y_b`.
    pub fn conditional_params(&self, y_b: f64) -> (f64, f64) {
        (y_b * self.rho, 1.0 - self.rho * self.rho)
    }

    /// Mean and variance of the unscaled `X_A` given `X_B = x_b`.
    pub fn conditional_params_unscaled(&self, x_b: f64) -> (f64, f64) {
        (x_b * self.sigma_a / self.sigma_b * self.rho, self.sigma_a * self.sigma_a * (1.0 - self.rho * self.rho))
    }

    pub fn snr(&self) -> f64 {
        let r2 = self.rho * self.rho;
        r2 / (1.0 - r2)
    }

    pub fn mutual_information(&self) -> f64 {
        -0.5 * (-self.rho * self.rho).ln_1p() / std::f64::consts::LN_2
    }
}

/// One frame of scaled observations for each party.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub y_a: Vec<f64>,
    pub y_b: Vec<f64>,
}

impl FramePair {
    pub fn new(y_a: Vec<f64>, y_b: Vec<f64>) -> Result<Self, SourceError> {
        assert_eq!(y_a.len(), y_b.len(), "frame halves differ in length");
        if y_a.is_empty() {
            return Err(SourceError::EmptyFrame);
        }
        Ok(Self { y_a, y_b })
    }

    pub fn len(&self) -> usize {
        self.y_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_a.is_empty()
    }

    /// Returns `(reference, side_information)` for the given direction.
    pub fn orient(&self, role: Role) -> (&[f64], &[f64]) {
        match role {
            Role::Direct => (&self.y_a, &self.y_b),
            Role::Reverse => (&self.y_b, &self.y_a),
        }
    }
}

/// Which party's key is the reference. Reverse reconciliation only swaps
/// the labels of the two frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Role {
    #[default]
    Direct,
    Reverse,
}

/// Samples `n` pairs as `y_a = y1`, `y_b = rho·y1 + sqrt(1-rho²)·y2` from a
/// ChaCha8 stream seeded with `seed`.
///
/// Frames drawn with the same seed at different `rho` share `y1, y2`, which
/// couples Monte-Carlo estimates across SNR points.
pub fn sample_frames(rho: f64, n: usize, seed: u64) -> Result<FramePair, SourceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_frames_with(rho, n, &mut rng)
}

pub fn sample_frames_with<R: Rng + ?Sized>(rho: f64, n: usize, rng: &mut R) -> Result<FramePair, SourceError> {
    check_rho(rho)?;
    if n == 0 {
        return Err(SourceError::EmptyFrame);
    }
    let noise = (1.0 - rho * rho).sqrt();
    let mut y_a = Vec::with_capacity(n);
    let mut y_b = Vec::with_capacity(n);
    for _ in 0..n {
        let y1: f64 = rng.sample(StandardNormal);
        let y2: f64 = rng.sample(StandardNormal);
        y_a.push(y1);
        y_b.push(rho * y1 + noise * y2);
    }
    Ok(FramePair { y_a, y_b })
}

/// Divides every sample by `sigma`.
pub fn scale_frame(x: &[f64], sigma: f64) -> Result<Vec<f64>, SourceError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(SourceError::Sigma(sigma));
    }
    Ok(x.iter().map(|v| v / sigma).collect())
}

/// Derives an independent 64-bit seed from a root seed and a list of
/// indices (SplitMix64 finalizer applied per component).
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(root), |acc, &i| mix(acc ^ mix(i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_stats(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
        let vb = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / n;
        let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        (va, vb, cov / (va * vb).sqrt())
    }

    #[test]
    fn snr_rho_table_values() {
        assert!((snr_to_rho(3.0).unwrap() - 0.866).abs() < 5e-4);
        assert!((snr_to_rho(15.0).unwrap() - 0.968).abs() < 5e-4);
        assert!(snr_to_rho(1e-12).unwrap() < 1e-5);
        assert_eq!(snr_to_rho(0.0), Err(SourceError::Snr(0.0)));
        assert!(snr_to_rho(-1.0).is_err());
    }

    #[test]
    fn rho_to_snr_values() {
        assert!((rho_to_snr(0.866).unwrap() - 3.0).abs() / 3.0 < 0.005);
        assert_eq!(rho_to_snr(0.0), Ok(0.0));
        assert!((rho_to_snr(0.75f64.sqrt()).unwrap() - 3.0).abs() < 1e-12);
        assert!(rho_to_snr(1.0).is_err());
        assert!(rho_to_snr(-1.5).is_err());
    }

    #[test]
    fn mutual_information_values() {
        assert_eq!(mutual_information(0.0), Ok(0.0));
        assert!((mutual_information(0.75f64.sqrt()).unwrap() - 1.0).abs() < 1e-15);
        // Table rounding of rho = 0.968 for SNR = 15 leaves a small offset.
        assert!((mutual_information(0.968).unwrap() - 2.0).abs() < 0.01);
    }

    #[test]
    fn conditional_params_values() {
        let m = SourceModel::scaled(0.75f64.sqrt()).unwrap();
        let (mean, var) = m.conditional_params((4.0f64 / 3.0).sqrt());
        assert!((mean - 1.0).abs() < 1e-15);
        assert!((var - 0.25).abs() < 1e-15);
        let indep = SourceModel::scaled(0.0).unwrap();
        assert_eq!(indep.conditional_params(3.7), (0.0, 1.0));
    }

    #[test]
    fn unscaled_conditional_matches_scaled_after_rescaling() {
        let m = SourceModel::new(0.6, 2.0, 0.5).unwrap();
        let (mean, var) = m.conditional_params_unscaled(0.25);
        let (smean, svar) = m.conditional_params(0.25 / 0.5);
        assert!((mean / 2.0 - smean).abs() < 1e-15);
        assert!((var / 4.0 - svar).abs() < 1e-15);
        assert_eq!(m.scaled_covariance(), [[1.0, 0.6], [0.6, 1.0]]);
        assert!((m.covariance()[0][1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn model_validation() {
        assert!(SourceModel::new(1.0, 1.0, 1.0).is_err());
        assert!(SourceModel::new(0.5, 0.0, 1.0).is_err());
        assert!(SourceModel::new(0.5, 1.0, -2.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_frames(0.5, 100, 9).unwrap();
        let b = sample_frames(0.5, 100, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_frames(0.5, 100, 10).unwrap());
        assert_eq!(sample_frames(0.5, 0, 1), Err(SourceError::EmptyFrame));
    }

    #[test]
    fn sampled_correlation_matches_rho() {
        let n = 100_000;
        let f = sample_frames(0.866, n, 1).unwrap();
        let (va, vb, r) = sample_stats(&f.y_a, &f.y_b);
        // Standard error of a sample variance is sqrt(2/n).
        let se_var = (2.0 / n as f64).sqrt();
        assert!((va - 1.0).abs() < 5.0 * se_var, "var_a = {va}");
        assert!((vb - 1.0).abs() < 5.0 * se_var, "var_b = {vb}");
        assert!((r - 0.866).abs() < 0.01, "r = {r}");
        let se_r = (1.0 - 0.866f64.powi(2)) / (n as f64).sqrt();
        assert!((r - 0.866).abs() < 5.0 * se_r);
    }

    #[test]
    fn near_unit_correlation() {
        let f = sample_frames(1.0 - 1e-9, 10_000, 3).unwrap();
        let (_, _, r) = sample_stats(&f.y_a, &f.y_b);
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scale_frame_examples() {
        assert_eq!(scale_frame(&[1.5, -2.0], 1.0).unwrap(), vec![1.5, -2.0]);
        assert_eq!(scale_frame(&[2.0, 4.0], 2.0).unwrap(), vec![1.0, 2.0]);
        assert!(scale_frame(&[1.0], 0.0).is_err());

        let raw: Vec<f64> = sample_frames(0.0, 20_000, 5).unwrap().y_a.iter().map(|v| 3.0 * v + 0.0).collect();
        let n = raw.len() as f64;
        let sd = (raw.iter().map(|v| v * v).sum::<f64>() / n - (raw.iter().sum::<f64>() / n).powi(2)).sqrt();
        let scaled = scale_frame(&raw, sd).unwrap();
        let m = scaled.iter().sum::<f64>() / n;
        let v = scaled.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn role_swaps_frames() {
        let f = FramePair::new(vec![1.0], vec![2.0]).unwrap();
        assert_eq!(f.orient(Role::Direct), (&[1.0][..], &[2.0][..]));
        assert_eq!(f.orient(Role::Reverse), (&[2.0][..], &[1.0][..]));
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 0]);
        assert_eq!(a, derive_seed(1, &[0, 0]));
        assert_ne!(a, derive_seed(1, &[0, 1]));
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 0]));
    }

    #[test]
    fn entropy_helpers() {
        assert!((entropy_a() - 2.047_095_585_180_641).abs() < 1e-12);
        let rho = 0.9f64;
        let i = entropy_a() - conditional_entropy_a(rho).unwrap();
        assert!((i - mutual_information(rho).unwrap()).abs() < 1e-12);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn snr_rho_round_trip(rho in 1e-6f64..0.999_999) {
            let back = snr_to_rho(rho_to_snr(rho).unwrap()).unwrap();
            prop_assert!((back - rho).abs() < 1e-12);
        }

        #[test]
        fn mutual_information_matches_snr_form(rho in 0.0f64..0.9999) {
            let snr = rho_to_snr(rho).unwrap();
            let lhs = mutual_information(rho).unwrap();
            prop_assert!((lhs - 0.5 * (1.0 + snr).log2()).abs() < 1e-12 * (1.0 + lhs));
        }

        #[test]
        fn mutual_information_increasing(a in 0.0f64..0.999, gap in 1e-6f64..1e-3) {
            let b = (a + gap).min(0.999_999);
            prop_assert!(mutual_information(b).unwrap() > mutual_information(a).unwrap());
            prop_assert_eq!(mutual_information(-a).unwrap(), mutual_information(a).unwrap());
        }
    }
}
