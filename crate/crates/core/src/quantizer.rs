//! Equidistant quantization of the scaled source and the probabilities the
//! decoder and the efficiency accounting are built on.
//!
//! The interval `[-alpha, alpha)` is cut into `2^p` bins of width
//! `delta = 2·alpha / 2^p`; the two outer bins extend to infinity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::source::{self, SourceError};

/// Largest number of bits per quantized symbol.
pub const MAX_BITS: u32 = 16;

/// Below this the unnormalized a-priori masses are recomputed in the log
/// domain.
const UNDERFLOW_MASS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuantizerError {
    #[error("cutoff must be positive and finite, got {0}")]
    Alpha(f64),
    #[error("bits per symbol must be in 1..={MAX_BITS}, got {0}")]
    Bits(u32),
    #[error("symbol split q={q}, d={d} is invalid (need q >= 1, q + d <= {MAX_BITS})")]
    Split { q: u32, d: u32 },
    #[error("split q + d = {split} does not match grid resolution p = {grid}")]
    SplitMismatch { split: u32, grid: u32 },
    #[error(transparent)]
    Source(#[from] SourceError),
}

/// Quantized symbol in `[0, 2^p)`.
pub type Bin = u16;

/// The partition of the real line into `2^p` bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationGrid {
    alpha: f64,
    p: u32,
    delta: f64,
}

impl QuantizationGrid {
    pub fn new(alpha: f64, p: u32) -> Result<Self, QuantizerError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(QuantizerError::Alpha(alpha));
        }
        if p == 0 || p > MAX_BITS {
            return Err(QuantizerError::Bits(p));
        }
        Ok(Self { alpha, p, delta: 2.0 * alpha / (1u64 << p) as f64 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn bins(&self) -> usize {
        1 << self.p
    }

    /// Left end `a_k`; `-inf` for the first bin.
    pub fn lower(&self, k: usize) -> f64 {
        if k == 0 {
            f64::NEG_INFINITY
        } else {
            -self.alpha + k as f64 * self.delta
        }
    }

    /// Right end `b_k`; `+inf` for the last bin.
    pub fn upper(&self, k: usize) -> f64 {
        if k + 1 == self.bins() {
            f64::INFINITY
        } else {
            -self.alpha + (k + 1) as f64 * self.delta
        }
    }

    /// Index of the bin containing `y`. Values beyond the cutoff land in
    /// the outer bins.
    ///
    /// Panics on NaN.
    pub fn quantize(&self, y: f64) -> Bin {
        assert!(!y.is_nan(), "cannot quantize NaN");
        let top = (self.bins() - 1) as f64;
        ((y + self.alpha) / self.delta).floor().clamp(0.0, top) as Bin
    }

    pub fn quantize_frame(&self, y: &[f64]) -> Vec<Bin> {
        y.iter().map(|&v| self.quantize(v)).collect()
    }
}

/// Division of a `p`-bit symbol into `q` most significant bits (corrected by
/// the code) and `d` least significant bits (disclosed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolSplit {
    q: u32,
    d: u32,
}

impl SymbolSplit {
    pub fn new(q: u32, d: u32) -> Result<Self, QuantizerError> {
        if q == 0 || q > 8 || q + d > MAX_BITS {
            return Err(QuantizerError::Split { q, d });
        }
        Ok(Self { q, d })
    }

    /// Split whose resolution matches `grid`.
    pub fn for_grid(grid: &QuantizationGrid, q: u32) -> Result<Self, QuantizerError> {
        if q > grid.p() {
            return Err(QuantizerError::Split { q, d: 0 });
        }
        Self::new(q, grid.p() - q)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn p(&self) -> u32 {
        self.q + self.d
    }

    pub fn check_grid(&self, grid: &QuantizationGrid) -> Result<(), QuantizerError> {
        if self.p() != grid.p() {
            return Err(QuantizerError::SplitMismatch { split: self.p(), grid: grid.p() });
        }
        Ok(())
    }

    /// `(k >> d, k mod 2^d)`.
    #[inline]
    pub fn split(&self, k: Bin) -> (u8, Bin) {
        debug_assert!((k as u32) < 1 << self.p());
        ((k >> self.d) as u8, k & ((1 << self.d) - 1))
    }

    #[inline]
    pub fn recombine(&self, hat: u8, check: Bin) -> Bin {
        debug_assert!((hat as u32) < 1 << self.q && (check as u32) < 1 << self.d);
        ((hat as Bin) << self.d) | check
    }
}

/// `½ (erf(hi) - erf(lo))` for `lo <= hi`, evaluated through `erfc` on the
/// tail side so the difference keeps its relative precision.
fn half_erf_diff(lo: f64, hi: f64) -> f64 {
    let v = if lo >= 0.0 {
        libm::erfc(lo) - libm::erfc(hi)
    } else if hi <= 0.0 {
        libm::erfc(-hi) - libm::erfc(-lo)
    } else {
        libm::erf(hi) - libm::erf(lo)
    };
    (0.5 * v).max(0.0)
}

/// `ln erfc(x)`, finite far beyond the point where `erfc` underflows.
fn ln_erfc(x: f64) -> f64 {
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x < 25.0 {
        return libm::erfc(x).ln();
    }
    let x2 = x * x;
    let inv = 1.0 / (2.0 * x2);
    // Asymptotic series erfc(x) ~ exp(-x²)/(x√π) · (1 - 1/(2x²) + 3/(4x⁴) - 15/(8x⁶)).
    let series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv;
    -x2 - (x * std::f64::consts::PI.sqrt()).ln() + series.ln()
}

/// `ln(½ (erf(hi) - erf(lo)))`.
fn ln_half_erf_diff(lo: f64, hi: f64) -> f64 {
    let (lo, hi) = if hi <= 0.0 { (-hi, -lo) } else { (lo, hi) };
    if lo < 0.0 {
        // Straddles the mean: at least one side is a sizeable mass.
        return half_erf_diff(lo, hi).ln();
    }
    let (a, b) = (ln_erfc(lo), ln_erfc(hi));
    if a == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    a - std::f64::consts::LN_2 + (-(b - a).exp()).ln_1p()
}

/// Standardized bin ends `(a_k - μ)/sqrt(2σ²)` and `(b_k - μ)/sqrt(2σ²)`.
#[inline]
fn standardized(grid: &QuantizationGrid, mean: f64, scale: f64, k: usize) -> (f64, f64) {
    ((grid.lower(k) - mean) / scale, (grid.upper(k) - mean) / scale)
}

fn conditional_scale(rho: f64) -> Result<f64, QuantizerError> {
    source::check_rho(rho)?;
    Ok((2.0 * (1.0 - rho * rho)).sqrt())
}

/// `P(Z_A = k | Y_B = y_b)`.
pub fn interval_prob(grid: &QuantizationGrid, rho: f64, y_b: f64, k: usize) -> Result<f64, QuantizerError> {
    let scale = conditional_scale(rho)?;
    let (lo, hi) = standardized(grid, y_b * rho, scale, k);
    Ok(half_erf_diff(lo, hi))
}

/// The whole conditional distribution of `Z_A` given `y_b`, one `erfc`
/// evaluation per bin boundary.
pub fn conditional_distribution(grid: &QuantizationGrid, rho: f64, y_b: f64) -> Result<Vec<f64>, QuantizerError> {
    let scale = conditional_scale(rho)?;
    let mut out = vec![0.0; grid.bins()];
    fill_conditional(grid, y_b * rho, scale, &mut out);
    Ok(out)
}

fn fill_conditional(grid: &QuantizationGrid, mean: f64, scale: f64, out: &mut [f64]) {
    let bins = grid.bins();
    // Tail mass beyond each boundary on the far side from the mean: for a
    // boundary above the mean P(Y > t), below it P(Y < t).
    let tail = |t: f64| {
        let u = (t - mean) / scale;
        0.5 * libm::erfc(u.abs())
    };
    let mut prev_t = f64::NEG_INFINITY;
    let mut prev_tail = 0.0;
    for (k, slot) in out.iter_mut().enumerate() {
        let t = if k + 1 == bins { f64::INFINITY } else { grid.upper(k) };
        let t_tail = if t.is_infinite() { 0.0 } else { tail(t) };
        let mass = if prev_t >= mean {
            prev_tail - t_tail
        } else if t <= mean {
            t_tail - prev_tail
        } else {
            1.0 - prev_tail - t_tail
        };
        *slot = mass.max(0.0);
        prev_t = t;
        prev_tail = t_tail;
    }
}

/// Bayes a-priori distribution of the `q` most significant bits given the
/// side information `y_b` and the disclosed low bits `k_check`.
pub fn apriori_vector(
    grid: &QuantizationGrid,
    split: &SymbolSplit,
    rho: f64,
    y_b: f64,
    k_check: Bin,
) -> Result<Vec<f64>, QuantizerError> {
    split.check_grid(grid)?;
    let scale = conditional_scale(rho)?;
    let mut out = vec![0.0; 1 << split.q()];
    apriori_into(grid, split, y_b * rho, scale, k_check, &mut out);
    Ok(out)
}

/// Writes the a-priori vector into `out` (length `2^q`). `mean` and
/// `scale` are the conditional mean and `sqrt(2σ²)`.
pub(crate) fn apriori_into(
    grid: &QuantizationGrid,
    split: &SymbolSplit,
    mean: f64,
    scale: f64,
    k_check: Bin,
    out: &mut [f64],
) {
    assert!((k_check as u32) < 1 << split.d(), "disclosed bits out of range");
    debug_assert_eq!(out.len(), 1 << split.q());
    let bin = |hat: usize| split.recombine(hat as u8, k_check) as usize;
    let mut max = 0.0f64;
    for (hat, slot) in out.iter_mut().enumerate() {
        let (lo, hi) = standardized(grid, mean, scale, bin(hat));
        *slot = half_erf_diff(lo, hi);
        max = max.max(*slot);
    }
    if max < UNDERFLOW_MASS {
        let mut log_max = f64::NEG_INFINITY;
        for (hat, slot) in out.iter_mut().enumerate() {
            let (lo, hi) = standardized(grid, mean, scale, bin(hat));
            *slot = ln_half_erf_diff(lo, hi);
            log_max = log_max.max(*slot);
        }
        if log_max == f64::NEG_INFINITY {
            out.fill(0.0);
            out[nearest_candidate(grid, split, mean, k_check)] = 1.0;
            return;
        }
        out.iter_mut().for_each(|v| *v = (*v - log_max).exp());
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
}

/// Candidate (over the high bits) whose bin lies closest to `mean`.
fn nearest_candidate(grid: &QuantizationGrid, split: &SymbolSplit, mean: f64, k_check: Bin) -> usize {
    let distance = |hat: usize| {
        let k = split.recombine(hat as u8, k_check) as usize;
        let (a, b) = (grid.lower(k), grid.upper(k));
        if mean < a {
            a - mean
        } else if mean >= b {
            mean - b
        } else {
            0.0
        }
    };
    (0..1usize << split.q()).min_by(|&x, &y| distance(x).total_cmp(&distance(y))).unwrap_or(0)
}

fn entropy_bits(dist: &[f64]) -> f64 {
    -dist.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// Marginal distribution of `Z_A`, `Φ(b_k) - Φ(a_k)`.
pub fn marginal_distribution(grid: &QuantizationGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.bins()];
    fill_conditional(grid, 0.0, std::f64::consts::SQRT_2, &mut out);
    out
}

/// `H(Z_A)` by direct summation over the bins.
pub fn discrete_entropy(grid: &QuantizationGrid) -> f64 {
    entropy_bits(&marginal_distribution(grid))
}

/// `h(Y_A) - log2 δ`, the fine-quantization approximation of `H(Z_A)`.
pub fn entropy_approx(grid: &QuantizationGrid) -> f64 {
    source::entropy_a() - grid.delta().log2()
}

/// `h(Y_A|Y_B) - log2 δ`, the same approximation for the conditional entropy.
pub fn conditional_entropy_approx(grid: &QuantizationGrid, rho: f64) -> Result<f64, QuantizerError> {
    Ok(source::conditional_entropy_a(rho)? - grid.delta().log2())
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

/// `H(Z_A | Y_B)` averaged over `num_samples` draws of `y_b`.
pub fn conditional_entropy_mc(
    grid: &QuantizationGrid,
    rho: f64,
    num_samples: usize,
    seed: u64,
) -> Result<Estimate, QuantizerError> {
    assert!(num_samples >= 1, "need at least one sample");
    let scale = conditional_scale(rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dist = vec![0.0; grid.bins()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..num_samples {
        let y_b: f64 = StandardNormal.sample(&mut rng);
        fill_conditional(grid, y_b * rho, scale, &mut dist);
        let h = entropy_bits(&dist);
        sum += h;
        sum_sq += h * h;
    }
    let n = num_samples as f64;
    let mean = sum / n;
    let var = if num_samples > 1 { (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0) } else { 0.0 };
    Ok(Estimate { mean, std_err: (var / n).sqrt() })
}

/// `I(Z_A; Y_B) = H(Z_A) - H(Z_A|Y_B)`, the conditional term estimated by
/// Monte-Carlo.
pub fn quantized_mutual_information(
    grid: &QuantizationGrid,
    rho: f64,
    num_samples: usize,
    seed: u64,
) -> Result<Estimate, QuantizerError> {
    let cond = conditional_entropy_mc(grid, rho, num_samples, seed)?;
    Ok(Estimate { mean: discrete_entropy(grid) - cond.mean, std_err: cond.std_err })
}

/// `β_Q = I(Z_A; Y_B) / I(Y_A; Y_B)`.
pub fn quantization_efficiency(
    grid: &QuantizationGrid,
    rho: f64,
    num_samples: usize,
    seed: u64,
) -> Result<Estimate, QuantizerError> {
    let i = source::mutual_information(rho)?;
    let iq = quantized_mutual_information(grid, rho, num_samples, seed)?;
    Ok(Estimate { mean: iq.mean / i, std_err: iq.std_err / i })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> (QuantizationGrid, f64, f64) {
        (QuantizationGrid::new(3.0, 5).unwrap(), 0.75f64.sqrt(), (4.0f64 / 3.0).sqrt())
    }

    /// Composite Simpson integration of the conditional density over a bin,
    /// with infinite ends truncated twelve deviations from the mean.
    fn simpson_bin_mass(a: f64, b: f64, mean: f64, var: f64) -> f64 {
        let sd = var.sqrt();
        let a = a.max(mean - 12.0 * sd);
        let b = b.min(mean + 12.0 * sd);
        if b <= a {
            return 0.0;
        }
        let pdf = |x: f64| (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = pdf(a) + pdf(b);
        for i in 1..n {
            s += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn quantize_examples() {
        let g = QuantizationGrid::new(3.0, 5).unwrap();
        assert_eq!(g.delta(), 0.1875);
        assert_eq!(g.quantize(0.0), 16);
        assert_eq!(g.quantize(-100.0), 0);
        assert_eq!(g.quantize(100.0), 31);
        assert_eq!(g.quantize(-3.0), 0);
        assert_eq!(g.quantize(-3.0 + 0.1875), 1);
        assert_eq!(g.quantize(2.999), 31);
    }

    #[test]
    #[should_panic(expected = "NaN")]
    fn quantize_nan_panics() {
        QuantizationGrid::new(3.0, 5).unwrap().quantize(f64::NAN);
    }

    #[test]
    fn grid_validation() {
        assert!(QuantizationGrid::new(0.0, 5).is_err());
        assert!(QuantizationGrid::new(f64::INFINITY, 5).is_err());
        assert!(QuantizationGrid::new(3.0, 0).is_err());
        assert!(QuantizationGrid::new(3.0, 17).is_err());
    }

    #[test]
    fn split_examples() {
        let s = SymbolSplit::new(3, 2).unwrap();
        assert_eq!(s.split(22), (5, 2));
        assert_eq!(s.recombine(5, 2), 22);
        let none = SymbolSplit::new(5, 0).unwrap();
        assert_eq!(none.split(22), (22, 0));
        for k in 0..32 {
            let (h, c) = s.split(k);
            assert_eq!(s.recombine(h, c), k);
        }
        assert!(SymbolSplit::new(0, 3).is_err());
        let g = QuantizationGrid::new(8.0, 8).unwrap();
        assert_eq!(SymbolSplit::for_grid(&g, 5).unwrap(), SymbolSplit::new(5, 3).unwrap());
        assert!(SymbolSplit::new(5, 2).unwrap().check_grid(&g).is_err());
    }

    #[test]
    fn interval_prob_sums_to_one() {
        let (g, rho, y_b) = fig1();
        let total: f64 = (0..32).map(|k| interval_prob(&g, rho, y_b, k).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn interval_prob_independent_of_y_b_at_zero_rho() {
        let g = QuantizationGrid::new(3.0, 5).unwrap();
        for k in 0..32 {
            let a = interval_prob(&g, 0.0, -2.0, k).unwrap();
            let b = interval_prob(&g, 0.0, 5.0, k).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn interval_prob_matches_quadrature() {
        let (g, rho, y_b) = fig1();
        let (mean, var) = (y_b * rho, 1.0 - rho * rho);
        let probs: Vec<f64> = (0..32).map(|k| interval_prob(&g, rho, y_b, k).unwrap()).collect();
        for (k, &p) in probs.iter().enumerate() {
            let q = simpson_bin_mass(g.lower(k), g.upper(k), mean, var);
            assert!((p - q).abs() < 1e-10, "bin {k}: {p} vs {q}");
        }
        let argmax = (0..32).max_by(|&a, &b| probs[a].total_cmp(&probs[b])).unwrap();
        assert_eq!(argmax, 21);
        // Frozen from a 40-digit evaluation.
        assert!((probs[21] - 0.148_444_550_513_036_6).abs() < 1e-14);
    }

    #[test]
    fn bulk_distribution_agrees_with_per_bin() {
        let g = QuantizationGrid::new(8.0, 8).unwrap();
        for &(rho, y_b) in &[(0.9, 0.3), (0.999, -2.5), (0.0, 1.0), (0.5, 9.0), (-0.7, -4.0)] {
            let bulk = conditional_distribution(&g, rho, y_b).unwrap();
            for (k, &b) in bulk.iter().enumerate() {
                let single = interval_prob(&g, rho, y_b, k).unwrap();
                assert!((b - single).abs() < 1e-15, "rho={rho} y_b={y_b} k={k}");
            }
        }
    }

    #[test]
    fn apriori_fig1_example() {
        let (g, rho, y_b) = fig1();
        let s = SymbolSplit::new(3, 2).unwrap();
        let v = apriori_vector(&g, &s, rho, y_b, 2).unwrap();
        // Bins 2, 6, ..., 30 normalized; frozen from a 40-digit evaluation.
        let expected = [
            1.156_530_340_312_742e-11,
            1.353_269_112_592_154e-7,
            1.705_081_940_292_939e-4,
            2.318_060_094_368_599_3e-2,
            3.405_744_795_636_620_5e-1,
            5.412_735_258_119_266e-1,
            9.307_044_199_269_315e-2,
            1.730_308_155_526_418_4e-3,
        ];
        for (a, e) in v.iter().zip(expected) {
            assert!((a - e).abs() <= 1e-12 * e.max(1e-3), "{a} vs {e}");
        }
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn apriori_without_disclosure_is_full_conditional() {
        let g = QuantizationGrid::new(3.0, 5).unwrap();
        let s = SymbolSplit::new(5, 0).unwrap();
        let v = apriori_vector(&g, &s, 0.8, 0.4, 0).unwrap();
        let full = conditional_distribution(&g, 0.8, 0.4).unwrap();
        for (a, b) in v.iter().zip(&full) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn apriori_survives_underflow() {
        // Conditional deviation of 1e-4 with the disclosed bits pointing at
        // bins hundreds of deviations away from the mean.
        let g = QuantizationGrid::new(8.0, 8).unwrap();
        let s = SymbolSplit::new(5, 3).unwrap();
        let rho = (1.0f64 - 1e-8).sqrt();
        let y_b = 0.0;
        let true_bin = g.quantize(0.0);
        let (_, check) = s.split(true_bin);
        let wrong = (check + 4) % 8;
        let v = apriori_vector(&g, &s, rho, y_b, wrong).unwrap();
        assert!(v.iter().all(|x| x.is_finite() && *x >= 0.0));
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // The nearest candidate bin to the mean takes essentially all mass.
        let best = v.iter().cloned().fold(0.0, f64::max);
        assert!(best > 0.99);
    }

    #[test]
    fn ln_helpers_match_direct_evaluation() {
        for &x in &[0.0, 0.5, 3.0, 10.0, 24.9] {
            assert!((ln_erfc(x) - libm::erfc(x).ln()).abs() < 1e-12);
        }
        // Continuity across the asymptotic switch.
        let direct = libm::erfc(25.5).ln();
        let x = 25.5f64;
        let x2 = x * x;
        let inv = 1.0 / (2.0 * x2);
        let series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv;
        let asym = -x2 - (x * std::f64::consts::PI.sqrt()).ln() + series.ln();
        assert!((direct - asym).abs() < 1e-9);
        assert!((ln_half_erf_diff(1.0, 2.0) - half_erf_diff(1.0, 2.0).ln()).abs() < 1e-12);
        assert!((ln_half_erf_diff(-2.0, -1.0) - half_erf_diff(-2.0, -1.0).ln()).abs() < 1e-12);
        assert!(ln_half_erf_diff(40.0, 41.0).is_finite());
    }

    #[test]
    fn entropy_example_alpha3_p5() {
        let g = QuantizationGrid::new(3.0, 5).unwrap();
        let h = discrete_entropy(&g);
        // Direct 40-digit summation.
        assert!((h - 4.453_809_127_667_977).abs() < 1e-10);
        assert!((h - entropy_approx(&g)).abs() < 0.01);
        assert!((entropy_approx(&g) - 4.462).abs() < 1e-3);
    }

    #[test]
    fn entropy_bounds() {
        let g = QuantizationGrid::new(50.0, 1).unwrap();
        assert!((discrete_entropy(&g) - 1.0).abs() < 1e-12);
        for p in 1..=12 {
            for &alpha in &[0.5, 3.0, 8.0, 20.0] {
                let g = QuantizationGrid::new(alpha, p).unwrap();
                let h = discrete_entropy(&g);
                assert!(h >= 0.0 && h <= p as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn conditional_entropy_at_zero_rho_is_marginal() {
        let g = QuantizationGrid::new(3.0, 5).unwrap();
        let est = conditional_entropy_mc(&g, 0.0, 200, 1).unwrap();
        assert!((est.mean - discrete_entropy(&g)).abs() < 1e-9);
    }

    #[test]
    fn conditional_entropy_matches_approximation() {
        // Inside the cutoff the conditional law barely changes with y_b, so
        // the estimate has almost no spread; compare against the
        // approximation plus its leading correction δ²/(24σ² ln 2).
        let g = QuantizationGrid::new(8.0, 8).unwrap();
        let rho = 0.866;
        let est = conditional_entropy_mc(&g, rho, 20_000, 7).unwrap();
        let var = 1.0 - rho * rho;
        let corrected = conditional_entropy_approx(&g, rho).unwrap()
            + g.delta() * g.delta() / (24.0 * var * std::f64::consts::LN_2);
        assert!((est.mean - corrected).abs() < 1e-5, "{} vs {corrected}", est.mean);
    }

    #[test]
    fn conditional_entropy_decreases_with_correlation() {
        let g = QuantizationGrid::new(8.0, 8).unwrap();
        let lo = conditional_entropy_mc(&g, 0.7, 2_000, 3).unwrap();
        let hi = conditional_entropy_mc(&g, 0.9, 2_000, 3).unwrap();
        assert!(hi.mean < lo.mean);
    }

    #[test]
    fn quantization_efficiency_limits() {
        let fine = QuantizationGrid::new(10.0, 12).unwrap();
        let b = quantization_efficiency(&fine, 0.9, 5_000, 1).unwrap();
        assert!((b.mean - 1.0).abs() < 0.01, "{b:?}");
        assert!(b.mean <= 1.0 + 3.0 * b.std_err);

        let coarse = QuantizationGrid::new(0.5, 1).unwrap();
        let b = quantization_efficiency(&coarse, 0.9, 5_000, 1).unwrap();
        assert!(b.mean < 0.6, "{b:?}");
    }
}
