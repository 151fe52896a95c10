//! Monte-Carlo frame simulation.
//!
//! Frame `i` of every point is drawn from the seed `derive_seed(seed, [i])`,
//! so all SNR points (and all `d`, `α` variants) see the same underlying
//! Gaussian draws. Frames are decoded in parallel chunks, then scanned in
//! index order to apply the stop rule; the result therefore does not
//! depend on the number of workers.

use std::sync::Mutex;

use nbrecon::decoder::{Decoder, DecoderConfig};
use nbrecon::gf::GaloisField;
use nbrecon::ldpc::{assign_labels, named_profile, peg_construct, read_code, PegConfig, Profile, SparseParityCheck};
use nbrecon::protocol::{alice_messages, bob_reconcile_with, Efficiency, EntropyModel, ProtocolError, ProtocolParams};
use nbrecon::quantizer::{conditional_entropy_mc, discrete_entropy, QuantizationGrid, SymbolSplit};
use nbrecon::source::{derive_seed, linear_to_db, mutual_information, rho_to_snr, sample_frames, snr_db_to_rho};
use rayon::prelude::*;

use crate::config::{CodeChoice, ExperimentSpec, StopRule};
use crate::stats::wilson95;
use crate::SimError;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "NBRECON_WORKERS";

/// Stream index reserved for the entropy estimate behind `beta`.
const MC_STREAM: u64 = u64::MAX;

/// Thread pool that runs frames.
pub struct Engine {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Engine {
    /// Uses `workers` if given, else `NBRECON_WORKERS`, else the number of
    /// available cores.
    pub fn new(workers: Option<usize>) -> Result<Self, SimError> {
        let from_env = || {
            std::env::var(WORKERS_ENV).ok().map(|v| {
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&w| w > 0)
                    .ok_or_else(|| SimError::Workers(format!("{WORKERS_ENV}={v:?} is not a positive integer")))
            })
        };
        let workers = match workers {
            Some(w) => w,
            None => match from_env() {
                Some(w) => w?,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            },
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| SimError::Workers(e.to_string()))?;
        Ok(Self { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

/// Builds (or loads) the code an experiment asks for.
pub fn build_code(spec: &ExperimentSpec) -> Result<SparseParityCheck, SimError> {
    let field = GaloisField::new(spec.q)?;
    let (profile, rate) = match &spec.code {
        CodeChoice::Regular { rate } => (Profile::Regular { dv: 2 }, *rate),
        CodeChoice::Named(name) => {
            let (_, dist, rate) =
                named_profile(name).ok_or_else(|| SimError::Config(format!("unknown profile {name}")))?;
            (Profile::Irregular(dist), rate)
        }
        CodeChoice::File(path) => {
            let code = read_code(path)?;
            if code.n() != spec.n || code.field().q() != spec.q {
                return Err(SimError::Config(format!(
                    "{}: code has n={}, q={} but the experiment asks for n={}, q={}",
                    path.display(),
                    code.n(),
                    code.field().q(),
                    spec.n,
                    spec.q
                )));
            }
            return Ok(code);
        }
    };
    let m = ((1.0 - rate) * spec.n as f64).round() as usize;
    let skeleton = peg_construct(spec.n, m, &profile, &PegConfig::new(spec.code_seed))?;
    Ok(assign_labels(&skeleton, &field, derive_seed(spec.code_seed, &[1]))?)
}

/// Protocol parameters of `spec` over `code`, at the SNR of `snr_db`.
pub fn protocol_params(
    spec: &ExperimentSpec,
    code: &SparseParityCheck,
    snr_db: f64,
) -> Result<ProtocolParams, SimError> {
    let grid = QuantizationGrid::new(spec.alpha, spec.p())?;
    let split = SymbolSplit::new(spec.q, spec.d)?;
    let rho = snr_db_to_rho(snr_db)?;
    Ok(ProtocolParams::new(grid, split, code.clone(), rho)?)
}

/// Outcome of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameOutcome {
    pub decoded: bool,
    pub symbols_match: bool,
    pub iterations: usize,
}

impl FrameOutcome {
    /// A frame fails if decoding fails or leaves residual symbol errors.
    pub fn is_error(&self) -> bool {
        !self.decoded || !self.symbols_match
    }
}

/// One SNR point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub rho: f64,
    pub frames: u64,
    pub errors: u64,
    /// Frames that satisfied the syndrome but still differ from the reference.
    pub undetected: u64,
    pub fer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub iters_mean: f64,
    pub efficiency: Efficiency,
}

pub fn simulate_frame(
    params: &ProtocolParams,
    decoder: &mut Decoder<'_>,
    seed: u64,
    index: u64,
    config: &DecoderConfig,
) -> Result<FrameOutcome, SimError> {
    let frames = sample_frames(params.rho(), params.n(), derive_seed(seed, &[index]))?;
    let (message, z_a) = alice_messages(params, &frames.y_a);
    let (z_b, result) = bob_reconcile_with(params, decoder, &frames.y_b, &message, config);
    Ok(FrameOutcome { decoded: result.success, symbols_match: z_a == z_b, iterations: result.iterations_used })
}

/// Runs frames at `params.rho()` until `stop` says done.
pub fn run_point(
    engine: &Engine,
    params: &ProtocolParams,
    spec: &ExperimentSpec,
    stop: StopRule,
) -> Result<PointResult, SimError> {
    let pool: Mutex<Vec<Decoder<'_>>> = Mutex::new(Vec::new());
    let chunk = (4 * engine.workers).max(4) as u64;
    let (mut frames, mut errors, mut undetected, mut iterations) = (0u64, 0u64, 0u64, 0u64);
    let mut next = 0u64;
    'outer: while next < stop.max_frames {
        let end = (next + chunk).min(stop.max_frames);
        let outcomes: Vec<Result<FrameOutcome, SimError>> = engine.pool.install(|| {
            (next..end)
                .into_par_iter()
                .map(|i| {
                    let mut decoder = pool.lock().unwrap().pop().unwrap_or_else(|| Decoder::new(params.code()));
                    let out = simulate_frame(params, &mut decoder, spec.seed, i, &spec.decoder);
                    pool.lock().unwrap().push(decoder);
                    out
                })
                .collect()
        });
        for outcome in outcomes {
            let outcome = outcome?;
            frames += 1;
            iterations += outcome.iterations as u64;
            if outcome.is_error() {
                errors += 1;
                if outcome.decoded {
                    undetected += 1;
                }
            }
            if stop.done(frames, errors) {
                break 'outer;
            }
        }
        next = end;
    }
    let (ci_lo, ci_hi) = wilson95(errors, frames);
    let model =
        EntropyModel::estimate(params.grid(), params.rho(), spec.mc_samples, derive_seed(spec.seed, &[MC_STREAM]))?;
    Ok(PointResult {
        snr_db: linear_to_db(rho_to_snr(params.rho())?),
        rho: params.rho(),
        frames,
        errors,
        undetected,
        fer: errors as f64 / frames as f64,
        ci_lo,
        ci_hi,
        iters_mean: iterations as f64 / frames as f64,
        efficiency: match model.efficiency(params.source_rate()) {
            Err(ProtocolError::MutualInformation(_)) => Efficiency::undefined(),
            other => other?,
        },
    })
}

fn point_at(
    engine: &Engine,
    spec: &ExperimentSpec,
    code: &SparseParityCheck,
    snr_db: f64,
    stop: StopRule,
) -> Result<PointResult, SimError> {
    let params = protocol_params(spec, code, snr_db)?;
    let mut point = run_point(engine, &params, spec, stop)?;
    // Report the requested grid value rather than the round trip through rho.
    point.snr_db = snr_db;
    Ok(point)
}

/// FER at every SNR of `spec.snr_db`.
pub fn fer_sweep(
    engine: &Engine,
    spec: &ExperimentSpec,
    code: &SparseParityCheck,
) -> Result<Vec<PointResult>, SimError> {
    spec.validate()?;
    spec.snr_db.iter().map(|&s| point_at(engine, spec, code, s, spec.stop)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdStatus {
    /// The probe's confidence interval contains the target or lies within
    /// ±0.02 of it.
    Converged,
    /// The SNR bracket shrank below the tolerance first.
    Bracketed,
    /// FER is already at or below target at the low end of the bracket.
    BelowRange,
    /// FER is still above target at the high end of the bracket.
    AboveRange,
}

impl ThresholdStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Bracketed => "bracketed",
            Self::BelowRange => "below-range",
            Self::AboveRange => "above-range",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Converged, Self::Bracketed, Self::BelowRange, Self::AboveRange].into_iter().find(|v| v.as_str() == s)
    }

    pub fn found(&self) -> bool {
        matches!(self, Self::Converged | Self::Bracketed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub status: ThresholdStatus,
    /// The accepted probe (or the offending bracket end when out of range).
    pub point: PointResult,
    /// Every point evaluated, in order.
    pub probes: Vec<PointResult>,
}

/// Whether a probe pins the target FER.
pub fn accepts(point: &PointResult, target: f64) -> bool {
    let brackets = point.ci_lo <= target && target <= point.ci_hi;
    let close = point.ci_lo >= target - 0.02 && point.ci_hi <= target + 0.02;
    brackets || close
}

/// Bisection on a monotone (decreasing in SNR) FER curve given as a probe
/// function.
pub fn bisect_threshold(
    lo: f64,
    hi: f64,
    target: f64,
    tolerance: f64,
    max_steps: usize,
    mut probe: impl FnMut(f64) -> Result<PointResult, SimError>,
) -> Result<Threshold, SimError> {
    let mut probes = Vec::new();
    let low = probe(lo)?;
    probes.push(low.clone());
    if low.fer <= target {
        return Ok(Threshold { status: ThresholdStatus::BelowRange, point: low, probes });
    }
    let high = probe(hi)?;
    probes.push(high.clone());
    if high.fer > target {
        return Ok(Threshold { status: ThresholdStatus::AboveRange, point: high, probes });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut last = high;
    for _ in 0..max_steps.max(1) {
        let mid = 0.5 * (lo + hi);
        let p = probe(mid)?;
        probes.push(p.clone());
        if accepts(&p, target) {
            return Ok(Threshold { status: ThresholdStatus::Converged, point: p, probes });
        }
        if p.fer > target {
            lo = mid;
        } else {
            hi = mid;
        }
        last = p;
        if hi - lo < tolerance {
            break;
        }
    }
    Ok(Threshold { status: ThresholdStatus::Bracketed, point: last, probes })
}

/// SNR (dB) at which the target FER is crossed, searched between the first
/// and last entries of `spec.snr_db`, with the efficiency there.
pub fn efficiency_at_fer(
    engine: &Engine,
    spec: &ExperimentSpec,
    code: &SparseParityCheck,
) -> Result<Threshold, SimError> {
    spec.validate()?;
    let lo = spec.snr_db[0];
    let hi = *spec.snr_db.last().unwrap();
    let stop = StopRule { min_frames: spec.probe_min_frames, ..spec.stop };
    bisect_threshold(lo, hi, spec.target_fer, spec.snr_tolerance, spec.max_bisections, |s| {
        point_at(engine, spec, code, s, stop)
    })
}

/// An SNR bracket from information limits: from the Slepian–Wolf point,
/// where the disclosed rate equals `H(Z_A|Y_B)`, up to the SNR at which the
/// efficiency would drop to `beta_floor`.
pub fn information_bracket(spec: &ExperimentSpec, rate: f64, beta_floor: f64) -> Result<(f64, f64), SimError> {
    let grid = QuantizationGrid::new(spec.alpha, spec.p())?;
    let r_source = spec.p() as f64 - spec.q as f64 * rate;
    let h = discrete_entropy(&grid);
    if h <= r_source {
        return Err(SimError::Config(format!(
            "disclosed rate {r_source:.3} is not below H(Z_A) = {h:.3}; no SNR gives positive efficiency"
        )));
    }
    // H(Z_A|Y_B) decreases with SNR; bisect on it with a fixed sample stream.
    let samples = spec.mc_samples.min(4000);
    let cond = |snr_db: f64| -> Result<f64, SimError> {
        Ok(conditional_entropy_mc(&grid, snr_db_to_rho(snr_db)?, samples, derive_seed(spec.seed, &[MC_STREAM]))?.mean)
    };
    let (mut a, mut b) = (-20.0, 60.0);
    if cond(a)? <= r_source {
        return Ok((a, a + 1.0));
    }
    for _ in 0..40 {
        let mid = 0.5 * (a + b);
        if cond(mid)? > r_source {
            a = mid;
        } else {
            b = mid;
        }
    }
    let sw_db = b;
    let i_needed = (h - r_source) / beta_floor;
    let snr_hi = (2.0f64).powf(2.0 * i_needed) - 1.0;
    let hi_db = linear_to_db(snr_hi).max(sw_db + 0.5);
    debug_assert!(mutual_information(snr_db_to_rho(hi_db)?)? > 0.0);
    Ok((round3(sw_db), round3(hi_db)))
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// FER curves for each `d` in `spec.d_values`, sharing one code and one set
/// of frames.
pub fn d_saturation_study(
    engine: &Engine,
    spec: &ExperimentSpec,
    code: &SparseParityCheck,
) -> Result<Vec<(u32, Vec<PointResult>)>, SimError> {
    spec.d_values
        .iter()
        .map(|&d| {
            let s = ExperimentSpec { d, ..spec.clone() };
            Ok((d, fer_sweep(engine, &s, code)?))
        })
        .collect()
}

/// Threshold and efficiency for each cutoff in `spec.alphas`, with the
/// search bracket derived per cutoff from [`information_bracket`].
pub fn alpha_sweep(
    engine: &Engine,
    spec: &ExperimentSpec,
    code: &SparseParityCheck,
    beta_floor: f64,
) -> Result<Vec<(f64, Threshold)>, SimError> {
    let rate = code.design_rate();
    spec.alphas
        .iter()
        .map(|&alpha| {
            let mut s = ExperimentSpec { alpha, ..spec.clone() };
            let (lo, hi) = information_bracket(&s, rate, beta_floor)?;
            s.snr_db = vec![lo, hi];
            Ok((alpha, efficiency_at_fer(engine, &s, code)?))
        })
        .collect()
}
