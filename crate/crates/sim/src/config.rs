//! Experiment description and its `key = value` file format.
//!
//! ```text
//! # GF(32), rate 0.7, d = 3
//! q = 5
//! rate = 0.7
//! n = 1000
//! alpha = 8
//! d = 3
//! snr_db = 10:14:0.5
//! max_frames = 1000
//! ```
//!
//! Lists are comma separated; `a:b:step` expands to an inclusive range.
//! Later assignments override earlier ones, which is how command-line
//! `--set key=value` flags are applied on top of a file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nbrecon::decoder::DecoderConfig;
use nbrecon::ldpc::named_profile;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}: line {line}: {message}")]
    Syntax { origin: String, line: usize, message: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("{key}: cannot parse {value:?}: {message}")]
    Value { key: String, value: String, message: String },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Which parity-check matrix an experiment uses.
#[derive(Debug, Clone, PartialEq)]
pub enum CodeChoice {
    /// `(2, d_c)`-regular code of design rate `R`.
    Regular { rate: f64 },
    /// A built-in irregular profile; fixes `q` and `R`.
    Named(String),
    /// A code file written by `construct`.
    File(PathBuf),
}

/// When a simulation point stops drawing frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_frames: u64,
    pub max_frames: u64,
    pub max_errors: u64,
}

impl StopRule {
    /// Whether a point with `frames` run and `errors` observed is done.
    pub fn done(&self, frames: u64, errors: u64) -> bool {
        frames >= self.max_frames || (frames >= self.min_frames && errors >= self.max_errors)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub q: u32,
    pub code: CodeChoice,
    pub n: usize,
    pub alpha: f64,
    pub d: u32,
    /// SNR points in dB, strictly increasing. Threshold searches use the
    /// first and last entries as the bracket.
    pub snr_db: Vec<f64>,
    pub stop: StopRule,
    /// Minimum frames for threshold-search probes.
    pub probe_min_frames: u64,
    pub decoder: DecoderConfig,
    pub code_seed: u64,
    pub seed: u64,
    /// Monte-Carlo draws for the conditional entropy behind `beta`.
    pub mc_samples: usize,
    pub target_fer: f64,
    /// Bisection stops once the bracket is narrower than this (dB).
    pub snr_tolerance: f64,
    pub max_bisections: usize,
    pub alphas: Vec<f64>,
    pub d_values: Vec<u32>,
    /// Worker threads; `None` defers to the environment.
    pub workers: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            q: 5,
            code: CodeChoice::Regular { rate: 0.7 },
            n: 1000,
            alpha: 8.0,
            d: 3,
            snr_db: vec![10.0, 11.0, 12.0, 13.0, 14.0],
            stop: StopRule { min_frames: 100, max_frames: 1000, max_errors: 100 },
            probe_min_frames: 100,
            decoder: DecoderConfig::default(),
            code_seed: 1,
            seed: 2,
            mc_samples: 20_000,
            target_fer: 0.1,
            snr_tolerance: 0.02,
            max_bisections: 12,
            alphas: vec![4.0, 6.0, 8.0, 10.0, 12.0],
            d_values: vec![0, 1, 2, 3, 4, 5],
            workers: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "q",
    "rate",
    "profile",
    "code_file",
    "n",
    "alpha",
    "d",
    "snr_db",
    "min_frames",
    "max_frames",
    "max_errors",
    "probe_min_frames",
    "max_iterations",
    "damping",
    "clip_floor",
    "code_seed",
    "seed",
    "mc_samples",
    "target_fer",
    "snr_tolerance",
    "max_bisections",
    "alphas",
    "d_values",
    "workers",
];

fn value_err(key: &str, value: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.to_string(), value: value.to_string(), message: message.into() }
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| value_err(key, value, e.to_string()))
}

/// Parses `1,2,3` or `a:b:step` (inclusive, tolerant to rounding).
pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let value = value.trim();
    if let Some((a, rest)) = value.split_once(':') {
        let (b, step) = rest.split_once(':').ok_or_else(|| value_err(key, value, "range needs start:stop:step"))?;
        let (a, b, step): (f64, f64, f64) = (scalar(key, a.trim())?, scalar(key, b.trim())?, scalar(key, step.trim())?);
        if !(step > 0.0) || b < a {
            return Err(value_err(key, value, "range needs start <= stop and step > 0"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        // Round to the step's decimal resolution so 0.1 steps print cleanly.
        return Ok((0..count).map(|i| round12(a + i as f64 * step)).collect());
    }
    value.split(',').map(|v| scalar(key, v.trim())).collect()
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl ExperimentSpec {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "q" => self.q = scalar(key, v)?,
            "rate" => self.code = CodeChoice::Regular { rate: scalar(key, v)? },
            "profile" => {
                let (q, ..) = named_profile(v).ok_or_else(|| value_err(key, v, "unknown profile"))?;
                self.q = q;
                self.code = CodeChoice::Named(v.to_string());
            }
            "code_file" => self.code = CodeChoice::File(PathBuf::from(v)),
            "n" => self.n = scalar(key, v)?,
            "alpha" => self.alpha = scalar(key, v)?,
            "d" => self.d = scalar(key, v)?,
            "snr_db" => self.snr_db = parse_list(key, v)?,
            "min_frames" => self.stop.min_frames = scalar(key, v)?,
            "max_frames" => self.stop.max_frames = scalar(key, v)?,
            "max_errors" => self.stop.max_errors = scalar(key, v)?,
            "probe_min_frames" => self.probe_min_frames = scalar(key, v)?,
            "max_iterations" => self.decoder.max_iterations = scalar(key, v)?,
            "damping" => self.decoder.damping = scalar(key, v)?,
            "clip_floor" => self.decoder.clip_floor = scalar(key, v)?,
            "code_seed" => self.code_seed = scalar(key, v)?,
            "seed" => self.seed = scalar(key, v)?,
            "mc_samples" => self.mc_samples = scalar(key, v)?,
            "target_fer" => self.target_fer = scalar(key, v)?,
            "snr_tolerance" => self.snr_tolerance = scalar(key, v)?,
            "max_bisections" => self.max_bisections = scalar(key, v)?,
            "alphas" => self.alphas = parse_list(key, v)?,
            "d_values" => {
                self.d_values = parse_list(key, v)?
                    .into_iter()
                    .map(|x| {
                        if x >= 0.0 && x.fract() == 0.0 {
                            Ok(x as u32)
                        } else {
                            Err(value_err(key, v, "expected nonnegative integers"))
                        }
                    })
                    .collect::<Result<_, _>>()?
            }
            "workers" => self.workers = Some(scalar(key, v)?),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                origin: origin.to_string(),
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            self.set(k.trim(), v).map_err(|e| ConfigError::Syntax {
                origin: origin.to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut spec = Self::default();
        spec.apply_text(&text, &path.display().to_string())?;
        Ok(spec)
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) =
                o.split_once('=').ok_or_else(|| ConfigError::Invalid(format!("override {o:?} is not key=value")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Bits per quantized symbol.
    pub fn p(&self) -> u32 {
        self.q + self.d
    }

    /// Design rate when known without building the code.
    pub fn rate(&self) -> Option<f64> {
        match &self.code {
            CodeChoice::Regular { rate } => Some(*rate),
            CodeChoice::Named(name) => named_profile(name).map(|(_, _, r)| r),
            CodeChoice::File(_) => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(1..=8).contains(&self.q) {
            return bad(format!("q = {} outside 1..=8", self.q));
        }
        if self.n < 2 {
            return bad("n must be at least 2".into());
        }
        if let CodeChoice::Regular { rate } = self.code {
            if !(rate > 0.0 && rate < 1.0) {
                return bad(format!("rate {rate} outside (0, 1)"));
            }
        }
        if let CodeChoice::Named(name) = &self.code {
            match named_profile(name) {
                Some((q, ..)) if q == self.q => {}
                Some((q, ..)) => return bad(format!("profile {name} is over GF(2^{q}), not GF(2^{})", self.q)),
                None => return bad(format!("unknown profile {name}")),
            }
        }
        if !(self.alpha > 0.0) || self.alphas.iter().any(|a| !(*a > 0.0)) {
            return bad("alpha must be positive".into());
        }
        if self.snr_db.is_empty() || self.snr_db.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("snr_db must be a nonempty, strictly increasing list".into());
        }
        if self.stop.min_frames == 0 || self.stop.max_frames < self.stop.min_frames || self.probe_min_frames == 0 {
            return bad("need 1 <= min_frames <= max_frames and probe_min_frames >= 1".into());
        }
        if !(self.target_fer > 0.0 && self.target_fer < 1.0) {
            return bad("target_fer must lie in (0, 1)".into());
        }
        if self.decoder.max_iterations == 0 || !(self.decoder.damping > 0.0 && self.decoder.damping <= 1.0) {
            return bad("need max_iterations >= 1 and damping in (0, 1]".into());
        }
        if self.mc_samples == 0 {
            return bad("mc_samples must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        Ok(())
    }

    /// Renders the spec back into the file format.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "q = {}", self.q);
        let _ = match &self.code {
            CodeChoice::Regular { rate } => writeln!(s, "rate = {rate}"),
            CodeChoice::Named(name) => writeln!(s, "profile = {name}"),
            CodeChoice::File(p) => writeln!(s, "code_file = {}", p.display()),
        };
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "snr_db = {}", list(&self.snr_db));
        let _ = writeln!(s, "min_frames = {}", self.stop.min_frames);
        let _ = writeln!(s, "max_frames = {}", self.stop.max_frames);
        let _ = writeln!(s, "max_errors = {}", self.stop.max_errors);
        let _ = writeln!(s, "probe_min_frames = {}", self.probe_min_frames);
        let _ = writeln!(s, "max_iterations = {}", self.decoder.max_iterations);
        let _ = writeln!(s, "damping = {}", self.decoder.damping);
        let _ = writeln!(s, "clip_floor = {}", self.decoder.clip_floor);
        let _ = writeln!(s, "code_seed = {}", self.code_seed);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "mc_samples = {}", self.mc_samples);
        let _ = writeln!(s, "target_fer = {}", self.target_fer);
        let _ = writeln!(s, "snr_tolerance = {}", self.snr_tolerance);
        let _ = writeln!(s, "max_bisections = {}", self.max_bisections);
        let _ = writeln!(s, "alphas = {}", list(&self.alphas));
        let d: Vec<String> = self.d_values.iter().map(u32::to_string).collect();
        let _ = writeln!(s, "d_values = {}", d.join(","));
        if let Some(w) = self.workers {
            let _ = writeln!(s, "workers = {w}");
        }
        s
    }
}
