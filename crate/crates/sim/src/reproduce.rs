//! Canned experiments for each figure and the efficiency table.
//!
//! Every target writes one or more CSV files into an output directory.
//! Frame counts, the largest frame length and the frame length itself can
//! be scaled down for quick runs. Constructed codes are cached under
//! `codes/` in the output directory, since building a 10^5-symbol code
//! takes minutes.

use std::path::{Path, PathBuf};

use nbrecon::ldpc::{read_code, write_code, SparseParityCheck};
use nbrecon::source::{linear_to_db, snr_to_rho};

use crate::config::{CodeChoice, ExperimentSpec, StopRule};
use crate::engine::{
    alpha_sweep, build_code, d_saturation_study, efficiency_at_fer, fer_sweep, information_bracket, Engine, Threshold,
};
use crate::table::{push_threshold, threshold_table, Table};
use crate::SimError;

pub const TARGETS: [&str; 7] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "table1"];

/// Efficiency at which the automatic search bracket ends.
pub const BETA_FLOOR: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceOptions {
    pub out_dir: PathBuf,
    pub min_frames: u64,
    pub max_frames: u64,
    pub max_errors: u64,
    /// Frame lengths above this are skipped.
    pub max_n: usize,
    /// Replaces every frame length when set.
    pub n_override: Option<usize>,
    pub seed: u64,
    pub code_seed: u64,
    pub mc_samples: usize,
    /// Width of FER sweeps above the Slepian–Wolf point, in dB.
    pub snr_span: f64,
    pub snr_step: f64,
    pub d_values: Vec<u32>,
    /// Code rates for the regular-code efficiency curves.
    pub rates: Vec<f64>,
    /// Iteration caps compared in the efficiency table.
    pub iterations: (usize, usize),
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("results"),
            min_frames: 200,
            max_frames: 2000,
            max_errors: 100,
            max_n: 10_000,
            n_override: None,
            seed: 2,
            code_seed: 1,
            mc_samples: 20_000,
            snr_span: 4.0,
            snr_step: 0.5,
            d_values: vec![0, 1, 2, 3, 4, 5],
            rates: (0..=8).map(|i| 0.5 + 0.05 * i as f64).map(|r| (r * 100.0).round() / 100.0).collect(),
            iterations: (50, 200),
        }
    }
}

impl ReproduceOptions {
    fn lengths(&self, ns: &[usize]) -> Vec<usize> {
        match self.n_override {
            Some(n) => vec![n],
            None => ns.iter().copied().filter(|&n| n <= self.max_n).collect(),
        }
    }

    fn base(&self, q: u32, code: CodeChoice, n: usize, alpha: f64, d: u32) -> ExperimentSpec {
        ExperimentSpec {
            q,
            code,
            n,
            alpha,
            d,
            stop: StopRule { min_frames: self.min_frames, max_frames: self.max_frames, max_errors: self.max_errors },
            probe_min_frames: self.min_frames,
            code_seed: self.code_seed,
            seed: self.seed,
            mc_samples: self.mc_samples,
            d_values: self.d_values.clone(),
            ..ExperimentSpec::default()
        }
    }

    /// SNR grid starting at the Slepian–Wolf point (rounded down to the step).
    fn sweep_grid(&self, spec: &ExperimentSpec, rate: f64) -> Result<Vec<f64>, SimError> {
        let (sw, _) = information_bracket(spec, rate, BETA_FLOOR)?;
        let start = (sw / self.snr_step).floor() * self.snr_step;
        let count = (self.snr_span / self.snr_step).round() as usize + 1;
        Ok((0..count).map(|i| round6(start + i as f64 * self.snr_step)).collect())
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn code_key(spec: &ExperimentSpec) -> String {
    let kind = match &spec.code {
        CodeChoice::Regular { rate } => format!("R{rate}"),
        CodeChoice::Named(name) => name.clone(),
        CodeChoice::File(p) => p.file_stem().map_or("file".into(), |s| s.to_string_lossy().into_owned()),
    };
    format!("gf{}_n{}_{kind}_s{}.code", 1u32 << spec.q, spec.n, spec.code_seed)
}

/// Builds the code for `spec`, reusing `out_dir/codes/` when possible.
pub fn cached_code(spec: &ExperimentSpec, out_dir: &Path) -> Result<SparseParityCheck, SimError> {
    let dir = out_dir.join("codes");
    let path = dir.join(code_key(spec));
    if path.exists() {
        return Ok(read_code(&path)?);
    }
    let code = build_code(spec)?;
    std::fs::create_dir_all(&dir).map_err(|e| SimError::io(&dir, e))?;
    write_code(&code, &path)?;
    Ok(code)
}

/// Profile name and its `(alpha, threshold)` rows.
type AlphaCurve = (&'static str, Vec<(f64, Threshold)>);

struct Run<'a> {
    engine: &'a Engine,
    opts: &'a ReproduceOptions,
    written: Vec<PathBuf>,
}

impl Run<'_> {
    fn save(&mut self, name: &str, table: &Table) -> Result<(), SimError> {
        let path = self.opts.out_dir.join(name);
        table.write(&path)?;
        self.written.push(path);
        Ok(())
    }

    fn code(&self, spec: &ExperimentSpec) -> Result<SparseParityCheck, SimError> {
        cached_code(spec, &self.opts.out_dir)
    }

    /// FER versus SNR for each `d`, one file per configuration.
    fn d_study(&mut self, name: &str, q: u32, rate: f64, n: usize) -> Result<(), SimError> {
        let mut spec = self.opts.base(q, CodeChoice::Regular { rate }, n, 8.0, 3);
        spec.snr_db = self.opts.sweep_grid(&spec, rate)?;
        let code = self.code(&spec)?;
        let mut table = Table::for_points(&["d"]);
        for (d, points) in d_saturation_study(self.engine, &spec, &code)? {
            for p in &points {
                table.push_point(vec![d.to_string()], p);
            }
        }
        self.save(name, &table)
    }

    fn threshold(&self, spec: &mut ExperimentSpec, code: &SparseParityCheck) -> Result<Threshold, SimError> {
        let (lo, hi) = information_bracket(spec, code.design_rate(), BETA_FLOOR)?;
        spec.snr_db = vec![lo, hi];
        efficiency_at_fer(self.engine, spec, code)
    }

    fn fig1(&mut self) -> Result<(), SimError> {
        let n = self.opts.lengths(&[1000])[0];
        for rate in [0.5, 0.6, 0.7] {
            self.d_study(&format!("fig1_R{rate}.csv"), 5, rate, n)?;
        }
        Ok(())
    }

    fn fig2(&mut self) -> Result<(), SimError> {
        let n = self.opts.lengths(&[1000])[0];
        for q in [4, 5, 6] {
            self.d_study(&format!("fig2_gf{}.csv", 1u32 << q), q, 0.7, n)?;
        }
        Ok(())
    }

    fn fig3(&mut self) -> Result<(), SimError> {
        let lengths = self.opts.lengths(&[1000, 2000, 4000, 10_000, 100_000]);
        let probe = self.opts.base(5, CodeChoice::Regular { rate: 0.7 }, 1000, 8.0, 3);
        let grid = self.opts.sweep_grid(&probe, 0.7)?;
        let mut thresholds = threshold_table(&["n"]);
        for n in lengths {
            let mut spec = self.opts.base(5, CodeChoice::Regular { rate: 0.7 }, n, 8.0, 3);
            spec.snr_db = grid.clone();
            let code = self.code(&spec)?;
            let mut table = Table::for_points(&["n"]);
            for p in fer_sweep(self.engine, &spec, &code)? {
                table.push_point(vec![n.to_string()], &p);
            }
            self.save(&format!("fig3_n{n}.csv"), &table)?;
            let t = self.threshold(&mut spec, &code)?;
            push_threshold(&mut thresholds, vec![n.to_string()], &t);
        }
        self.save("fig3_thresholds.csv", &thresholds)
    }

    fn fig4(&mut self) -> Result<(), SimError> {
        let combos = [(3, 1000), (4, 1000), (5, 1000), (6, 1000), (4, 10_000), (5, 10_000), (4, 100_000)];
        let mut seen = Vec::new();
        for (q, n) in combos {
            let Some(&n) = self.opts.lengths(&[n]).first() else { continue };
            if seen.contains(&(q, n)) {
                continue;
            }
            seen.push((q, n));
            let mut table = threshold_table(&["rate"]);
            for &rate in &self.opts.rates {
                let mut spec = self.opts.base(q, CodeChoice::Regular { rate }, n, 8.0, 3);
                let code = self.code(&spec)?;
                let t = self.threshold(&mut spec, &code)?;
                push_threshold(&mut table, vec![rate.to_string()], &t);
            }
            self.save(&format!("fig4_gf{}_n{n}.csv", 1u32 << q), &table)?;
        }
        Ok(())
    }

    fn fig5(&mut self) -> Result<(), SimError> {
        let mut table = threshold_table(&["profile", "n"]);
        for n in self.opts.lengths(&[1000, 10_000]) {
            for (name, q) in [("gf16-r085", 4), ("gf32-r09", 5), ("gf64-r09", 6)] {
                let mut spec = self.opts.base(q, CodeChoice::Named(name.into()), n, 8.0, 3);
                let code = self.code(&spec)?;
                let t = self.threshold(&mut spec, &code)?;
                push_threshold(&mut table, vec![name.into(), n.to_string()], &t);
            }
        }
        self.save("fig5_irregular.csv", &table)
    }

    fn alpha_curves(&self, n: usize, max_iterations: usize) -> Result<Vec<AlphaCurve>, SimError> {
        let setups: [(&str, u32, Vec<f64>); 3] = [
            ("gf16-r085", 4, (2..=8).map(|i| 2.0 * i as f64).collect()),
            ("gf32-r09", 5, (2..=8).map(|i| 2.0 * i as f64).collect()),
            ("gf64-r09", 6, vec![6.0, 8.0, 12.0, 16.0, 20.0]),
        ];
        setups
            .into_iter()
            .map(|(name, q, alphas)| {
                let mut spec = self.opts.base(q, CodeChoice::Named(name.into()), n, 8.0, 9 - q);
                spec.alphas = alphas;
                spec.decoder.max_iterations = max_iterations;
                let code = self.code(&spec)?;
                Ok((name, alpha_sweep(self.engine, &spec, &code, BETA_FLOOR)?))
            })
            .collect()
    }

    fn fig6(&mut self) -> Result<(), SimError> {
        for n in self.opts.lengths(&[10_000, 100_000]) {
            for (name, rows) in self.alpha_curves(n, self.opts.iterations.0)? {
                let mut table = threshold_table(&["alpha"]);
                for (alpha, t) in &rows {
                    push_threshold(&mut table, vec![alpha.to_string()], t);
                }
                self.save(&format!("fig6_{name}_n{n}.csv"), &table)?;
            }
        }
        Ok(())
    }

    /// Efficiency interpolated at the table's SNR values from the cutoff
    /// sweeps, once per iteration cap.
    fn table1(&mut self) -> Result<(), SimError> {
        let n = *self.opts.lengths(&[100_000, 10_000, 1000]).first().unwrap_or(&1000);
        let (low, high) = self.opts.iterations;
        let a = self.alpha_curves(n, low)?;
        let b = self.alpha_curves(n, high)?;
        let mut table = Table::new([
            "profile",
            "n",
            "snr_lin",
            "snr_db",
            "rho",
            &format!("beta_{low}") as &str,
            &format!("beta_{high}"),
        ]);
        for ((name, rows_a), (_, rows_b)) in a.iter().zip(&b) {
            for snr in [3.0, 5.0, 7.0, 15.0, 31.0] {
                let db = linear_to_db(snr);
                table.push(vec![
                    name.to_string(),
                    n.to_string(),
                    snr.to_string(),
                    db.to_string(),
                    snr_to_rho(snr)?.to_string(),
                    interpolate_beta(rows_a, db).to_string(),
                    interpolate_beta(rows_b, db).to_string(),
                ]);
            }
        }
        self.save("table1.csv", &table)
    }
}

/// Linear interpolation of `beta` over the converged thresholds, NaN
/// outside their SNR range.
pub fn interpolate_beta(rows: &[(f64, Threshold)], snr_db: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> =
        rows.iter().filter(|(_, t)| t.status.found()).map(|(_, t)| (t.point.snr_db, t.point.efficiency.beta)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 <= snr_db && snr_db <= x1 {
            return if x1 > x0 { y0 + (y1 - y0) * (snr_db - x0) / (x1 - x0) } else { y0.max(y1) };
        }
    }
    match pts.as_slice() {
        [(x, y)] if (x - snr_db).abs() < 1e-9 => *y,
        _ => f64::NAN,
    }
}

/// Runs one target and returns the files written.
pub fn reproduce(engine: &Engine, target: &str, opts: &ReproduceOptions) -> Result<Vec<PathBuf>, SimError> {
    let mut run = Run { engine, opts, written: Vec::new() };
    match target {
        "fig1" => run.fig1()?,
        "fig2" => run.fig2()?,
        "fig3" => run.fig3()?,
        "fig4" => run.fig4()?,
        "fig5" => run.fig5()?,
        "fig6" => run.fig6()?,
        "table1" => run.table1()?,
        "all" => {
            for t in TARGETS {
                run.written.extend(reproduce(engine, t, opts)?);
            }
        }
        other => return Err(SimError::Config(format!("unknown target {other:?}; expected one of {TARGETS:?} or all"))),
    }
    Ok(run.written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{PointResult, ThresholdStatus};
    use nbrecon::protocol::Efficiency;

    fn t(snr: f64, beta: f64, status: ThresholdStatus) -> Threshold {
        let point = PointResult {
            snr_db: snr,
            rho: 0.0,
            frames: 1,
            errors: 0,
            undetected: 0,
            fer: 0.1,
            ci_lo: 0.0,
            ci_hi: 1.0,
            iters_mean: 0.0,
            efficiency: Efficiency { beta, beta_q: 1.0, beta_code: beta, beta_approx: beta },
        };
        Threshold { status, point, probes: vec![] }
    }

    #[test]
    fn interpolation() {
        let rows = vec![
            (4.0, t(10.0, 0.90, ThresholdStatus::Converged)),
            (6.0, t(14.0, 0.94, ThresholdStatus::Bracketed)),
            (8.0, t(12.0, 0.50, ThresholdStatus::AboveRange)),
        ];
        assert!((interpolate_beta(&rows, 12.0) - 0.92).abs() < 1e-12);
        assert!(interpolate_beta(&rows, 9.0).is_nan());
        assert!(interpolate_beta(&rows, 15.0).is_nan());
    }

    #[test]
    fn code_cache_reuses_files() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec { n: 60, q: 3, ..ExperimentSpec::default() };
        let a = cached_code(&spec, dir.path()).unwrap();
        let path = dir.path().join("codes").join("gf8_n60_R0.7_s1.code");
        assert!(path.exists());
        let b = cached_code(&spec, dir.path()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_target() {
        let engine = Engine::new(Some(1)).unwrap();
        assert!(reproduce(&engine, "fig9", &ReproduceOptions::default()).is_err());
    }

    #[test]
    fn length_selection() {
        let mut o = ReproduceOptions { max_n: 4000, ..ReproduceOptions::default() };
        assert_eq!(o.lengths(&[1000, 2000, 4000, 10_000]), vec![1000, 2000, 4000]);
        o.n_override = Some(300);
        assert_eq!(o.lengths(&[1000, 2000]), vec![300]);
    }
}
