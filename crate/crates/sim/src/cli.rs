//! Command-line interface.
//!
//! Every simulation command reads an experiment from `--config` (optional),
//! applies `--set key=value` overrides in order, and writes CSV to `--out`
//! (`-` for standard output).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nbrecon::ldpc::write_code;

use crate::config::ExperimentSpec;
use crate::engine::{
    alpha_sweep, build_code, d_saturation_study, efficiency_at_fer, fer_sweep, information_bracket, Engine,
};
use crate::reproduce::{reproduce, ReproduceOptions, BETA_FLOOR};
use crate::table::{push_threshold, threshold_table, Table};
use crate::SimError;

#[derive(Debug, Parser)]
#[command(name = "nbrecon", version, about = "Non-binary LDPC reconciliation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a parity-check matrix and write it as a code file.
    Construct(Common),
    /// Frame error rate at every SNR of `snr_db`.
    Fer(Common),
    /// SNR of the target FER and the efficiency there.
    Efficiency(Search),
    /// FER curves for each `d` in `d_values`.
    Dstudy(Common),
    /// Threshold and efficiency for each cutoff in `alphas`.
    Alphasweep(Search),
    /// Run the canned experiments behind a figure or table.
    Reproduce(Reproduce),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment file with `key = value` lines.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set snr_db=10:14:0.5`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads (default: $NBRECON_WORKERS, then all cores).
    #[arg(short, long)]
    pub workers: Option<usize>,
    /// Output path; `-` writes to standard output.
    #[arg(short, long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bracket {
    /// From the Slepian–Wolf point up to where efficiency falls to the floor.
    Auto,
    /// First and last entries of `snr_db`.
    Grid,
}

#[derive(Debug, Args)]
pub struct Search {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "auto")]
    pub bracket: Bracket,
    /// Efficiency at the top of the automatic bracket.
    #[arg(long, default_value_t = BETA_FLOOR)]
    pub beta_floor: f64,
}

#[derive(Debug, Args)]
pub struct Reproduce {
    /// fig1 … fig6, table1 or all.
    pub target: String,
    #[arg(short, long, default_value = "results")]
    pub out: PathBuf,
    #[arg(short, long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub min_frames: Option<u64>,
    #[arg(long)]
    pub max_frames: Option<u64>,
    #[arg(long)]
    pub max_errors: Option<u64>,
    /// Skip frame lengths above this.
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Use this frame length everywhere.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub code_seed: Option<u64>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec, SimError> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        spec.apply_overrides(&self.overrides)?;
        if self.workers.is_some() {
            spec.workers = self.workers;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn emit(out: &Path, table: &Table) -> Result<(), SimError> {
    if out == Path::new("-") {
        let bytes = table.to_csv()?;
        std::io::stdout().write_all(&bytes).map_err(|e| SimError::io(Path::new("<stdout>"), e))
    } else {
        table.write(out)
    }
}

fn search_bracket(args: &Search, spec: &mut ExperimentSpec, rate: f64) -> Result<(), SimError> {
    if args.bracket == Bracket::Auto {
        let (lo, hi) = information_bracket(spec, rate, args.beta_floor)?;
        spec.snr_db = vec![lo, hi];
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Construct(c) => {
            let spec = c.spec()?;
            let code = build_code(&spec)?;
            if c.out == Path::new("-") {
                print!("{}", code.to_text());
                Ok(())
            } else {
                Ok(write_code(&code, &c.out)?)
            }
        }
        Command::Fer(c) => {
            let spec = c.spec()?;
            let engine = Engine::new(spec.workers)?;
            let code = build_code(&spec)?;
            let mut table = Table::for_points(&[]);
            for p in fer_sweep(&engine, &spec, &code)? {
                table.push_point(vec![], &p);
            }
            emit(&c.out, &table)
        }
        Command::Efficiency(s) => {
            let mut spec = s.common.spec()?;
            let engine = Engine::new(spec.workers)?;
            let code = build_code(&spec)?;
            search_bracket(&s, &mut spec, code.design_rate())?;
            let t = efficiency_at_fer(&engine, &spec, &code)?;
            let mut table = threshold_table(&["alpha", "d"]);
            push_threshold(&mut table, vec![spec.alpha.to_string(), spec.d.to_string()], &t);
            emit(&s.common.out, &table)
        }
        Command::Dstudy(c) => {
            let spec = c.spec()?;
            let engine = Engine::new(spec.workers)?;
            let code = build_code(&spec)?;
            let mut table = Table::for_points(&["d"]);
            for (d, points) in d_saturation_study(&engine, &spec, &code)? {
                for p in &points {
                    table.push_point(vec![d.to_string()], p);
                }
            }
            emit(&c.out, &table)
        }
        Command::Alphasweep(s) => {
            let spec = s.common.spec()?;
            let engine = Engine::new(spec.workers)?;
            let code = build_code(&spec)?;
            let rows = if s.bracket == Bracket::Auto {
                alpha_sweep(&engine, &spec, &code, s.beta_floor)?
            } else {
                spec.alphas
                    .iter()
                    .map(|&alpha| {
                        let a = ExperimentSpec { alpha, ..spec.clone() };
                        Ok((alpha, efficiency_at_fer(&engine, &a, &code)?))
                    })
                    .collect::<Result<Vec<_>, SimError>>()?
            };
            let mut table = threshold_table(&["alpha"]);
            for (alpha, t) in &rows {
                push_threshold(&mut table, vec![alpha.to_string()], t);
            }
            emit(&s.common.out, &table)
        }
        Command::Reproduce(r) => {
            let engine = Engine::new(r.workers)?;
            let d = ReproduceOptions::default();
            let opts = ReproduceOptions {
                out_dir: r.out,
                min_frames: r.min_frames.unwrap_or(d.min_frames),
                max_frames: r.max_frames.unwrap_or(d.max_frames),
                max_errors: r.max_errors.unwrap_or(d.max_errors),
                max_n: r.max_n.unwrap_or(d.max_n),
                n_override: r.n,
                seed: r.seed.unwrap_or(d.seed),
                code_seed: r.code_seed.unwrap_or(d.code_seed),
                mc_samples: r.mc_samples.unwrap_or(d.mc_samples),
                ..d
            };
            if opts.min_frames == 0 || opts.max_frames < opts.min_frames {
                return Err(SimError::Config("need 1 <= min_frames <= max_frames".into()));
            }
            for path in reproduce(&engine, &r.target, &opts)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_flags() {
        let cli = Cli::try_parse_from([
            "nbrecon",
            "fer",
            "--set",
            "n=100",
            "-s",
            "snr_db=1,2",
            "--workers",
            "3",
            "--out",
            "x.csv",
        ])
        .unwrap();
        let Command::Fer(c) = cli.command else { panic!("wrong command") };
        let spec = c.spec().unwrap();
        assert_eq!(spec.n, 100);
        assert_eq!(spec.snr_db, vec![1.0, 2.0]);
        assert_eq!(spec.workers, Some(3));
        assert_eq!(c.out, PathBuf::from("x.csv"));
    }

    #[test]
    fn search_defaults() {
        let cli = Cli::try_parse_from(["nbrecon", "efficiency"]).unwrap();
        let Command::Efficiency(s) = cli.command else { panic!("wrong command") };
        assert_eq!(s.bracket, Bracket::Auto);
        assert_eq!(s.beta_floor, BETA_FLOOR);
        assert!(Cli::try_parse_from(["nbrecon", "alphasweep", "--bracket", "grid"]).is_ok());
    }

    #[test]
    fn rejects_bad_overrides() {
        let cli = Cli::try_parse_from(["nbrecon", "fer", "--set", "bogus=1"]).unwrap();
        let Command::Fer(c) = cli.command else { panic!("wrong command") };
        assert!(c.spec().is_err());
        assert!(Cli::try_parse_from(["nbrecon", "frobnicate"]).is_err());
    }
}
