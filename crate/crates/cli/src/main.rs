//! `qci` — run QCI/QAM experiments from a key-value config file.
//!
//! Exit codes: 0 success, 1 a check found violations, 2 configuration error,
//! 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qci_core::constellation::Constellation;
use qci_core::harness::{self, config::parse_pairs, FigureOptions, Mode};
use qci_core::{Error, Result};

#[derive(Parser)]
#[command(name = "qci", version, about = "QAM-isomorphic constellation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode named in the config (uncoded_ber, coded_ber, gmi, scatter, complexity).
    Sweep(RunArgs),
    /// GMI versus PSNR.
    Gmi(RunArgs),
    /// Dump remapped received samples and berry centres.
    Scatter(RunArgs),
    /// Distance evaluations per symbol.
    Complexity(RunArgs),
    /// Write the CSVs and plot script for every result figure.
    MakeFigures {
        /// Output directory.
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        /// Coarse grids and small budgets.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads; 0 = all CPUs.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Check that nearest neighbours differ in exactly one label bit.
    GrayCheck(ConstellationArgs),
    /// Constellation utilities.
    Constellation {
        #[command(subcommand)]
        action: ConstellationCmd,
    },
}

#[derive(Subcommand)]
enum ConstellationCmd {
    /// Write a peak-normalised constellation as CSV.
    Export {
        #[command(flatten)]
        which: ConstellationArgs,
        /// Output file (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConstellationArgs {
    /// `qam64`, `qci256`, `pam8`, ...
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    constellation: Option<String>,
    /// Constellation CSV file.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Key-value config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// PSNR sweep `start:stop:step` or a single value (dB).
    #[arg(long)]
    psnr: Option<String>,
    #[arg(long)]
    constellation: Option<String>,
    #[arg(long)]
    demapper: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Output CSV (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Any other config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for kv in &self.set {
            let mut pairs = parse_pairs(kv)?;
            if pairs.len() != 1 {
                return Err(Error::Config(format!("--set expects key=value, got `{kv}`")));
            }
            out.push(pairs.remove(0));
        }
        let flags = [
            ("psnr", &self.psnr),
            ("constellation", &self.constellation),
            ("demapper", &self.demapper),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("workers", &self.workers),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        }
        if let Some(p) = &self.output {
            out.push(("output".into(), p.display().to_string()));
        }
        Ok(out)
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn run_mode(args: &RunArgs, mode: Option<Mode>) -> Result<()> {
    let text = args.config.as_ref().map(read).transpose()?;
    let mut overrides = args.overrides()?;
    if let Some(m) = mode {
        let file_pairs = text.as_deref().map(parse_pairs).transpose()?.unwrap_or_default();
        if !file_pairs.iter().chain(&overrides).any(|(k, _)| k == "mode") {
            overrides.push(("mode".into(), m.as_str().into()));
        }
    }
    let cfg = harness::parse_config(text.as_deref(), &overrides)?;
    if let Some(m) = mode {
        if cfg.mode != m {
            return Err(Error::Config(format!("subcommand requires mode {}", m.as_str())));
        }
    }
    let records = harness::run(&cfg)?;
    if cfg.output.is_none() && cfg.mode != Mode::Scatter {
        print!("{}", harness::records_csv(&records));
    }
    Ok(())
}

fn load(args: &ConstellationArgs) -> Result<Constellation> {
    match (&args.constellation, &args.file) {
        (_, Some(p)) => Constellation::load(p),
        (Some(name), None) => {
            let cfg = harness::parse_config(
                None,
                &[
                    ("constellation".into(), name.clone()),
                    ("mode".into(), "gmi".into()),
                    ("psnr".into(), "0".into()),
                ],
            )?;
            Ok(harness::build_modulation(&cfg.family, cfg.order)?.tx().clone())
        }
        (None, None) => Err(Error::Config("need --constellation or --file".into())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(a) => run_mode(a, None).map(|_| 0),
        Command::Gmi(a) => run_mode(a, Some(Mode::Gmi)).map(|_| 0),
        Command::Scatter(a) => run_mode(a, Some(Mode::Scatter)).map(|_| 0),
        Command::Complexity(a) => run_mode(a, Some(Mode::Complexity)).map(|_| 0),
        Command::MakeFigures { out, quick, seed, workers } => {
            let opts = FigureOptions { quick: *quick, seed: *seed, workers: *workers };
            harness::make_figures(out, &opts).map(|paths| {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
                0
            })
        }
        Command::GrayCheck(which) => load(which).map(|c| {
            let report = c.gray_check();
            for (a, b) in &report.violations {
                println!("violation: points {a} ({}) and {b} ({})", c.label_string(*a), c.label_string(*b));
            }
            if report.passed() {
                println!("{}: gray labelling OK", c.name());
                0
            } else {
                println!("{}: {} violations", c.name(), report.violations.len());
                1
            }
        }),
        Command::Constellation { action: ConstellationCmd::Export { which, output } } => {
            load(which).and_then(|c| match output {
                Some(p) => c.save(p).map(|_| 0),
                None => {
                    print!("{}", c.to_csv());
                    Ok(0)
                }
            })
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
