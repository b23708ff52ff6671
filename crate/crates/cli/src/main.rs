use clap::{Parser, Subcommand};
use ia_csit::experiment::run_experiment;
use ia_csit::perturbation::calibrate_ball_volume;
use ia_csit::verify::run_property_suite;
use ia_csit::{CsitMode, Error, PrecoderMode, SimConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Monte Carlo simulator for subspace CSIT sharing and interference
/// alignment over finite-capacity backhaul.
#[derive(Parser)]
#[command(name = "ia-csit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config and emit a CSV curve.
    Run {
        /// Path to the JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Override the CSIT mode (perfect | rvq | perturbation | nc_cgq).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Calibrate the ball-volume coefficient of a Grassmann manifold by
    /// quantizing Haar sources against fresh RVQ codebooks.
    Calibrate {
        /// Ambient dimension n of G_{n,p}.
        #[arg(long)]
        n: usize,
        /// Subspace dimension p of G_{n,p}.
        #[arg(long)]
        p: usize,
        /// Codebook bits used during calibration.
        #[arg(long, default_value_t = 8)]
        bits: u32,
        /// Monte Carlo queries.
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the calibration record (JSON) here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the property suites (exact identities, bounds, determinism).
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::Json(_) => 2,
        Error::InfeasibleDims(_) | Error::NotQuantizable(_) => 3,
        Error::ResourceGuard { .. } => 4,
        Error::ExcessiveExclusions { .. } => 5,
        _ => 1,
    }
}

fn parse_mode(text: &str) -> Result<CsitMode, Error> {
    match text {
        "perfect" => Ok(CsitMode::Perfect),
        "rvq" => Ok(CsitMode::Rvq),
        "perturbation" => Ok(CsitMode::Perturbation),
        "nc_cgq" => Ok(CsitMode::NcCgq),
        other => Err(Error::InvalidConfig(format!(
            "unknown csit mode '{other}' (expected perfect | rvq | perturbation | nc_cgq)"
        ))),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            threads,
            mode,
        } => {
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            }
            let mut cfg = SimConfig::from_json(&std::fs::read_to_string(&config)?)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(mode) = mode {
                cfg.csit_mode = parse_mode(&mode)?;
                if cfg.csit_mode == CsitMode::NcCgq {
                    cfg.precoder_mode = PrecoderMode::Vectorized;
                }
                cfg.validate()?;
            }
            let result = run_experiment(&cfg)?;
            let csv = result.to_csv();
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            let excluded: usize = result.points.iter().map(|p| p.excluded).sum();
            if excluded > 0 {
                eprintln!("note: {excluded} non-converged trials excluded");
            }
            Ok(())
        }
        Command::Calibrate {
            n,
            p,
            bits,
            queries,
            seed,
            out,
        } => {
            let cal = calibrate_ball_volume(n, p, bits, queries, seed)?;
            let text = cal.to_json()?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Verify { seed } => {
            let results = run_property_suite(seed);
            let mut failed = 0;
            for check in &results {
                let status = if check.passed { "PASS" } else { "FAIL" };
                println!("{status}  {} ({})", check.name, check.detail);
                if !check.passed {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(Error::NumericalFailure(format!(
                    "{failed} of {} checks failed",
                    results.len()
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
