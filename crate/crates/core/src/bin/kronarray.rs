use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kronarray::gaussian::{NormalParamsDoc, DEFAULT_ORACLE_CAP};
use kronarray::io::{self, FactorsDoc, SampleDoc};
use kronarray::skew_normal::SkewParamsDoc;
use kronarray::verify::{self, Level, VerifyConfig};
use kronarray::{rmul, spectral, Error, Execution, FactorSet};

#[derive(Parser)]
#[command(name = "kronarray", version, about = "Array-variate normal and skew-normal toolkit")]
struct Cli {
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Log-density of each input array, one JSON line per array.
    Density {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Treat params as skew-normal parameters (requires "delta").
        #[arg(long)]
        skew: bool,
        /// Emit densities instead of log-densities.
        #[arg(long)]
        linear: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Draw arrays from the distribution.
    Sample {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        skew: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Kronecker principal components of the factor Gram matrices.
    Pca {
        /// File with a "factors" list (a parameter file works).
        #[arg(long)]
        factors: PathBuf,
        /// Include full-length eigenvectors in the report.
        #[arg(long)]
        materialize: bool,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Least-squares array fit via factorwise l-inverses.
    Lstsq {
        #[arg(long)]
        factors: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// R-matrix multiplication of an array by one matrix per axis.
    Rmul {
        #[arg(long)]
        factors: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Run the built-in invariant suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
        #[arg(long)]
        seed: u64,
        #[arg(long, hide = true, default_value_t = 1.0, allow_negative_numbers = true)]
        tolerance_scale: f64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error_code: &'a str,
    message: String,
}

#[derive(Serialize)]
struct PcaOutput {
    #[serde(flatten)]
    report: spectral::PcaReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvectors: Option<Vec<Vec<f64>>>,
}

fn emit(out: &Output, text: &str) -> Result<(), Error> {
    match &out.output {
        Some(path) => fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Parse(format!("stdout: {e}")))
        }
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn density_lines(values: &[f64], linear: bool) -> String {
    #[derive(Serialize)]
    struct Log {
        log_density: f64,
    }
    #[derive(Serialize)]
    struct Lin {
        density: f64,
    }
    let mut text = String::new();
    for &v in values {
        let line = if linear {
            io::to_json(&Lin { density: v.exp() })
        } else {
            io::to_json(&Log { log_density: v })
        };
        text.push_str(&line);
        text.push('\n');
    }
    text
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Density {
            params,
            data,
            skew,
            linear,
            out,
        } => {
            let xs = io::parse_arrays(&read_text(&data)?, &data.display().to_string())?;
            let values = if skew {
                io::read_json::<SkewParamsDoc>(&params)?
                    .into_params()?
                    .log_density_batch(&xs, exec)?
            } else {
                io::read_json::<NormalParamsDoc>(&params)?
                    .into_params()?
                    .log_density_batch(&xs, exec)?
            };
            emit(&out, &density_lines(&values, linear))?;
        }
        Command::Sample {
            params,
            n,
            seed,
            skew,
            out,
        } => {
            let n = n as usize;
            let draws = if skew {
                io::read_json::<SkewParamsDoc>(&params)?
                    .into_params()?
                    .sample_seeded(seed, n, exec)
            } else {
                io::read_json::<NormalParamsDoc>(&params)?
                    .into_params()?
                    .sample_seeded(seed, n, exec)
            };
            emit(&out, &(io::to_json(&SampleDoc { draws, seed }) + "\n"))?;
        }
        Command::Pca {
            factors,
            materialize,
            oracle_cap,
            out,
        } => {
            let fs = FactorSet::new(io::read_json::<FactorsDoc>(&factors)?.into_matrices()?)?;
            let pca = spectral::kron_pca_with(&fs, exec)?;
            let eigenvectors = if materialize {
                Some(
                    (0..pca.components.len())
                        .map(|k| pca.materialize(k, oracle_cap))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            } else {
                None
            };
            let report = PcaOutput {
                report: pca.report(),
                eigenvectors,
            };
            emit(&out, &(io::to_json(&report) + "\n"))?;
        }
        Command::Lstsq { factors, data, out } => {
            let a = io::read_json::<FactorsDoc>(&factors)?.into_matrices()?;
            let y = io::read_json(&data)?;
            let x = spectral::array_least_squares(&a, &y)?;
            emit(&out, &(io::to_json(&x) + "\n"))?;
        }
        Command::Rmul { factors, data, out } => {
            let b = io::read_json::<FactorsDoc>(&factors)?.into_matrices()?;
            let x = io::read_json(&data)?;
            emit(&out, &(io::to_json(&rmul(&b, &x)?) + "\n"))?;
        }
        Command::Verify {
            level,
            seed,
            tolerance_scale,
            out,
        } => {
            let config = VerifyConfig {
                level,
                seed,
                tolerance_scale,
                exec,
            };
            let report = verify::run(&config);
            emit(&out, &(io::to_json(&report) + "\n"))?;
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let report = ErrorReport {
                error_code: e.code(),
                message: e.to_string(),
            };
            eprintln!("{}", io::to_json(&report));
            ExitCode::from(2)
        }
    }
}
