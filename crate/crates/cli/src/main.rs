use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use vekua_core::conductivity::SequenceMode;
use vekua_core::experiments::{
    run_beaked_suite, run_case, run_oracles_with, run_table, write_table_csv, BeakedResult,
    ExperimentConfig, OracleOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "vekua",
    version,
    about = "Formal-power solver for div(sigma grad u) = 0"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one Dirichlet problem and report the boundary error.
    Solve(SolveArgs),
    /// Reproduce one of the eleven error tables.
    Table {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=11))]
        id: u8,
        /// Directory for table.csv; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the non-smooth domain suite at P = Q = 100.
    Beaked {
        /// Directory for beaked.csv and one report per run.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in oracle checks; exits nonzero on any failure.
    Oracles {
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// JSON file with the same keys as the flags; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Parameter of the boundary condition when it differs from --alpha.
    #[arg(long = "bc-alpha", allow_hyphen_values = true)]
    bc_alpha: Option<f64>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(short = 'N')]
    degree: Option<usize>,
    #[arg(short = 'P')]
    points: Option<usize>,
    #[arg(short = 'Q')]
    radii: Option<usize>,
    /// c1, strip or ystrip (or the full names).
    #[arg(long)]
    mode: Option<SequenceMode>,
    #[arg(long = "K")]
    strips: Option<usize>,
    #[arg(long = "J")]
    strip_samples: Option<usize>,
    /// One offset for every strip, or a comma-separated list of K offsets.
    #[arg(long = "A", value_delimiter = ',')]
    strip_offsets: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    /// Directory for report.json and residual.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => {
                let (Some(case), Some(n), Some(p), Some(q)) =
                    (&self.case, self.degree, self.points, self.radii)
                else {
                    bail!("without --config, --case, -N, -P and -Q are required");
                };
                ExperimentConfig::new(case.clone(), n, p, q)
            }
        };
        if let Some(v) = self.case {
            c.case = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = Some(v);
        }
        if let Some(v) = self.bc_alpha {
            c.bc_alpha = Some(v);
        }
        if let Some(v) = self.domain {
            c.domain = Some(v);
        }
        if let Some(v) = self.degree {
            c.degree = v;
        }
        if let Some(v) = self.points {
            c.points = v;
        }
        if let Some(v) = self.radii {
            c.radii = v;
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.strips {
            c.strips = v;
        }
        if let Some(v) = self.strip_samples {
            c.strip_samples = v;
        }
        if let Some(v) = self.strip_offsets {
            c.strip_offsets = v;
        }
        if let Some(v) = self.delta {
            c.delta = v;
        }
        if let Some(v) = self.out {
            c.out = Some(v);
        }
        Ok(c)
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let config = args.into_config()?;
    let run = run_case(&config)?;
    let r = &run.report;
    println!(
        "case={} domain={} mode={} N={} P={} Q={} basis={} E={:e} cond={:.3e} colloc_residual={:.3e} runtime_s={:.3}",
        r.case,
        r.domain,
        r.mode,
        config.degree,
        config.points,
        config.radii,
        r.basis_size,
        r.total_error,
        r.condition_estimate,
        r.collocation_residual,
        run.row.runtime_s
    );
    if let Some(dir) = &config.out {
        println!(
            "wrote {} and {}",
            dir.join("report.json").display(),
            dir.join("residual.csv").display()
        );
    }
    Ok(())
}

fn table(id: u8, out: Option<&Path>) -> Result<()> {
    let rows = run_table(id as usize, None)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
            let path = dir.join("table.csv");
            let mut w =
                BufWriter::new(File::create(&path).with_context(|| path.display().to_string())?);
            write_table_csv(&rows, &mut w)?;
            w.flush()?;
            eprintln!("wrote {}", path.display());
        }
        None => write_table_csv(&rows, io::stdout().lock())?,
    }
    let failed = rows.iter().filter(|r| !r.succeeded()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows failed", rows.len());
    }
    Ok(())
}

fn write_beaked_csv<W: Write>(results: &[BeakedResult], mut w: W) -> io::Result<()> {
    writeln!(w, "name,case,basis,E,published_E,runtime_s,error")?;
    for r in results {
        writeln!(
            w,
            "{},{},{},{},{},{:.3},{}",
            r.spec.name,
            r.spec.case,
            r.spec.basis,
            if r.total_error.is_nan() {
                String::new()
            } else {
                format!("{:e}", r.total_error)
            },
            r.spec
                .published_error
                .map(|e| format!("{e:e}"))
                .unwrap_or_default(),
            r.runtime_s,
            r.error.as_deref().unwrap_or("").replace(',', ";")
        )?;
    }
    Ok(())
}

fn beaked(out: Option<&Path>) -> Result<()> {
    let results = run_beaked_suite(out);
    write_beaked_csv(&results, io::stdout().lock())?;
    if let Some(dir) = out {
        let path = dir.join("beaked.csv");
        fs::create_dir_all(dir)?;
        write_beaked_csv(&results, BufWriter::new(File::create(&path)?))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Table { id, out } => table(id, out.as_deref()),
        Command::Beaked { out } => beaked(out.as_deref()),
        Command::Oracles { delta, json } => {
            let summary = run_oracles_with(&OracleOptions { delta });
            if json {
                match serde_json::to_string_pretty(&summary) {
                    Ok(s) => println!("{s}"),
                    Err(e) => eprintln!("error: {e}"),
                }
            } else {
                println!("{summary}");
            }
            return if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
