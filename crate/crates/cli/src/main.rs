//! `ionnode` command-line front end. Every subcommand prints a JSON summary
//! on stdout; failures print `{"error": {"kind", "message"}}` on stderr and
//! exit nonzero.

mod commands;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "ionnode",
    version,
    about = "Shuttling ten-ion network node simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the synthetic experiment and write logs plus report files.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyse a click log and ion outcomes.
    Analyze {
        #[arg(long)]
        clicks: PathBuf,
        #[arg(long)]
        outcomes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run configuration supplying windows, bin width and analysis options.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Simulate the COM response to an endcap step program.
    Shuttle {
        /// CSV with a `v_volts` column of waveform-generator levels.
        #[arg(long)]
        steps_file: PathBuf,
        /// Interval between steps (µs).
        #[arg(long)]
        tp_us: f64,
        /// Filter stages as `order:cutoff_khz`, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1:35,2:80")]
        filters: Vec<String>,
        /// Extra first-order stage to evaluate (kHz).
        #[arg(long)]
        extra_cutoff_khz: Option<f64>,
        #[arg(long, default_value_t = 358.0)]
        omega_z_2pi_khz: f64,
        /// Total trap-centre travel of the program (µm).
        #[arg(long, default_value_t = 49.0)]
        travel_um: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a calibration quantity from a CSV.
    Fit {
        kind: FitKind,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Verify a report directory against its manifest and summarise it.
    Report {
        #[arg(long)]
        artifacts: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitKind {
    /// Columns `P_measured,P_exit`: detection-path efficiency ξ.
    Xi,
    /// Columns `t_ms,contrast`: Gaussian coherence time σ.
    Ramsey,
    /// Columns `z_um,v_volts`: position gradient in nm/mV.
    Voltage,
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": { "kind": kind, "message": message } })
    );
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), 2),
    };
    let result = match cli.command {
        Command::Simulate { config, out } => commands::simulate(&config, &out),
        Command::Analyze {
            clicks,
            outcomes,
            out,
            config,
        } => commands::analyze(&clicks, &outcomes, &out, config.as_deref()),
        Command::Shuttle {
            steps_file,
            tp_us,
            filters,
            extra_cutoff_khz,
            omega_z_2pi_khz,
            travel_um,
            out,
        } => commands::shuttle(&commands::ShuttleArgs {
            steps_file,
            tp_us,
            filters,
            extra_cutoff_khz,
            omega_z_2pi_khz,
            travel_um,
            out,
        }),
        Command::Fit { kind, input } => match kind {
            FitKind::Xi => commands::fit_xi(&input),
            FitKind::Ramsey => commands::fit_ramsey(&input),
            FitKind::Voltage => commands::fit_voltage(&input),
        },
        Command::Report { artifacts } => commands::report(&artifacts),
    };
    match result {
        Ok(summary) => {
            // A closed stdout (e.g. piped into `head`) is not an error.
            let _ = writeln!(
                io::stdout(),
                "{}",
                serde_json::to_string_pretty(&summary).unwrap_or_default()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string(), 1),
    }
}
