//! `qpump`: run the heat-pump engine from a TOML configuration or a named
//! preset and write CSV or JSON tables.

mod commands;
mod config;
mod error;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::{Format, RunConfig};
use error::CliError;
use table::Metadata;

#[derive(Parser, Debug)]
#[command(name = "qpump", version, about = "Adiabatic heat pumping in driven qubit registers")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named configuration shipped with the tool (fig1, fig3a, fig3b, fig4, fig5, fig6, fig7).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Quadrature nodes (cycle integrals) or samples per period (series).
    #[arg(long, global = true, value_name = "N")]
    nodes: Option<usize>,
    /// Sweep resolution as WIDTHxHEIGHT.
    #[arg(long, global = true, value_name = "WxH", value_parser = parse_grid)]
    grid: Option<[usize; 2]>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, value_name = "N", env = "QPUMP_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Frozen steady state at one field point: levels, populations and the
    /// deviation from the Gibbs state.
    Steady {
        /// Field point as BX,BZ; defaults to `steady.point`.
        #[arg(long, value_name = "BX,BZ", value_parser = parse_point, allow_hyphen_values = true)]
        at: Option<[f64; 2]>,
    },
    /// Heat currents and balance residuals sampled over one period.
    Benchmark,
    /// Kernel map over the sweep grid.
    Sweep {
        /// rotor_<bath>, max_eig_lambda, max_eig_omega_<bath> or kernel_residual;
        /// defaults to `sweep.field`.
        #[arg(long)]
        field: Option<String>,
    },
    /// Pumped heats, dissipation, thermodynamic length and figure of merit.
    Cycle {
        /// Skip the second-order heats and dissipated work.
        #[arg(long)]
        first_order_only: bool,
    },
    /// Engine first-order currents against the closed-form solutions.
    OracleCheck,
    /// Pumped heat, length and figure of merit over the `scan` lists.
    MeritScan,
    /// Print the resolved configuration with every default filled in.
    ShowConfig,
}

fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT, e.g. 81x81")?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok([n(w)?, n(h)?])
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, z) = s.split_once(',').ok_or("expected BX,BZ, e.g. 1.0,0.5")?;
    let n = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok([n(x)?, n(z)?])
}

fn load(cli: &Cli) -> Result<(RunConfig, String), CliError> {
    let mut run = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => RunConfig::default(),
    };
    let source = match (&cli.config, &cli.preset) {
        (Some(path), _) => path.display().to_string(),
        (None, Some(name)) => format!("preset:{name}"),
        (None, None) => "defaults".into(),
    };
    if let Some(f) = cli.format {
        run.output.format = f;
    }
    if let Some(n) = cli.nodes {
        run.quadrature.nodes = n;
    }
    if let Some(g) = cli.grid {
        run.sweep.resolution = g;
    }
    if let Some(out) = &cli.out {
        run.output.path = Some(out.display().to_string());
    }
    if let Command::Sweep { field: Some(f) } = &cli.command {
        run.sweep.field = f.clone();
    }
    if let Command::Steady { at: Some(p) } = &cli.command {
        run.steady.point = *p;
    }
    run.validate()?;
    Ok((run, source))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Steady { .. } => "steady",
        Command::Benchmark => "benchmark",
        Command::Sweep { .. } => "sweep",
        Command::Cycle { .. } => "cycle",
        Command::OracleCheck => "oracle-check",
        Command::MeritScan => "merit-scan",
        Command::ShowConfig => "show-config",
    }
}

fn run(cli: &Cli) -> Result<Option<String>, CliError> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
    }
    let (run, source) = load(cli)?;
    let canonical = run.canonical();
    let write = |text: &str| -> Result<(), CliError> {
        let _: () = match &run.output.path {
            Some(p) => std::fs::write(p, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        };
        Ok(())
    };
    if let Command::ShowConfig = cli.command {
        write(&canonical)?;
        return Ok(None);
    }

    let start = Instant::now();
    let output = match &cli.command {
        Command::Steady { .. } => commands::steady(&run, run.steady.point)?,
        Command::Benchmark => commands::benchmark(&run)?,
        Command::Sweep { .. } => commands::sweep(&run, &run.sweep.field)?,
        Command::Cycle { first_order_only } => commands::cycle(&run, !first_order_only)?,
        Command::OracleCheck => commands::oracle_check(&run)?,
        Command::MeritScan => commands::merit_scan(&run)?,
        Command::ShowConfig => unreachable!(),
    };

    let mut meta = Metadata::default();
    meta.push("qpump", env!("CARGO_PKG_VERSION"));
    meta.push("command", command_name(&cli.command));
    meta.push("config", &source);
    meta.push("config-sha256", hex(&Sha256::digest(canonical.as_bytes())));
    meta.push("wall-time-s", format!("{:.3}", start.elapsed().as_secs_f64()));
    write(&output.table.render(run.output.format, run.output.precision, &meta))?;
    Ok(output.violation)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(violation)) => {
            eprintln!("qpump: invariant violated: {violation}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("qpump: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
