//! `pathadv` command-line front end: simulate, sweep, classify and plot.

pub mod plot;
pub mod scenario;

use std::fmt;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pathadv_core::nalgebra::{Vector3, Vector6};
use pathadv_core::sim::log::format_sig9;
use pathadv_core::sim::{run, summarize, sweep_preset, write_csv};
use pathadv_core::wrench::classify;
use pathadv_core::{Error, RunSummary, Wrench};

/// Failure carrying the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad input: arguments, files or configuration. Exit code 2.
    Usage(String),
    /// The simulation itself failed. Exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn from_core(context: &str, e: Error) -> Self {
        if e.is_validation() {
            CliError::Usage(format!("{context}: {e}"))
        } else {
            CliError::Runtime(format!("{context}: {e}"))
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(
    name = "pathadv",
    version,
    about = "Interaction-driven trajectory advancement simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its per-step log as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override a config value, e.g. `advancement.law=frozen`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the scenario once per row of a wrench preset.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "table1")]
        preset: String,
        /// Directory for the per-row logs and summary.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Classify a wrench against a desired direction of motion.
    Classify {
        /// Force `fx,fy,fz`.
        #[arg(long, allow_hyphen_values = true)]
        force: String,
        /// Torque `tx,ty,tz`.
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,0")]
        torque: String,
        /// Direction as 3 (linear) or 6 components; normalized before use.
        #[arg(long, allow_hyphen_values = true, default_value = "1,0,0")]
        direction: String,
    },
    /// Render CSV columns against `t` as an SVG line plot.
    Plot {
        csv: PathBuf,
        /// Comma-separated panels; `a+b` overlays columns in one panel.
        #[arg(long)]
        columns: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to stderr.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}

fn report(e: &CliError) {
    let stderr = std::io::stderr();
    let color = stderr.is_terminal() && std::env::var_os("NO_COLOR").map_or(true, |v| v.is_empty());
    let prefix = if color { "\x1b[31merror:\x1b[0m" } else { "error:" };
    let _ = writeln!(stderr.lock(), "{prefix} {e}");
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Simulate {
            config,
            out: csv,
            overrides,
        } => cmd_simulate(config, csv, overrides, out),
        Command::Sweep {
            config,
            preset,
            out: dir,
            overrides,
        } => cmd_sweep(config, preset, dir, overrides, out),
        Command::Classify {
            force,
            torque,
            direction,
        } => cmd_classify(force, torque, direction, out),
        Command::Plot { csv, columns, out: svg } => {
            let columns: Vec<String> = columns.split(',').map(|c| c.trim().to_string()).collect();
            cmd_plot(csv, &columns, svg)
        }
    }
}

fn write_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn echo(out: &mut dyn Write, line: impl fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Runtime(format!("stdout: {e}")))
}

pub fn cmd_simulate(config: &Path, csv: &Path, overrides: &[String], out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = scenario::load(config, overrides)?;
    let records = run(&cfg).map_err(|e| CliError::from_core(&config.display().to_string(), e))?;
    let file = fs::File::create(csv).map_err(|e| write_err(csv, e))?;
    write_csv(&records, std::io::BufWriter::new(file)).map_err(|e| write_err(csv, e))?;

    let s = summarize(&records, &cfg);
    echo(out, format!("records      {}", records.len()))?;
    echo(out, format!("delta_psi    {}", format_sig9(s.delta_psi)))?;
    echo(out, format!("peak_psidot  {}", format_sig9(s.peak_psidot)))?;
    echo(out, format!("rms_err      {}", format_sig9(s.rms_err)))?;
    echo(out, format!("peak_alpha   {}", format_sig9(s.peak_alpha)))?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 7] = [
    "preset",
    "label",
    "class",
    "delta_psi",
    "peak_psidot",
    "rms_err",
    "peak_alpha",
];

fn summary_fields(s: &RunSummary) -> [String; 4] {
    [s.delta_psi, s.peak_psidot, s.rms_err, s.peak_alpha].map(format_sig9)
}

pub fn cmd_sweep(
    config: &Path,
    preset: &str,
    dir: &Path,
    overrides: &[String],
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = scenario::load(config, overrides)?;
    let runs = sweep_preset(&cfg, preset).map_err(|e| CliError::from_core(&config.display().to_string(), e))?;
    fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;

    let summary_path = dir.join("summary.csv");
    let mut summary = csv::Writer::from_path(&summary_path).map_err(|e| write_err(&summary_path, e))?;
    summary
        .write_record(SUMMARY_HEADER)
        .map_err(|e| write_err(&summary_path, e))?;
    echo(
        out,
        format!(
            "{:<6} {:<10} {:>14} {:>14} {:>14} {:>14}",
            "label", "class", "delta_psi", "peak_psidot", "rms_err", "peak_alpha"
        ),
    )?;
    for r in &runs {
        let path = dir.join(format!("{preset}_{}.csv", r.label));
        let file = fs::File::create(&path).map_err(|e| write_err(&path, e))?;
        write_csv(&r.records, std::io::BufWriter::new(file)).map_err(|e| write_err(&path, e))?;

        let class = r.class.map_or_else(|| "none".to_string(), |c| c.to_string());
        let [dpsi, peak, rms, alpha] = summary_fields(&r.summary);
        echo(
            out,
            format!(
                "{:<6} {:<10} {dpsi:>14} {peak:>14} {rms:>14} {alpha:>14}",
                r.label, class
            ),
        )?;
        summary
            .write_record([preset, r.label.as_str(), &class, &dpsi, &peak, &rms, &alpha])
            .map_err(|e| write_err(&summary_path, e))?;
    }
    summary.flush().map_err(|e| write_err(&summary_path, e))?;
    Ok(())
}

fn parse_components(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("--{flag}: `{}` is not a finite number", c.trim())))
        })
        .collect()
}

fn vector3(flag: &str, text: &str) -> Result<Vector3<f64>, CliError> {
    let v = parse_components(flag, text)?;
    match v.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(CliError::Usage(format!(
            "--{flag}: expected 3 components, got {}",
            v.len()
        ))),
    }
}

pub fn cmd_classify(force: &str, torque: &str, direction: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let w = Wrench::new(vector3("force", force)?, vector3("torque", torque)?);
    let d = parse_components("direction", direction)?;
    let mut dir = match d.len() {
        3 => Vector6::new(d[0], d[1], d[2], 0.0, 0.0, 0.0),
        6 => Vector6::from_column_slice(&d),
        n => {
            return Err(CliError::Usage(format!(
                "--direction: expected 3 or 6 components, got {n}"
            )))
        }
    };
    let norm = dir.norm();
    if norm == 0.0 {
        return Err(CliError::Usage("--direction: must be non-zero".into()));
    }
    dir /= norm;
    let class = classify(&w, &dir).map_err(|e| CliError::Usage(format!("--direction: {e}")))?;
    let name = match class {
        pathadv_core::WrenchClass::Assistive => "Assistive",
        pathadv_core::WrenchClass::Agnostic => "Agnostic",
    };
    echo(out, name)
}

pub fn cmd_plot(csv: &Path, columns: &[String], svg: &Path) -> Result<(), CliError> {
    let panels = plot::parse_panels(columns)?;
    let data = plot::read_columns(csv, &panels)?;
    let doc = plot::render(&data, &panels);
    fs::write(svg, doc).map_err(|e| write_err(svg, e))
}
