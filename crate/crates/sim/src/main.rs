use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arcalis_core::calibration::Calibration;
use arcalis_core::system::RunOptions;
use arcalis_core::wire::Service;
use arcalis_core::workload::SPEEDUP_PRESETS;
use arcalis_sim::config::{self, RunConfig};
use arcalis_sim::{exit, profile, report, schema_file, sweep, CliError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arcalis", version, about = "Near-cache RPC accelerator simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and write its report.
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Report file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run baseline and accelerated modes and emit the speedup table.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated presets (default: the seven speedup presets).
        #[arg(long, value_delimiter = ',')]
        presets: Vec<String>,
        /// Directory for compare.csv and chart_<preset>.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run a sweep spec and write its CSV table.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the spec's request count.
        #[arg(long)]
        requests: Option<u64>,
    },
    /// Print a service schema, or check a schema file.
    Schema {
        /// memcached, post_storage or unique_id (default: all).
        service: Option<String>,
        /// Parse and validate this schema file instead.
        #[arg(long, conflicts_with = "service")]
        check: Option<PathBuf>,
    },
    /// Run one simulation and dump its event trace.
    Trace {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named comparison profile (dagger_table).
    Profile {
        name: String,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the shipped calibration profile.
    Calibration,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. --set system.latency.uc_interconnect_ns=700.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    preset: Option<String>,
    /// baseline or arcalis.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    requests: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Calibration profile file.
    #[arg(long)]
    calibration: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut sets = Vec::new();
        if let Some(p) = &self.preset {
            sets.push(format!("workload.preset={}", toml_str(p)));
        }
        if let Some(m) = &self.mode {
            sets.push(format!("system.mode={}", toml_str(m)));
        }
        if let Some(n) = self.requests {
            sets.push(format!("requests={n}"));
        }
        if let Some(s) = self.seed {
            sets.push(format!("seed={s}"));
        }
        if let Some(c) = &self.calibration {
            let abs = std::path::absolute(c).map_err(|e| CliError::Io(c.clone(), e))?;
            sets.push(format!("calibration_file={}", toml_str(&abs.to_string_lossy())));
        }
        sets.extend(self.sets.iter().cloned());
        config::load(self.config.as_deref(), &sets)
    }
}

fn toml_str(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => arcalis_sim::write_file(p, text.as_bytes()),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run { run, out, trace } => {
            let cfg = run.load()?;
            let resolved = cfg.resolve()?;
            let trace = trace.or(resolved.output.trace.clone());
            let opts = RunOptions { trace_events: trace.is_some(), keep_responses: false };
            let (rep, output) = arcalis_sim::execute(&resolved, opts)?;
            if let Some(t) = &trace {
                emit(Some(t), &report::trace_text(&output, &rep.config_fingerprint))?;
            }
            emit(out.or(resolved.output.report.clone()).as_deref(), &rep.to_kv())
        }
        Cmd::Trace { run, out } => {
            let resolved = run.load()?.resolve()?;
            let opts = RunOptions { trace_events: true, keep_responses: false };
            let (rep, output) = arcalis_sim::execute(&resolved, opts)?;
            emit(out.as_deref(), &report::trace_text(&output, &rep.config_fingerprint))
        }
        Cmd::Compare { run, presets, out_dir } => {
            let cfg = run.load()?;
            let presets: Vec<String> = if presets.is_empty() {
                SPEEDUP_PRESETS.iter().map(|s| s.to_string()).collect()
            } else {
                presets
            };
            let results = arcalis_sim::compare_presets(&cfg, &presets)?;
            let table = report::compare_csv(&results);
            match out_dir {
                Some(dir) => {
                    emit(Some(&dir.join("compare.csv")), &table)?;
                    for r in &results {
                        emit(Some(&dir.join(format!("chart_{}.csv", r.comparison.workload))), &report::chart_csv(r))?;
                    }
                    emit(None, &table)
                }
                None => emit(None, &table),
            }
        }
        Cmd::Sweep { spec, out, requests } => {
            let mut spec = sweep::SweepSpec::load(&spec)?;
            if let Some(n) = requests {
                spec.requests = n;
            }
            let rows = sweep::run_sweep(&spec)?;
            emit(out.as_deref(), &sweep::rows_csv(&rows))
        }
        Cmd::Schema { service, check } => {
            if let Some(path) = check {
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(path.clone(), e))?;
                let schema = schema_file::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                return emit(None, &schema_file::format(&schema));
            }
            let services: Vec<Service> = match service {
                Some(s) => vec![Service::from_name(&s).ok_or_else(|| CliError::Config(format!("unknown service {s:?}")))?],
                None => Service::ALL.to_vec(),
            };
            let text: Vec<String> = services.iter().map(|s| schema_file::format(&s.schema())).collect();
            emit(None, &text.join("\n"))
        }
        Cmd::Profile { name, run, out } => {
            let cfg = run.load()?;
            cfg.resolve()?;
            let rows = profile::run_profile(&name, &cfg.system, cfg.requests, cfg.seed)?;
            emit(out.as_deref(), &profile::rows_csv(&rows))
        }
        Cmd::Calibration => emit(None, &config::calibration_toml(&Calibration::shipped())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("arcalis: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
