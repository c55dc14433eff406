use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use pinchnet_cli::runner::format_sig9;
use pinchnet_cli::{load_config_with, run, write_outputs};

/// Evaluate pinching-antenna network outage and rate, analytically and by
/// simulation.
#[derive(Debug, Parser)]
#[command(name = "pinchnet", version)]
struct Cli {
    /// Experiment configuration (TOML, or JSON; a previous report.json works too).
    config: PathBuf,
    /// Override a configuration key, e.g. `--set params.P="30 dBm"`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory for results.csv and report.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Simulation worker threads (0: all cores). Does not change results.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    match try_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn try_main() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let mut cfg = load_config_with(&cli.config, &cli.overrides)
        .with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(workers) = cli.workers {
        cfg.sim.workers = workers;
    }
    let output = run(&cfg);
    let (csv, json) = write_outputs(&cli.out, &cfg, &output).context("writing results")?;

    let show = |x: Option<f64>| x.map(format_sig9).unwrap_or_else(|| "-".into());
    for r in output.rows() {
        let mut line = format!(
            "value {:>14}  outage {:>12} / sim {:>12}  rate {:>11} / sim {:>11}  bounds [{}, {}]",
            show(r.swept_value),
            show(r.analytic_outage),
            show(r.sim_outage),
            show(r.analytic_rate),
            show(r.sim_rate),
            show(r.lower_bound),
            show(r.upper_bound),
        );
        if let Some(agree) = r.agree {
            line.push_str(if agree { "  agree" } else { "  DISAGREE" });
        }
        if let Some(err) = &r.error {
            line.push_str(&format!("  error: {err}"));
        }
        println!("{line}");
    }
    eprintln!("wrote {} and {} in {:.1} s", csv.display(), json.display(), output.wall_time_s);
    Ok(!output.has_errors())
}
