use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lbforge::commands::{cmd_check, cmd_forge, cmd_recheck, cmd_simulate};
use lbforge::scenario::ScenarioConfig;

#[derive(Parser)]
#[command(
    name = "lbforge",
    version,
    about = "Approximate Byzantine consensus under local broadcast: simulator and impossibility forge"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report n, connectivity and whether consensus is possible for f faults.
    Check {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        f: usize,
    },
    /// Run a protocol or victim once and check the three conditions.
    Simulate(ScenarioArgs),
    /// Run an impossibility construction against a victim and write a report bundle.
    Forge(ScenarioArgs),
    /// Recompute a bundle's verdict from its traces.
    Recheck { bundle: PathBuf },
}

/// Flags override values from `--scenario`.
#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    lower: Option<String>,
    #[arg(long)]
    upper: Option<String>,
    /// Comma list, `unanimous-L`, `unanimous-U` or `split`.
    #[arg(long)]
    inputs: Option<String>,
    /// Comma list of Byzantine node ids (simulate only).
    #[arg(long)]
    faulty: Option<String>,
    /// silent, constant-extreme[:v], random-in-range or corrupt-relay.
    #[arg(long)]
    strategy: Option<String>,
    /// approx, naive, instant or max.
    #[arg(long)]
    victim: Option<String>,
    /// Round count for the naive victim.
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// 1 (node count) or 2 (connectivity); picked from the graph if absent.
    #[arg(long)]
    theorem: Option<String>,
    #[arg(long)]
    mirror_auto: Option<String>,
}

impl ScenarioArgs {
    fn resolve(&self) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = match &self.scenario {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        let flags = [
            ("graph", &self.graph),
            ("f", &self.f),
            ("epsilon", &self.epsilon),
            ("lower", &self.lower),
            ("upper", &self.upper),
            ("inputs", &self.inputs),
            ("faulty", &self.faulty),
            ("strategy", &self.strategy),
            ("victim", &self.victim),
            ("rounds", &self.rounds),
            ("seed", &self.seed),
            ("max_steps", &self.max_steps),
            ("out", &self.out),
            ("theorem", &self.theorem),
            ("mirror_auto", &self.mirror_auto),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|e| anyhow::anyhow!("--{}: {e}", key.replace('_', "-")))?;
            }
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match &cli.command {
        Command::Check { graph, f } => cmd_check(graph, *f, &mut out, &mut err),
        Command::Recheck { bundle } => cmd_recheck(bundle, &mut out, &mut err),
        Command::Simulate(args) | Command::Forge(args) => match args.resolve() {
            Err(e) => {
                let _ = writeln!(err, "error: {e:#}");
                2
            }
            Ok(cfg) if matches!(cli.command, Command::Simulate(_)) => cmd_simulate(&cfg, &mut out, &mut err),
            Ok(cfg) => cmd_forge(&cfg, &mut out, &mut err),
        },
    };
    ExitCode::from(code as u8)
}
