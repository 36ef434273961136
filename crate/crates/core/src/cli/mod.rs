//! Command-line entry point.
//!
//! Exit status is 0 on success, 1 when a check certifies a violated bound and
//! 2 when the config is unusable or a module precondition fails.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use self::commands::{CommandOutput, Context};
use self::config::{visual_config, CliSpace, ExperimentConfig, SpaceSpec};
use self::output::{config_hash, render, write_atomic, Envelope};
use crate::error::{HoroError, Result};
use crate::groups::DEFAULT_SUPPORT_CAP;
use crate::spaces::{FreeGroupTree, StarSpace, UpperHalfPlane};

#[derive(Debug, Parser)]
#[command(name = "horolab", version, about = "Random-walk experiments on hyperbolic model spaces")]
pub struct Cli {
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving `<command>.json` and `<command>.csv`.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides the config's convolution cap.
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Four-point condition plus visual-ratio and comparison bounds.
    ValidateSpace,
    Drift,
    /// Horofunction growth along the walk.
    Hmet,
    /// Stationary-measure estimates from several starting points.
    Stationary,
    /// Contraction search, k_α estimates and submultiplicativity.
    Contraction,
    /// Drift from a stationary measure against the Monte-Carlo drift.
    Furstenberg,
    /// Drift under weight tilts and the convolution bounds.
    Continuity,
    /// Large-deviation frequencies and log-linear fits.
    Ldt,
    /// Every command whose config section is present.
    All,
}

impl Command {
    pub const EXPERIMENTS: [Command; 8] = [
        Command::ValidateSpace,
        Command::Drift,
        Command::Hmet,
        Command::Stationary,
        Command::Contraction,
        Command::Furstenberg,
        Command::Continuity,
        Command::Ldt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::ValidateSpace => "validate-space",
            Command::Drift => "drift",
            Command::Hmet => "hmet",
            Command::Stationary => "stationary",
            Command::Contraction => "contraction",
            Command::Furstenberg => "furstenberg",
            Command::Continuity => "continuity",
            Command::Ldt => "ldt",
            Command::All => "all",
        }
    }

    fn configured(self, config: &ExperimentConfig) -> bool {
        match self {
            Command::ValidateSpace => config.validate_space.is_some(),
            Command::Drift => config.drift.is_some(),
            Command::Hmet => config.hmet.is_some(),
            Command::Stationary => config.stationary.is_some(),
            Command::Contraction => config.contraction.is_some(),
            Command::Furstenberg => config.furstenberg.is_some(),
            Command::Continuity => config.continuity.is_some(),
            Command::Ldt => config.ldt.is_some(),
            Command::All => true,
        }
    }
}

/// Parsed invocation, independent of where the arguments came from.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config_text: String,
    pub command: Command,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub cap: Option<usize>,
}

/// One command's outputs, rendered but not yet written.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub command: Command,
    pub json: Vec<u8>,
    pub csv: Vec<u8>,
    pub result: serde_json::Value,
    pub violations: Vec<String>,
}

/// Runs the invocation's command (every configured one for `all`) in memory.
pub fn evaluate(inv: &Invocation) -> Result<Vec<Rendered>> {
    let config = ExperimentConfig::parse(&inv.config_text)?;
    match config.space {
        SpaceSpec::Tree { rank } => dispatch(FreeGroupTree::new(rank)?, &config, inv),
        SpaceSpec::HalfPlane { delta: None } => dispatch(UpperHalfPlane::default(), &config, inv),
        SpaceSpec::HalfPlane { delta: Some(d) } if d >= 0.0 && d.is_finite() => {
            dispatch(UpperHalfPlane::with_delta(d), &config, inv)
        }
        SpaceSpec::HalfPlane { delta: Some(d) } => {
            Err(HoroError::Config(format!("delta must be finite and nonnegative, got {d}")))
        }
        SpaceSpec::Star { rays } => dispatch(StarSpace::new(rays)?, &config, inv),
    }
}

/// Runs the invocation and writes `<command>.json` and `<command>.csv` under
/// its output directory; returns the certified violations.
pub fn execute(inv: &Invocation) -> Result<Vec<String>> {
    let mut violations = Vec::new();
    for r in evaluate(inv)? {
        write_atomic(&inv.out.join(format!("{}.json", r.command.name())), &r.json)?;
        write_atomic(&inv.out.join(format!("{}.csv", r.command.name())), &r.csv)?;
        violations.extend(r.violations.iter().map(|v| format!("{}: {v}", r.command.name())));
    }
    Ok(violations)
}

fn dispatch<S: CliSpace>(space: S, config: &ExperimentConfig, inv: &Invocation) -> Result<Vec<Rendered>> {
    let visual = visual_config(&space, config.visual.as_ref())?;
    let mu = space.build_measure(&config.measure)?;
    let cap = inv.cap.or(config.cap).unwrap_or(DEFAULT_SUPPORT_CAP);
    let seed = inv.seed.unwrap_or(config.seed);
    let ctx = Context { space, visual, mu, config, seed, cap };
    let hash = config_hash(&inv.config_text);
    let commands: Vec<Command> = match inv.command {
        Command::All => Command::EXPERIMENTS.into_iter().filter(|c| c.configured(config)).collect(),
        single => vec![single],
    };
    let mut rendered = Vec::new();
    for command in commands {
        log::info!("running {}", command.name());
        let out = run_command(&ctx, command)?;
        let envelope = Envelope {
            command: command.name(),
            config_sha256: &hash,
            seed,
            space: &config.space,
            violations: &out.violations,
            result: &out.result,
        };
        let (json, csv) = render(&envelope, &out.table)?;
        rendered.push(Rendered { command, json, csv, result: out.result, violations: out.violations });
    }
    Ok(rendered)
}

pub fn run_command<S: CliSpace>(ctx: &Context<'_, S>, command: Command) -> Result<CommandOutput> {
    match command {
        Command::ValidateSpace => commands::validate_space(ctx),
        Command::Drift => commands::drift(ctx),
        Command::Hmet => commands::hmet(ctx),
        Command::Stationary => commands::stationary(ctx),
        Command::Contraction => commands::contraction(ctx),
        Command::Furstenberg => commands::furstenberg(ctx),
        Command::Continuity => commands::continuity(ctx),
        Command::Ldt => commands::ldt(ctx),
        Command::All => Err(HoroError::Config("'all' is not a single experiment".into())),
    }
}

fn read_config(path: Option<&Path>) -> Result<String> {
    let path = path.ok_or_else(|| HoroError::Config("--config is required".into()))?;
    std::fs::read_to_string(path).map_err(|e| HoroError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Parses `args`, runs the command and maps the outcome to an exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = read_config(cli.config.as_deref()).and_then(|config_text| {
        let inv = Invocation { config_text, command: cli.command, out: cli.out.clone(), seed: cli.seed, cap: cli.cap };
        let workers = cli.workers.unwrap_or(0);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HoroError::Config(format!("cannot start {workers} workers: {e}")))?;
        pool.install(|| execute(&inv))
    });
    match outcome {
        Ok(violations) if violations.is_empty() => 0,
        Ok(violations) => {
            for v in &violations {
                eprintln!("violation: {v}");
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
