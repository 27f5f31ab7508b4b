//! `wpmcc` — query the energy-optimal computing policies and run
//! Monte-Carlo sweeps from the command line.
//!
//! Exit codes: 0 on success, 1 on configuration or usage errors, 2 when a
//! single-shot policy query is infeasible. `WPMCC_LOG` (error, warn, info,
//! debug) controls diagnostics on standard error.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use wpmcc::alloc::{self, PerBlock};
use wpmcc::channel::BlockGains;
use wpmcc::local::{self, LocalConfig, LocalRegime};
use wpmcc::mode::{self, Mode};
use wpmcc::offload::{self, OffloadConfig};
use wpmcc::sim::{format_g, write_csv, ExperimentConfig, Simulation};

#[derive(Parser)]
#[command(name = "wpmcc", version, about = "Wirelessly powered mobile cloud computing policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the local-computing CPU-cycle schedule for an explicit gain.
    StaticLocal(StaticArgs),
    /// Solve the MPT/offloading time division for an explicit gain.
    StaticOffload(StaticArgs),
    /// Compare both modes for an explicit gain and pick one.
    ModeSelect(StaticArgs),
    /// Monte-Carlo sweep over a deadline or transmit-power grid.
    Sweep(SweepArgs),
    /// Multi-block data allocation for explicit per-block gains.
    Dynamic(DynamicArgs),
}

/// Scenario parameters shared by the single-shot queries. Defaults are the
/// standard scenario; `--config` replaces the defaults and explicit flags
/// override both.
#[derive(Args)]
struct ScenarioArgs {
    /// JSON experiment config supplying the base parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input data size (bits).
    #[arg(long)]
    bits: Option<f64>,
    /// Computation deadline (s).
    #[arg(long)]
    deadline: Option<f64>,
    /// Base-station transmission power (W).
    #[arg(long)]
    bs_power: Option<f64>,
    /// Channel bandwidth (Hz).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Noise variance (W).
    #[arg(long)]
    noise_var: Option<f64>,
    /// Energy conversion efficiency.
    #[arg(long)]
    upsilon: Option<f64>,
    /// Switched-capacitance constant (J s^2).
    #[arg(long)]
    gamma: Option<f64>,
    /// Cycles-per-bit Gamma shape.
    #[arg(long)]
    cci_shape: Option<f64>,
    /// Cycles-per-bit Gamma scale.
    #[arg(long)]
    cci_scale: Option<f64>,
    /// Tail mass left above the cycle cap.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl ScenarioArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::baseline(),
        };
        if let Some(v) = self.bits {
            cfg.data_bits = v;
        }
        if let Some(v) = self.deadline {
            cfg.deadline = v;
        }
        if let Some(v) = self.bs_power {
            cfg.bs_power = v;
        }
        if let Some(v) = self.bandwidth {
            cfg.bandwidth = v;
        }
        if let Some(v) = self.noise_var {
            cfg.noise_var = v;
        }
        if let Some(v) = self.upsilon {
            cfg.upsilon = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.cci_shape {
            cfg.cci.shape = v;
        }
        if let Some(v) = self.cci_scale {
            cfg.cci.scale = v;
        }
        if let Some(v) = self.epsilon {
            cfg.cci.epsilon = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct StaticArgs {
    /// Effective channel power gain.
    #[arg(long)]
    h: f64,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config trial count.
    #[arg(long)]
    trials: Option<u32>,
    /// Worker threads (0 = auto).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct DynamicArgs {
    /// Comma-separated per-block channel power gains.
    #[arg(long, value_delimiter = ',', required = true)]
    gains: Vec<f64>,
    /// Which mode to allocate for.
    #[arg(long, default_value = "both", value_parser = ["local", "offload", "both"])]
    mode: String,
    /// Use the dynamic-program allocator for offloading instead of the
    /// greedy one.
    #[arg(long)]
    dp: bool,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("WPMCC_LOG"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::StaticLocal(args) => static_local(&args),
        Command::StaticOffload(args) => static_offload(&args),
        Command::ModeSelect(args) => mode_select(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Dynamic(args) => dynamic(&args),
    }
}

fn load_config(path: &PathBuf) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn model_and_probs(
    cfg: &ExperimentConfig,
) -> anyhow::Result<(wpmcc::CciModel, wpmcc::ExecutionProbabilities)> {
    let model = wpmcc::CciModel::gamma(cfg.cci.shape, cfg.cci.scale, cfg.cci.epsilon)?;
    let probs = model.execution_probabilities(cfg.data_bits)?;
    Ok((model, probs))
}

fn local_config(cfg: &ExperimentConfig) -> LocalConfig {
    LocalConfig {
        gamma: cfg.gamma,
        upsilon: cfg.upsilon,
        bs_power: cfg.bs_power,
        deadline: cfg.deadline,
    }
}

fn offload_config(cfg: &ExperimentConfig) -> OffloadConfig {
    OffloadConfig {
        bandwidth: cfg.bandwidth,
        noise_var: cfg.noise_var,
        upsilon: cfg.upsilon,
        bs_power: cfg.bs_power,
        deadline: cfg.deadline,
    }
}

fn g10(x: f64) -> String {
    format_g(x, 10)
}

fn static_local(args: &StaticArgs) -> anyhow::Result<i32> {
    let cfg = args.scenario.resolve()?;
    let (_, probs) = model_and_probs(&cfg)?;
    let lcfg = local_config(&cfg);
    let (a, a_prime) = local::thresholds(&probs, &lcfg);
    let pol = local::static_policy(&probs, &lcfg, args.h);
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "feasible: {}", pol.feasible)?;
    writeln!(
        out,
        "regime: {}",
        match pol.regime {
            LocalRegime::Infeasible => "infeasible",
            LocalRegime::HarvestLimited => "harvest-limited",
            LocalRegime::HarvestUnconstrained => "harvest-unconstrained",
        }
    )?;
    writeln!(out, "a_w: {}", g10(a))?;
    writeln!(out, "a_prime_w: {}", g10(a_prime))?;
    writeln!(out, "received_power_w: {}", g10(cfg.bs_power * args.h))?;
    if !pol.feasible {
        return Ok(2);
    }
    match pol.lambda {
        Some(l) => writeln!(out, "lambda: {}", g10(l))?,
        None => writeln!(out, "lambda: boundary")?,
    }
    writeln!(out, "cycles: {}", pol.frequencies.len())?;
    writeln!(out, "f_first_hz: {}", g10(pol.frequencies[0]))?;
    writeln!(out, "f_last_hz: {}", g10(*pol.frequencies.last().unwrap()))?;
    writeln!(out, "avg_energy_j: {}", g10(pol.avg_energy))?;
    writeln!(out, "savings_j: {}", g10(pol.savings))?;
    Ok(0)
}

fn static_offload(args: &StaticArgs) -> anyhow::Result<i32> {
    let cfg = args.scenario.resolve()?;
    let ocfg = offload_config(&cfg);
    let a2 = offload::threshold_a2(&ocfg, cfg.data_bits);
    let pol = offload::static_policy(&ocfg, args.h, cfg.data_bits);
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "feasible: {}", pol.feasible)?;
    writeln!(out, "a2_threshold: {}", g10(a2))?;
    writeln!(out, "pb_h2: {}", g10(cfg.bs_power * args.h * args.h))?;
    if !pol.feasible {
        return Ok(2);
    }
    writeln!(out, "duration_s: {}", g10(pol.duration))?;
    writeln!(out, "mpt_s: {}", g10(cfg.deadline - pol.duration))?;
    writeln!(out, "savings_j: {}", g10(pol.savings))?;
    Ok(0)
}

fn mode_select(args: &StaticArgs) -> anyhow::Result<i32> {
    let cfg = args.scenario.resolve()?;
    let (_, probs) = model_and_probs(&cfg)?;
    let lp = local::static_policy(&probs, &local_config(&cfg), args.h);
    let op = offload::static_policy(&offload_config(&cfg), args.h, cfg.data_bits);
    let decision = mode::select(lp, op);
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(
        out,
        "mode: {}",
        match decision.mode {
            Mode::Local => "local",
            Mode::Offload => "offload",
            Mode::Infeasible => "infeasible",
        }
    )?;
    writeln!(out, "local_feasible: {}", decision.local.feasible)?;
    writeln!(out, "offload_feasible: {}", decision.offload.feasible)?;
    if decision.local.feasible {
        writeln!(out, "local_savings_j: {}", g10(decision.local.savings))?;
    }
    if decision.offload.feasible {
        writeln!(out, "offload_savings_j: {}", g10(decision.offload.savings))?;
    }
    if let Some(d) = decision.delta_savings {
        writeln!(out, "delta_savings_j: {}", g10(d))?;
    }
    Ok(if decision.mode == Mode::Infeasible { 2 } else { 0 })
}

fn sweep(args: &SweepArgs) -> anyhow::Result<i32> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .context("building thread pool")?;
    }
    log::info!(
        "sweep: {} points x {} policies, {} trials",
        cfg.sweep.grid.len(),
        cfg.policies.len(),
        cfg.trials
    );
    let sim = Simulation::new(cfg)?;
    let rows = sim.run_sweep();
    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_csv(&rows, std::io::BufWriter::new(file))?;
    Ok(0)
}

fn dynamic(args: &DynamicArgs) -> anyhow::Result<i32> {
    let cfg = args.scenario.resolve()?;
    let blocks = args.gains.len();
    if blocks == 0 {
        return Err(anyhow!("need at least one gain"));
    }
    let t_c = cfg.deadline / blocks as f64;
    let gains = BlockGains::from_gains(args.gains.clone(), t_c)?;
    let model = wpmcc::CciModel::gamma(cfg.cci.shape, cfg.cci.scale, cfg.cci.epsilon)?;
    let factors = model.scaling_factors(cfg.data_bits)?;
    let mut lcfg = local_config(&cfg);
    lcfg.deadline = t_c;
    let mut ocfg = offload_config(&cfg);
    ocfg.deadline = t_c;

    let local_plan = (args.mode != "offload")
        .then(|| alloc::allocate_local(cfg.data_bits, &gains, &lcfg, &factors));
    let offload_plan = (args.mode != "local").then(|| {
        if args.dp {
            alloc::allocate_offload_dp(cfg.data_bits, &gains, &ocfg, &cfg.dp_grid)
        } else {
            alloc::allocate_offload_greedy(cfg.data_bits, &gains, &ocfg)
        }
    });

    let harvested: f64 = args
        .gains
        .iter()
        .map(|&h| cfg.upsilon * cfg.bs_power * h * t_c)
        .sum();
    let local_savings = local_plan
        .as_ref()
        .filter(|p| p.feasible)
        .map(|p| harvested - p.total_objective);
    let offload_savings = offload_plan
        .as_ref()
        .filter(|p| p.feasible)
        .map(|p| p.total_objective);

    let out = std::io::stdout();
    let mut out = out.lock();
    let chosen = match (local_savings, offload_savings) {
        (None, None) => {
            writeln!(out, "mode: infeasible")?;
            return Ok(2);
        }
        (Some(_), None) => "local",
        (None, Some(_)) => "offload",
        (Some(sl), Some(so)) => {
            if so >= sl {
                "offload"
            } else {
                "local"
            }
        }
    };
    writeln!(out, "mode: {chosen}")?;
    writeln!(out, "block_duration_s: {}", g10(t_c))?;
    let plan = if chosen == "local" {
        local_plan.as_ref().unwrap()
    } else {
        offload_plan.as_ref().unwrap()
    };
    let csv = |v: &[f64]| {
        v.iter()
            .map(|x| g10(*x))
            .collect::<Vec<_>>()
            .join(",")
    };
    writeln!(out, "allocations_bits: {}", csv(&plan.allocations))?;
    writeln!(out, "residuals_j: {}", csv(&plan.residual_estimates))?;
    match &plan.per_block {
        PerBlock::LocalEnergies(es) => {
            writeln!(out, "block_energies_j: {}", csv(es))?;
            writeln!(out, "total_energy_j: {}", g10(plan.total_objective))?;
            writeln!(out, "savings_j: {}", g10(local_savings.unwrap()))?;
        }
        PerBlock::Offload(pols) => {
            let durations: Vec<f64> = pols.iter().map(|p| p.duration).collect();
            let savings: Vec<f64> = pols.iter().map(|p| p.savings).collect();
            writeln!(out, "block_durations_s: {}", csv(&durations))?;
            writeln!(out, "block_savings_j: {}", csv(&savings))?;
            writeln!(out, "savings_j: {}", g10(plan.total_objective))?;
        }
    }
    Ok(0)
}
