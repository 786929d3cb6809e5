//! `raidrel`: fit, analyze, simulate, compare and sweep RAID reliability
//! models from a JSON run configuration.

mod config;
mod output;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use raidrel_core::ctmc::loss_probability;
use raidrel_core::phfit::{fit_distribution, FitErrorKind, FitMethod, FitReport, FittedModel};
use raidrel_core::raid::{build_system_chain, shape_sensitivity_sweep, FittedSystem, SystemConfig};
use raidrel_core::series::{years_grid, DdfSeries};
use raidrel_core::sim::{estimate_with, GroupModel};
use raidrel_core::Error;

use config::{Clocks, RunConfig, SweepParameter};
use output::{cell, flags, sig6, Table};

#[derive(Parser)]
#[command(name = "raidrel", version, about = "RAID reliability with phase-type disk models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit phase-type models to the configured distributions.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Which distribution to fit.
        #[arg(long, value_enum, default_value_t = Which::All)]
        dist: Which,
    },
    /// Analytic DDF(t) from the lumped chain.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Also write the generator as `row col rate` triplets.
        #[arg(long, value_name = "PATH")]
        export_chain: Option<PathBuf>,
    },
    /// Monte Carlo DDF(t) with confidence intervals.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Drive the simulator with the fitted phase-type clocks.
        #[arg(long)]
        phase_type_clocks: bool,
    },
    /// Analytic and simulated DDF(t) side by side.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        phase_type_clocks: bool,
    },
    /// Data-loss probability against TTOp shape.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Uniformization truncation bound (L1).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Phases of the TTOp model: 3 (moment match) or 4 (hazard fit).
    #[arg(long, value_parser = clap::value_parser!(u8).range(3..=4))]
    states: Option<u8>,
    /// Erlang stages for TTR and TTScr.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    erlang_stages: Option<u32>,
    /// Repair infeasible three-state fits instead of failing.
    #[arg(long)]
    allow_repair: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Ttop,
    Ttr,
    Ttscr,
    All,
}

/// Exit status and message of a failed run.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_COMPLEX: u8 = 3;
const EXIT_STATE_CAP: u8 = 4;
const EXIT_NEGATIVE: u8 = 5;
const EXIT_DEGENERATE: u8 = 6;
const EXIT_HAZARD_FIT: u8 = 7;

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter { .. } | Error::InvalidTime(_) => EXIT_CONFIG,
            Error::Fit(f) => match f.kind {
                FitErrorKind::ComplexDiscriminant => EXIT_COMPLEX,
                FitErrorKind::NegativeRate => EXIT_NEGATIVE,
                FitErrorKind::Degenerate => EXIT_DEGENERATE,
            },
            Error::StateCapExceeded { .. } => EXIT_STATE_CAP,
            Error::HazardFitDiverged { .. } => EXIT_HAZARD_FIT,
            _ => EXIT_RUNTIME,
        };
        let hint = if matches!(e, Error::Fit(_)) {
            " (rerun with --allow-repair to use the repaired fit)"
        } else {
            ""
        };
        Failure {
            code,
            message: format!("{e}{hint}"),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Fit { common, dist } => cmd_fit(&common, dist),
        Command::Analyze { common, export_chain } => cmd_analyze(&common, export_chain.as_deref()),
        Command::Simulate { common, phase_type_clocks } => cmd_simulate(&common, phase_type_clocks),
        Command::Compare { common, phase_type_clocks } => cmd_compare(&common, phase_type_clocks),
        Command::Sweep { common } => cmd_sweep(&common),
    }
}

/// Read the config and apply command-line overrides.
fn load(common: &Common) -> Outcome<RunConfig> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| config_error(format!("{}: {e}", common.config.display())))?;
    let mut cfg = RunConfig::parse(&text)
        .map_err(|e| config_error(format!("{}: {e}", common.config.display())))?;
    if let Some(states) = common.states {
        cfg.fit_plan.ttop = if states == 3 { FitMethod::ThreeState } else { FitMethod::FourState };
    }
    if let Some(k) = common.erlang_stages {
        cfg.fit_plan.ttr = FitMethod::Erlang(k);
        cfg.fit_plan.ttscr = FitMethod::Erlang(k);
    }
    cfg.fit_plan.allow_repair |= common.allow_repair;
    if let Some(eps) = common.epsilon {
        cfg.analysis.epsilon = eps;
    }
    if let Some(reps) = common.reps {
        cfg.simulation.reps = reps;
    }
    if let Some(seed) = common.seed {
        cfg.simulation.seed = seed;
    }
    let eps = cfg.analysis.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(config_error(format!("analysis.epsilon: must lie in (0, 1), got {eps}")));
    }
    if !(cfg.analysis.group_multiplier.is_finite() && cfg.analysis.group_multiplier > 0.0) {
        return Err(config_error("analysis.group_multiplier: must be positive"));
    }
    let years = &cfg.analysis.grid_years;
    if years.iter().any(|y| !(y.is_finite() && *y >= 0.0)) || years.windows(2).any(|w| w[1] < w[0]) {
        return Err(config_error("analysis.grid_years: must be ascending and non-negative"));
    }
    Ok(cfg)
}

fn system(cfg: &RunConfig) -> Outcome<SystemConfig> {
    cfg.system().map_err(config_error)
}

fn fit_label(method: FitMethod, params: &FittedModel) -> String {
    match params {
        FittedModel::Exponential { rate } => format!("exponential rate={}", sig6(*rate)),
        FittedModel::ThreeState(p) => format!(
            "alpha={} sigma={} beta={}",
            sig6(p.alpha),
            sig6(p.sigma),
            sig6(p.beta)
        ),
        FittedModel::FourState(p) => format!(
            "advance=[{}, {}] exit=[{}, {}, {}]",
            sig6(p.advance[0]),
            sig6(p.advance[1]),
            sig6(p.exit[0]),
            sig6(p.exit[1]),
            sig6(p.exit[2])
        ),
        FittedModel::Erlang(e) => format!("{method} rate={}", sig6(e.rate)),
    }
}

fn print_fit(name: &str, r: &FitReport) {
    let t = &r.target;
    println!(
        "{name}: Weibull(shape={}, scale={}, offset={}) via {}{}",
        sig6(t.shape),
        sig6(t.scale),
        sig6(t.offset),
        r.method,
        if r.exact { " (exact exponential)" } else { "" }
    );
    println!("  {}", fit_label(r.method, &r.params));
    if let Some(alt) = &r.alternate {
        println!(
            "  alternate branch: alpha={} sigma={} beta={}",
            sig6(alt.alpha),
            sig6(alt.sigma),
            sig6(alt.beta)
        );
    }
    println!(
        "  cdf deviation over [0, {} h]: max excess {}, min deficit {}",
        sig6(r.deviation_horizon),
        sig6(r.max_cdf_excess),
        sig6(r.min_cdf_deficit)
    );
    println!(
        "  hazard limit {} /h, mean error {}",
        sig6(r.hazard_limit),
        sig6(r.mean_error)
    );
}

fn repair_warning(name: &str, r: &FitReport) -> Option<String> {
    r.repaired.then(|| {
        let kind = r.infeasibility.map(|k| format!("{k:?}")).unwrap_or_default();
        format!("{name}: three-state fit infeasible ({kind}); using the repaired fit")
    })
}

fn cmd_fit(common: &Common, which: Which) -> Outcome {
    let cfg = load(common)?;
    let sys = system(&cfg)?;
    let plan = sys.fit_plan;
    let mut jobs = Vec::new();
    if matches!(which, Which::Ttop | Which::All) {
        jobs.push(("ttop", sys.ttop, plan.ttop));
    }
    if matches!(which, Which::Ttr | Which::All) {
        jobs.push(("ttr", sys.ttr, plan.ttr));
    }
    if matches!(which, Which::Ttscr | Which::All) {
        match sys.ttscr {
            Some(s) => jobs.push(("ttscr", s, plan.ttscr)),
            None if which == Which::Ttscr => {
                return Err(config_error("distributions.ttscr: not configured"))
            }
            None => {}
        }
    }
    let mut reports = serde_json::Map::new();
    for (name, target, method) in jobs {
        let report = fit_distribution(&target, method, plan.allow_repair).map_err(|e| {
            let mut f = Failure::from(e);
            f.message = format!("{name}: {}", f.message);
            f
        })?;
        if let Some(w) = repair_warning(name, &report) {
            eprintln!("warning: {w}");
        }
        print_fit(name, &report);
        reports.insert(
            name.into(),
            serde_json::to_value(&report).map_err(|e| Failure {
                code: EXIT_RUNTIME,
                message: e.to_string(),
            })?,
        );
    }
    if let Some(path) = &common.out {
        let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
        fs::write(path, json + "\n")?;
    }
    Ok(())
}

/// Warning lines (to stderr) and flag tokens (for the CSV) for a fit set.
fn fit_flags(fits: &FittedSystem) -> Vec<&'static str> {
    let mut out = Vec::new();
    for (name, r) in fits_named(fits) {
        if let Some(w) = repair_warning(name, r) {
            eprintln!("warning: {w}");
            out.push(match name {
                "ttop" => "repaired-ttop",
                "ttr" => "repaired-ttr",
                _ => "repaired-ttscr",
            });
        }
    }
    out
}

fn fits_named(fits: &FittedSystem) -> Vec<(&'static str, &FitReport)> {
    let mut v = vec![("ttop", &fits.failure), ("ttr", &fits.rebuild)];
    if let Some(s) = &fits.scrub {
        v.push(("ttscr", s));
    }
    v
}

fn common_meta(cfg: &RunConfig, sys: &SystemConfig, command: &str, config: &Path) -> Vec<(&'static str, String)> {
    vec![
        ("command", command.into()),
        ("config", config.display().to_string()),
        ("system", format!("n={} k={}", sys.n, sys.k)),
        (
            "fit_plan",
            format!("ttop={} ttr={} ttscr={}", sys.fit_plan.ttop, sys.fit_plan.ttr, sys.fit_plan.ttscr),
        ),
        (
            "model",
            serde_json::to_string(&sys.options).expect("options serialize"),
        ),
        ("group_multiplier", sig6(cfg.analysis.group_multiplier)),
    ]
}

struct AnalyticRun {
    series: DdfSeries,
    states: usize,
    flags: Vec<&'static str>,
}

fn run_analytic(cfg: &RunConfig, sys: &SystemConfig, export: Option<&Path>) -> Outcome<AnalyticRun> {
    let built = build_system_chain(sys, cfg.analysis.state_cap)?;
    let flags = fit_flags(&built.fits);
    if let Some(path) = export {
        built.chain.write_triplets(io::BufWriter::new(fs::File::create(path)?))?;
    }
    let grid = years_grid(&cfg.analysis.grid_years);
    let series = loss_probability(
        &built.chain,
        &grid,
        cfg.analysis.epsilon,
        cfg.analysis.group_multiplier,
    )?;
    Ok(AnalyticRun {
        series,
        states: built.chain.len(),
        flags,
    })
}

fn cmd_analyze(common: &Common, export: Option<&Path>) -> Outcome {
    let cfg = load(common)?;
    let sys = system(&cfg)?;
    let run = run_analytic(&cfg, &sys, export)?;
    let mut meta = common_meta(&cfg, &sys, "analyze", &common.config);
    meta.push(("epsilon", sig6(cfg.analysis.epsilon)));
    meta.push(("states", run.states.to_string()));
    let mut table = Table::create(
        common.out.as_deref(),
        &meta,
        &["t_years", "ddf_analytic", "states", "epsilon", "flags"],
    )?;
    for p in &run.series.points {
        table.row(&[
            sig6(p.years()),
            cell(p.analytic),
            run.states.to_string(),
            sig6(cfg.analysis.epsilon),
            flags(&run.flags),
        ])?;
    }
    table.finish()?;
    Ok(())
}

struct SimRun {
    series: DdfSeries,
    clocks: Clocks,
    flags: Vec<&'static str>,
}

fn run_sim(cfg: &RunConfig, sys: &SystemConfig, force_phase_type: bool) -> Outcome<SimRun> {
    let clocks = if force_phase_type { Clocks::PhaseType } else { cfg.simulation.clocks };
    let (model, flags) = match clocks {
        Clocks::Weibull => (GroupModel::weibull(sys)?, Vec::new()),
        Clocks::PhaseType => {
            let fits = raidrel_core::raid::fit_system(sys)?;
            let flags = fit_flags(&fits);
            (GroupModel::phase_type(sys)?, flags)
        }
    };
    let grid = years_grid(&cfg.analysis.grid_years);
    let series = estimate_with(
        &model,
        &grid,
        cfg.simulation.reps,
        cfg.simulation.seed,
        cfg.analysis.group_multiplier,
    )?;
    let widened = series
        .points
        .iter()
        .filter(|p| p.simulated.as_ref().is_some_and(|s| s.exact_ci) && p.time > 0.0)
        .count();
    if widened > 0 {
        eprintln!(
            "warning: {widened} grid point(s) have fewer than 30 losses; reporting exact Clopper-Pearson intervals"
        );
    }
    Ok(SimRun { series, clocks, flags })
}

fn sim_meta(cfg: &RunConfig, clocks: Clocks) -> [(&'static str, String); 3] {
    [
        ("seed", cfg.simulation.seed.to_string()),
        ("reps", cfg.simulation.reps.to_string()),
        (
            "clocks",
            match clocks {
                Clocks::Weibull => "weibull".into(),
                Clocks::PhaseType => "phase-type".into(),
            },
        ),
    ]
}

fn point_flags(base: &[&'static str], exact_ci: bool) -> String {
    let mut f = base.to_vec();
    if exact_ci {
        f.push("exact-ci");
    }
    flags(&f)
}

fn cmd_simulate(common: &Common, phase_type: bool) -> Outcome {
    let cfg = load(common)?;
    let sys = system(&cfg)?;
    let run = run_sim(&cfg, &sys, phase_type)?;
    let mut meta = common_meta(&cfg, &sys, "simulate", &common.config);
    meta.extend(sim_meta(&cfg, run.clocks));
    let mut table = Table::create(
        common.out.as_deref(),
        &meta,
        &["t_years", "ddf_sim", "ci_low", "ci_high", "reps", "seed", "flags"],
    )?;
    for p in &run.series.points {
        let s = p.simulated.as_ref().expect("simulated point");
        table.row(&[
            sig6(p.years()),
            sig6(s.estimate),
            sig6(s.ci_low),
            sig6(s.ci_high),
            s.reps.to_string(),
            s.seed.to_string(),
            point_flags(&run.flags, s.exact_ci),
        ])?;
    }
    table.finish()?;
    Ok(())
}

fn cmd_compare(common: &Common, phase_type: bool) -> Outcome {
    let cfg = load(common)?;
    let sys = system(&cfg)?;
    let analytic = run_analytic(&cfg, &sys, None)?;
    let sim = run_sim(&cfg, &sys, phase_type)?;
    let merged = DdfSeries::merge(&analytic.series, &sim.series);
    let mut meta = common_meta(&cfg, &sys, "compare", &common.config);
    meta.push(("epsilon", sig6(cfg.analysis.epsilon)));
    meta.push(("states", analytic.states.to_string()));
    meta.extend(sim_meta(&cfg, sim.clocks));
    let mut table = Table::create(
        common.out.as_deref(),
        &meta,
        &["t_years", "ddf_analytic", "ddf_sim", "ci_low", "ci_high", "sdev_percent", "flags"],
    )?;
    let mut base = analytic.flags.clone();
    for f in sim.flags {
        if !base.contains(&f) {
            base.push(f);
        }
    }
    for p in &merged.points {
        let s = p.simulated.as_ref().expect("simulated point");
        table.row(&[
            sig6(p.years()),
            cell(p.analytic),
            sig6(s.estimate),
            sig6(s.ci_low),
            sig6(s.ci_high),
            cell(p.deviation_percent()),
            point_flags(&base, s.exact_ci),
        ])?;
    }
    table.finish()?;
    Ok(())
}

fn cmd_sweep(common: &Common) -> Outcome {
    let cfg = load(common)?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| config_error("sweep: section missing"))?;
    let SweepParameter::TtopShape = sweep.parameter;
    if sweep.values.is_empty() {
        return Err(config_error("sweep.values: empty"));
    }
    if let Some(bad) = sweep.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(config_error(format!("sweep.values: shape must be positive, got {bad}")));
    }
    if !(sweep.t_years.is_finite() && sweep.t_years >= 0.0) {
        return Err(config_error("sweep.t_years: must be non-negative"));
    }
    let systems = if sweep.systems.is_empty() {
        vec![cfg.system]
    } else {
        sweep.systems.clone()
    };
    let base = system(&cfg)?;
    let mut meta = common_meta(&cfg, &base, "sweep", &common.config);
    meta.push(("epsilon", sig6(cfg.analysis.epsilon)));
    meta.push(("t_years", sig6(sweep.t_years)));
    meta.push(("parameter", "ttop-shape at fixed TTOp mean".into()));
    let mut table = Table::create(
        common.out.as_deref(),
        &meta,
        &["n", "k", "shape", "dataloss_probability", "states", "flags"],
    )?;
    for s in systems {
        let sys = cfg.system_with(s).map_err(config_error)?;
        let points = shape_sensitivity_sweep(
            &sys,
            &sweep.values,
            years_grid(&[sweep.t_years])[0],
            cfg.analysis.epsilon,
            cfg.analysis.state_cap,
        )?;
        for p in points {
            let mut f = Vec::new();
            if p.repaired {
                let kind = p.infeasibility.map(|k| format!("{k:?}")).unwrap_or_default();
                eprintln!(
                    "warning: n={} k={} shape={}: three-state fit infeasible ({kind}); using the repaired fit",
                    s.n,
                    s.k,
                    sig6(p.shape)
                );
                f.push("repaired-fit");
            }
            if p.exact {
                f.push("exact-exponential");
            }
            eprintln!(
                "n={} k={} shape={}: {} states, {:.3} s",
                s.n,
                s.k,
                sig6(p.shape),
                p.states,
                p.seconds
            );
            table.row(&[
                s.n.to_string(),
                s.k.to_string(),
                sig6(p.shape),
                sig6(p.probability),
                p.states.to_string(),
                flags(&f),
            ])?;
        }
    }
    table.finish()?;
    Ok(())
}
