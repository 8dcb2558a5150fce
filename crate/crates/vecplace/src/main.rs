//! Command-line driver for the placement optimizer.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vecplace::config;
use vecplace::export::{export_lp, export_mps};
use vecplace::harness::{check_records, report, run_one, run_sweep, Instance, Scenario};
use vecplace::model::{build_model, MilpModel};
use vecplace::solver::{Solution, SolveOptions, SolveStatus};
use vecplace::topology::Architecture;
use vecplace::verify::verify;
use vecplace::workload::{
    available_nodes, drr_set, high_demand_sweep, low_demand_sweep, make_scenario, Case, Pattern,
    Strategy,
};
use vecplace::{Error, Result};

/// Prints to stdout, exiting quietly when the reader closes the pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if write!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

/// Prints a line to stdout, exiting quietly when the reader closes the pipe.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

#[derive(Parser)]
#[command(
    name = "vecplace",
    version,
    about = "Minimum-power placement of processing tasks across cloud, fog, and vehicular edge nodes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and print the solution as JSON.
    Run(RunCmd),
    /// Solve a scenario grid and tabulate the records as CSV.
    Sweep(SweepCmd),
    /// Write the optimization model in LP or MPS text form.
    ExportLp(ExportCmd),
    /// Re-check a saved solution against a freshly built model.
    Verify(VerifyCmd),
}

#[derive(Args)]
struct InstanceArgs {
    /// Architecture: one-zone or multi-zone.
    #[arg(long)]
    arch: Option<String>,
    /// TOML file with sizing and hardware-profile overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Zone count.
    #[arg(long)]
    zones: Option<usize>,
    /// Clusters per zone.
    #[arg(long)]
    clusters: Option<usize>,
    /// Vehicles per cluster (default chosen by the availability case).
    #[arg(long)]
    vns: Option<usize>,
    /// Cloud server count.
    #[arg(long)]
    cc_servers: Option<usize>,
    /// Core-router hops between metro and cloud.
    #[arg(long)]
    rr_hops: Option<usize>,
    /// Reserved for future randomized workloads; accepted and ignored.
    #[arg(long)]
    seed: Option<u64>,
}

impl InstanceArgs {
    fn instance(&self) -> Result<Instance> {
        let _ = self.seed;
        let cfg = match &self.config {
            Some(path) => config::load_config(path)?,
            None => config::FileConfig::default(),
        };
        let arch = match &self.arch {
            Some(label) => Architecture::from_label(label)
                .ok_or_else(|| Error::Config(format!("unknown architecture {label}")))?,
            None => cfg.architecture()?.unwrap_or(Architecture::OneZone),
        };
        let mut instance = Instance::for_architecture(arch);
        config::apply(&mut instance, &cfg)?;
        if let Some(z) = self.zones {
            instance.zones = z;
        }
        if let Some(c) = self.clusters {
            instance.clusters_per_zone = c;
        }
        if let Some(v) = self.vns {
            instance.vns_per_cluster = Some(v);
        }
        if let Some(s) = self.cc_servers {
            instance.cc_servers = s;
        }
        if let Some(h) = self.rr_hops {
            instance.rr_hops = h;
        }
        if instance.architecture == Architecture::OneZone && instance.zones != 1 {
            return Err(Error::Config(
                "one-zone architecture requires zones = 1".into(),
            ));
        }
        Ok(instance)
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Source pattern.
    #[arg(long, default_value = "one-task-one-cluster")]
    pattern: String,
    /// Availability case: cca, cfa, cfva-l, or cfva-h.
    #[arg(long, default_value = "cfva-l")]
    case: String,
    /// Placement strategy: sa or da.
    #[arg(long, default_value = "da")]
    strategy: String,
    /// Demand per task in MIPS.
    #[arg(long, default_value_t = 2000.0)]
    demand: f64,
    /// Data-rate ratio in Mb/s per MIPS.
    #[arg(long, default_value_t = 0.001)]
    drr: f64,
}

impl ScenarioArgs {
    fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario {
            pattern: parse_pattern(&self.pattern)?,
            case: parse_case(&self.case)?,
            strategy: parse_strategy(&self.strategy)?,
            demand: self.demand,
            drr: self.drr,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Relative bound gap below which the search may stop early.
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Search-node limit.
    #[arg(long)]
    node_limit: Option<usize>,
}

impl SolveArgs {
    fn options(&self) -> SolveOptions {
        let mut opts = SolveOptions::default();
        if let Some(g) = self.gap_tol {
            opts.gap_tol = g;
        }
        opts.time_limit = self.time_limit;
        opts.node_limit = self.node_limit;
        opts
    }
}

#[derive(Args)]
struct RunCmd {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    solve: SolveArgs,
    /// Write the solution JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit nonzero when the scenario is infeasible.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solve: SolveArgs,
    /// Source pattern.
    #[arg(long, default_value = "one-task-one-cluster")]
    pattern: String,
    /// Cases to run: a comma list or "all".
    #[arg(long, default_value = "all")]
    case: String,
    /// Strategies to run: sa, da, or "both".
    #[arg(long, default_value = "both")]
    strategy: String,
    /// Demands per task: "high", "low", or a comma list of MIPS values.
    #[arg(long, default_value = "high")]
    demands: String,
    /// Data-rate ratios: "study" or a comma list.
    #[arg(long, default_value = "0.001")]
    drr: String,
    /// Write the CSV here (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock solve times in the CSV.
    #[arg(long)]
    timing: bool,
    /// Exit nonzero when any point is infeasible.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ExportCmd {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output format: lp or mps.
    #[arg(long, default_value = "lp")]
    format: String,
    /// Output path (stdout for lp when omitted; required for mps).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyCmd {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Solution JSON produced by `run --out`.
    #[arg(long)]
    solution: PathBuf,
    /// Residual tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn parse_pattern(s: &str) -> Result<Pattern> {
    Pattern::from_label(s).ok_or_else(|| Error::Config(format!("unknown pattern {s}")))
}

fn parse_case(s: &str) -> Result<Case> {
    Case::from_label(s).ok_or_else(|| Error::Config(format!("unknown case {s}")))
}

fn parse_strategy(s: &str) -> Result<Strategy> {
    Strategy::from_label(s).ok_or_else(|| Error::Config(format!("unknown strategy {s}")))
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("not a number: {tok}")))
        })
        .collect()
}

fn build_scenario_model(instance: &Instance, scenario: &Scenario) -> MilpModel {
    let topo = instance.topology(scenario.case);
    let tasks = make_scenario(
        &topo,
        scenario.pattern,
        scenario.strategy,
        scenario.demand,
        scenario.drr,
    );
    let mask = available_nodes(&topo, scenario.case);
    build_model(&topo, &tasks, &mask)
}

fn cmd_run(cmd: &RunCmd) -> Result<bool> {
    let instance = cmd.instance.instance()?;
    let scenario = cmd.scenario.scenario()?;
    let (record, solution) = run_one(&instance, &scenario, &cmd.solve.options())?;
    let json = serde_json::to_string_pretty(&solution).expect("solutions are always finite");
    match &cmd.out {
        Some(path) => {
            std::fs::write(path, format!("{json}\n")).map_err(|e| Error::io(path, e))?;
            outln!("status: {}", solution.status);
            if let Some(total) = record.total_w {
                outln!("total power: {total} W");
                outln!("allocation: {}", record.pn_alloc);
                if !record.vec_alloc.is_empty() {
                    outln!("vehicular: {}", record.vec_alloc);
                }
            }
        }
        None => outln!("{json}"),
    }
    Ok(cmd.strict && solution.status == SolveStatus::Infeasible)
}

fn cmd_sweep(cmd: &SweepCmd) -> Result<bool> {
    let instance = cmd.instance.instance()?;
    let pattern = parse_pattern(&cmd.pattern)?;
    let cases: Vec<Case> = if cmd.case == "all" {
        Case::ALL.to_vec()
    } else {
        cmd.case
            .split(',')
            .map(|s| parse_case(s.trim()))
            .collect::<Result<_>>()?
    };
    let strategies: Vec<Strategy> = if cmd.strategy == "both" {
        vec![Strategy::Sa, Strategy::Da]
    } else {
        vec![parse_strategy(&cmd.strategy)?]
    };
    let demands = match cmd.demands.as_str() {
        "high" => high_demand_sweep(),
        "low" => low_demand_sweep(),
        list => parse_f64_list(list)?,
    };
    let drrs = match cmd.drr.as_str() {
        "study" => drr_set(),
        list => parse_f64_list(list)?,
    };

    let mut scenarios = Vec::new();
    for &case in &cases {
        for &strategy in &strategies {
            for &drr in &drrs {
                for &demand in &demands {
                    scenarios.push(Scenario {
                        pattern,
                        case,
                        strategy,
                        demand,
                        drr,
                    });
                }
            }
        }
    }
    let records = run_sweep(&instance, &scenarios, &cmd.solve.options())?;
    check_records(&records)?;
    let (csv, summary) = report(&records, cmd.timing)?;
    match &cmd.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| Error::io(path, e))?;
            out!("{summary}");
        }
        None => out!("{csv}"),
    }
    Ok(cmd.strict && records.iter().any(|r| r.status == SolveStatus::Infeasible))
}

fn cmd_export(cmd: &ExportCmd) -> Result<()> {
    let instance = cmd.instance.instance()?;
    let scenario = cmd.scenario.scenario()?;
    let model = build_scenario_model(&instance, &scenario);
    match cmd.format.as_str() {
        "lp" => {
            let text = export_lp(&model);
            match &cmd.out {
                Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e))?,
                None => out!("{text}"),
            }
        }
        "mps" => {
            let (document, names) = export_mps(&model);
            let out = cmd
                .out
                .as_ref()
                .ok_or_else(|| Error::Config("--out is required for mps output".into()))?;
            std::fs::write(out, document).map_err(|e| Error::io(out, e))?;
            let mut names_path = out.as_os_str().to_owned();
            names_path.push(".names");
            let names_path = PathBuf::from(names_path);
            std::fs::write(&names_path, names).map_err(|e| Error::io(&names_path, e))?;
        }
        other => return Err(Error::Config(format!("unknown format {other}"))),
    }
    Ok(())
}

fn cmd_verify(cmd: &VerifyCmd) -> Result<bool> {
    let instance = cmd.instance.instance()?;
    let scenario = cmd.scenario.scenario()?;
    let model = build_scenario_model(&instance, &scenario);
    let text = std::fs::read_to_string(&cmd.solution).map_err(|e| Error::io(&cmd.solution, e))?;
    let solution: Solution = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", cmd.solution.display())))?;
    let report = verify(&solution, &model)?;

    let mut by_label: std::collections::BTreeMap<&str, f64> = std::collections::BTreeMap::new();
    for check in report
        .rows
        .iter()
        .chain(&report.identities)
        .chain(&report.bounds)
    {
        let worst = by_label.entry(check.label).or_insert(0.0);
        *worst = worst.max(check.residual);
    }
    for (label, worst) in &by_label {
        outln!("{label}: {worst:e}");
    }
    outln!("objective delta: {:e}", report.objective_delta);
    outln!("power delta: {:e}", report.power_delta);
    outln!("max residual: {:e}", report.max_residual());
    let ok = report.ok(cmd.tol);
    outln!("verdict: {}", if ok { "ok" } else { "violated" });
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(c) => cmd_run(c).map(|strict_failure| !strict_failure),
        Command::Sweep(c) => cmd_sweep(c).map(|strict_failure| !strict_failure),
        Command::ExportLp(c) => cmd_export(c).map(|()| true),
        Command::Verify(c) => cmd_verify(c),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
