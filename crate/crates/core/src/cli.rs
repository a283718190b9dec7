//! Command-line harness: network generation, the size table, scenario
//! simulation with CSV output, and the congestion/routing experiment.
//!
//! Exit codes: 0 success, 2 argument error, 3 input-file error, 4 internal
//! invariant violation.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::codegen::{emit_document, emit_model_with_routes, loc_estimate, parse_document};
use crate::engine::{format_event_log, run_replications, EngineError, RunConfig, RunOutput};
use crate::kernel::KernelError;
use crate::model::{Model, RouteTable};
use crate::spatial::{generate_crossbar, CrossbarSpec, PedType, RateParams, SpatialError, SpatialGraph};
use crate::stats::{aggregate, compare_means, SummaryStats, Verdict};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Argument(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Argument(_) => 2,
            CliError::Input(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidConfig(m) => CliError::Argument(m),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::Spatial(SpatialError::BadParameter(m)) => CliError::Argument(m),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioTag {
    NoCongestion,
    NoRouting,
    Routing,
}

impl ScenarioTag {
    pub const ALL: [ScenarioTag; 3] = [ScenarioTag::NoCongestion, ScenarioTag::Routing, ScenarioTag::NoRouting];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioTag::NoCongestion => "no-congestion",
            ScenarioTag::NoRouting => "no-routing",
            ScenarioTag::Routing => "routing",
        }
    }
}

/// Arrival-rate overrides and entry restriction applied on top of base rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub tag: ScenarioTag,
    pub arrival: [Option<f64>; 2],
    pub route_entries: bool,
}

impl Scenario {
    pub fn new(tag: ScenarioTag) -> Self {
        match tag {
            // only A pedestrians: nothing to congest with
            ScenarioTag::NoCongestion => Scenario { tag, arrival: [None, Some(0.0)], route_entries: false },
            ScenarioTag::NoRouting => Scenario { tag, arrival: [None, None], route_entries: false },
            ScenarioTag::Routing => Scenario { tag, arrival: [None, None], route_entries: true },
        }
    }

    pub fn apply(&self, g: &SpatialGraph, base: RateParams) -> (RateParams, RouteTable) {
        let mut params = base;
        if let Some(a) = self.arrival[PedType::A.index()] {
            params.arr_a = a;
        }
        if let Some(b) = self.arrival[PedType::B.index()] {
            params.arr_b = b;
        }
        let routes = if self.route_entries { RouteTable::separated_entries(g) } else { RouteTable::none() };
        (params, routes)
    }

    pub fn model(&self, g: &SpatialGraph, base: RateParams) -> Result<Model, CliError> {
        let (params, routes) = self.apply(g, base);
        Ok(Model::new(Arc::new(g.clone()), params, routes)?)
    }
}

#[derive(Debug, Parser)]
#[command(name = "crossbar", about = "Pedestrian counter-flow on cross-bar path networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a cross-bar network and print `nodes connections loc`.
    Generate(GenerateArgs),
    /// Print nodes, connections and estimated lines of code per instance.
    Table(TableArgs),
    /// Simulate one scenario and write replication-aggregated CSV.
    Simulate(SimulateArgs),
    /// Run the structure x scenario study and check the ordering claims.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub width: u32,
    #[arg(long)]
    pub height: u32,
    /// Where to write the `.cbgraph` file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the generated `.cbmodel` text here.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, default_value_t = 3)]
    pub max_width: u32,
    #[arg(long, default_value_t = 3)]
    pub max_height: u32,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 200.0)]
    pub stop_time: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sample_interval: f64,
    #[arg(long, default_value_t = 100)]
    pub replications: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, conflicts_with = "graph")]
    pub width: Option<u32>,
    #[arg(long, conflicts_with = "graph")]
    pub height: Option<u32>,
    /// `.cbgraph` file to simulate instead of a generated network.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "no-routing")]
    pub scenario: ScenarioTag,
    #[command(flatten)]
    pub run: RunArgs,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Event log destination. With several replications, replication `i`
    /// goes to `<path>.<i>`.
    #[arg(long)]
    pub event_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Output directory for `experiment.csv`, `experiment.dat`, `verdicts.txt`.
    #[arg(long, default_value = "experiment_out")]
    pub out: PathBuf,
}

fn crossbar(width: u32, height: u32) -> Result<SpatialGraph, CliError> {
    generate_crossbar(CrossbarSpec::new(width, height)).map_err(|e| CliError::Argument(e.to_string()))
}

fn run_config(args: &RunArgs, scenario: ScenarioTag) -> Result<RunConfig, CliError> {
    let cfg = RunConfig {
        stop_time: args.stop_time,
        sample_interval: args.sample_interval,
        seed: args.seed,
        scenario: scenario.as_str().to_owned(),
    };
    cfg.validate()?;
    if args.replications == 0 {
        return Err(CliError::Argument("replications must be >= 1".into()));
    }
    Ok(cfg)
}

/// `nodes connections loc` for a generated network, writing the requested files.
pub fn cmd_generate(args: &GenerateArgs) -> Result<String, CliError> {
    let g = crossbar(args.width, args.height)?;
    if let Some(path) = &args.out {
        write_file(path, &emit_document(&g, Some(&RateParams::default())))?;
    }
    if let Some(path) = &args.model {
        let m = emit_model_with_routes(&g, &RateParams::default(), &RouteTable::none());
        write_file(path, &m.text)?;
    }
    Ok(format!("{} {} {}\n", g.nodes().len(), g.connection_count(), loc_estimate(&g)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub spec: CrossbarSpec,
    pub nodes: u64,
    pub connections: u64,
    pub loc: u64,
}

/// Rows ordered by height, then width, labelled `HxW`.
pub fn table_rows(max_width: u32, max_height: u32) -> Result<Vec<TableRow>, CliError> {
    let mut rows = Vec::new();
    for h in 1..=max_height {
        for w in 1..=max_width {
            let g = crossbar(w, h)?;
            rows.push(TableRow {
                spec: CrossbarSpec::new(w, h),
                nodes: g.nodes().len() as u64,
                connections: g.connection_count(),
                loc: loc_estimate(&g),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_table(args: &TableArgs) -> Result<String, CliError> {
    if args.max_width == 0 || args.max_height == 0 {
        return Err(CliError::Argument("table bounds must be >= 1".into()));
    }
    let mut s = format!("{:<7}{:>6}{:>13}{:>6}\n", "Model", "Nodes", "Connections", "LoC");
    for r in table_rows(args.max_width, args.max_height)? {
        let _ = writeln!(s, "{:<7}{:>6}{:>13}{:>6}", r.spec.label(), r.nodes, r.connections, r.loc);
    }
    Ok(s)
}

pub const SIMULATE_HEADER: &str = "kind,time,n,average_A_mean,average_A_hw,average_B_mean,average_B_hw,\
count_A_mean,count_A_hw,count_B_mean,count_B_hw,live_A_mean,live_A_hw,live_B_mean,live_B_hw";

fn push_stats(row: &mut String, values: &[f64]) -> Result<(), CliError> {
    let s = aggregate(values).map_err(|e| CliError::Invariant(e.to_string()))?;
    let hw = s.half_width.map_or_else(|| "NA".to_owned(), |h| h.to_string());
    let _ = write!(row, ",{},{hw}", s.mean);
    Ok(())
}

/// Replication-aggregated CSV: one `sample` row per grid time, then a
/// `summary` row with the final traversal averages.
pub fn simulation_csv(runs: &[RunOutput], cfg: &RunConfig) -> Result<String, CliError> {
    let mut out = String::from(SIMULATE_HEADER);
    out.push('\n');
    let grid = cfg.sample_times();
    for (k, t) in grid.iter().enumerate() {
        let mut row = format!("sample,{t},{}", runs.len());
        let col = |f: &dyn Fn(&RunOutput) -> f64| runs.iter().map(f).collect::<Vec<_>>();
        for p in PedType::ALL {
            push_stats(&mut row, &col(&|r| r.samples[k].average[p.index()]))?;
        }
        for p in PedType::ALL {
            push_stats(&mut row, &col(&|r| r.samples[k].count[p.index()] as f64))?;
        }
        for p in PedType::ALL {
            push_stats(&mut row, &col(&|r| r.samples[k].live[p.index()] as f64))?;
        }
        out.push_str(&row);
        out.push('\n');
    }
    let mut row = format!("summary,{},{}", cfg.stop_time, runs.len());
    for p in PedType::ALL {
        let v: Vec<f64> = runs.iter().map(|r| crate::stats::average_traversal(&r.global, p)).collect();
        push_stats(&mut row, &v)?;
    }
    for p in PedType::ALL {
        let v: Vec<f64> = runs.iter().map(|r| r.global.count(p) as f64).collect();
        push_stats(&mut row, &v)?;
    }
    for p in PedType::ALL {
        let v: Vec<f64> = runs.iter().map(|r| r.samples.last().map_or(0, |s| s.live[p.index()]) as f64).collect();
        push_stats(&mut row, &v)?;
    }
    out.push_str(&row);
    out.push('\n');
    Ok(out)
}

fn load_graph(path: &Path) -> Result<(SpatialGraph, Option<RateParams>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let doc = parse_document(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((doc.graph, doc.params))
}

/// Runs the scenario and returns the CSV text (also written to `--out` when given).
pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let (graph, base) = match (&args.graph, args.width, args.height) {
        (Some(path), _, _) => load_graph(path)?,
        (None, Some(w), Some(h)) => (crossbar(w, h)?, None),
        _ => return Err(CliError::Argument("give either --graph or both --width and --height".into())),
    };
    let cfg = run_config(&args.run, args.scenario)?;
    let model = Scenario::new(args.scenario).model(&graph, base.unwrap_or_default())?;
    let runs = run_replications(&model, &cfg, args.run.replications, args.event_log.is_some())?;
    let csv = simulation_csv(&runs, &cfg)?;
    if let Some(path) = &args.event_log {
        for (i, r) in runs.iter().enumerate() {
            let target = if runs.len() == 1 {
                path.clone()
            } else {
                PathBuf::from(format!("{}.{i}", path.display()))
            };
            write_file(&target, &format_event_log(r.log.as_deref().unwrap_or_default()))?;
        }
    }
    if let Some(path) = &args.out {
        write_file(path, &csv)?;
    }
    Ok(csv)
}

/// The four structures of the study, as `(width, height)`.
pub const STUDY_STRUCTURES: [(u32, u32); 4] = [(1, 1), (2, 1), (1, 2), (2, 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub cells: Vec<(CrossbarSpec, Scenario)>,
    pub config: RunConfig,
    pub replications: usize,
    pub base: RateParams,
}

impl ExperimentPlan {
    pub fn standard(config: RunConfig, replications: usize) -> Self {
        let cells = STUDY_STRUCTURES
            .iter()
            .flat_map(|&(w, h)| ScenarioTag::ALL.map(|t| (CrossbarSpec::new(w, h), Scenario::new(t))))
            .collect();
        ExperimentPlan { cells, config, replications, base: RateParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub spec: CrossbarSpec,
    pub scenario: ScenarioTag,
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimCheck {
    pub claim: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub cells: Vec<CellResult>,
    pub claims: Vec<ClaimCheck>,
}

impl ExperimentResults {
    pub fn cell(&self, width: u32, height: u32, tag: ScenarioTag) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.spec == CrossbarSpec::new(width, height) && c.scenario == tag)
    }

    pub fn all_passed(&self) -> bool {
        self.claims.iter().all(|c| c.passed)
    }
}

/// Mean traversal time of one replication, averaged over the types that
/// completed at least one crossing.
pub fn replication_travel_time(run: &RunOutput) -> Option<f64> {
    let done: Vec<f64> = PedType::ALL
        .iter()
        .filter(|&&p| run.global.count(p) > 0)
        .map(|&p| crate::stats::average_traversal(&run.global, p))
        .collect();
    (!done.is_empty()).then(|| done.iter().sum::<f64>() / done.len() as f64)
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResults, CliError> {
    let mut cells = Vec::new();
    for (spec, scenario) in &plan.cells {
        let g = generate_crossbar(*spec).map_err(|e| CliError::Argument(e.to_string()))?;
        let model = scenario.model(&g, plan.base)?;
        let cfg = RunConfig { scenario: scenario.tag.as_str().to_owned(), ..plan.config.clone() };
        let runs = run_replications(&model, &cfg, plan.replications, false)?;
        let values: Vec<f64> = runs.iter().filter_map(replication_travel_time).collect();
        let stats = aggregate(&values).map_err(|e| CliError::Invariant(format!("{}: {e}", spec.label())))?;
        cells.push(CellResult { spec: *spec, scenario: scenario.tag, stats });
    }
    let mut results = ExperimentResults { cells, claims: Vec::new() };
    results.claims = check_claims(&results);
    Ok(results)
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Less => "<",
        Verdict::Indistinguishable => "~",
        Verdict::Greater => ">",
    }
}

/// Ordering claims over the study cells. Cells missing from `results` make
/// the claims that need them fail.
pub fn check_claims(results: &ExperimentResults) -> Vec<ClaimCheck> {
    use ScenarioTag::*;
    let mut claims = Vec::new();
    let less = |a: Option<&CellResult>, b: Option<&CellResult>| -> (bool, String) {
        match (a, b) {
            (Some(a), Some(b)) => {
                let t = compare_means(&a.stats, &b.stats);
                (
                    t.verdict == Verdict::Less,
                    format!(
                        "{:.4} {} {:.4} (Welch p = {:.3e})",
                        a.stats.mean,
                        verdict_str(t.verdict),
                        b.stats.mean,
                        t.p_value
                    ),
                )
            }
            _ => (false, "missing cell".into()),
        }
    };

    for &(w, h) in &STUDY_STRUCTURES {
        let label = CrossbarSpec::new(w, h).label();
        let (ok, detail) = less(results.cell(w, h, NoCongestion), results.cell(w, h, Routing));
        claims.push(ClaimCheck { claim: format!("{label}: no-congestion < routing"), passed: ok, detail });
        let (ok, detail) = less(results.cell(w, h, Routing), results.cell(w, h, NoRouting));
        claims.push(ClaimCheck { claim: format!("{label}: routing < no-routing"), passed: ok, detail });
    }

    // taller network beats the shorter one of the same width
    for tag in [Routing, NoRouting] {
        for (tall, short) in [((1, 2), (1, 1)), ((2, 2), (2, 1))] {
            let (ok, detail) = less(results.cell(tall.0, tall.1, tag), results.cell(short.0, short.1, tag));
            claims.push(ClaimCheck {
                claim: format!(
                    "{}: {} < {}",
                    tag.as_str(),
                    CrossbarSpec::new(tall.0, tall.1).label(),
                    CrossbarSpec::new(short.0, short.1).label()
                ),
                passed: ok,
                detail,
            });
        }
    }

    let gap = |w: u32, h: u32| -> Option<f64> {
        Some(results.cell(w, h, NoRouting)?.stats.mean - results.cell(w, h, Routing)?.stats.mean)
    };
    let narrow = [(1, 1), (2, 1)];
    let tall = [(1, 2), (2, 2)];
    let gaps: Option<(Vec<f64>, Vec<f64>)> = (|| {
        Some((
            narrow.iter().map(|&(w, h)| gap(w, h)).collect::<Option<Vec<_>>>()?,
            tall.iter().map(|&(w, h)| gap(w, h)).collect::<Option<Vec<_>>>()?,
        ))
    })();
    let (ok, detail) = match gaps {
        Some((n, t)) => {
            let min_n = n.iter().copied().fold(f64::INFINITY, f64::min);
            let max_t = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (
                min_n > max_t,
                format!(
                    "routing gains 1x1 {:.4}, 1x2 {:.4} vs 2x1 {:.4}, 2x2 {:.4}",
                    n[0], n[1], t[0], t[1]
                ),
            )
        }
        None => (false, "missing cell".into()),
    };
    claims.push(ClaimCheck {
        claim: "routing gain larger on height-1 networks (1x1, 1x2) than height-2 (2x1, 2x2)".into(),
        passed: ok,
        detail,
    });
    claims
}

pub const EXPERIMENT_HEADER: &str = "structure,width,height,scenario,n,mean,variance,half_width";

pub fn experiment_csv(results: &ExperimentResults) -> String {
    let mut s = String::from(EXPERIMENT_HEADER);
    s.push('\n');
    for c in &results.cells {
        let hw = c.stats.half_width.map_or_else(|| "NA".to_owned(), |h| h.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{hw}",
            c.spec.label(),
            c.spec.width,
            c.spec.height,
            c.scenario.as_str(),
            c.stats.n,
            c.stats.mean,
            c.stats.variance
        );
    }
    s
}

/// Grouped-bar data: one row per structure, mean and half-width per scenario.
pub fn experiment_plot_data(results: &ExperimentResults) -> String {
    let mut s = String::from("# structure");
    for t in ScenarioTag::ALL {
        let _ = write!(s, " {0} {0}_hw", t.as_str());
    }
    s.push('\n');
    for &(w, h) in &STUDY_STRUCTURES {
        let _ = write!(s, "{}", CrossbarSpec::new(w, h).label());
        for t in ScenarioTag::ALL {
            match results.cell(w, h, t) {
                Some(c) => {
                    let _ = write!(s, " {} {}", c.stats.mean, c.stats.half_width.unwrap_or(0.0));
                }
                None => s.push_str(" NaN NaN"),
            }
        }
        s.push('\n');
    }
    s
}

pub fn verdict_report(results: &ExperimentResults) -> String {
    let mut s = String::new();
    for c in &results.claims {
        let _ = writeln!(s, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.claim, c.detail);
    }
    s
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<(String, ExperimentResults), CliError> {
    let cfg = run_config(&args.run, ScenarioTag::NoRouting)?;
    let plan = ExperimentPlan::standard(cfg, args.run.replications);
    let results = run_experiment(&plan)?;
    write_file(&args.out.join("experiment.csv"), &experiment_csv(&results))?;
    write_file(&args.out.join("experiment.dat"), &experiment_plot_data(&results))?;
    let report = verdict_report(&results);
    write_file(&args.out.join("verdicts.txt"), &report)?;
    Ok((format!("{}{}", experiment_csv(&results), report), results))
}

/// Parses `args`, runs the command and writes its output; returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Table(a) => cmd_table(a),
        Command::Simulate(a) => cmd_simulate(a).map(|csv| if a.out.is_some() { String::new() } else { csv }),
        Command::Experiment(a) => cmd_experiment(a).map(|(text, _)| text),
    };
    match result {
        Ok(text) => {
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(std::iter::once("crossbar").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn generate_prints_triples() {
        assert_eq!(run_cli(&["generate", "--width", "1", "--height", "1"]).1, "6 8 208\n");
        assert_eq!(run_cli(&["generate", "--width", "3", "--height", "2"]).1, "14 27 398\n");
        assert_eq!(run_cli(&["generate", "--width", "2", "--height", "3"]).1, "14 28 408\n");
    }

    #[test]
    fn generate_rejects_zero_width() {
        let (code, _, err) = run_cli(&["generate", "--width", "0", "--height", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("width"));
    }

    #[test]
    fn table_single_row() {
        let (code, out, _) = run_cli(&["table", "--max-width", "1", "--max-height", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 2);
        assert!(out.lines().nth(1).unwrap().split_whitespace().eq(["1x1", "6", "8", "208"]));
    }

    #[test]
    fn loc_grows_with_both_dimensions() {
        let rows = table_rows(4, 4).unwrap();
        let loc = |w, h| rows.iter().find(|r| r.spec == CrossbarSpec::new(w, h)).unwrap().loc;
        for w in 1..4 {
            for h in 1..4 {
                assert!(loc(w + 1, h) > loc(w, h));
                assert!(loc(w, h + 1) > loc(w, h));
            }
        }
    }

    #[test]
    fn bad_scenario_is_an_argument_error() {
        let (code, _, _) = run_cli(&["simulate", "--width", "1", "--height", "1", "--scenario", "chaos"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn missing_graph_file_is_an_input_error() {
        let (code, _, err) = run_cli(&["simulate", "--graph", "/nonexistent/x.cbgraph", "--replications", "1"]);
        assert_eq!(code, 3);
        assert!(err.contains("x.cbgraph"));
    }

    #[test]
    fn missing_geometry_is_an_argument_error() {
        assert_eq!(run_cli(&["simulate", "--width", "1"]).0, 2);
        assert_eq!(run_cli(&["simulate", "--width", "1", "--height", "1", "--stop-time", "0"]).0, 2);
        assert_eq!(run_cli(&["simulate", "--width", "1", "--height", "1", "--replications", "0"]).0, 2);
    }

    #[test]
    fn no_congestion_has_no_b_completions() {
        let (code, csv, _) = run_cli(&[
            "simulate", "--width", "1", "--height", "1", "--scenario", "no-congestion",
            "--stop-time", "20", "--replications", "4", "--seed", "3",
        ]);
        assert_eq!(code, 0);
        let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
        assert_eq!(header.join(","), SIMULATE_HEADER);
        let col = header.iter().position(|h| *h == "count_B_mean").unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 22);
        for r in rows {
            assert_eq!(r.split(',').nth(col).unwrap(), "0");
        }
    }

    #[test]
    fn scenario_application() {
        let g = generate_crossbar(CrossbarSpec::new(1, 1)).unwrap();
        let (p, r) = Scenario::new(ScenarioTag::NoCongestion).apply(&g, RateParams::default());
        assert_eq!((p.arr_a, p.arr_b), (1.0, 0.0));
        assert!(r.is_empty());
        let (_, r) = Scenario::new(ScenarioTag::Routing).apply(&g, RateParams::default());
        for t in PedType::ALL {
            assert_eq!(r.open_entries(&g, t), 1);
        }
    }

    #[test]
    fn standard_plan_has_twelve_cells() {
        let plan = ExperimentPlan::standard(RunConfig::default(), 2);
        assert_eq!(plan.cells.len(), 12);
    }
}
