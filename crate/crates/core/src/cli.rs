//! Command-line front end over JSON path documents.
//!
//! Exit codes: 0 ok, 1 other failure, 2 schema or usage error, 3 invalid
//! order, 4 search budget exceeded, 5 infeasible memory budget.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::allocation::{
    optimize_allocation, AllocationOptions, AllocationProblem, CapacityModel, MemoryBudget,
};
use crate::error::Error;
use crate::estimator::{
    estimate_path_throughput, link_rates, path_slot, round_trip_time, HardwareProfile, PhysicalLink, TimingParams,
};
use crate::montecarlo::{simulate_asap, simulate_order};
use crate::order_search::{score_all_trees, Strategy, DEFAULT_TREE_BUDGET};
use crate::swap_engine::{ent, EvalMode, LinkSpec, PathSpec, SwapOrder, DEFAULT_EPSILON};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_ORDER: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_INFEASIBLE: i32 = 5;

// ---------------------------------------------------------------------------
// Documents

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicalLinkDoc {
    pub capacity: u64,
    pub success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalLinkDoc {
    pub length_km: f64,
    pub memory_pairs: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_per_attempt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkDoc {
    Logical(LogicalLinkDoc),
    Physical(PhysicalLinkDoc),
}

/// Hardware overrides; absent fields take the profile defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attenuation_db_per_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub light_speed_km_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt_latency_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_prefactor: Option<f64>,
}

impl HardwareDoc {
    pub fn profile(&self) -> HardwareProfile {
        let d = HardwareProfile::default();
        HardwareProfile {
            attenuation_db_per_km: self.attenuation_db_per_km.unwrap_or(d.attenuation_db_per_km),
            light_speed_km_per_s: self.light_speed_km_per_s.unwrap_or(d.light_speed_km_per_s),
            detector_efficiency: self.detector_efficiency.unwrap_or(d.detector_efficiency),
            memory_efficiency: self.memory_efficiency.unwrap_or(d.memory_efficiency),
            attempt_latency_factor: self.attempt_latency_factor.unwrap_or(d.attempt_latency_factor),
            protocol_prefactor: self.protocol_prefactor.unwrap_or(d.protocol_prefactor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingDoc {
    pub coherence_time_s: f64,
    #[serde(default)]
    pub herald_delay_s: f64,
    #[serde(default)]
    pub app_delay_s: f64,
}

impl TimingDoc {
    pub fn params(&self) -> Result<TimingParams, CliError> {
        TimingParams::new(self.coherence_time_s, self.herald_delay_s, self.app_delay_s).map_err(CliError::schema)
    }
}

/// A path description: logical links (capacity, success) or physical links
/// (length, memories, optional measured rates) with hardware and timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDocument {
    pub schema: u32,
    pub links: Vec<LinkDoc>,
    pub swap_probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardware: Option<HardwareDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingDoc>,
    /// Memories per node, for `allocate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Vec<u32>>,
    /// Capacity per memory pair on each link, for `allocate` on logical documents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<f64>>,
}

pub enum Form {
    Logical(PathSpec),
    Physical { links: Vec<PhysicalLink>, hardware: HardwareProfile, timing: Option<TimingParams> },
}

impl PathDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: PathDocument =
            serde_json::from_str(text).map_err(|e| CliError::new(EXIT_SCHEMA, format!("malformed document: {e}")))?;
        if doc.schema != SCHEMA_VERSION {
            return Err(CliError::new(
                EXIT_SCHEMA,
                format!("unsupported schema {} (expected {SCHEMA_VERSION})", doc.schema),
            ));
        }
        doc.form()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::new(EXIT_SCHEMA, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn from_path(path: &PathSpec) -> Self {
        PathDocument {
            schema: SCHEMA_VERSION,
            links: path
                .links()
                .iter()
                .map(|l| LinkDoc::Logical(LogicalLinkDoc { capacity: l.capacity, success: l.success }))
                .collect(),
            swap_probs: path.swap_probs().to_vec(),
            hardware: None,
            timing: None,
            budget: None,
            kappa: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn form(&self) -> Result<Form, CliError> {
        let logical: Vec<&LogicalLinkDoc> =
            self.links.iter().filter_map(|l| if let LinkDoc::Logical(x) = l { Some(x) } else { None }).collect();
        let physical: Vec<&PhysicalLinkDoc> =
            self.links.iter().filter_map(|l| if let LinkDoc::Physical(x) = l { Some(x) } else { None }).collect();
        if self.links.is_empty() {
            return Err(CliError::new(EXIT_SCHEMA, "document has no links"));
        }
        if self.swap_probs.len() + 1 != self.links.len() {
            return Err(CliError::new(
                EXIT_SCHEMA,
                format!("{} links need {} swap probabilities", self.links.len(), self.links.len() - 1),
            ));
        }
        if physical.is_empty() {
            if self.hardware.is_some() || self.timing.is_some() {
                return Err(CliError::new(EXIT_SCHEMA, "hardware and timing belong to physical documents"));
            }
            let links = logical.iter().map(|l| LinkSpec { capacity: l.capacity, success: l.success }).collect();
            return PathSpec::new(links, self.swap_probs.clone()).map(Form::Logical).map_err(CliError::schema);
        }
        if !logical.is_empty() {
            return Err(CliError::new(EXIT_SCHEMA, "document mixes logical and physical links"));
        }
        let links: Vec<PhysicalLink> = physical
            .iter()
            .map(|l| PhysicalLink {
                length_km: l.length_km,
                memory_pairs: l.memory_pairs,
                attempt_rate_per_s: l.attempt_rate,
                success_per_attempt: l.success_per_attempt,
            })
            .collect();
        for link in &links {
            link.validate().map_err(CliError::schema)?;
        }
        if let Some(q) = self.swap_probs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(CliError::new(EXIT_SCHEMA, format!("swap probability {q} outside [0, 1]")));
        }
        let hardware = self.hardware.clone().unwrap_or_default().profile();
        hardware.validate().map_err(CliError::schema)?;
        let timing = self.timing.as_ref().map(TimingDoc::params).transpose()?;
        Ok(Form::Physical { links, hardware, timing })
    }

    fn logical(&self) -> Result<PathSpec, CliError> {
        match self.form()? {
            Form::Logical(path) => Ok(path),
            Form::Physical { .. } => Err(CliError::new(EXIT_SCHEMA, "this command needs a logical document")),
        }
    }
}

// ---------------------------------------------------------------------------
// Errors

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    /// Any engine error met while reading a document is a schema problem.
    fn schema(e: Error) -> Self {
        Self::new(EXIT_SCHEMA, e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidOrder(_) => EXIT_ORDER,
            Error::BudgetExceeded { .. } => EXIT_BUDGET,
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            Error::InvalidPath(_) | Error::InvalidParameter(_) => EXIT_SCHEMA,
            Error::InvalidMoments { .. } | Error::DegenerateTheta | Error::SlotNonpositive { .. } => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Arguments

#[derive(Debug, Parser)]
#[command(name = "qswap", version, about = "Entanglement throughput of repeater paths")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Evaluation mode: exact, tail, normal or hybrid.
    #[arg(long, global = true, default_value = "exact")]
    pub mode: String,
    /// Truncation threshold for tail and hybrid modes.
    #[arg(long, global = true, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Decimals in human-readable output.
    #[arg(long, global = true, default_value_t = 2)]
    pub precision: usize,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for the engine (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write the parsed document back out, normalized, to this file.
    #[arg(long, global = true)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected end-to-end entanglements for one swapping order.
    Eval {
        doc: PathBuf,
        #[arg(long)]
        order: String,
    },
    /// Choose a swapping order.
    Search {
        doc: PathBuf,
        /// brute, greedy, vora, balanced, l2r or r2l.
        #[arg(long, default_value = "vora")]
        strategy: String,
        /// With brute: print every tree's order and score as CSV.
        #[arg(long)]
        all: bool,
        /// Largest number of trees brute force may score.
        #[arg(long, default_value_t = DEFAULT_TREE_BUDGET)]
        max_trees: u128,
    },
    /// Split node memories between links and pick the order.
    Allocate {
        doc: PathBuf,
        /// Print every evaluated allocation as CSV.
        #[arg(long)]
        all: bool,
        /// Largest number of maximal allocations scored exhaustively.
        #[arg(long, default_value_t = crate::allocation::DEFAULT_ALLOCATION_BUDGET)]
        max_allocations: usize,
    },
    /// Entanglements per second of a physical path over coherence times.
    Estimate {
        doc: PathBuf,
        /// Comma-separated coherence times in seconds; defaults to the document's.
        #[arg(long, value_delimiter = ',')]
        coherence: Vec<f64>,
    },
    /// Monte Carlo estimate of a swapping order or of random interleavings.
    Simulate {
        doc: PathBuf,
        #[arg(long, required_unless_present = "asap")]
        order: Option<String>,
        #[arg(long, conflicts_with_all = ["order", "check"])]
        asap: bool,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compare against the evaluated score and report a z-score.
        #[arg(long)]
        check: bool,
    },
}

// ---------------------------------------------------------------------------
// Driver

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return e.exit_code();
        }
    };
    let mut warnings = Vec::new();
    let result = match cli.common.jobs {
        Some(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
            Ok(pool) => pool.install(|| execute(&cli, &mut warnings)),
            Err(e) => Err(CliError::new(EXIT_FAILURE, format!("cannot start worker pool: {e}"))),
        },
        None => execute(&cli, &mut warnings),
    };
    let _ = err.write_all(&warnings);
    match result {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: &Cli, err: &mut Vec<u8>) -> Result<String, CliError> {
    let common = &cli.common;
    let mode = EvalMode::from_name(&common.mode, common.epsilon)?;
    let doc_path = match &cli.command {
        Command::Eval { doc, .. }
        | Command::Search { doc, .. }
        | Command::Allocate { doc, .. }
        | Command::Estimate { doc, .. }
        | Command::Simulate { doc, .. } => doc,
    };
    let doc = PathDocument::load(doc_path)?;
    if let Some(target) = &common.dump {
        fs::write(target, doc.to_json() + "\n")
            .map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot write {}: {e}", target.display())))?;
    }
    match &cli.command {
        Command::Eval { order, .. } => cmd_eval(&doc, order, mode, common),
        Command::Search { strategy, all, max_trees, .. } => cmd_search(&doc, strategy, *all, *max_trees, mode, common),
        Command::Allocate { all, max_allocations, .. } => cmd_allocate(&doc, *all, *max_allocations, mode, common),
        Command::Estimate { coherence, .. } => cmd_estimate(&doc, coherence, mode, common, err),
        Command::Simulate { order, trials, seed, check, .. } => {
            cmd_simulate(&doc, order.as_deref(), *trials, *seed, *check, mode, common)
        }
    }
}

fn parse_order(text: &str) -> Result<SwapOrder, CliError> {
    text.parse::<SwapOrder>().map_err(|e| CliError::new(EXIT_ORDER, e.to_string()))
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn to_json(value: Value) -> String {
    value.to_string() + "\n"
}

pub fn cmd_eval(doc: &PathDocument, order: &str, mode: EvalMode, common: &Common) -> Result<String, CliError> {
    let path = doc.logical()?;
    let order = parse_order(order)?;
    let start = Instant::now();
    let eval = ent(&path, &order, mode)?;
    let timing_ms = ms_since(start);
    let (mean, variance) = (eval.distribution.mean(), eval.distribution.variance());
    let support = eval.distribution.as_pmf().map(|p| p.support());
    if common.json {
        return Ok(to_json(json!({
            "score": eval.score,
            "order": order.to_string(),
            "mode": mode.name(),
            "timing_ms": timing_ms,
            "mean": mean,
            "variance": variance,
            "support": support,
        })));
    }
    let p = common.precision;
    let mut text = format!("{order} {:.p$}\n", eval.score);
    let _ = write!(text, "distribution mean {mean:.p$} variance {variance:.p$}");
    if let Some(k) = support {
        let _ = write!(text, " support {k}");
    }
    text.push('\n');
    Ok(text)
}

pub fn cmd_search(
    doc: &PathDocument,
    strategy: &str,
    all: bool,
    max_trees: u128,
    mode: EvalMode,
    common: &Common,
) -> Result<String, CliError> {
    let path = doc.logical()?;
    let strategy = Strategy::from_name(strategy).map_err(|e| CliError::new(EXIT_SCHEMA, e.to_string()))?;
    let start = Instant::now();
    if all {
        if strategy != Strategy::BruteForce {
            return Err(CliError::new(EXIT_SCHEMA, "--all lists every tree and needs --strategy brute"));
        }
        let scored = score_all_trees(&path, mode, max_trees)?;
        if common.json {
            let rows: Vec<Value> =
                scored.iter().map(|s| json!({ "order": s.order.to_string(), "score": s.score })).collect();
            return Ok(to_json(json!({ "mode": mode.name(), "timing_ms": ms_since(start), "trees": rows })));
        }
        let mut text = String::from("order,score\n");
        for s in &scored {
            let _ = writeln!(text, "\"{}\",{}", s.order, s.score);
        }
        return Ok(text);
    }
    let best = match strategy {
        Strategy::BruteForce => crate::order_search::brute_force_with_budget(&path, mode, max_trees)?,
        other => other.run(&path, mode)?,
    };
    if common.json {
        return Ok(to_json(json!({
            "score": best.score,
            "order": best.order.to_string(),
            "mode": mode.name(),
            "strategy": strategy.name(),
            "timing_ms": ms_since(start),
        })));
    }
    let p = common.precision;
    Ok(format!("{} {:.p$}\n", best.order, best.score))
}

/// Turns a document with a budget into an allocation problem. Physical links
/// get `kappa_i = (A_i / m_i) * slot`, the capacity one memory pair adds at the
/// template's slot length; the slot is ENT per slot divided by slot plus delays.
fn allocation_problem(doc: &PathDocument) -> Result<(AllocationProblem, Option<f64>), CliError> {
    let budget = doc.budget.clone().ok_or_else(|| CliError::new(EXIT_SCHEMA, "allocate needs a \"budget\" list"))?;
    let budget = MemoryBudget::new(budget).map_err(CliError::schema)?;
    if budget.link_count() != doc.links.len() {
        return Err(CliError::new(
            EXIT_SCHEMA,
            format!("budget lists {} nodes but the path has {}", budget.per_node().len(), doc.links.len() + 1),
        ));
    }
    let (kappa, link_probs, period) = match doc.form()? {
        Form::Logical(path) => {
            let kappa = doc
                .kappa
                .clone()
                .ok_or_else(|| CliError::new(EXIT_SCHEMA, "allocate on logical links needs a \"kappa\" list"))?;
            (kappa, path.links().iter().map(|l| l.success).collect(), None)
        }
        Form::Physical { links, hardware, timing } => {
            let timing = timing.ok_or_else(|| CliError::new(EXIT_SCHEMA, "physical allocate needs \"timing\""))?;
            let slot = path_slot(&links, &hardware, &timing)?;
            let rates: Vec<(f64, f64)> = links.iter().map(|l| link_rates(l, &hardware)).collect();
            let kappa = rates.iter().zip(&links).map(|((a, _), l)| a / l.memory_pairs as f64 * slot).collect();
            let period = slot + timing.herald_delay_s + timing.app_delay_s;
            (kappa, rates.iter().map(|r| r.1).collect(), Some(period))
        }
    };
    let model = CapacityModel::linear(kappa).map_err(CliError::schema)?;
    let problem = AllocationProblem { budget, model, link_probs, swap_probs: doc.swap_probs.clone() };
    Ok((problem, period))
}

pub fn cmd_allocate(
    doc: &PathDocument,
    all: bool,
    max_allocations: usize,
    mode: EvalMode,
    common: &Common,
) -> Result<String, CliError> {
    let (problem, period) = allocation_problem(doc)?;
    let options = AllocationOptions { max_allocations, ..AllocationOptions::default() };
    let start = Instant::now();
    let outcome = optimize_allocation(&problem, mode, &options)?;
    let timing_ms = ms_since(start);
    let best = &outcome.best;
    if all && !common.json {
        let mut text = String::from("allocation,order,score\n");
        for c in &outcome.evaluated {
            let _ = writeln!(text, "\"{}\",\"{}\",{}", c.allocation, c.order.order, c.order.score);
        }
        return Ok(text);
    }
    if common.json {
        let mut value = json!({
            "score": best.order.score,
            "order": best.order.order.to_string(),
            "mode": mode.name(),
            "timing_ms": timing_ms,
            "allocation": best.allocation.per_link(),
            "heuristic": outcome.heuristic,
        });
        if let Some(period) = period {
            value["ent_per_s"] = json!(best.order.score / period);
        }
        if all {
            value["evaluated"] = outcome
                .evaluated
                .iter()
                .map(|c| json!({ "allocation": c.allocation.per_link(), "order": c.order.order.to_string(), "score": c.order.score }))
                .collect();
        }
        return Ok(to_json(value));
    }
    let p = common.precision;
    let mut text = format!("allocation {} order {} score {:.p$}", best.allocation, best.order.order, best.order.score);
    if let Some(period) = period {
        let _ = write!(text, " ent_per_s {:.p$}", best.order.score / period);
    }
    if outcome.heuristic {
        text.push_str(" (local search)");
    }
    text.push('\n');
    Ok(text)
}

pub fn cmd_estimate(
    doc: &PathDocument,
    coherence: &[f64],
    mode: EvalMode,
    common: &Common,
    err: &mut Vec<u8>,
) -> Result<String, CliError> {
    let Form::Physical { links, hardware, timing } = doc.form()? else {
        return Err(CliError::new(EXIT_SCHEMA, "estimate needs a physical document"));
    };
    let base = timing.unwrap_or(TimingParams { coherence_time_s: 0.0, herald_delay_s: 0.0, app_delay_s: 0.0 });
    let sweep: Vec<f64> = if coherence.is_empty() {
        match timing {
            Some(t) => vec![t.coherence_time_s],
            None => return Err(CliError::new(EXIT_SCHEMA, "give --coherence or a \"timing\" block")),
        }
    } else {
        coherence.to_vec()
    };
    let tau_rtt = round_trip_time(&links, &hardware);
    let mut rows = Vec::new();
    for &t in &sweep {
        let timing = TimingParams { coherence_time_s: t, ..base };
        timing.validate().map_err(CliError::schema)?;
        let row = match estimate_path_throughput(&links, &doc.swap_probs, &hardware, &timing, mode) {
            Ok(est) => {
                let status = if est.small_capacity_links.is_empty() {
                    "ok".to_string()
                } else {
                    let ids: Vec<String> = est.small_capacity_links.iter().map(|i| (i + 1).to_string()).collect();
                    let _ = writeln!(
                        err,
                        "warning: coherence {t} s leaves links {} with capacity <= {}; rounding is coarse",
                        ids.join(","),
                        crate::estimator::SMALL_CAPACITY
                    );
                    format!("small_capacity:{}", ids.join(";"))
                };
                (t, Some(est.slot_s), Some(est.ent_per_s), Some(est.order.to_string()), status)
            }
            Err(Error::SlotNonpositive { slot_s }) => {
                (t, Some(slot_s), None, None, "slot_nonpositive".to_string())
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }
    if common.json {
        let values: Vec<Value> = rows
            .iter()
            .map(|(t, slot, ent, order, status)| {
                json!({ "coherence_s": t, "slot_s": slot, "ent_per_s": ent, "order": order, "tau_rtt_s": tau_rtt, "status": status })
            })
            .collect();
        return Ok(to_json(json!({ "mode": mode.name(), "rows": values })));
    }
    let mut text = String::from("coherence_s,slot_s,ent_per_s,order,tau_rtt_s,status\n");
    let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (t, slot, ent, order, status) in &rows {
        let order = order.as_ref().map(|o| format!("\"{o}\"")).unwrap_or_default();
        let _ = writeln!(text, "{t},{},{},{order},{tau_rtt},{status}", opt(slot), opt(ent));
    }
    Ok(text)
}

pub fn cmd_simulate(
    doc: &PathDocument,
    order: Option<&str>,
    trials: u64,
    seed: u64,
    check: bool,
    mode: EvalMode,
    common: &Common,
) -> Result<String, CliError> {
    let path = doc.logical()?;
    let start = Instant::now();
    let (label, outcome, order) = match order {
        Some(text) => {
            let order = parse_order(text)?;
            (order.to_string(), simulate_order(&path, &order, trials, seed)?, Some(order))
        }
        None => ("asap".to_string(), simulate_asap(&path, trials, seed)?, None),
    };
    let timing_ms = ms_since(start);
    let expected = match (&order, check) {
        (Some(order), true) => Some(ent(&path, order, mode)?.score),
        _ => None,
    };
    if common.json {
        let mut value = json!({
            "mean": outcome.mean,
            "standard_error": outcome.standard_error(),
            "variance": outcome.variance,
            "trials": outcome.trials,
            "seed": outcome.seed,
            "order": label,
            "timing_ms": timing_ms,
        });
        if let Some(score) = expected {
            value["score"] = json!(score);
            value["mode"] = json!(mode.name());
            value["z"] = json!(outcome.z_score(score));
        }
        return Ok(to_json(value));
    }
    let p = common.precision.max(3);
    let mut text = format!(
        "{label} mean {:.p$} +/- {:.p$} trials {} seed {}\n",
        outcome.mean,
        outcome.standard_error(),
        outcome.trials,
        outcome.seed
    );
    if let Some(score) = expected {
        let _ = writeln!(text, "{} {:.p$} z {:.2}", mode.name(), score, outcome.z_score(score));
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> String {
        PathDocument::from_path(&PathSpec::uniform(&[100, 200, 300, 400], 0.2, 0.5).unwrap()).to_json()
    }

    fn run_with(doc: &str, args: &[&str]) -> (i32, String, String) {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("doc.json");
        fs::write(&file, doc).unwrap();
        let mut argv = vec!["qswap".to_string()];
        for a in args {
            argv.push(if *a == "DOC" { file.to_string_lossy().into_owned() } else { a.to_string() });
        }
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn eval_prints_two_decimals() {
        let (code, out, _) = run_with(&example1(), &["eval", "DOC", "--order", "3,2,1"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("[3,2,1] 7.16\n"), "{out}");
        let (_, out, _) = run_with(&example1(), &["eval", "DOC", "--order", "1,2,3"]);
        assert!(out.starts_with("[1,2,3] 2.50\n"), "{out}");
    }

    #[test]
    fn eval_json_has_full_precision() {
        let (code, out, _) = run_with(&example1(), &["eval", "DOC", "--order", "3,2,1", "--json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["score"].as_f64().unwrap() - 7.16275).abs() < 1e-4);
        assert_eq!(v["mode"], "exact");
        assert!(v["timing_ms"].is_number());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_with(&example1(), &["eval", "DOC", "--order", "3,2"]).0, EXIT_ORDER);
        assert_eq!(run_with(&example1(), &["eval", "DOC", "--order", "x"]).0, EXIT_ORDER);
        assert_eq!(run_with("{\"schema\": 1}", &["eval", "DOC", "--order", "1"]).0, EXIT_SCHEMA);
        let v2 = example1().replace("\"schema\": 1", "\"schema\": 2");
        assert_eq!(run_with(&v2, &["eval", "DOC", "--order", "3,2,1"]).0, EXIT_SCHEMA);
        assert_eq!(
            run_with(&example1(), &["search", "DOC", "--strategy", "brute", "--max-trees", "2"]).0,
            EXIT_BUDGET
        );
        let infeasible = r#"{"schema":1,"links":[{"capacity":1,"success":0.5},{"capacity":1,"success":0.5}],
            "swap_probs":[0.5],"budget":[3,1,3],"kappa":[1.0,1.0]}"#;
        assert_eq!(run_with(infeasible, &["allocate", "DOC"]).0, EXIT_INFEASIBLE);
        assert_eq!(run_with(&example1(), &["bogus"]).0, EXIT_SCHEMA);
    }

    #[test]
    fn search_strategies() {
        let doc = PathDocument::from_path(&PathSpec::uniform(&[100, 101, 101, 100], 0.2, 0.5).unwrap()).to_json();
        assert_eq!(run_with(&doc, &["search", "DOC", "--strategy", "greedy"]).1, "[2,1,3] 2.24\n");
        assert_eq!(run_with(&doc, &["search", "DOC", "--strategy", "vora"]).1, "[1,3,2] 3.72\n");
        assert!(run_with(&doc, &["search", "DOC", "--strategy", "l2r"]).1.starts_with("[1,2,3] "));
        let (code, out, _) = run_with(&doc, &["search", "DOC", "--strategy", "brute", "--all"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 6);
        assert_eq!(out.lines().next(), Some("order,score"));
    }

    #[test]
    fn allocate_symmetric() {
        let doc = r#"{"schema":1,"links":[{"capacity":1,"success":0.3},{"capacity":1,"success":0.3}],
            "swap_probs":[0.5],"budget":[6,6,6],"kappa":[10.0,10.0]}"#;
        let (code, out, _) = run_with(doc, &["allocate", "DOC"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.starts_with("allocation [3,3] order [1] "), "{out}");
        let (_, csv, _) = run_with(doc, &["allocate", "DOC", "--all"]);
        assert_eq!(csv.lines().count(), 6);
    }

    fn physical() -> &'static str {
        r#"{"schema":1,"links":[{"length_km":50,"memory_pairs":10},{"length_km":60,"memory_pairs":10},
            {"length_km":40,"memory_pairs":10}],"swap_probs":[0.5,0.5],"timing":{"coherence_time_s":0.02}}"#
    }

    #[test]
    fn estimate_sweep_csv() {
        let (code, out, _) = run_with(physical(), &["estimate", "DOC", "--coherence", "0.001,0.002,0.005,0.01,0.02,0.1"]);
        assert_eq!(code, 0, "{out}");
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("coherence_s,slot_s,ent_per_s,order,tau_rtt_s,status"));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert_eq!(rows[0].last(), Some(&"slot_nonpositive"));
        assert_eq!(rows[0][4], "0.0015");
        let rates: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
        assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
    }

    #[test]
    fn physical_allocate_reports_rate() {
        let doc = physical().replace("}}", "},\"budget\":[10,20,20,10]}");
        let (code, out, err) = run_with(&doc, &["allocate", "DOC", "--mode", "hybrid"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("ent_per_s"), "{out}");
        let inner = out.split(['[', ']']).nth(1).unwrap();
        let m: Vec<u32> = inner.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(m[0] <= 10 && m[2] <= 10 && m[0] + m[1] <= 20 && m[1] + m[2] <= 20, "{out}");
        assert!(m[1] >= m[0] && m[1] >= m[2], "the longest link should not get less memory: {out}");
    }

    #[test]
    fn logical_commands_reject_physical_documents() {
        assert_eq!(run_with(physical(), &["eval", "DOC", "--order", "1,2"]).0, EXIT_SCHEMA);
        assert_eq!(run_with(&example1(), &["estimate", "DOC", "--coherence", "0.1"]).0, EXIT_SCHEMA);
    }

    #[test]
    fn simulate_is_repeatable_and_checks() {
        let args = ["simulate", "DOC", "--order", "3,2,1", "--trials", "20000", "--seed", "4", "--check"];
        let (code, first, _) = run_with(&example1(), &args);
        assert_eq!(code, 0);
        let mut with_jobs = args.to_vec();
        with_jobs.extend(["--jobs", "1"]);
        assert_eq!(first, run_with(&example1(), &with_jobs).1);
        let z: f64 = first.lines().nth(1).unwrap().rsplit(' ').next().unwrap().parse().unwrap();
        assert!(z.abs() <= 4.0, "{first}");
        assert_eq!(run_with(&example1(), &["simulate", "DOC", "--asap", "--check"]).0, EXIT_SCHEMA);
    }

    #[test]
    fn dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let dumped = dir.path().join("out.json");
        let source = r#"{"schema":1,"links":[{"capacity":7,"success":0.125},{"capacity":9,"success":0.3}],
            "swap_probs":[0.7]}"#;
        let (code, _, _) = run_with(source, &["eval", "DOC", "--order", "1", "--dump", dumped.to_str().unwrap()]);
        assert_eq!(code, 0);
        let again = PathDocument::load(&dumped).unwrap();
        let original = PathDocument::parse(source).unwrap();
        assert_eq!(again, original);
        match (again.form().unwrap(), original.form().unwrap()) {
            (Form::Logical(a), Form::Logical(b)) => assert_eq!(a, b),
            _ => panic!("expected logical documents"),
        }
        let phys = PathDocument::parse(physical()).unwrap();
        assert_eq!(PathDocument::parse(&phys.to_json()).unwrap(), phys);
    }
}
