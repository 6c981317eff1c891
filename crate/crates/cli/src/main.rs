//! Command-line surface: run trees against scenarios, verify traces, parse
//! tree files, and run the built-in demos.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage,
//! parse, or binding errors.

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cbt::aging::{starvation_bound, PolicyConfig};
use cbt::dsl;
use cbt::engine::{EngineConfig, EngineError, Runtime};
use cbt::oracle::{
    barrier_episodes, resource_handovers, verify_all, verify_barrier, verify_liveness,
    verify_mutex, VerdictReport,
};
use cbt::scenario::{bind_scenario, usecase_tree, ScenarioConfig, SCENARIOS};
use cbt::trace::{ParsedTrace, RunResult};
use cbt::tree::{validate_tree, NodeSpec};

#[derive(Parser)]
#[command(
    name = "cbt",
    about = "Concurrent behavior trees: run, verify, parse, demo",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tree file against a named scenario and emit the trace.
    Run {
        /// Tree definition (.cbt s-expression file).
        tree: PathBuf,
        /// Scenario binding the tree's leaves: hallway | office.
        scenario: String,
        /// key=value overrides for scenario parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Tick budget for the run.
        #[arg(long, default_value_t = 100)]
        ticks: u64,
        /// Write the JSON-lines trace here instead of stdout. Relative
        /// paths resolve under CBT_TRACE_DIR when it is set.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Priority gained per denied tick in the aging policy.
        #[arg(long, default_value_t = 2)]
        aging_increment: u32,
        /// Priority bonus while holding a granted resource.
        #[arg(long, default_value_t = 2)]
        hold_bonus: u32,
    },
    /// Verify a recorded trace against the properties of its tree.
    Check {
        /// Trace file in JSON-lines format.
        trace: PathBuf,
        /// The tree definition the trace was produced from.
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_enum, default_value_t = Property::All)]
        property: Property,
        /// Starvation/deadlock window in ticks.
        #[arg(long, default_value_t = 16)]
        bound: u64,
    },
    /// Parse a tree file and print its canonical form.
    Parse { tree: PathBuf },
    /// Run a built-in scenario with the shared use-case tree, self-check
    /// every property, and summarize the interesting episodes.
    Demo {
        /// hallway | office
        name: String,
        #[arg(long, default_value_t = 2)]
        aging_increment: u32,
        #[arg(long, default_value_t = 2)]
        hold_bonus: u32,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    Barrier,
    Mutex,
    Liveness,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            tree,
            scenario,
            config,
            ticks,
            trace,
            aging_increment,
            hold_bonus,
        } => cmd_run(
            &tree,
            &scenario,
            config.as_deref(),
            ticks,
            trace.as_deref(),
            aging_increment,
            hold_bonus,
        ),
        Command::Check {
            trace,
            tree,
            property,
            bound,
        } => cmd_check(&trace, &tree, property, bound),
        Command::Parse { tree } => cmd_parse(&tree),
        Command::Demo {
            name,
            aging_increment,
            hold_bonus,
        } => cmd_demo(&name, aging_increment, hold_bonus),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn load_document(path: &Path) -> Result<dsl::TreeDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    dsl::TreeDocument::parse(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn load_tree(path: &Path) -> Result<NodeSpec> {
    load_document(path).map(|doc| doc.tree)
}

/// Formats a validation report, pointing each issue at its source position
/// when the document knows one.
fn positioned_report(doc: &dsl::TreeDocument, report: &cbt::tree::ValidationReport) -> String {
    report
        .issues
        .iter()
        .map(|issue| match doc.span_of(&issue.node) {
            Some(span) => format!("{span}: node {}: {}", issue.node, issue.message),
            None => format!("node {}: {}", issue.node, issue.message),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    if let Some(path) = path {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg = cfg
            .apply_overrides(&text)
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    }
    Ok(cfg)
}

fn policy(aging_increment: u32, hold_bonus: u32) -> Result<PolicyConfig> {
    PolicyConfig::new(aging_increment, hold_bonus).map_err(|e| anyhow!(e))
}

/// Resolves a trace output path: relative paths land in CBT_TRACE_DIR when
/// the variable is set.
fn trace_path(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var("CBT_TRACE_DIR") {
            return Path::new(&dir).join(path);
        }
    }
    path.to_path_buf()
}

fn cmd_run(
    tree_file: &Path,
    scenario: &str,
    config: Option<&Path>,
    ticks: u64,
    trace_out: Option<&Path>,
    aging_increment: u32,
    hold_bonus: u32,
) -> Result<ExitCode> {
    let doc = load_document(tree_file)?;
    let tree = doc.tree.clone();
    let cfg = load_config(config)?;
    let bundle = bind_scenario(scenario, &cfg).map_err(|e| anyhow!(e))?;

    let report = validate_tree(&tree, &bundle.registry.names());
    if !report.is_ok() {
        return Err(anyhow!(
            "tree failed validation:\n{}",
            positioned_report(&doc, &report)
        ));
    }

    let engine_cfg = EngineConfig {
        max_ticks: ticks,
        ..EngineConfig::default()
    };
    let mut world = bundle.world;
    let mut runtime = Runtime::new(
        &tree,
        &bundle.registry,
        policy(aging_increment, hold_bonus)?,
        engine_cfg,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let trace = match runtime.run(&mut world) {
        Ok(trace) => trace,
        Err(EngineError::Contract { node, tick, detail }) => {
            eprintln!("contract violation at tick {tick}, node {node}: {detail}");
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(anyhow!("{e}")),
    };

    let text = trace.to_jsonl(&bundle.catalog);
    match trace_out {
        Some(path) => {
            let path = trace_path(path);
            fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "result: {} in {} ticks (trace: {})",
                trace.result.as_str(),
                trace.ticks,
                path.display()
            );
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verifiers(
    trace: &ParsedTrace,
    tree: &NodeSpec,
    property: Property,
    bound: u64,
) -> VerdictReport {
    match property {
        Property::Barrier => verify_barrier(trace, tree),
        Property::Mutex => verify_mutex(trace, tree),
        Property::Liveness => verify_liveness(trace, tree, bound),
        Property::All => verify_all(trace, tree, bound),
    }
}

fn cmd_check(
    trace_file: &Path,
    tree_file: &Path,
    property: Property,
    bound: u64,
) -> Result<ExitCode> {
    let tree = load_tree(tree_file)?;
    let text = fs::read_to_string(trace_file)
        .with_context(|| format!("reading {}", trace_file.display()))?;
    let trace =
        ParsedTrace::from_jsonl(&text).map_err(|e| anyhow!("{}: {e}", trace_file.display()))?;
    let verdict = run_verifiers(&trace, &tree, property, bound);
    println!("{}", verdict.to_json());
    Ok(if verdict.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_parse(tree_file: &Path) -> Result<ExitCode> {
    let doc = load_document(tree_file)?;
    // Structural validation only; leaf names resolve when a scenario binds
    // them, so treat every referenced name as registered here.
    let names = doc
        .tree
        .preorder()
        .iter()
        .filter_map(|n| n.leaf_ref.clone())
        .collect();
    let report = validate_tree(&doc.tree, &names);
    if !report.is_ok() {
        return Err(anyhow!(
            "tree failed validation:\n{}",
            positioned_report(&doc, &report)
        ));
    }
    print!("{}", dsl::serialize(&doc.tree));
    Ok(ExitCode::SUCCESS)
}

fn cmd_demo(name: &str, aging_increment: u32, hold_bonus: u32) -> Result<ExitCode> {
    if !SCENARIOS.contains(&name) {
        return Err(anyhow!(
            "unknown demo `{name}` (expected one of: {})",
            SCENARIOS.join(", ")
        ));
    }
    let cfg = ScenarioConfig::default();
    let policy = policy(aging_increment, hold_bonus)?;
    let tree = usecase_tree(&cfg);
    let bundle = bind_scenario(name, &cfg).map_err(|e| anyhow!(e))?;
    let mut world = bundle.world;
    let mut runtime = Runtime::new(&tree, &bundle.registry, policy, EngineConfig::default())
        .map_err(|e| anyhow!("{e}"))?;
    let trace = runtime.run(&mut world).map_err(|e| anyhow!("{e}"))?;
    let text = trace.to_jsonl(&bundle.catalog);

    if let Ok(dir) = std::env::var("CBT_TRACE_DIR") {
        let path = Path::new(&dir).join(format!("{name}.jsonl"));
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    }

    let parsed = ParsedTrace::from_jsonl(&text).expect("engine traces parse");
    let bases: Vec<u32> = tree
        .children
        .iter()
        .map(|c| c.base_priority.unwrap_or(0))
        .collect();
    let max_base = bases.iter().copied().max().unwrap_or(0);
    let min_base = bases.iter().copied().min().unwrap_or(0);
    let bound = starvation_bound(max_base, min_base, &policy);
    let verdict = verify_all(&parsed, &tree, bound);

    println!("scenario: {name}");
    println!("result: {} in {} ticks", trace.result.as_str(), trace.ticks);

    let episodes = barrier_episodes(&parsed, &tree);
    if episodes.is_empty() {
        println!("barrier episodes: none");
    } else {
        println!("barrier episodes:");
        for ep in &episodes {
            println!(
                "  sync {}: ticks {}..{}, held at progress {} for {} ticks",
                ep.sync_node,
                ep.start_tick,
                ep.end_tick,
                ep.frozen_progress,
                ep.end_tick - ep.start_tick + 1
            );
        }
    }

    let handovers = resource_handovers(&parsed, &tree);
    if handovers.is_empty() {
        println!("resource handovers: none");
    } else {
        println!("resource handovers:");
        for h in &handovers {
            println!(
                "  tick {}: {} passed from {} to {}",
                h.tick, h.resource, h.from, h.to
            );
        }
    }

    println!(
        "checks: barrier/mutex/liveness with bound {bound}: {}",
        if verdict.pass { "pass" } else { "FAIL" }
    );
    if !verdict.pass {
        println!("{}", verdict.to_json());
        return Ok(ExitCode::from(1));
    }
    if trace.result != RunResult::Success {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
