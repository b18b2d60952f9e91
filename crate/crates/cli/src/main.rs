//! `pnrd`: validate, explore, simulate and check net models from the
//! command line, or serve them to the stepper UI.
//!
//! A model argument is a `.pn` source file, a `.json` classical net, or
//! the id of a bundled model (`fig1` .. `fig4`).

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pnrd_core::analysis::{check_invariant, dangling_states, InvariantOutcome};
use pnrd_core::corpus::{ids, load_corpus};
use pnrd_core::engine::{PnrdNet, PnrdState, Snapshot};
use pnrd_core::lang::load_model;
use pnrd_core::net::{wf_soundness, wf_validate, NetFile, Soundness};
use pnrd_core::simulate::{export_log, model_hash, replay, simulate_many, Trace};
use pnrd_core::{explore, Bounds, Marking, Net, StateGraph, TokenGame};

#[derive(Parser)]
#[command(name = "pnrd", version, about = "Petri nets with reference data: models, analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Summary,
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogFormat {
    Csv,
}

#[derive(clap::Args)]
struct ExploreOpts {
    #[arg(long, default_value_t = 100_000)]
    max_states: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Start from this snapshot instead of the model's initial state.
    #[arg(long)]
    from: Option<PathBuf>,
}

impl ExploreOpts {
    fn bounds(&self) -> Bounds {
        Bounds { max_states: self.max_states, max_depth: self.max_depth.unwrap_or(usize::MAX) }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check a model; for workflow nets, check the structure.
    Validate { model: String },
    /// Breadth-first state-space exploration.
    Explore {
        model: String,
        #[command(flatten)]
        opts: ExploreOpts,
        #[arg(long, value_enum, default_value = "summary")]
        format: GraphFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Workflow-net soundness of a classical model.
    Soundness {
        model: String,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        sink: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
    },
    /// Seeded random runs, written as JSON traces.
    Simulate {
        model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        /// Number of runs; run k uses seed + k.
        #[arg(long, default_value_t = 1)]
        traces: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-fire a trace file through the engine, checking every state hash.
    Replay { model: String, traces: PathBuf },
    /// Convert a trace file to an event log.
    ExportLog {
        traces: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: LogFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a named invariant over the explored states.
    Check {
        model: String,
        #[arg(long)]
        invariant: String,
        #[command(flatten)]
        opts: ExploreOpts,
    },
    /// List explored states without enabled modes.
    Deadlocks {
        model: String,
        #[command(flatten)]
        opts: ExploreOpts,
    },
    /// Serve the session API, and optionally the UI files.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

#[allow(clippy::large_enum_variant)]
enum Loaded {
    Classical { net: Net, marking: Marking, source: Option<String>, sink: Option<String>, digest: String },
    HighLevel { net: PnrdNet, initial: PnrdState, explore_from: PnrdState, digest: String },
}

fn load(arg: &str) -> Result<Loaded> {
    let path = Path::new(arg);
    if !path.exists() && ids().any(|id| id == arg) {
        let entry = load_corpus(arg)?;
        let digest = model_hash(&entry.model.source());
        return Ok(Loaded::HighLevel { net: entry.net(), initial: entry.initial, explore_from: entry.explore_from, digest });
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
    if path.extension().is_some_and(|e| e == "json") {
        let file = NetFile::parse(&text)?;
        let net: Net = file.to_net()?;
        let marking = file.initial_marking(&net)?;
        let digest = model_hash(&serde_json::to_string(&NetFile::from_net(&net, &marking))?);
        return Ok(Loaded::Classical { net, marking, source: file.source, sink: file.sink, digest });
    }
    let model = load_model(&text).map_err(|e| anyhow!("{arg}:\n  {}", e.messages().join("\n  ")))?;
    let digest = model_hash(&model.source());
    let net = PnrdNet::new(model);
    let initial = net.initial_state();
    Ok(Loaded::HighLevel { net, explore_from: initial.clone(), initial, digest })
}

fn start(net: &PnrdNet, default: &PnrdState, from: Option<&Path>) -> Result<PnrdState> {
    match from {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(Snapshot::from_json(&text)?.to_state(net.model())?)
        }
        None => Ok(default.clone()),
    }
}

/// The unique place without inputs and the unique place without outputs.
fn endpoints(net: &Net, source: Option<String>, sink: Option<String>) -> Result<(String, String)> {
    let unique = |found: Vec<&String>, what: &str| -> Result<String> {
        match found.as_slice() {
            [one] => Ok((*one).clone()),
            _ => bail!("cannot infer the {what} place ({} candidates); pass --{what}", found.len()),
        }
    };
    let source = match source {
        Some(s) => s,
        None => unique(net.places().iter().filter(|p| net.place_inputs(p).is_empty()).collect(), "source")?,
    };
    let sink = match sink {
        Some(s) => s,
        None => unique(net.places().iter().filter(|p| net.place_outputs(p).is_empty()).collect(), "sink")?,
    };
    Ok((source, sink))
}

fn classical_of(loaded: Loaded) -> Result<(Net, Option<String>, Option<String>)> {
    match loaded {
        Loaded::Classical { net, source, sink, .. } => Ok((net, source, sink)),
        Loaded::HighLevel { net, .. } => {
            let (net, _) = net.model().classical().map_err(|e| anyhow!("not a classical net: {e}"))?;
            Ok((net, None, None))
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn render<S, M>(g: &StateGraph<S, M>, format: GraphFormat) -> String {
    match format {
        GraphFormat::Dot => g.to_dot(),
        GraphFormat::Json => format!("{:#}\n", g.to_json()),
        GraphFormat::Summary => format!(
            "states: {}\nedges: {}\ndeadlocks: {}\ntruncated: {}\n",
            g.len(),
            g.edges.len(),
            g.sinks().len(),
            g.truncated
        ),
    }
}

fn simulate_game<G: TokenGame>(game: &G, digest: &str, initial: &G::State, seed: u64, max_steps: usize, count: usize) -> Result<Vec<Trace>> {
    Ok(simulate_many(game, digest, initial, seed, max_steps, count)?)
}

fn read_traces(path: &Path) -> Result<Vec<Trace>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str::<Vec<Trace>>(&text)
        .or_else(|_| serde_json::from_str::<Trace>(&text).map(|t| vec![t]))
        .with_context(|| format!("{} is not a trace file", path.display()))
}

fn explore_hl(net: &PnrdNet, explore_from: &PnrdState, opts: &ExploreOpts) -> Result<StateGraph<PnrdState, pnrd_core::engine::Mode>> {
    let s0 = start(net, explore_from, opts.from.as_deref())?;
    Ok(explore(net, s0, opts.bounds())?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { model } => match load(&model)? {
            Loaded::Classical { net, source, sink, .. } => {
                println!("classical net: {} places, {} transitions", net.places().len(), net.transitions().len());
                if source.is_some() || sink.is_some() {
                    let (i, f) = endpoints(&net, source, sink)?;
                    let report = wf_validate(&net, &i, &f)?;
                    if !report.is_workflow_net() {
                        for v in &report.violations {
                            println!("  {v}");
                        }
                        return Ok(ExitCode::FAILURE);
                    }
                    println!("workflow net: source `{i}`, sink `{f}`");
                }
            }
            Loaded::HighLevel { net, .. } => {
                let m = net.model();
                println!(
                    "ok: {} places, {} transitions, {} pointers, {} invariants",
                    m.places.len(),
                    m.transitions.len(),
                    m.pointers.len(),
                    m.invariants.len()
                );
            }
        },
        Command::Explore { model, opts, format, out } => {
            let text = match load(&model)? {
                Loaded::Classical { net, marking, .. } => {
                    if opts.from.is_some() {
                        bail!("--from applies to high-level models only");
                    }
                    render(&explore(&net, marking, opts.bounds())?, format)
                }
                Loaded::HighLevel { net, explore_from, .. } => {
                    let g = explore_hl(&net, &explore_from, &opts)?;
                    let dangling = dangling_states(&g);
                    if !dangling.is_empty() {
                        eprintln!("warning: {} states hold dangling pointers", dangling.len());
                    }
                    render(&g, format)
                }
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Soundness { model, source, sink, max_states } => {
            let (net, s, f) = classical_of(load(&model)?)?;
            let (i, f) = endpoints(&net, source.or(s), sink.or(f))?;
            let wf = pnrd_core::WorkflowNet::new(net, i, f);
            match wf_soundness(&wf, Bounds::states(max_states))? {
                Soundness::Sound { states } => println!("sound ({states} states)"),
                Soundness::Inconclusive { states } => {
                    println!("inconclusive: state space exceeds {states} states");
                    return Ok(ExitCode::from(2));
                }
                Soundness::Unsound { reasons } => {
                    println!("unsound");
                    for r in reasons {
                        println!("  {r}");
                    }
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Command::Simulate { model, seed, max_steps, traces, out } => {
            let all = match load(&model)? {
                Loaded::Classical { net, marking, digest, .. } => simulate_game(&net, &digest, &marking, seed, max_steps, traces)?,
                Loaded::HighLevel { net, initial, digest, .. } => simulate_game(&net, &digest, &initial, seed, max_steps, traces)?,
            };
            let mut text = serde_json::to_string_pretty(&all)?;
            text.push('\n');
            emit(out.as_deref(), &text)?;
        }
        Command::Replay { model, traces } => {
            let traces = read_traces(&traces)?;
            let loaded = load(&model)?;
            for (k, t) in traces.iter().enumerate() {
                let result = match &loaded {
                    Loaded::Classical { net, marking, digest, .. } => {
                        check_digest(digest, t)?;
                        replay(net, marking.clone(), t).map(drop)
                    }
                    Loaded::HighLevel { net, initial, digest, .. } => {
                        check_digest(digest, t)?;
                        replay(net, initial.clone(), t).map(drop)
                    }
                };
                result.with_context(|| format!("trace {k}"))?;
            }
            println!("{} traces replayed", traces.len());
        }
        Command::ExportLog { traces, format: LogFormat::Csv, out } => {
            let traces = read_traces(&traces)?;
            let mut buf = Vec::new();
            export_log(&traces, &mut buf)?;
            emit(out.as_deref(), std::str::from_utf8(&buf)?)?;
        }
        Command::Check { model, invariant, opts } => {
            let Loaded::HighLevel { net, explore_from, .. } = load(&model)? else {
                bail!("classical nets carry no invariants");
            };
            let inv = net.model().invariant(&invariant).ok_or_else(|| {
                let names: Vec<&str> = net.model().invariants.iter().map(|i| i.name.as_str()).collect();
                anyhow!("no invariant `{invariant}` (the model has: {})", names.join(", "))
            })?;
            let g = explore_hl(&net, &explore_from, &opts)?;
            match check_invariant(&g, inv)? {
                InvariantOutcome::Holds { states, complete: true } => println!("holds on all {states} states"),
                InvariantOutcome::Holds { states, complete: false } => {
                    println!("holds on the {states} explored states (exploration was truncated)")
                }
                InvariantOutcome::Violated { node, path } => {
                    println!("violated after {} steps:", path.len());
                    for (k, label) in path.iter().enumerate() {
                        println!("  {}. {label}", k + 1);
                    }
                    println!("state: {}", g.keys[node]);
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Command::Deadlocks { model, opts } => {
            let (keys, truncated) = match load(&model)? {
                Loaded::Classical { net, marking, .. } => {
                    let g = explore(&net, marking, opts.bounds())?;
                    (g.sinks().into_iter().map(|n| g.keys[n].clone()).collect::<Vec<_>>(), g.truncated)
                }
                Loaded::HighLevel { net, explore_from, .. } => {
                    let g = explore_hl(&net, &explore_from, &opts)?;
                    (g.sinks().into_iter().map(|n| g.keys[n].clone()).collect(), g.truncated)
                }
            };
            println!("{} deadlocks{}", keys.len(), if truncated { " (exploration was truncated)" } else { "" });
            for k in keys {
                println!("  {k}");
            }
        }
        Command::Serve { port, static_dir } => {
            let addr = SocketAddr::from(([127, 0, 0, 1], port));
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            rt.block_on(pnrd_service::serve(addr, static_dir))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check_digest(digest: &str, t: &Trace) -> Result<()> {
    if t.model != digest {
        bail!("trace was recorded on model {}, not {digest}", t.model);
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn arguments_are_consistent() {
        Cli::command().debug_assert();
    }
}
