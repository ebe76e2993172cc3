use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use eosym_core::canonical::canonicalize;
use eosym_core::eos::{enumerate_modes, fire, ModeCaps, NestedMarking};
use eosym_core::explorer::{explore, explore_full, export_dot, verify_quotient, Bounds, DotOptions, Reduction};
use eosym_core::model::{parse, parse_marking, ModelDocument};
use eosym_core::symmetry::{eos_automorphisms, render_cycles, AutGroup, DEFAULT_AUT_CAP};

#[derive(Parser)]
#[command(name = "eosym", version, about = "Elementary Object Systems with symmetry reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a model.
    Validate {
        file: PathBuf,
        /// Print whether the typing is conservative.
        #[arg(long)]
        conservative: bool,
        /// Print whether every place holds black tokens only.
        #[arg(long)]
        pt_like: bool,
    },
    /// Fire an event from the initial marking and print the successors.
    Fire {
        file: PathBuf,
        /// Event label, e.g. `t[N1:t1,N2:t2]`, or a system transition name.
        #[arg(long)]
        event: String,
        /// Index of the mode to use (modes are listed in canonical order).
        #[arg(long)]
        mode: Option<usize>,
        /// Fire the event this many times in a row.
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Start from this marking instead of the initial one.
        #[arg(long)]
        marking: Option<String>,
    },
    /// Compute the automorphism group.
    Auts {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_AUT_CAP)]
        cap: usize,
        /// List every group element, not only generators.
        #[arg(long)]
        elements: bool,
    },
    /// Print the canonical representative of a marking.
    Canon {
        file: PathBuf,
        /// Defaults to the initial marking.
        #[arg(long)]
        marking: Option<String>,
        #[arg(long, default_value_t = DEFAULT_AUT_CAP)]
        cap: usize,
    },
    /// Build a (reduced) reachability graph.
    Explore {
        file: PathBuf,
        #[arg(long, default_value = "none")]
        reduce: Reduction,
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
        #[arg(long)]
        max_depth: Option<usize>,
        /// Write the graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write the stats record as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Compare against the full graph.
        #[arg(long)]
        verify: bool,
        /// Exit with status 2 when a bound truncated the exploration.
        #[arg(long)]
        strict: bool,
        /// Record wall-clock time in the stats.
        #[arg(long)]
        timing: bool,
        /// Keep one mode per projection class of (lambda, rho).
        #[arg(long)]
        proj_modes: bool,
        #[arg(long, default_value_t = DEFAULT_AUT_CAP)]
        cap: usize,
    },
}

enum Failure {
    Diagnostics(String),
    Truncated,
}

type Outcome = Result<(), Failure>;

fn load(path: &Path) -> Result<ModelDocument, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Diagnostics(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|err| {
        Failure::Diagnostics(
            err.0
                .iter()
                .map(|d| format!("{}:{d}", path.display()))
                .collect::<Vec<_>>()
                .join("\n"),
        )
    })
}

fn marking_arg(doc: &ModelDocument, text: Option<&str>) -> Result<NestedMarking, Failure> {
    match text {
        None => Ok(doc.initial.clone()),
        Some(t) => parse_marking(&doc.eos, t)
            .map_err(|d| Failure::Diagnostics(format!("--marking:{d}"))),
    }
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents)
        .map_err(|e| Failure::Diagnostics(format!("{}: {e}", path.display())))
}

fn group(doc: &ModelDocument, cap: usize) -> AutGroup {
    eos_automorphisms(&doc.eos, cap)
}

fn validate(file: &Path, conservative: bool, pt_like: bool) -> Outcome {
    let doc = load(file)?;
    let issues = doc.eos.validate_marking(&doc.initial);
    if !issues.is_empty() {
        let lines: Vec<String> = issues
            .iter()
            .map(|i| format!("{}: initial marking: {i}", file.display()))
            .collect();
        return Err(Failure::Diagnostics(lines.join("\n")));
    }
    println!("valid");
    if conservative {
        println!("conservative: {}", doc.eos.is_conservative());
    }
    if pt_like {
        println!("pt-like: {}", doc.eos.is_pt_like());
    }
    Ok(())
}

fn fire_cmd(
    file: &Path,
    label: &str,
    mode: Option<usize>,
    steps: usize,
    marking: Option<&str>,
) -> Outcome {
    let doc = load(file)?;
    let eos = &doc.eos;
    let event = eos
        .find_event(label)
        .cloned()
        .ok_or_else(|| Failure::Diagnostics(format!("unknown or ambiguous event `{label}`")))?;
    let mut mu = marking_arg(&doc, marking)?;
    let caps = ModeCaps::default();
    if mode.is_none() && steps == 1 {
        let modes = enumerate_modes(eos, &mu, &event, caps);
        if modes.modes.is_empty() {
            return Err(Failure::Diagnostics(format!(
                "{} is not enabled",
                eos.render_event(&event)
            )));
        }
        for (i, m) in modes.modes.iter().enumerate() {
            let next = fire(eos, &mu, &event, m).expect("enumerated modes are enabled");
            println!("[{i}] {}", eos.render_marking(&next));
        }
        if modes.truncated {
            eprintln!("warning: mode enumeration truncated");
        }
        return Ok(());
    }
    let index = mode.unwrap_or(0);
    for step in 1..=steps {
        let modes = enumerate_modes(eos, &mu, &event, caps);
        let Some(m) = modes.modes.get(index) else {
            return Err(Failure::Diagnostics(format!(
                "step {step}: {} has {} mode(s), no mode {index}",
                eos.render_event(&event),
                modes.modes.len()
            )));
        };
        mu = fire(eos, &mu, &event, m).expect("enumerated modes are enabled");
        println!("{}", eos.render_marking(&mu));
    }
    Ok(())
}

fn auts(file: &Path, cap: usize, elements: bool) -> Outcome {
    let doc = load(file)?;
    let g = group(&doc, cap);
    println!("order: {}", g.order());
    if g.truncated {
        println!("truncated: true");
    }
    println!("generators:");
    for a in &g.generators {
        println!("  {}", render_cycles(&doc.eos, a));
    }
    if elements {
        println!("elements:");
        for a in &g.elements {
            println!("  {}", render_cycles(&doc.eos, a));
        }
    }
    Ok(())
}

fn canon(file: &Path, marking: Option<&str>, cap: usize) -> Outcome {
    let doc = load(file)?;
    let mu = marking_arg(&doc, marking)?;
    let g = group(&doc, cap);
    println!("{}", doc.eos.render_marking(&canonicalize(&doc.eos, &mu, &g)));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn explore_cmd(
    file: &Path,
    reduce: Reduction,
    bounds: Bounds,
    dot: Option<&Path>,
    stats_out: Option<&Path>,
    verify: bool,
    strict: bool,
    timing: bool,
    cap: usize,
) -> Outcome {
    let doc = load(file)?;
    let eos = &doc.eos;
    let g = match reduce {
        Reduction::Aut | Reduction::AutProj => group(&doc, cap),
        Reduction::None | Reduction::Proj => AutGroup::trivial(eos),
    };
    let graph = explore(eos, &doc.initial, reduce, &g, &bounds);
    let stats = if timing { graph.timed_stats() } else { graph.stats() };
    let stats_json = serde_json::to_value(&stats).expect("stats serialise");
    if let Some(path) = stats_out {
        write(path, &(serde_json::to_string_pretty(&stats_json).expect("json") + "\n"))?;
    }
    if let Some(path) = dot {
        write(path, &export_dot(eos, &graph, &DotOptions::default()))?;
    }

    let mut out = stats_json;
    let mut violations = 0;
    let mut truncated = graph.truncated;
    if verify {
        let full = explore_full(eos, &doc.initial, &bounds);
        truncated |= full.truncated;
        let report = if full.truncated {
            eprintln!("warning: full exploration truncated; quotient not verified");
            Value::Null
        } else {
            let r = verify_quotient(eos, &full, &graph, &g)
                .map_err(|e| Failure::Diagnostics(e.to_string()))?;
            violations = r.violations.len();
            serde_json::to_value(&r).expect("report serialises")
        };
        out = json!({ "stats": out, "full_states": full.states.len(), "verify": report });
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    if graph.truncated {
        eprintln!("warning: exploration truncated by bounds");
    }
    if violations > 0 {
        return Err(Failure::Diagnostics(format!(
            "{violations} quotient violation(s)"
        )));
    }
    if strict && truncated {
        return Err(Failure::Truncated);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate {
            file,
            conservative,
            pt_like,
        } => validate(file, *conservative, *pt_like),
        Command::Fire {
            file,
            event,
            mode,
            steps,
            marking,
        } => fire_cmd(file, event, *mode, *steps, marking.as_deref()),
        Command::Auts { file, cap, elements } => auts(file, *cap, *elements),
        Command::Canon { file, marking, cap } => canon(file, marking.as_deref(), *cap),
        Command::Explore {
            file,
            reduce,
            max_states,
            max_depth,
            dot,
            stats,
            verify,
            strict,
            timing,
            proj_modes,
            cap,
        } => {
            let bounds = Bounds {
                max_states: *max_states,
                max_depth: *max_depth,
                caps: ModeCaps {
                    proj_modes: *proj_modes,
                    ..ModeCaps::default()
                },
                keep_modes: false,
            };
            explore_cmd(
                file,
                *reduce,
                bounds,
                dot.as_deref(),
                stats.as_deref(),
                *verify,
                *strict,
                *timing,
                *cap,
            )
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Truncated) => {
            eprintln!("error: exploration truncated (--strict)");
            ExitCode::from(2)
        }
    }
}
