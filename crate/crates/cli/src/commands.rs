//! Command-line commands. Each produces a [`Report`] with a text and a
//! JSON rendering; the binary picks one and sets the exit status.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use haem_core::extract::extract_witness;
use haem_core::oracle::Oracle;
use haem_core::reduce::{NodeStatus, Normalization, Redex, Reducer, ReductionTree, Strategy};
use haem_core::term::System;
use haem_core::translate::{erase, simulate_step};
use haem_core::typing::{Checker, Derivation};

use crate::corpus::{self, render_trace, Config, Engine};
use crate::judgment::{parse_judgment, Judgment};

#[derive(Debug, Parser)]
#[command(name = "haem", version, about = "Proof terms for HA+EM₁ and HA+NEM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    /// Overrides the system declared in or inferred from the file.
    #[arg(long, global = true)]
    pub system: Option<System>,
    #[arg(long, global = true, default_value_t = haem_core::reduce::DEFAULT_WITNESS_BOUND)]
    pub witness_bound: u64,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub step_budget: usize,
    #[arg(long, global = true, default_value_t = 100_000)]
    pub node_budget: usize,
    #[arg(long, global = true, default_value = "canonical")]
    pub strategy: Strategy,
    /// Prints intermediate terms, derivations or tree nodes.
    #[arg(long, global = true)]
    pub trace: bool,
    /// Emits a machine-readable report.
    #[arg(long, global = true)]
    pub json: bool,
}

impl Opts {
    pub fn config(&self) -> Config {
        Config {
            witness_bound: self.witness_bound,
            step_budget: self.step_budget,
            node_budget: self.node_budget,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Type-checks a judgment file.
    Check { file: PathBuf },
    /// Lists the redexes of the term, or applies one.
    Step {
        file: PathBuf,
        #[arg(long)]
        redex: Option<usize>,
    },
    /// Normalizes the term with the chosen strategy.
    Normalize { file: PathBuf },
    /// Builds the full reduction tree.
    Tree {
        file: PathBuf,
        /// Uses the naive engine instead of the production one.
        #[arg(long)]
        oracle: bool,
    },
    /// Prints the label erasure of an EM₁ term.
    Erase { file: PathBuf },
    /// Simulates EM₁ steps by NEM paths between the erasures.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        redex: Option<usize>,
        /// Replays each path and checks its endpoint.
        #[arg(long)]
        verify: bool,
    },
    /// Extracts the witness of a proof of ∃β P.
    Extract { file: PathBuf },
    /// Replays the corpus against its goldens.
    Corpus {
        /// Corpus directory, otherwise the environment override or the shipped corpus.
        dir: Option<PathBuf>,
        /// Rewrites the oracle-origin goldens and traces.
        #[arg(long)]
        regen: bool,
        /// Computes the reduction facts with the naive engine.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub ok: bool,
    pub text: String,
    pub json: Value,
}

impl Report {
    fn new(ok: bool, text: String, json: Value) -> Self {
        Report { ok, text, json }
    }

    /// A failure before the command could run.
    pub fn failure(kind: &str, message: String) -> Self {
        Report::new(
            false,
            format!("error: {message}"),
            json!({"ok": false, "error": {"kind": kind, "message": message}}),
        )
    }

    pub fn render(&self, as_json: bool) -> String {
        if as_json {
            serde_json::to_string_pretty(&self.json).expect("reports are valid JSON")
        } else {
            self.text.clone()
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            1
        }
    }
}

fn load(file: &PathBuf, opts: &Opts) -> Result<Judgment, Report> {
    let text = fs::read_to_string(file)
        .map_err(|e| Report::failure("io", format!("{}: {e}", file.display())))?;
    let mut j = parse_judgment(&text)
        .map_err(|e| Report::failure("parse", format!("{}: {e}", file.display())))?;
    if let Some(s) = opts.system {
        j.system = s;
    }
    Ok(j)
}

fn reducer(j: &Judgment, opts: &Opts) -> Result<Reducer, Report> {
    let sig = j
        .signature()
        .map_err(|e| Report::failure(e.kind(), e.to_string()))?;
    Ok(Reducer::new(sig.registry, j.system).with_witness_bound(opts.witness_bound))
}

fn derivation_json(d: &Derivation) -> Value {
    json!({
        "rule": d.rule.name(),
        "context": d.context.to_string(),
        "term": d.term.to_string(),
        "formula": d.formula.to_string(),
        "note": d.note,
        "premises": d.premises.iter().map(derivation_json).collect::<Vec<_>>(),
    })
}

fn redex_json(r: &Redex) -> Value {
    json!({"rule": r.rule.name(), "path": r.path.to_string(), "param": r.param})
}

fn trace_json(steps: &[(Redex, haem_core::term::Term)]) -> Value {
    steps
        .iter()
        .map(|(r, t)| json!({"redex": redex_json(r), "term": t.to_string()}))
        .collect()
}

fn tree_json(tree: &ReductionTree, heights: &[Option<u64>], i: usize) -> Value {
    let node = &tree.nodes[i];
    json!({
        "term": node.term.to_string(),
        "status": match node.status { NodeStatus::Complete => "complete", NodeStatus::BudgetCut => "cut" },
        "height": heights[i],
        "children": node.children.iter().map(|(r, j)| json!({
            "redex": redex_json(r),
            "node": tree_json(tree, heights, *j),
        })).collect::<Vec<_>>(),
    })
}

fn tree_text(tree: &ReductionTree, i: usize, depth: usize, via: Option<&Redex>, out: &mut String) {
    let node = &tree.nodes[i];
    let indent = "  ".repeat(depth);
    let cut = if node.status == NodeStatus::BudgetCut {
        "  [cut]"
    } else {
        ""
    };
    match via {
        Some(r) => out.push_str(&format!("{indent}{r}: {}{cut}\n", node.term)),
        None => out.push_str(&format!("{indent}{}{cut}\n", node.term)),
    }
    for (r, j) in &node.children {
        tree_text(tree, *j, depth + 1, Some(r), out);
    }
}

fn check(j: &Judgment, opts: &Opts) -> Report {
    let sig = match j.signature() {
        Ok(s) => s,
        Err(e) => return Report::failure(e.kind(), e.to_string()),
    };
    let judgment = format!("{} ⊢ {} : {}", j.context, j.term, j.formula)
        .trim_start()
        .to_owned();
    match Checker::new(&sig, j.system).check(&j.context, &j.term, &j.formula) {
        Ok(d) => {
            let text = format!("{d}\nok [{}]: {judgment}", j.system);
            let mut report =
                json!({"ok": true, "system": j.system.to_string(), "judgment": judgment});
            if opts.trace || opts.json {
                report["derivation"] = derivation_json(&d);
            }
            Report::new(true, text, report)
        }
        Err(e) => Report::new(
            false,
            format!("error [{}]: {e}", j.system),
            json!({"ok": false, "system": j.system.to_string(), "judgment": judgment,
                   "error": {"kind": e.kind(), "message": e.to_string()}}),
        ),
    }
}

fn step(j: &Judgment, opts: &Opts, index: Option<usize>) -> Result<Report, Report> {
    let red = reducer(j, opts)?;
    let redexes = red
        .redexes(&j.term)
        .map_err(|e| Report::failure("reduce", e.to_string()))?;
    let Some(i) = index else {
        let mut text = String::new();
        for (i, r) in redexes.iter().enumerate() {
            text.push_str(&format!("{i}: {r}\n"));
        }
        if redexes.is_empty() {
            text.push_str("normal form\n");
        }
        let list: Vec<Value> = redexes.iter().map(redex_json).collect();
        return Ok(Report::new(
            true,
            text.trim_end().into(),
            json!({"ok": true, "redexes": list}),
        ));
    };
    let r = redexes.get(i).ok_or_else(|| {
        Report::failure(
            "redex",
            format!("no redex {i}; the term has {}", redexes.len()),
        )
    })?;
    let reduct = red
        .apply_step(&j.term, r)
        .map_err(|e| Report::failure("reduce", e.to_string()))?;
    Ok(Report::new(
        true,
        format!("{r}\n{reduct}"),
        json!({"ok": true, "redex": redex_json(r), "reduct": reduct.to_string()}),
    ))
}

fn normalize(j: &Judgment, opts: &Opts) -> Result<Report, Report> {
    let red = reducer(j, opts)?;
    let n = red
        .normalize(&j.term, opts.strategy, opts.step_budget)
        .map_err(|e| Report::failure("reduce", e.to_string()))?;
    let trace = n.trace();
    let mut text = if opts.trace {
        render_trace(&trace.start, &trace.steps)
    } else {
        String::new()
    };
    let mut report = json!({"steps": trace.len()});
    if opts.trace {
        report["trace"] = trace_json(&trace.steps);
    }
    let ok = match &n {
        Normalization::NormalForm { term, .. } => {
            text.push_str(&format!("{term}\n{} step(s)", trace.len()));
            report["normal_form"] = json!(term.to_string());
            true
        }
        Normalization::BudgetExhausted { .. } => {
            text.push_str(&format!("budget exhausted after {} step(s)", trace.len()));
            report["error"] = json!({"kind": "budget-exhausted", "message": text.lines().last()});
            false
        }
    };
    report["ok"] = json!(ok);
    Ok(Report::new(ok, text, report))
}

fn tree(j: &Judgment, opts: &Opts, oracle: bool) -> Result<Report, Report> {
    let red = reducer(j, opts)?;
    if oracle {
        j.term
            .check_well_formed(j.system)
            .map_err(|e| Report::failure(e.kind(), e.to_string()))?;
        let o = Oracle::new(red.registry().clone(), j.system, opts.witness_bound);
        return Ok(match o.explore(&j.term, opts.node_budget) {
            Some(e) => Report::new(
                true,
                format!(
                    "nodes: {}\nheight: {}\nleaves: {}",
                    e.nodes,
                    e.height,
                    e.leaves.len()
                ),
                json!({"ok": true, "engine": "oracle", "nodes": e.nodes, "height": e.height,
                       "leaves": e.leaves.iter().map(|t| t.to_string()).collect::<Vec<_>>()}),
            ),
            None => Report::new(
                false,
                format!("node budget {} exhausted", opts.node_budget),
                json!({"ok": false, "engine": "oracle",
                       "error": {"kind": "budget-exhausted", "message": "node budget exhausted"}}),
            ),
        });
    }
    let tree = red
        .reduction_tree(&j.term, opts.node_budget)
        .map_err(|e| Report::failure("reduce", e.to_string()))?;
    let heights = tree.heights();
    let complete = tree.is_complete();
    let height = tree.height();
    let mut text = String::new();
    if opts.trace {
        tree_text(&tree, 0, 0, None, &mut text);
    }
    text.push_str(&format!(
        "nodes: {}\nheight: {}\ncomplete: {}",
        tree.len(),
        height.map_or_else(|| "unknown".into(), |h| h.to_string()),
        if complete { "yes" } else { "no" }
    ));
    let mut report = json!({"ok": complete, "engine": "production", "nodes": tree.len(),
                            "height": height, "complete": complete});
    if opts.trace {
        report["tree"] = tree_json(&tree, &heights, 0);
    }
    Ok(Report::new(complete, text, report))
}

fn erase_cmd(j: &Judgment) -> Result<Report, Report> {
    let sig = j
        .signature()
        .map_err(|e| Report::failure(e.kind(), e.to_string()))?;
    j.term
        .check_well_formed(System::Em1)
        .map_err(|e| Report::failure(e.kind(), e.to_string()))?;
    let erased = erase(&j.term);
    let nem = Checker::new(&sig, System::Nem).check(&j.context, &erased, &j.formula);
    let verdict = match &nem {
        Ok(_) => "ok".to_owned(),
        Err(e) => format!("error: {e}"),
    };
    Ok(Report::new(
        true,
        format!("{erased}\nnem check: {verdict}"),
        json!({"ok": true, "erased": erased.to_string(), "nem_check": nem.is_ok()}),
    ))
}

fn simulate(
    j: &Judgment,
    opts: &Opts,
    index: Option<usize>,
    verify: bool,
) -> Result<Report, Report> {
    if j.system != System::Em1 {
        return Err(Report::failure(
            "system",
            "simulation starts from an EM₁ term".into(),
        ));
    }
    let red = reducer(j, opts)?;
    let redexes = red
        .redexes(&j.term)
        .map_err(|e| Report::failure("reduce", e.to_string()))?;
    let chosen: Vec<(usize, &Redex)> = match index {
        Some(i) => vec![(
            i,
            redexes.get(i).ok_or_else(|| {
                Report::failure(
                    "redex",
                    format!("no redex {i}; the term has {}", redexes.len()),
                )
            })?,
        )],
        None => redexes.iter().enumerate().collect(),
    };
    let mut ok = true;
    let mut text = String::new();
    let mut paths = Vec::new();
    for (i, r) in chosen {
        text.push_str(&format!("{i}: {r}\n"));
        let outcome = simulate_step(&red, &j.term, r).and_then(|p| {
            if verify {
                let expected = erase(
                    &red.apply_step(&j.term, r)
                        .expect("simulate_step validated r"),
                );
                p.verify(red.registry(), opts.witness_bound, &expected)?;
            }
            Ok(p)
        });
        match outcome {
            Ok(p) => {
                for s in &p.steps {
                    text.push_str(&format!("  {s}\n"));
                }
                text.push_str(&format!("  => {}\n", p.target));
                if verify {
                    text.push_str("  verified\n");
                }
                paths.push(json!({"redex": redex_json(r), "ok": true,
                                  "steps": p.steps.iter().map(redex_json).collect::<Vec<_>>(),
                                  "target": p.target.to_string(), "verified": verify}));
            }
            Err(e) => {
                ok = false;
                text.push_str(&format!("  failed: {e}\n"));
                paths.push(json!({"redex": redex_json(r), "ok": false, "error": e.to_string()}));
            }
        }
    }
    if paths.is_empty() {
        text.push_str("normal form\n");
    }
    Ok(Report::new(
        ok,
        text.trim_end().into(),
        json!({"ok": ok, "source": erase(&j.term).to_string(), "paths": paths}),
    ))
}

fn extract(j: &Judgment, opts: &Opts) -> Result<Report, Report> {
    let sig = j
        .signature()
        .map_err(|e| Report::failure(e.kind(), e.to_string()))?;
    Ok(
        match extract_witness(&sig, &j.term, &j.formula, opts.step_budget) {
            Ok(e) => {
                let mut text = format!(
                    "witness: {}\nresidual: {}\nnormal form: {}\nsteps: {}",
                    e.witness, e.residual, e.normal_form, e.steps
                );
                if opts.trace {
                    text = format!("{}\n{text}", e.derivation);
                }
                Report::new(
                    true,
                    text,
                    json!({"ok": true, "witness": e.witness, "residual": e.residual.to_string(),
                       "normal_form": e.normal_form.to_string(), "steps": e.steps}),
                )
            }
            Err(e) => Report::new(
                false,
                format!("error: {e}"),
                json!({"ok": false, "error": {"kind": "extract", "message": e.to_string()}}),
            ),
        },
    )
}

fn corpus_cmd(
    dir: Option<PathBuf>,
    opts: &Opts,
    regen: bool,
    oracle: bool,
) -> Result<Report, Report> {
    let root = dir.unwrap_or_else(corpus::default_root);
    let cfg = opts.config();
    let fail = |e: corpus::CorpusError| Report::failure("corpus", e.to_string());
    if regen {
        let lines = corpus::regenerate(&root, &cfg).map_err(fail)?;
        return Ok(Report::new(
            true,
            format!(
                "regenerated {} golden line(s) in {}",
                lines.len(),
                root.display()
            ),
            json!({"ok": true, "lines": lines.len()}),
        ));
    }
    let entries = corpus::load(&root).map_err(fail)?;
    let engine = if oracle {
        Engine::Oracle
    } else {
        Engine::Production
    };
    let outcomes = corpus::replay(&root, &entries, engine, &cfg);
    let failed = outcomes.iter().filter(|o| !o.ok()).count();
    let mut text = String::new();
    for o in &outcomes {
        let actual = o.actual.as_deref().unwrap_or("<missing>");
        if o.ok() {
            text.push_str(&format!("PASS {} {} {}\n", o.entry, o.key, o.expected));
        } else {
            text.push_str(&format!(
                "FAIL {} {}: expected {}, got {actual}\n",
                o.entry, o.key, o.expected
            ));
        }
    }
    text.push_str(&format!(
        "{} entries, {} expectation(s), {failed} failure(s)",
        entries.len(),
        outcomes.len()
    ));
    let items: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({"entry": o.entry, "key": o.key, "origin": o.origin.map(|x| x.to_string()),
                   "expected": o.expected, "actual": o.actual, "ok": o.ok()})
        })
        .collect();
    Ok(Report::new(
        failed == 0,
        text,
        json!({"ok": failed == 0, "entries": entries.len(), "failures": failed, "outcomes": items}),
    ))
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Report {
    let opts = &cli.opts;
    let result = match &cli.command {
        Command::Check { file } => load(file, opts).map(|j| check(&j, opts)),
        Command::Step { file, redex } => load(file, opts).and_then(|j| step(&j, opts, *redex)),
        Command::Normalize { file } => load(file, opts).and_then(|j| normalize(&j, opts)),
        Command::Tree { file, oracle } => load(file, opts).and_then(|j| tree(&j, opts, *oracle)),
        Command::Erase { file } => load(file, opts).and_then(|j| erase_cmd(&j)),
        Command::Simulate {
            file,
            redex,
            verify,
        } => load(file, opts).and_then(|j| simulate(&j, opts, *redex, *verify)),
        Command::Extract { file } => load(file, opts).and_then(|j| extract(&j, opts)),
        Command::Corpus { dir, regen, oracle } => corpus_cmd(dir.clone(), opts, *regen, *oracle),
    };
    result.unwrap_or_else(|failure| failure)
}

/// Parses `argv` (including the program name) and runs it.
pub fn run_command<I, T>(argv: I) -> Report
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(&cli),
        Err(e) => Report::failure("usage", e.to_string()),
    }
}
