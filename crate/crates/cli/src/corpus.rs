//! The example corpus: `.pf` entries, their golden expectations and the
//! normalization traces recorded next to them.
//!
//! `golden.txt` holds one expectation per line,
//!
//! ```text
//! <entry> <key> origin=<oracle|rule-schema|by-inspection> <value>
//! ```
//!
//! and `traces/<entry>.trace` the canonical normalization of the entry in
//! the format of [`render_trace`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use haem_core::extract::extract_witness;
use haem_core::lang::Formula;
use haem_core::oracle::Oracle;
use haem_core::reduce::{Normalization, Redex, Reducer, Strategy};
use haem_core::term::{System, Term};
use haem_core::translate::erase;
use haem_core::typing::{Checker, Signature};

use crate::judgment::{parse_judgment, Judgment};

/// Overrides the corpus directory.
pub const CORPUS_ENV: &str = "HAEM_CORPUS";
pub const GOLDEN_FILE: &str = "golden.txt";
pub const TRACE_DIR: &str = "traces";

/// Keys in the order they are written to the golden file.
pub const KEYS: [&str; 9] = [
    "system",
    "well-formed",
    "check",
    "erased-check",
    "normal-form",
    "steps",
    "height",
    "nodes",
    "witness",
];

/// Keys whose values the oracle regenerates.
pub const ORACLE_KEYS: [&str; 5] = ["normal-form", "steps", "height", "nodes", "witness"];

pub fn default_root() -> PathBuf {
    match std::env::var_os(CORPUS_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus"),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Entry { path: PathBuf, message: String },
    #[error("{GOLDEN_FILE} line {line}: {message}")]
    Golden { line: usize, message: String },
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CorpusError> {
    fs::write(path, text).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Origin {
    /// Recomputed by the oracle engine.
    Oracle,
    /// Read off a rule schema by hand.
    RuleSchema,
    /// Evident from the entry itself.
    ByInspection,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Oracle => "oracle",
            Origin::RuleSchema => "rule-schema",
            Origin::ByInspection => "by-inspection",
        })
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(Origin::Oracle),
            "rule-schema" => Ok(Origin::RuleSchema),
            "by-inspection" => Ok(Origin::ByInspection),
            _ => Err(format!("unknown origin `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    pub key: String,
    pub origin: Origin,
    pub value: String,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
    pub judgment: Judgment,
    pub expectations: Vec<Expectation>,
}

impl CorpusEntry {
    pub fn expected(&self, key: &str) -> Option<&str> {
        self.expectations
            .iter()
            .find(|e| e.key == key)
            .map(|e| e.value.as_str())
    }

    /// Whether the entry is expected to type-check.
    pub fn is_typed(&self) -> bool {
        self.expected("check") == Some("ok")
    }
}

/// Parses golden lines into `(entry, expectation)` pairs.
pub fn parse_golden(text: &str) -> Result<Vec<(String, Expectation)>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| CorpusError::Golden {
            line: i + 1,
            message,
        };
        let mut parts = line.splitn(4, ' ');
        let (Some(entry), Some(key), Some(origin), Some(value)) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(err("expected `<entry> <key> origin=<o> <value>`".into()));
        };
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        let origin = origin
            .strip_prefix("origin=")
            .ok_or_else(|| err(format!("expected `origin=...`, found `{origin}`")))?
            .parse()
            .map_err(err)?;
        out.push((
            entry.to_owned(),
            Expectation {
                key: key.to_owned(),
                origin,
                value: value.to_owned(),
            },
        ));
    }
    Ok(out)
}

fn key_rank(key: &str) -> usize {
    KEYS.iter().position(|k| *k == key).unwrap_or(KEYS.len())
}

pub fn render_golden(lines: &[(String, Expectation)]) -> String {
    let mut sorted = lines.to_vec();
    sorted.sort_by(|(a, x), (b, y)| (a, key_rank(&x.key)).cmp(&(b, key_rank(&y.key))));
    let mut out = String::new();
    for (entry, e) in sorted {
        out.push_str(&format!(
            "{entry} {} origin={} {}\n",
            e.key, e.origin, e.value
        ));
    }
    out
}

/// Loads every `.pf` file of `root` in name order with its expectations.
pub fn load(root: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let io = |source| CorpusError::Io {
        path: root.to_owned(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "pf"))
        .collect();
    paths.sort();
    let golden_path = root.join(GOLDEN_FILE);
    let golden = if golden_path.exists() {
        parse_golden(&read(&golden_path)?)?
    } else {
        Vec::new()
    };
    let mut entries = Vec::new();
    for path in paths {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let judgment = parse_judgment(&read(&path)?).map_err(|e| CorpusError::Entry {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let expectations = golden
            .iter()
            .filter(|(n, _)| *n == name)
            .map(|(_, e)| e.clone())
            .collect();
        entries.push(CorpusEntry {
            name,
            path,
            judgment,
            expectations,
        });
    }
    if let Some((n, _)) = golden
        .iter()
        .find(|(n, _)| !entries.iter().any(|e| e.name == *n))
    {
        return Err(CorpusError::Entry {
            path: golden_path,
            message: format!("expectation for unknown entry `{n}`"),
        });
    }
    Ok(entries)
}

/// One line per step: index, rule, path, parameter or `-`, reduct.
pub fn render_trace(start: &Term, steps: &[(Redex, Term)]) -> String {
    let mut out = format!("0 start - - {start}\n");
    for (i, (r, t)) in steps.iter().enumerate() {
        let param = r.param.map_or_else(|| "-".to_owned(), |n| n.to_string());
        out.push_str(&format!("{} {} {} {param} {t}\n", i + 1, r.rule, r.path));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Production,
    Oracle,
}

#[derive(Debug, Clone, Copy)]
pub struct Config {
    pub witness_bound: u64,
    pub step_budget: usize,
    pub node_budget: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            witness_bound: haem_core::reduce::DEFAULT_WITNESS_BOUND,
            step_budget: 10_000,
            node_budget: 100_000,
        }
    }
}

/// Observed values of an entry, keyed as in the golden file.
#[derive(Debug, Clone, Default)]
pub struct Facts {
    pub values: BTreeMap<&'static str, String>,
    /// The canonical normalization, when it reaches a normal form.
    pub trace: Option<String>,
}

fn verdict<T, E>(r: Result<T, E>, kind: impl Fn(&E) -> &'static str) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => format!("error:{}", kind(&e)),
    }
}

fn sigma01(goal: &Formula) -> bool {
    matches!(goal, Formula::Ex(_, body) if body.as_atom().is_some())
}

/// First numeral witness of a normal form whose instance holds, found by
/// descending EM branches left to right.
fn read_witness(sig: &Signature, nf: &Term, goal: &Formula) -> Option<u64> {
    let Formula::Ex(beta, body) = goal else {
        return None;
    };
    let p = body.as_atom()?;
    let mut stack = vec![nf];
    while let Some(t) = stack.pop() {
        match t {
            Term::WPair { witness, .. } => {
                if let Some(n) = witness.as_numeral() {
                    if sig.registry.eval_atom(&p.subst(beta, witness)) == Ok(true) {
                        return Some(n);
                    }
                }
            }
            Term::Em { left, right, .. } => {
                stack.push(right);
                stack.push(left);
            }
            _ => {}
        }
    }
    None
}

/// Computes every fact of `j` with the chosen engine. Typing facts always
/// come from the checker.
pub fn facts(j: &Judgment, engine: Engine, cfg: &Config) -> Facts {
    let mut out = Facts::default();
    out.values.insert("system", j.system.to_string());
    let sig = match j.signature() {
        Ok(sig) => sig,
        Err(e) => {
            out.values.insert("check", format!("error:{}", e.kind()));
            return out;
        }
    };
    let wf = j.term.check_well_formed(j.system);
    out.values
        .insert("well-formed", verdict(wf.clone(), |e| e.kind()));
    let checked = Checker::new(&sig, j.system).check(&j.context, &j.term, &j.formula);
    let typed = checked.is_ok();
    out.values.insert("check", verdict(checked, |e| e.kind()));
    if typed && j.system == System::Em1 {
        let erased = Checker::new(&sig, System::Nem).check(&j.context, &erase(&j.term), &j.formula);
        out.values
            .insert("erased-check", verdict(erased, |e| e.kind()));
    }
    if wf.is_err() {
        return out;
    }
    let reducer =
        Reducer::new(sig.registry.clone(), j.system).with_witness_bound(cfg.witness_bound);
    let oracle = Oracle::new(sig.registry.clone(), j.system, cfg.witness_bound);
    let steps = match engine {
        Engine::Production => {
            match reducer.normalize(&j.term, Strategy::Canonical, cfg.step_budget) {
                Ok(Normalization::NormalForm { trace, .. }) => Some(trace.steps),
                _ => None,
            }
        }
        Engine::Oracle => oracle.trace(&j.term, cfg.step_budget),
    };
    let normal_form = match &steps {
        Some(steps) => {
            let nf = steps.last().map_or(&j.term, |(_, t)| t).clone();
            out.values.insert("normal-form", nf.to_string());
            out.values.insert("steps", steps.len().to_string());
            out.trace = Some(render_trace(&j.term, steps));
            Some(nf)
        }
        None => {
            out.values.insert("normal-form", "budget-exhausted".into());
            out.values.insert("steps", cfg.step_budget.to_string());
            None
        }
    };
    if !typed {
        return out;
    }
    let tree = match engine {
        Engine::Production => reducer
            .reduction_tree(&j.term, cfg.node_budget)
            .ok()
            .filter(|t| t.is_complete())
            .map(|t| (t.height().unwrap_or(0), t.len())),
        Engine::Oracle => oracle
            .explore(&j.term, cfg.node_budget)
            .map(|e| (e.height, e.nodes)),
    };
    match tree {
        Some((height, nodes)) => {
            out.values.insert("height", height.to_string());
            out.values.insert("nodes", nodes.to_string());
        }
        None => {
            out.values.insert("height", "cut".into());
        }
    }
    if j.system == System::Em1 && sigma01(&j.formula) {
        let witness = match engine {
            Engine::Production => extract_witness(&sig, &j.term, &j.formula, cfg.step_budget)
                .ok()
                .map(|e| e.witness),
            Engine::Oracle => normal_form.and_then(|nf| read_witness(&sig, &nf, &j.formula)),
        };
        out.values.insert(
            "witness",
            witness.map_or_else(|| "none".into(), |n| n.to_string()),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub entry: String,
    pub key: String,
    pub origin: Option<Origin>,
    pub expected: String,
    pub actual: Option<String>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.actual.as_deref() == Some(self.expected.as_str())
    }
}

/// Compares each entry's facts with its expectations and recorded trace.
/// Trace comparisons appear under the key `trace`, with the expected and
/// actual values abbreviated to their line counts when they differ.
pub fn replay(root: &Path, entries: &[CorpusEntry], engine: Engine, cfg: &Config) -> Vec<Outcome> {
    let mut out = Vec::new();
    for entry in entries {
        let facts = facts(&entry.judgment, engine, cfg);
        for e in &entry.expectations {
            out.push(Outcome {
                entry: entry.name.clone(),
                key: e.key.clone(),
                origin: Some(e.origin),
                expected: e.value.clone(),
                actual: facts.values.get(e.key.as_str()).cloned(),
            });
        }
        let trace_path = root.join(TRACE_DIR).join(format!("{}.trace", entry.name));
        if let Ok(expected) = fs::read_to_string(&trace_path) {
            let actual = facts.trace.unwrap_or_default();
            let same = actual == expected;
            let summary = |s: &str| format!("{} lines", s.lines().count());
            out.push(Outcome {
                entry: entry.name.clone(),
                key: "trace".into(),
                origin: Some(Origin::Oracle),
                expected: summary(&expected),
                actual: Some(if same {
                    summary(&expected)
                } else {
                    format!("different trace ({})", summary(&actual))
                }),
            });
        }
    }
    out
}

/// Rewrites the oracle-origin lines of the golden file and every trace
/// from the oracle engine; other lines are kept as written.
pub fn regenerate(root: &Path, cfg: &Config) -> Result<Vec<(String, Expectation)>, CorpusError> {
    let entries = load(root)?;
    let mut lines = Vec::new();
    let trace_dir = root.join(TRACE_DIR);
    fs::create_dir_all(&trace_dir).map_err(|source| CorpusError::Io {
        path: trace_dir.clone(),
        source,
    })?;
    for entry in &entries {
        lines.extend(
            entry
                .expectations
                .iter()
                .filter(|e| e.origin != Origin::Oracle)
                .map(|e| (entry.name.clone(), e.clone())),
        );
        let facts = facts(&entry.judgment, Engine::Oracle, cfg);
        for key in ORACLE_KEYS {
            if let Some(value) = facts.values.get(key) {
                lines.push((
                    entry.name.clone(),
                    Expectation {
                        key: key.to_owned(),
                        origin: Origin::Oracle,
                        value: value.clone(),
                    },
                ));
            }
        }
        let trace_path = trace_dir.join(format!("{}.trace", entry.name));
        match facts.trace {
            Some(trace) => write(&trace_path, &trace)?,
            None if trace_path.exists() => {
                fs::remove_file(&trace_path).map_err(|source| CorpusError::Io {
                    path: trace_path.clone(),
                    source,
                })?
            }
            None => {}
        }
    }
    write(&root.join(GOLDEN_FILE), &render_golden(&lines))?;
    Ok(lines)
}
