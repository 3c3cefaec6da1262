//! The `stats` subcommand: line-oriented or JSON reports on DAG streams.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use dagforge::format::DagReader;
use dagforge::oracle_stats::{enumerate_layered, uniform_over, ENUMERATION_MAX_N};
use dagforge::sample_limit::MAX_LIMIT_LAYER;
use dagforge::{
    build_limit_tables, chi_square_uniformity, classify_outpoints, enumerate_all_dags, is_acyclic,
    is_weakly_connected, two_sample_test, ChiSquare, Dag, DagKey, Histogram, Variant, DEFAULT_N_MAX,
};
use serde_json::{Map, Value};

use crate::args::{Common, Restrictions, StatsCommand};
use crate::error::{CliError, CliResult};
use crate::tables;

pub struct Report {
    test: &'static str,
    fields: Vec<(&'static str, Value)>,
    rows: Vec<Vec<(&'static str, Value)>>,
    notes: Vec<String>,
    pub pass: bool,
}

impl Report {
    fn new(test: &'static str) -> Self {
        Report {
            test,
            fields: Vec::new(),
            rows: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    fn field(&mut self, key: &'static str, value: impl Into<Value>) {
        self.fields.push((key, value.into()));
    }

    fn chi_square(&mut self, r: &ChiSquare, alpha: f64) {
        self.field("statistic", finite(r.statistic));
        self.field("dof", r.dof);
        self.field("p_value", r.p_value);
        self.field("alpha", alpha);
        if r.low_expected() {
            self.notes.push(format!(
                "smallest expected cell count is {:.2}; the p-value is approximate",
                r.min_expected
            ));
        }
        self.pass &= r.p_value > alpha;
    }

    fn write<W: Write>(&self, out: &mut W, json: bool) -> io::Result<()> {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        if json {
            let mut obj = Map::new();
            obj.insert("test".into(), self.test.into());
            for (k, v) in &self.fields {
                obj.insert((*k).into(), v.clone());
            }
            if !self.rows.is_empty() {
                let rows = self.rows.iter().map(|r| {
                    Value::Object(r.iter().map(|(k, v)| ((*k).to_string(), v.clone())).collect())
                });
                obj.insert("rows".into(), rows.collect());
            }
            obj.insert("notes".into(), self.notes.clone().into());
            obj.insert("result".into(), verdict.into());
            serde_json::to_writer_pretty(&mut *out, &Value::Object(obj))?;
            return writeln!(out);
        }
        writeln!(out, "test: {}", self.test)?;
        for (k, v) in &self.fields {
            writeln!(out, "{k}: {}", plain(v))?;
        }
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|(k, v)| format!("{k}={}", plain(v))).collect();
            writeln!(out, "  {}", cells.join(" "))?;
        }
        for note in &self.notes {
            writeln!(out, "note: {note}")?;
        }
        writeln!(out, "result: {verdict}")
    }
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        x.into()
    } else {
        "inf".into()
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn open(path: &Path) -> CliResult<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).map_err(|source| CliError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Box::new(BufReader::new(f)))
}

/// Feeds every graph of every input to `f`; no inputs means stdin.
fn for_each_dag(inputs: &[PathBuf], mut f: impl FnMut(Dag) -> CliResult<()>) -> CliResult<()> {
    let stdin = [PathBuf::from("-")];
    let inputs = if inputs.is_empty() { &stdin[..] } else { inputs };
    for path in inputs {
        for dag in DagReader::new(open(path)?) {
            let dag = dag.map_err(|source| CliError::Input {
                path: path.display().to_string(),
                source,
            })?;
            f(dag)?;
        }
    }
    Ok(())
}

/// Histogram of `key(dag)` over the inputs, with every graph required to
/// have the same node count as the first (or `nodes`).
fn collect<K: Ord + Clone>(
    inputs: &[PathBuf],
    mut nodes: Option<usize>,
    key: impl Fn(&Dag) -> K,
) -> CliResult<(Histogram<K>, Option<usize>)> {
    let mut h = Histogram::new();
    let mut index = 0u64;
    for_each_dag(inputs, |d| {
        index += 1;
        let n = *nodes.get_or_insert(d.node_count());
        if d.node_count() != n {
            return Err(CliError::usage(format!(
                "graph {index} has {} nodes, expected {n}",
                d.node_count()
            )));
        }
        h.add(key(&d));
        Ok(())
    })?;
    Ok((h, nodes))
}

fn empty_input() -> CliError {
    CliError::usage("no graphs in the input")
}

/// The law the sampler selected by `r` should follow on `n` nodes.
fn target_law(n: usize, r: &Restrictions) -> CliResult<BTreeMap<DagKey, f64>> {
    if r.family_flags().len() > 1 {
        return Err(CliError::usage(format!("{} cannot be combined", r.family_flags().join(" and "))));
    }
    let support = match r.max_in {
        Some(k) => {
            let variant = match r.max_out {
                Some(kn) => Variant::MaxInOut { max_in: k, max_out: kn },
                None => Variant::MaxIn { max_in: k },
            };
            enumerate_layered(n, variant)?
        }
        None => enumerate_all_dags(n)?,
    };
    let keep = |d: &Dag| {
        (!r.connected || is_weakly_connected(d))
            && r.max_children.is_none_or(|k| (0..n).all(|u| d.out_degree(u) <= k))
            && r.max_parents.is_none_or(|k| d.in_degrees().iter().all(|&x| x <= k))
    };
    let kept = support.into_iter().filter(keep);
    Ok(match r.edge_prob {
        Some(p) => {
            let p = *p.numer() as f64 / *p.denom() as f64;
            let pairs = (n * n.saturating_sub(1) / 2) as i32;
            kept.map(|d| {
                let l = d.edge_count() as i32;
                (d.key(), p.powi(l) * (1.0 - p).powi(pairs - l))
            })
            .collect()
        }
        None => uniform_over(kept.map(|d| d.key())),
    })
}

fn uniformity(nodes: Option<usize>, r: &Restrictions, common: &Common) -> CliResult<Report> {
    if let Some(n) = nodes {
        check_enumerable(n)?;
    }
    let (h, nodes) = collect(&common.inputs, nodes, Dag::key)?;
    let n = nodes.ok_or_else(empty_input)?;
    check_enumerable(n)?;
    let law = target_law(n, r)?;
    let mut rep = Report::new("uniformity");
    rep.field("nodes", n);
    rep.field("graphs", h.trials());
    rep.field("support", law.values().filter(|p| **p > 0.0).count());
    rep.field("observed_cells", h.cells());
    rep.chi_square(&chi_square_uniformity(&h, &law), common.alpha);
    Ok(rep)
}

fn check_enumerable(n: usize) -> CliResult<()> {
    if !(1..=ENUMERATION_MAX_N).contains(&n) {
        return Err(CliError::usage(format!(
            "uniformity needs 1 to {ENUMERATION_MAX_N} nodes for the exhaustive oracle, got {n}"
        )));
    }
    Ok(())
}

fn acyclic(common: &Common) -> CliResult<Report> {
    let (mut graphs, mut cyclic, mut first_bad) = (0u64, 0u64, None);
    for_each_dag(&common.inputs, |d| {
        graphs += 1;
        if !is_acyclic(&d) {
            cyclic += 1;
            first_bad.get_or_insert(graphs);
        }
        Ok(())
    })?;
    let mut rep = Report::new("acyclic");
    rep.field("graphs", graphs);
    rep.field("cyclic", cyclic);
    if let Some(i) = first_bad {
        rep.field("first_cyclic", i);
    }
    rep.pass = cyclic == 0;
    Ok(rep)
}

/// Exact law of the outpoint count within the table range, the limit law
/// beyond it.
fn outpoint_law(n: usize) -> CliResult<(Vec<f64>, &'static str)> {
    if n <= DEFAULT_N_MAX {
        let t = tables::build(Variant::Unrestricted, n)?;
        let total = t.total(n);
        let law = (1..=n).map(|k| dagforge::counting::ratio_to_f64(t.a(n, k), total)).collect();
        return Ok((law, "exact"));
    }
    let lt = build_limit_tables(dagforge::DEFAULT_N_SWITCH)?;
    Ok(((1..=MAX_LIMIT_LAYER).map(|k| lt.a(k)).collect(), "limit"))
}

fn outpoints(nodes: Option<usize>, z_max: f64, common: &Common) -> CliResult<Report> {
    let (h, nodes) = collect(&common.inputs, nodes, classify_outpoints)?;
    let n = nodes.ok_or_else(empty_input)?;
    let (law, source) = outpoint_law(n)?;
    let trials = h.trials() as f64;
    let mut rep = Report::new("outpoints");
    rep.field("nodes", n);
    rep.field("graphs", h.trials());
    rep.field("law", source);
    rep.field("z_max", z_max);
    let mut worst: f64 = 0.0;
    let top = h.iter().map(|(k, _)| *k).max().unwrap_or(0).max(law.len());
    for k in 1..=top {
        let p = law.get(k - 1).copied().unwrap_or(0.0);
        let o = h.count(&k) as f64;
        let e = trials * p;
        let sd = (trials * p * (1.0 - p)).sqrt();
        let z = if sd > 0.0 {
            (o - e) / sd
        } else if o == e {
            0.0
        } else {
            f64::INFINITY
        };
        if o == 0.0 && e < 0.5 {
            continue;
        }
        worst = worst.max(z.abs());
        rep.rows.push(vec![
            ("k", k.into()),
            ("observed", (o / trials).into()),
            ("expected", p.into()),
            ("z", finite((z * 100.0).round() / 100.0)),
        ]);
    }
    rep.field("max_abs_z", finite(worst));
    rep.pass = worst <= z_max;
    let expected: BTreeMap<usize, f64> = law.iter().enumerate().map(|(i, p)| (i + 1, *p)).collect();
    let chi = chi_square_uniformity(&h, &expected);
    rep.field("chi_square_p_value", chi.p_value);
    Ok(rep)
}

fn compare(first: &Path, second: &Path, alpha: f64) -> CliResult<Report> {
    let read = |p: &Path| -> CliResult<Histogram<DagKey>> {
        let mut h = Histogram::new();
        for_each_dag(&[p.to_path_buf()], |d| {
            h.add(d.key());
            Ok(())
        })?;
        Ok(h)
    };
    let (a, b) = (read(first)?, read(second)?);
    if a.trials() == 0 || b.trials() == 0 {
        return Err(empty_input());
    }
    let mut rep = Report::new("compare");
    rep.field("graphs_first", a.trials());
    rep.field("graphs_second", b.trials());
    rep.chi_square(&two_sample_test(&a, &b), alpha);
    Ok(rep)
}

/// Runs the test and prints its report; the report says pass or fail.
pub fn run(cmd: &StatsCommand) -> CliResult<bool> {
    let (rep, json) = match cmd {
        StatsCommand::Uniformity {
            nodes,
            restrictions,
            common,
        } => (uniformity(*nodes, restrictions, common)?, common.json),
        StatsCommand::Acyclic { common } => (acyclic(common)?, common.json),
        StatsCommand::Outpoints { nodes, z_max, common } => (outpoints(*nodes, *z_max, common)?, common.json),
        StatsCommand::Compare {
            first,
            second,
            alpha,
            json,
        } => (compare(first, second, *alpha)?, *json),
    };
    let mut out = io::stdout().lock();
    rep.write(&mut out, json)?;
    out.flush()?;
    Ok(rep.pass)
}
