//! Text formats for DAG streams.
//!
//! Every record ends with a blank line, so streams of mixed formats can be
//! split without knowing the format up front. Vertex labels are 1-based.
//!
//! ```text
//! # n=3          edgelist: header, then `u v` per arc, sorted
//! 1 2
//! 1 3
//!
//! 011            matrix: row u, column v is the arc u -> v
//! 000
//! 000
//!
//! {"n":3,"edges":[[1,2],[1,3]]}
//!
//! digraph {
//!   1;
//!   2;
//!   3;
//!   1 -> 2;
//!   1 -> 3;
//! }
//! ```

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dag::Dag;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum OutputFormat {
    #[default]
    Edgelist,
    Matrix,
    Dot,
    Json,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 4] = [
        OutputFormat::Edgelist,
        OutputFormat::Matrix,
        OutputFormat::Dot,
        OutputFormat::Json,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Edgelist => "edgelist",
            OutputFormat::Matrix => "matrix",
            OutputFormat::Dot => "dot",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OutputFormat::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown format {s:?}")))
    }
}

#[derive(Serialize, Deserialize)]
struct JsonDag {
    n: usize,
    edges: Vec<[usize; 2]>,
}

/// Writes one record, including its trailing blank line.
pub fn write_dag<W: Write>(out: &mut W, dag: &Dag, format: OutputFormat) -> std::io::Result<()> {
    let n = dag.node_count();
    match format {
        OutputFormat::Edgelist => {
            writeln!(out, "# n={n}")?;
            for (u, v) in dag.edges() {
                writeln!(out, "{} {}", u + 1, v + 1)?;
            }
        }
        OutputFormat::Matrix => {
            let mut line = Vec::with_capacity(n + 1);
            for u in 0..n {
                line.clear();
                line.extend((0..n).map(|v| if dag.has_edge(u, v) { b'1' } else { b'0' }));
                line.push(b'\n');
                out.write_all(&line)?;
            }
        }
        OutputFormat::Dot => {
            writeln!(out, "digraph {{")?;
            for v in 1..=n {
                writeln!(out, "  {v};")?;
            }
            for (u, v) in dag.edges() {
                writeln!(out, "  {} -> {};", u + 1, v + 1)?;
            }
            writeln!(out, "}}")?;
        }
        OutputFormat::Json => {
            let record = JsonDag {
                n,
                edges: dag.edges().map(|(u, v)| [u + 1, v + 1]).collect(),
            };
            serde_json::to_writer(&mut *out, &record)?;
            writeln!(out)?;
        }
    }
    writeln!(out)
}

pub fn dag_to_string(dag: &Dag, format: OutputFormat) -> String {
    let mut buf = Vec::new();
    write_dag(&mut buf, dag, format).expect("writing to memory");
    String::from_utf8(buf).expect("formats are ASCII")
}

/// Streaming reader over records in any of the formats, detected per record.
/// Graphs are returned as read, cycles included.
pub struct DagReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> DagReader<R> {
    pub fn new(reader: R) -> Self {
        DagReader {
            lines: reader.lines(),
            line_no: 0,
        }
    }

    /// Next non-blank block of lines with the number of its first line.
    fn next_block(&mut self) -> Option<Result<(usize, Vec<String>)>> {
        let mut block = Vec::new();
        let mut start = 0;
        for line in self.lines.by_ref() {
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(parse_error(self.line_no, e.to_string()))),
            };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                if !block.is_empty() {
                    return Some(Ok((start, block)));
                }
                continue;
            }
            if block.is_empty() {
                start = self.line_no;
            }
            block.push(trimmed.to_string());
        }
        (!block.is_empty()).then_some(Ok((start, block)))
    }
}

impl<R: BufRead> Iterator for DagReader<R> {
    type Item = Result<Dag>;

    fn next(&mut self) -> Option<Result<Dag>> {
        let block = self.next_block()?;
        Some(block.and_then(|(start, lines)| parse_block(start, &lines)))
    }
}

/// Reads a whole stream.
pub fn parse_dags<R: BufRead>(reader: R) -> Result<Vec<Dag>> {
    DagReader::new(reader).collect()
}

pub fn parse_dag(text: &str) -> Result<Dag> {
    let mut dags = parse_dags(text.as_bytes())?;
    match dags.len() {
        1 => Ok(dags.remove(0)),
        k => Err(parse_error(1, format!("expected one graph, found {k}"))),
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_block(start: usize, lines: &[String]) -> Result<Dag> {
    let first = lines[0].as_str();
    if first.starts_with('#') {
        parse_edgelist(start, lines)
    } else if first.starts_with('{') {
        if lines.len() > 1 {
            return Err(parse_error(start + 1, "one JSON record per line"));
        }
        parse_json(start, first)
    } else if first.starts_with("digraph") {
        parse_dot(start, lines)
    } else {
        parse_matrix(start, lines)
    }
}

fn label(line: usize, s: &str, n: usize) -> Result<usize> {
    let v: usize = s
        .parse()
        .map_err(|_| parse_error(line, format!("bad vertex label {s:?}")))?;
    if v == 0 || v > n {
        return Err(parse_error(line, format!("vertex {v} outside 1..={n}")));
    }
    Ok(v - 1)
}

fn build(line: usize, n: usize, edges: Vec<(usize, usize)>) -> Result<Dag> {
    Dag::from_edges_unchecked(n, edges).map_err(|e| parse_error(line, e.to_string()))
}

fn parse_edgelist(start: usize, lines: &[String]) -> Result<Dag> {
    let n: usize = lines[0]
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|h| h.strip_prefix("n="))
        .and_then(|h| h.trim().parse().ok())
        .ok_or_else(|| parse_error(start, "expected header `# n=<N>`"))?;
    let mut edges = Vec::with_capacity(lines.len() - 1);
    for (i, l) in lines.iter().enumerate().skip(1) {
        let line = start + i;
        let mut parts = l.split_whitespace();
        let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_error(line, "expected `u v`"));
        };
        edges.push((label(line, u, n)?, label(line, v, n)?));
    }
    build(start, n, edges)
}

fn parse_matrix(start: usize, lines: &[String]) -> Result<Dag> {
    let n = lines.len();
    let mut edges = Vec::new();
    for (u, l) in lines.iter().enumerate() {
        if l.len() != n {
            return Err(parse_error(start + u, format!("matrix row has {} entries, expected {n}", l.len())));
        }
        for (v, c) in l.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => edges.push((u, v)),
                _ => return Err(parse_error(start + u, "matrix entries must be 0 or 1")),
            }
        }
    }
    build(start, n, edges)
}

fn parse_json(start: usize, line: &str) -> Result<Dag> {
    let record: JsonDag = serde_json::from_str(line).map_err(|e| parse_error(start, e.to_string()))?;
    let edges = record
        .edges
        .iter()
        .map(|[u, v]| Ok((label(start, &u.to_string(), record.n)?, label(start, &v.to_string(), record.n)?)))
        .collect::<Result<Vec<_>>>()?;
    build(start, record.n, edges)
}

fn parse_dot(start: usize, lines: &[String]) -> Result<Dag> {
    let body: Vec<(usize, &str)> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| (start + i, l.as_str()))
        .collect();
    let (first, rest) = body.split_first().expect("non-empty block");
    if first.1.trim_start_matches("digraph").trim() != "{" {
        return Err(parse_error(first.0, "expected `digraph {`"));
    }
    let Some(((last_no, last), stmts)) = rest.split_last() else {
        return Err(parse_error(first.0, "unterminated digraph"));
    };
    if *last != "}" {
        return Err(parse_error(*last_no, "expected closing `}`"));
    }
    let mut n = 0;
    let mut raw = Vec::new();
    for &(line, stmt) in stmts {
        let stmt = stmt
            .strip_suffix(';')
            .ok_or_else(|| parse_error(line, "statements end with `;`"))?
            .trim();
        let ids: Vec<&str> = stmt.split("->").map(str::trim).collect();
        let parse = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| parse_error(line, format!("bad node id {s:?}")))
        };
        match ids.as_slice() {
            [v] => n = n.max(parse(v)?),
            [u, v] => {
                let (u, v) = (parse(u)?, parse(v)?);
                n = n.max(u).max(v);
                raw.push((u - 1, v - 1));
            }
            _ => return Err(parse_error(line, "expected `v;` or `u -> v;`")),
        }
    }
    build(start, n, raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::build_count_table;
    use crate::rng::RandomSource;
    use crate::sample_exact::sample_uniform_dag;
    use proptest::prelude::*;

    fn example() -> Dag {
        Dag::from_edges(3, [(0, 1), (0, 2)]).unwrap()
    }

    #[test]
    fn exact_layouts() {
        let d = example();
        assert_eq!(dag_to_string(&d, OutputFormat::Edgelist), "# n=3\n1 2\n1 3\n\n");
        assert_eq!(dag_to_string(&d, OutputFormat::Matrix), "011\n000\n000\n\n");
        assert_eq!(dag_to_string(&d, OutputFormat::Json), "{\"n\":3,\"edges\":[[1,2],[1,3]]}\n\n");
        assert_eq!(
            dag_to_string(&d, OutputFormat::Dot),
            "digraph {\n  1;\n  2;\n  3;\n  1 -> 2;\n  1 -> 3;\n}\n\n"
        );
        assert_eq!(dag_to_string(&Dag::empty(1), OutputFormat::Edgelist), "# n=1\n\n");
    }

    #[test]
    fn mixed_stream() {
        let d = example();
        let mut text = String::new();
        for f in OutputFormat::ALL {
            text.push_str(&dag_to_string(&d, f));
        }
        let back = parse_dags(text.as_bytes()).unwrap();
        assert_eq!(back, vec![d; 4]);
    }

    #[test]
    fn keeps_cycles_for_checking() {
        let d = parse_dag("# n=2\n1 2\n2 1\n").unwrap();
        assert_eq!(d.edge_count(), 2);
        assert!(!crate::baselines::is_acyclic(&d));
    }

    #[test]
    fn reports_bad_input() {
        for bad in [
            "# n=2\n1 3\n",
            "# n=x\n",
            "# n=2\n1\n",
            "01\n0\n",
            "02\n00\n",
            "{\"n\":2,\"edges\":[[0,1]]}\n",
            "{\"n\":2}\n",
            "digraph {\n  1 -> 2\n}\n",
            "digraph {\n  1 -> 2;\n",
            "# n=2\n1 1\n",
        ] {
            assert!(matches!(parse_dags(bad.as_bytes()), Err(Error::Parse { .. })), "{bad:?}");
        }
        match parse_dags("# n=2\n\n# n=2\n1 5\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn format_names() {
        for f in OutputFormat::ALL {
            assert_eq!(f.name().parse::<OutputFormat>().unwrap(), f);
        }
        assert!("graphml".parse::<OutputFormat>().is_err());
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..70, seed in any::<u64>(), f in 0usize..4) {
            let table = build_count_table(70).unwrap();
            let d = sample_uniform_dag(n, &table, &mut RandomSource::seeded(seed)).unwrap();
            let text = dag_to_string(&d, OutputFormat::ALL[f]);
            prop_assert_eq!(parse_dag(&text).unwrap(), d);
        }
    }
}
