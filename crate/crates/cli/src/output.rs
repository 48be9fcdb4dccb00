//! File writers. CSVs are UTF-8 with LF endings and fixed column order.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<S>>) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(AsRef::as_ref))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// One validated edge as written to GraphML.
pub struct GraphEdge<'a> {
    pub source: &'a str,
    pub target: &'a str,
    pub observed: usize,
    pub p_value: f64,
}

pub fn graphml(nodes: &[String], edges: &[GraphEdge<'_>]) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key id=\"observed\" for=\"edge\" attr.name=\"observed_shared\" attr.type=\"int\"/>\n");
    s.push_str("  <key id=\"pvalue\" for=\"edge\" attr.name=\"p_value\" attr.type=\"double\"/>\n");
    s.push_str("  <graph id=\"projection\" edgedefault=\"undirected\">\n");
    for n in nodes {
        let _ = writeln!(s, "    <node id=\"{}\"/>", xml_escape(n));
    }
    for e in edges {
        let _ = writeln!(
            s,
            "    <edge source=\"{}\" target=\"{}\"><data key=\"observed\">{}</data><data key=\"pvalue\">{}</data></edge>",
            xml_escape(e.source),
            xml_escape(e.target),
            e.observed,
            e.p_value
        );
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}
