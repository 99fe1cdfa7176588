//! Edge-list snapshot: one JSON header line, then `source target count` lines.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::EndorsementGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphHeader {
    pub vertices: usize,
    pub edges: usize,
    pub threshold: u64,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub fn write_graph_snapshot<W: Write>(
    graph: &EndorsementGraph,
    seed: Option<u64>,
    mut out: W,
) -> Result<()> {
    let header = GraphHeader {
        vertices: graph.num_vertices(),
        edges: graph.num_edges(),
        threshold: graph.threshold(),
        seed,
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for edge in graph.edges() {
        writeln!(
            out,
            "{} {} {}",
            graph.user(edge.source),
            graph.user(edge.target),
            edge.count
        )?;
    }
    Ok(())
}

pub fn read_graph_snapshot<R: BufRead>(input: R) -> Result<(GraphHeader, EndorsementGraph)> {
    let mut lines = input.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::malformed("graph snapshot", "missing header"))??;
    let header: GraphHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::malformed("graph snapshot", format!("header: {e}")))?;

    let mut edges = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |detail: &str| Error::malformed("graph snapshot", format!("line {}: {detail}", n + 2));
        let mut fields = line.split_whitespace();
        let (Some(source), Some(target), Some(count), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(bad("expected `source target count`"));
        };
        let count: u64 = count.parse().map_err(|_| bad("count is not an integer"))?;
        edges.push((source.to_string(), target.to_string(), count));
    }
    let graph = EndorsementGraph::from_edges(header.threshold, edges)?;
    if graph.num_vertices() != header.vertices || graph.num_edges() != header.edges {
        return Err(Error::malformed(
            "graph snapshot",
            format!(
                "header declares {} vertices / {} edges, body has {} / {}",
                header.vertices,
                header.edges,
                graph.num_vertices(),
                graph.num_edges()
            ),
        ));
    }
    Ok((header, graph))
}
