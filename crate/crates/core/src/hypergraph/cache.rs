//! Binary graph cache.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic            4 bytes  "HCG1"
//! cutoff           i32      days since 0001-01-01 (CE), i32::MIN if unknown
//! node_count       u64
//! edge_count       u64
//! incidence_count  u64
//! token table      node_count x { kind: u8 (0 author, 1 concept), len: u32, utf-8 bytes }
//! node_offsets     (node_count + 1) x u64
//! node_edges       incidence_count x u32
//! edge_offsets     (edge_count + 1) x u64
//! edge_nodes       incidence_count x u32
//! ```
//!
//! Loading checks every count, offset and index, and that the two incidence
//! arrays describe the same structure.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use chrono::{Datelike, NaiveDate};

use super::{transpose, EdgeId, GraphError, Hypergraph, NodeId};
use crate::corpus::EntityKind;

pub const CACHE_MAGIC: &[u8; 4] = b"HCG1";
const NO_CUTOFF: i32 = i32::MIN;
// Upper bound on speculative preallocation while reading untrusted counts.
const PREALLOC_LIMIT: usize = 1 << 20;

pub fn write_cache<W: Write>(graph: &Hypergraph, mut out: W) -> Result<(), GraphError> {
    out.write_all(CACHE_MAGIC)?;
    let cutoff = graph.cutoff.map_or(NO_CUTOFF, |d| d.num_days_from_ce());
    out.write_i32::<LittleEndian>(cutoff)?;
    out.write_u64::<LittleEndian>(graph.node_count() as u64)?;
    out.write_u64::<LittleEndian>(graph.edge_count() as u64)?;
    out.write_u64::<LittleEndian>(graph.incidence_count() as u64)?;
    for (token, kind) in graph.tokens.iter().zip(&graph.kinds) {
        out.write_u8(match kind {
            EntityKind::Author => 0,
            EntityKind::Concept => 1,
        })?;
        out.write_u32::<LittleEndian>(token.len() as u32)?;
        out.write_all(token.as_bytes())?;
    }
    for &o in &graph.node_offsets {
        out.write_u64::<LittleEndian>(o as u64)?;
    }
    for &e in &graph.node_edges {
        out.write_u32::<LittleEndian>(e)?;
    }
    for &o in &graph.edge_offsets {
        out.write_u64::<LittleEndian>(o as u64)?;
    }
    for &v in &graph.edge_nodes {
        out.write_u32::<LittleEndian>(v)?;
    }
    out.flush()?;
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> GraphError {
    GraphError::Corrupt(msg.into())
}

fn read_count<R: Read>(input: &mut R, what: &str) -> Result<usize, GraphError> {
    let n = input.read_u64::<LittleEndian>()?;
    usize::try_from(n).map_err(|_| corrupt(format!("{what} count {n} too large")))
}

fn read_offsets<R: Read>(
    input: &mut R,
    rows: usize,
    total: usize,
    what: &str,
) -> Result<Vec<usize>, GraphError> {
    let mut offsets = Vec::with_capacity((rows + 1).min(PREALLOC_LIMIT));
    let mut prev = 0usize;
    for i in 0..=rows {
        let o = input.read_u64::<LittleEndian>()? as usize;
        if (i == 0 && o != 0) || o < prev || o > total {
            return Err(corrupt(format!("{what} offsets are not monotone within 0..={total}")));
        }
        prev = o;
        offsets.push(o);
    }
    if prev != total {
        return Err(corrupt(format!("{what} offsets end at {prev}, expected {total}")));
    }
    Ok(offsets)
}

fn read_indices<R: Read>(
    input: &mut R,
    len: usize,
    bound: usize,
    what: &str,
) -> Result<Vec<u32>, GraphError> {
    let mut out = Vec::with_capacity(len.min(PREALLOC_LIMIT));
    for _ in 0..len {
        let v = input.read_u32::<LittleEndian>()?;
        if v as usize >= bound {
            return Err(corrupt(format!("{what} index {v} out of range {bound}")));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_cache<R: Read>(mut input: R) -> Result<Hypergraph, GraphError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(GraphError::BadMagic);
    }
    let cutoff = match input.read_i32::<LittleEndian>()? {
        NO_CUTOFF => None,
        days => Some(
            NaiveDate::from_num_days_from_ce_opt(days)
                .ok_or_else(|| corrupt(format!("invalid cutoff day {days}")))?,
        ),
    };
    let nodes = read_count(&mut input, "node")?;
    let edges = read_count(&mut input, "edge")?;
    let incidences = read_count(&mut input, "incidence")?;

    let mut tokens: Vec<String> = Vec::with_capacity(nodes.min(PREALLOC_LIMIT));
    let mut kinds = Vec::with_capacity(nodes.min(PREALLOC_LIMIT));
    for _ in 0..nodes {
        kinds.push(match input.read_u8()? {
            0 => EntityKind::Author,
            1 => EntityKind::Concept,
            k => return Err(corrupt(format!("unknown entity kind {k}"))),
        });
        let len = input.read_u32::<LittleEndian>()? as usize;
        let mut buf = Vec::with_capacity(len.min(PREALLOC_LIMIT));
        (&mut input).take(len as u64).read_to_end(&mut buf)?;
        if buf.len() != len {
            return Err(corrupt("truncated token table"));
        }
        let token = String::from_utf8(buf).map_err(|_| corrupt("token is not utf-8"))?;
        if let Some(prev) = tokens.last() {
            if *prev >= token {
                return Err(corrupt("token table is not strictly sorted"));
            }
        }
        tokens.push(token);
    }

    let node_offsets = read_offsets(&mut input, nodes, incidences, "node")?;
    let node_edges: Vec<EdgeId> = read_indices(&mut input, incidences, edges, "edge")?;
    let edge_offsets = read_offsets(&mut input, edges, incidences, "edge")?;
    let edge_nodes: Vec<NodeId> = read_indices(&mut input, incidences, nodes, "node")?;

    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(corrupt("trailing bytes after edge table"));
    }
    for e in 0..edges {
        let members = &edge_nodes[edge_offsets[e]..edge_offsets[e + 1]];
        if members.is_empty() {
            return Err(corrupt(format!("hyperedge {e} is empty")));
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(corrupt(format!("hyperedge {e} members not strictly sorted")));
        }
    }
    let (expect_offsets, expect_edges) = transpose(nodes, &edge_offsets, &edge_nodes);
    if expect_offsets != node_offsets || expect_edges != node_edges {
        return Err(corrupt("node and edge incidence lists disagree"));
    }

    Ok(Hypergraph::from_parts(
        tokens,
        kinds,
        node_offsets,
        node_edges,
        edge_offsets,
        edge_nodes,
        cutoff,
    ))
}
