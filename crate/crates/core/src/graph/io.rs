//! Binary container and text edge lists.
//!
//! Binary layout (little endian): magic `SPEG`, `u32` version, `u64` vertex
//! count, `u64` edge count, then for every vertex its upper neighbors
//! (`v > u`) as a LEB128 count followed by LEB128 gaps (first gap from `u`).

use std::io::{BufRead, Read, Write};

use super::{GraphError, SparseGraph, Vertex};

const MAGIC: &[u8; 4] = b"SPEG";
const VERSION: u32 = 1;

fn write_varint(w: &mut impl Write, mut x: u64) -> std::io::Result<()> {
    loop {
        let byte = (x & 0x7f) as u8;
        x >>= 7;
        if x == 0 {
            return w.write_all(&[byte]);
        }
        w.write_all(&[byte | 0x80])?;
    }
}

fn read_varint(r: &mut impl Read) -> Result<u64, GraphError> {
    let mut x = 0u64;
    for shift in (0..64).step_by(7) {
        let mut b = [0u8];
        r.read_exact(&mut b)?;
        x |= u64::from(b[0] & 0x7f) << shift;
        if b[0] & 0x80 == 0 {
            return Ok(x);
        }
    }
    Err(GraphError::Format("varint overflow".into()))
}

pub fn write_binary(g: &SparseGraph, mut w: impl Write) -> Result<(), GraphError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.n_vertices() as u64).to_le_bytes())?;
    w.write_all(&(g.edge_count() as u64).to_le_bytes())?;
    for u in 0..g.n_vertices() as Vertex {
        let upper = g.neighbors(u).iter().filter(|&&v| v > u);
        write_varint(&mut w, upper.clone().count() as u64)?;
        let mut prev = u;
        for &v in upper {
            write_varint(&mut w, u64::from(v - prev))?;
            prev = v;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(mut r: impl Read) -> Result<SparseGraph, GraphError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(GraphError::Format("bad magic bytes".into()));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let version = u32::from_le_bytes(buf4);
    if version != VERSION {
        return Err(GraphError::Format(format!("unsupported version {version}")));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let n = u64::from_le_bytes(buf8);
    r.read_exact(&mut buf8)?;
    let m = u64::from_le_bytes(buf8);
    if n > u64::from(Vertex::MAX) {
        return Err(GraphError::Format(format!("vertex count {n} too large")));
    }
    let mut pairs = Vec::with_capacity(m.min(1 << 28) as usize);
    for u in 0..n {
        let count = read_varint(&mut r)?;
        let mut prev = u;
        for _ in 0..count {
            let gap = read_varint(&mut r)?;
            let v = prev.checked_add(gap).filter(|&v| gap > 0 && v < n);
            let v = v.ok_or(GraphError::InvalidEdge(u, prev.saturating_add(gap)))?;
            pairs.push((u as Vertex, v as Vertex));
            prev = v;
        }
    }
    if pairs.len() as u64 != m {
        return Err(GraphError::Format(format!("header says {m} edges, found {}", pairs.len())));
    }
    Ok(SparseGraph::from_sorted_pairs(n as usize, &pairs))
}

/// Writes `# vertices N` followed by one `u v` line per edge, `u < v`.
pub fn write_edge_list(g: &SparseGraph, mut w: impl Write) -> Result<(), GraphError> {
    writeln!(w, "# vertices {}", g.n_vertices())?;
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an edge list. Blank lines and `#` comments are skipped; a
/// `# vertices N` comment fixes the vertex count, otherwise it is one more
/// than the largest id seen.
pub fn read_edge_list(r: impl BufRead) -> Result<SparseGraph, GraphError> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            if it.next() == Some("vertices") {
                let n = it.next().and_then(|s| s.parse::<usize>().ok());
                declared = Some(n.ok_or_else(|| {
                    GraphError::Format(format!("line {}: bad vertex count", lineno + 1))
                })?);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<Vertex>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
            _ => return Err(GraphError::Format(format!("line {}: expected `u v`", lineno + 1))),
        }
    }
    let seen = edges.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0);
    let n = declared.unwrap_or(seen);
    SparseGraph::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_er, GraphConfig};

    #[test]
    fn binary_round_trip() {
        let g = sample_er(&GraphConfig::new(3000, 2.0, 5)).unwrap();
        let mut buf = Vec::new();
        write_binary(&g, &mut buf).unwrap();
        assert_eq!(read_binary(buf.as_slice()).unwrap(), g);
        buf[0] = b'X';
        assert!(read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn edge_list_round_trip_keeps_isolated_tail() {
        let g = SparseGraph::from_edges(6, [(0, 3), (1, 2)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf), "# vertices 6\n0 3\n1 2\n");
        assert_eq!(read_edge_list(buf.as_slice()).unwrap(), g);
        assert!(read_edge_list("0 1 2\n".as_bytes()).is_err());
    }
}
