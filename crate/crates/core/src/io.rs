//! Graph readers and invariant writers.
//!
//! # Edge list
//!
//! UTF-8 text, one edge per line as `u v` or `u v w` (whitespace separated,
//! 0-based ids, weight defaults to 1). Lines starting with `#` are comments.
//! An optional `%n <count>` line fixes the vertex count; otherwise it is one
//! more than the largest id.
//!
//! # Matrix Market
//!
//! `coordinate` matrices with `real`, `integer` or `pattern` entries and
//! `general` or `symmetric` structure. Indices are 1-based on disk.
//!
//! # CSV
//!
//! Invariant tables start with a header row and hold one row per vertex.
//! Reals are written in the shortest form that parses back to the same
//! `f64` (at most 17 significant digits).
//!
//! # GLCV
//!
//! A little-endian binary vector:
//!
//! | offset | size | field |
//! |--------|------|-------|
//! | 0      | 4    | magic `GLCV` (`47 4C 43 56`) |
//! | 4      | 1    | version, `1` |
//! | 5      | 1    | dtype: `0` = f64, `1` = u64 |
//! | 6      | 6    | reserved, zero |
//! | 12     | 8    | element count (u64) |
//! | 20     | 8·count | payload |

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SparseGraph, WeightedEdgeList};
use crate::invariants::{InvariantBundle, LatentPositionMatrix};

pub const GLCV_MAGIC: [u8; 4] = *b"GLCV";
pub const GLCV_VERSION: u8 = 1;
pub const GLCV_HEADER_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormatKind {
    #[serde(rename = "edgelist")]
    EdgeList,
    #[serde(rename = "matrixmarket")]
    MatrixMarket,
    #[serde(rename = "csv")]
    CsvInvariants,
    #[serde(rename = "glcv")]
    GlcvBinary,
}

impl FormatKind {
    pub fn name(self) -> &'static str {
        match self {
            FormatKind::EdgeList => "edgelist",
            FormatKind::MatrixMarket => "matrixmarket",
            FormatKind::CsvInvariants => "csv",
            FormatKind::GlcvBinary => "glcv",
        }
    }

    pub fn is_graph(self) -> bool {
        matches!(self, FormatKind::EdgeList | FormatKind::MatrixMarket)
    }
}

impl FromStr for FormatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "edgelist" | "edges" | "el" => Ok(FormatKind::EdgeList),
            "matrixmarket" | "mtx" | "mm" => Ok(FormatKind::MatrixMarket),
            "csv" => Ok(FormatKind::CsvInvariants),
            "glcv" => Ok(FormatKind::GlcvBinary),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatDescriptor {
    pub kind: FormatKind,
    pub version: u32,
}

impl FormatDescriptor {
    pub fn new(kind: FormatKind) -> Self {
        let version = match kind {
            FormatKind::GlcvBinary => GLCV_VERSION as u32,
            _ => 1,
        };
        FormatDescriptor { kind, version }
    }
}

/// Guess a graph format from the leading bytes: a MatrixMarket banner or
/// else an edge list.
pub fn detect_graph_format(head: &[u8]) -> FormatKind {
    let head = &head[..head.len().min(14)];
    if head.eq_ignore_ascii_case(b"%%MatrixMarket") {
        FormatKind::MatrixMarket
    } else {
        FormatKind::EdgeList
    }
}

/// Read a graph in the given text format.
pub fn read_graph<R: BufRead>(source: R, kind: FormatKind) -> Result<WeightedEdgeList> {
    match kind {
        FormatKind::EdgeList => read_edge_list(source),
        FormatKind::MatrixMarket => read_matrix_market(source),
        other => Err(Error::InvalidArgument(format!("{other} is not a graph format"))),
    }
}

pub fn read_edge_list<R: BufRead>(source: R) -> Result<WeightedEdgeList> {
    let mut declared_n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('%') {
            let mut tokens = rest.split_whitespace();
            match (tokens.next(), tokens.next(), tokens.next()) {
                (Some("n"), Some(count), None) if declared_n.is_none() => {
                    declared_n = Some(parse_id(count, lineno)?);
                }
                (Some("n"), _, _) if declared_n.is_some() => {
                    return Err(Error::parse(lineno, "duplicate %n header"));
                }
                _ => return Err(Error::parse(lineno, format!("unrecognized directive '{line}'"))),
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 && tokens.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 'u v' or 'u v w', found {} fields", tokens.len()),
            ));
        }
        let u = parse_id(tokens[0], lineno)?;
        let v = parse_id(tokens[1], lineno)?;
        let w = match tokens.get(2) {
            Some(tok) => parse_weight(tok, lineno)?,
            None => 1.0,
        };
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, w));
    }
    let n = match (declared_n, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(Error::VertexOutOfRange { id: m, n });
        }
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    Ok(WeightedEdgeList { n, edges })
}

fn parse_id(token: &str, line: usize) -> Result<usize> {
    if token.starts_with('-') {
        return Err(Error::parse(line, format!("negative vertex id '{token}'")));
    }
    token
        .parse::<usize>()
        .map_err(|_| Error::parse(line, format!("invalid vertex id '{token}'")))
}

fn parse_weight(token: &str, line: usize) -> Result<f64> {
    let w: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid weight '{token}'")))?;
    if !(w >= 0.0) || !w.is_finite() {
        return Err(Error::parse(line, format!("weight must be a non-negative number, got '{token}'")));
    }
    Ok(w)
}

/// Edge list with a `%n` header; every entry written as `u v w`.
pub fn write_edge_list<W: Write>(list: &WeightedEdgeList, mut sink: W) -> Result<()> {
    writeln!(sink, "%n {}", list.n)?;
    for &(u, v, w) in &list.edges {
        writeln!(sink, "{u} {v} {}", render_real(w))?;
    }
    Ok(())
}

/// Unweighted edge list of a built graph, each edge once as `u v` with `u < v`.
pub fn write_graph_edge_list<W: Write>(g: &SparseGraph, mut sink: W) -> Result<()> {
    writeln!(sink, "%n {}", g.n())?;
    for (u, v) in g.edges() {
        writeln!(sink, "{u} {v}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MmField {
    Real,
    Pattern,
}

pub fn read_matrix_market<R: BufRead>(source: R) -> Result<WeightedEdgeList> {
    let mut lines = source.lines().enumerate();
    let banner = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::parse(1, "empty input; expected a MatrixMarket banner")),
    };
    let words: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.first().map(String::as_str) != Some("%%matrixmarket") || words.len() != 5 {
        return Err(Error::parse(1, "missing '%%MatrixMarket' banner"));
    }
    if words[1] != "matrix" || words[2] != "coordinate" {
        return Err(Error::Format(format!(
            "unsupported MatrixMarket layout '{} {}': only 'matrix coordinate' is accepted",
            words[1], words[2]
        )));
    }
    let field = match words[3].as_str() {
        "real" | "integer" => MmField::Real,
        "pattern" => MmField::Pattern,
        other => return Err(Error::Format(format!("unsupported MatrixMarket field '{other}'"))),
    };
    // Either triangle is accepted for `symmetric`; each stored entry is one
    // undirected edge, so the structure only matters for validation.
    match words[4].as_str() {
        "general" | "symmetric" => {}
        other => return Err(Error::Format(format!("unsupported MatrixMarket symmetry '{other}'"))),
    }

    let mut size: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let Some((n, nnz)) = size else {
            if tokens.len() != 3 {
                return Err(Error::parse(lineno, "expected size line 'rows cols entries'"));
            }
            let rows = parse_id(tokens[0], lineno)?;
            let cols = parse_id(tokens[1], lineno)?;
            let nnz = parse_id(tokens[2], lineno)?;
            if rows != cols {
                return Err(Error::Format(format!(
                    "adjacency must be square, got {rows} x {cols}"
                )));
            }
            size = Some((rows, nnz));
            edges.reserve(nnz);
            continue;
        };
        let expected_fields = if field == MmField::Pattern { 2 } else { 3 };
        if tokens.len() != expected_fields {
            return Err(Error::parse(
                lineno,
                format!("expected {expected_fields} fields, found {}", tokens.len()),
            ));
        }
        if edges.len() == nnz {
            return Err(Error::Format(format!(
                "more entries than the {nnz} declared (line {lineno})"
            )));
        }
        let i = parse_id(tokens[0], lineno)?;
        let j = parse_id(tokens[1], lineno)?;
        for idx in [i, j] {
            if idx == 0 || idx > n {
                return Err(Error::parse(
                    lineno,
                    format!("index {idx} outside declared bounds 1..={n}"),
                ));
            }
        }
        let w = match field {
            MmField::Pattern => 1.0,
            MmField::Real => parse_weight(tokens[2], lineno)?,
        };
        edges.push((i - 1, j - 1, w));
    }
    let Some((n, nnz)) = size else {
        return Err(Error::Format("missing MatrixMarket size line".into()));
    };
    if edges.len() != nnz {
        return Err(Error::Format(format!(
            "declared {nnz} entries but found {}",
            edges.len()
        )));
    }
    Ok(WeightedEdgeList { n, edges })
}

/// Symmetric coordinate Matrix Market. Reciprocal entries are summed into
/// one lower-triangle entry, matching how `SparseGraph::build` merges them.
pub fn write_matrix_market<W: Write>(list: &WeightedEdgeList, mut sink: W) -> Result<()> {
    let merged = list.merged_pairs();
    let pattern = merged.iter().all(|p| p.2 == 1.0)
        && list.edges.len() == merged.len();
    let field = if pattern { "pattern" } else { "real" };
    writeln!(sink, "%%MatrixMarket matrix coordinate {field} symmetric")?;
    writeln!(sink, "{} {} {}", list.n, list.n, merged.len())?;
    for (u, v, w) in merged {
        // merged pairs have u <= v; the lower triangle wants row >= col.
        if pattern {
            writeln!(sink, "{} {}", v + 1, u + 1)?;
        } else {
            writeln!(sink, "{} {} {}", v + 1, u + 1, render_real(w))?;
        }
    }
    Ok(())
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn render_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("invalid number '{s}'")))
}

/// `vertex,degree,ss1,nl3,cc` with one row per vertex; invariants that were
/// not computed leave their cells empty.
pub fn write_invariants_csv<W: Write>(bundle: &InvariantBundle, mut sink: W) -> Result<()> {
    writeln!(sink, "vertex,degree,ss1,nl3,cc")?;
    let columns = [&bundle.degree, &bundle.ss1, &bundle.nl3, &bundle.cc];
    for v in 0..bundle.n {
        write!(sink, "{v}")?;
        for col in columns {
            match col {
                Some(vec) => write!(sink, ",{}", render_real(vec.values[v]))?,
                None => write!(sink, ",")?,
            }
        }
        writeln!(sink)?;
    }
    Ok(())
}

/// `vertex,lp_0,…,lp_{k-1}`.
pub fn write_latent_csv<W: Write>(lp: &LatentPositionMatrix, mut sink: W) -> Result<()> {
    write!(sink, "vertex")?;
    for j in 0..lp.k {
        write!(sink, ",lp_{j}")?;
    }
    writeln!(sink)?;
    for (v, row) in lp.rows.iter().enumerate() {
        write!(sink, "{v}")?;
        for x in row {
            write!(sink, ",{}", render_real(*x))?;
        }
        writeln!(sink)?;
    }
    Ok(())
}

/// Two-column `vertex,<name>` table.
pub fn write_vector_csv<W: Write>(name: &str, values: &GlcvVector, mut sink: W) -> Result<()> {
    writeln!(sink, "vertex,{name}")?;
    match values {
        GlcvVector::F64(xs) => {
            for (v, x) in xs.iter().enumerate() {
                writeln!(sink, "{v},{}", render_real(*x))?;
            }
        }
        GlcvVector::U64(xs) => {
            for (v, x) in xs.iter().enumerate() {
                writeln!(sink, "{v},{x}")?;
            }
        }
    }
    Ok(())
}

/// Read a two-column `vertex,<name>` table; returns the column name and
/// values. Vertex ids must run 0, 1, 2, ….
pub fn read_vector_csv<R: BufRead>(source: R) -> Result<(String, Vec<f64>)> {
    let mut lines = source.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::parse(1, "empty CSV; expected a header row")),
    };
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() != 2 || cols[0].trim() != "vertex" {
        return Err(Error::parse(1, "expected header 'vertex,<name>'"));
    }
    let name = cols[1].trim().to_string();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (vertex, value) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(lineno, "expected 'vertex,value'"))?;
        let vertex = parse_id(vertex.trim(), lineno)?;
        if vertex != values.len() {
            return Err(Error::parse(
                lineno,
                format!("expected vertex {}, found {vertex}", values.len()),
            ));
        }
        let value = value
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::parse(lineno, format!("invalid number '{value}'")))?;
        values.push(value);
    }
    Ok((name, values))
}

#[derive(Debug, Clone, PartialEq)]
pub enum GlcvVector {
    F64(Vec<f64>),
    U64(Vec<u64>),
}

impl GlcvVector {
    pub fn len(&self) -> usize {
        match self {
            GlcvVector::F64(v) => v.len(),
            GlcvVector::U64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dtype(&self) -> u8 {
        match self {
            GlcvVector::F64(_) => 0,
            GlcvVector::U64(_) => 1,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            GlcvVector::F64(v) => v.clone(),
            GlcvVector::U64(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    /// `U64` when `integral` is set and every value is a non-negative integer
/// below 2⁵³ (`-0.0` excluded), else `F64`.
    pub fn from_values(values: Vec<f64>, integral: bool) -> Self {
        const EXACT: f64 = 9_007_199_254_740_992.0;
        if integral
            && values
                .iter()
                .all(|&x| x.is_sign_positive() && x < EXACT && x.fract() == 0.0)
        {
            GlcvVector::U64(values.into_iter().map(|x| x as u64).collect())
        } else {
            GlcvVector::F64(values)
        }
    }
}

pub fn write_glcv<W: Write>(values: &GlcvVector, mut sink: W) -> Result<()> {
    let mut header = [0u8; GLCV_HEADER_LEN];
    header[..4].copy_from_slice(&GLCV_MAGIC);
    header[4] = GLCV_VERSION;
    header[5] = values.dtype();
    header[12..20].copy_from_slice(&(values.len() as u64).to_le_bytes());
    sink.write_all(&header)?;
    let mut payload = Vec::with_capacity(values.len() * 8);
    match values {
        GlcvVector::F64(xs) => xs.iter().for_each(|x| payload.extend_from_slice(&x.to_le_bytes())),
        GlcvVector::U64(xs) => xs.iter().for_each(|x| payload.extend_from_slice(&x.to_le_bytes())),
    }
    sink.write_all(&payload)?;
    Ok(())
}

pub fn read_glcv<R: Read>(mut source: R) -> Result<GlcvVector> {
    let mut header = [0u8; GLCV_HEADER_LEN];
    source
        .read_exact(&mut header)
        .map_err(|_| Error::Format("truncated GLCV header".into()))?;
    if header[..4] != GLCV_MAGIC {
        return Err(Error::Format("bad magic: not a GLCV file".into()));
    }
    if header[4] != GLCV_VERSION {
        return Err(Error::Format(format!("unsupported GLCV version {}", header[4])));
    }
    let dtype = header[5];
    if dtype > 1 {
        return Err(Error::Format(format!("unknown GLCV dtype {dtype}")));
    }
    if header[6..12].iter().any(|&b| b != 0) {
        return Err(Error::Format("GLCV reserved bytes must be zero".into()));
    }
    let count = u64::from_le_bytes(header[12..20].try_into().expect("8 bytes"));
    let expected = count
        .checked_mul(8)
        .ok_or_else(|| Error::Format(format!("GLCV count {count} too large")))?;
    let mut payload = Vec::new();
    source.by_ref().take(expected).read_to_end(&mut payload)?;
    if (payload.len() as u64) < expected {
        return Err(Error::Format(format!(
            "truncated GLCV payload: expected {expected} bytes, found {}",
            payload.len()
        )));
    }
    let mut extra = [0u8; 1];
    if source.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after GLCV payload".into()));
    }
    let words = payload.chunks_exact(8).map(|c| c.try_into().expect("8 bytes"));
    Ok(match dtype {
        0 => GlcvVector::F64(words.map(f64::from_le_bytes).collect()),
        _ => GlcvVector::U64(words.map(u64::from_le_bytes).collect()),
    })
}

/// Convert between the supported format pairs: GLCV and CSV vectors in
/// either direction, edge list and Matrix Market in either direction.
/// `column` names the value column when writing CSV.
pub fn convert(input: &[u8], from: FormatKind, to: FormatKind, column: &str) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match (from, to) {
        (FormatKind::GlcvBinary, FormatKind::CsvInvariants) => {
            write_vector_csv(column, &read_glcv(input)?, &mut out)?;
        }
        (FormatKind::CsvInvariants, FormatKind::GlcvBinary) => {
            let (_, values) = read_vector_csv(input)?;
            write_glcv(&GlcvVector::from_values(values, true), &mut out)?;
        }
        (FormatKind::EdgeList, FormatKind::MatrixMarket) => {
            write_matrix_market(&read_edge_list(input)?, &mut out)?;
        }
        (FormatKind::MatrixMarket, FormatKind::EdgeList) => {
            write_edge_list(&read_matrix_market(input)?, &mut out)?;
        }
        (from, to) => {
            return Err(Error::InvalidArgument(format!(
                "unsupported conversion {from} -> {to}"
            )))
        }
    }
    Ok(out)
}
