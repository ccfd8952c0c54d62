//! Bit-exact text formats: DIMACS CNF in, and line-based grammars for
//! partial-orientation instances, path-packing instances, and the two
//! certificate kinds.
//!
//! All writers emit UTF-8 with LF line endings and ids in ascending order,
//! so `parse(write(x)) == x` holds byte-for-byte on the writer's output.
//! Parsers are total on adversarial input: malformed text yields a
//! structured error, never a panic.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{
    DegreeSpec, EdgeId, EdgeState, MedepInstance, Multigraph, Orientation,
    PartialOrientationInstance, PathPacking, VertexId,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("syntax error on line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("clause {index} has more than 3 literals")]
    ClauseTooLong { index: usize },
    #[error("header mismatch: {msg}")]
    HeaderMismatch { msg: String },
    #[error("self-loop on line {line}")]
    SelfLoop { line: usize },
    #[error("s equals t")]
    SEqualsT,
    #[error("k must be positive")]
    KMustBePositive,
    #[error("duplicate record for edge {0}")]
    DuplicateEdgeRecord(EdgeId),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// A 3-CNF formula. Every clause holds exactly three literals; a literal is
/// a signed 1-based variable index and repetition within a clause is allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<[i32; 3]>,
}

impl CnfFormula {
    pub fn new(num_vars: u32, clauses: Vec<[i32; 3]>) -> Self {
        CnfFormula { num_vars, clauses }
    }

    /// Number of positive and negative occurrences of each variable,
    /// indexed by variable - 1.
    pub fn occurrence_counts(&self) -> Vec<(u32, u32)> {
        let mut counts = vec![(0u32, 0u32); self.num_vars as usize];
        for clause in &self.clauses {
            for &lit in clause {
                let var = lit.unsigned_abs() as usize - 1;
                if lit > 0 {
                    counts[var].0 += 1;
                } else {
                    counts[var].1 += 1;
                }
            }
        }
        counts
    }

    pub fn evaluate(&self, assignment: &Assignment) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let value = assignment.get(lit.unsigned_abs());
                if lit > 0 {
                    value
                } else {
                    !value
                }
            })
        })
    }
}

/// Total truth assignment over a formula's variables (1-based access).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn get(&self, var: u32) -> bool {
        self.values[(var - 1) as usize]
    }
}

/// Parses DIMACS CNF. Clauses with one or two literals are padded by
/// repeating the last literal; clauses with more than three are rejected.
pub fn parse_cnf(text: &str) -> Result<CnfFormula, FormatError> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses: Vec<[i32; 3]> = Vec::new();
    let mut pending: Vec<i32> = Vec::new();
    let mut pending_line = 0usize;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(syntax(lineno, "duplicate header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(syntax(lineno, "expected `p cnf <vars> <clauses>`"));
            }
            let vars: u32 = parts[2]
                .parse()
                .map_err(|_| syntax(lineno, "bad variable count"))?;
            let ncls: usize = parts[3]
                .parse()
                .map_err(|_| syntax(lineno, "bad clause count"))?;
            header = Some((vars, ncls));
            continue;
        }
        let (num_vars, _) = header.ok_or_else(|| syntax(lineno, "clause before header"))?;
        for tok in line.split_whitespace() {
            let lit: i32 = tok
                .parse()
                .map_err(|_| syntax(lineno, format!("bad literal `{tok}`")))?;
            if lit == 0 {
                clauses.push(finish_clause(&pending, clauses.len(), pending_line)?);
                pending.clear();
            } else {
                if pending.is_empty() {
                    pending_line = lineno;
                }
                let var = lit.unsigned_abs();
                if var > num_vars {
                    return Err(syntax(lineno, format!("literal {lit} out of range")));
                }
                pending.push(lit);
            }
        }
    }
    if !pending.is_empty() {
        return Err(syntax(pending_line, "clause not terminated by 0"));
    }
    let (num_vars, ncls) = header.ok_or_else(|| syntax(1, "missing `p cnf` header"))?;
    if clauses.len() != ncls {
        return Err(FormatError::HeaderMismatch {
            msg: format!("header declares {} clauses, found {}", ncls, clauses.len()),
        });
    }
    Ok(CnfFormula::new(num_vars, clauses))
}

fn finish_clause(lits: &[i32], index: usize, line: usize) -> Result<[i32; 3], FormatError> {
    match lits.len() {
        0 => Err(syntax(line.max(1), "empty clause")),
        1 => Ok([lits[0], lits[0], lits[0]]),
        2 => Ok([lits[0], lits[1], lits[1]]),
        3 => Ok([lits[0], lits[1], lits[2]]),
        _ => Err(FormatError::ClauseTooLong { index }),
    }
}

pub fn write_cnf(formula: &CnfFormula) -> String {
    let mut out = String::new();
    writeln!(out, "p cnf {} {}", formula.num_vars, formula.clauses.len()).unwrap();
    for clause in &formula.clauses {
        writeln!(out, "{} {} {} 0", clause[0], clause[1], clause[2]).unwrap();
    }
    out
}

/// A parsed partial-orientation instance plus non-fatal validation warnings
/// (the sum invariant is flagged here, not enforced; checkers re-verify).
#[derive(Debug, Clone)]
pub struct ParsedPo {
    pub instance: PartialOrientationInstance,
    pub warnings: Vec<String>,
}

/// Writes the `po` grammar: a header, one `v` record per vertex and one `e`
/// record per edge, in id order.
pub fn write_po(instance: &PartialOrientationInstance) -> String {
    let mut out = String::new();
    let graph = &instance.graph;
    writeln!(out, "po {} {}", graph.num_vertices(), graph.num_edges()).unwrap();
    for v in graph.vertices() {
        let s = instance.spec(v);
        writeln!(out, "v {} {} {} {}", v, s.rho, s.delta, s.theta).unwrap();
    }
    for e in graph.edges() {
        let (a, b) = graph.endpoints(e);
        writeln!(out, "e {} {} {}", e, a, b).unwrap();
    }
    out
}

/// Shared line scanner: strips `#` comments and blank lines, yielding
/// (line number, tokens).
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(idx, raw)| {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            None
        } else {
            Some((idx + 1, toks))
        }
    })
}

fn parse_u32(tok: &str, line: usize, what: &str) -> Result<u32, FormatError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("bad {what} `{tok}`")))
}

/// Parses vertex and edge records shared by the `po` and gadget grammars.
/// Returns the graph, the specs, and any sum warnings.
pub(crate) fn parse_po_body<'a, I>(
    num_vertices: usize,
    num_edges: usize,
    lines: I,
) -> Result<ParsedPo, FormatError>
where
    I: Iterator<Item = (usize, Vec<&'a str>)>,
{
    let mut specs: Vec<Option<DegreeSpec>> = vec![None; num_vertices];
    let mut graph = Multigraph::new(num_vertices);
    let mut next_edge = 0u32;

    for (line, toks) in lines {
        match toks[0] {
            "v" => {
                if toks.len() != 5 {
                    return Err(syntax(line, "expected `v <id> <rho> <delta> <theta>`"));
                }
                let id = parse_u32(toks[1], line, "vertex id")? as usize;
                if id >= num_vertices {
                    return Err(syntax(line, format!("vertex id {id} out of range")));
                }
                if specs[id].is_some() {
                    return Err(syntax(line, format!("duplicate vertex record {id}")));
                }
                specs[id] = Some(DegreeSpec::new(
                    parse_u32(toks[2], line, "rho")?,
                    parse_u32(toks[3], line, "delta")?,
                    parse_u32(toks[4], line, "theta")?,
                ));
            }
            "e" => {
                if toks.len() != 4 {
                    return Err(syntax(line, "expected `e <id> <a> <b>`"));
                }
                let id = parse_u32(toks[1], line, "edge id")?;
                if id != next_edge {
                    return Err(syntax(
                        line,
                        format!("edge ids must be dense and ascending, expected {next_edge}"),
                    ));
                }
                let a = VertexId(parse_u32(toks[2], line, "endpoint")?);
                let b = VertexId(parse_u32(toks[3], line, "endpoint")?);
                if a == b {
                    return Err(FormatError::SelfLoop { line });
                }
                if a.index() >= num_vertices || b.index() >= num_vertices {
                    return Err(syntax(line, "endpoint out of range"));
                }
                graph.add_edge(a, b).expect("validated above");
                next_edge += 1;
            }
            other => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
    }

    if next_edge as usize != num_edges {
        return Err(FormatError::HeaderMismatch {
            msg: format!("header declares {num_edges} edges, found {next_edge}"),
        });
    }
    let mut resolved = Vec::with_capacity(num_vertices);
    for (id, spec) in specs.into_iter().enumerate() {
        resolved.push(spec.ok_or_else(|| FormatError::HeaderMismatch {
            msg: format!("missing vertex record {id}"),
        })?);
    }

    let instance = PartialOrientationInstance::new_unchecked(graph, resolved)
        .expect("spec count matches by construction");
    let mut warnings = Vec::new();
    if let Err(err) = instance.validate_sums() {
        warnings.push(format!("{err}"));
    }
    Ok(ParsedPo { instance, warnings })
}

pub fn parse_po(text: &str) -> Result<ParsedPo, FormatError> {
    let mut lines = records(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| syntax(1, "missing `po` header"))?;
    if header.len() != 3 || header[0] != "po" {
        return Err(syntax(line, "expected `po <numVertices> <numEdges>`"));
    }
    let nv = parse_u32(header[1], line, "vertex count")? as usize;
    let ne = parse_u32(header[2], line, "edge count")? as usize;
    parse_po_body(nv, ne, lines)
}

pub fn write_medep(instance: &MedepInstance) -> String {
    let mut out = String::new();
    let graph = &instance.graph;
    writeln!(
        out,
        "medep {} {} {} {} {}",
        graph.num_vertices(),
        graph.num_edges(),
        instance.s,
        instance.t,
        instance.k
    )
    .unwrap();
    for e in graph.edges() {
        let (a, b) = graph.endpoints(e);
        writeln!(out, "e {} {} {}", e, a, b).unwrap();
    }
    out
}

pub fn parse_medep(text: &str) -> Result<MedepInstance, FormatError> {
    let mut lines = records(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| syntax(1, "missing `medep` header"))?;
    if header.len() != 6 || header[0] != "medep" {
        return Err(syntax(
            hline,
            "expected `medep <numVertices> <numEdges> <s> <t> <k>`",
        ));
    }
    let nv = parse_u32(header[1], hline, "vertex count")? as usize;
    let ne = parse_u32(header[2], hline, "edge count")? as usize;
    let s = VertexId(parse_u32(header[3], hline, "s")?);
    let t = VertexId(parse_u32(header[4], hline, "t")?);
    let k = parse_u32(header[5], hline, "k")?;
    if s == t {
        return Err(FormatError::SEqualsT);
    }
    if k == 0 {
        return Err(FormatError::KMustBePositive);
    }
    if s.index() >= nv || t.index() >= nv {
        return Err(syntax(hline, "s or t out of range"));
    }

    let mut graph = Multigraph::new(nv);
    let mut next_edge = 0u32;
    for (line, toks) in lines {
        if toks[0] != "e" || toks.len() != 4 {
            return Err(syntax(line, "expected `e <id> <a> <b>`"));
        }
        let id = parse_u32(toks[1], line, "edge id")?;
        if id != next_edge {
            return Err(syntax(
                line,
                format!("edge ids must be dense and ascending, expected {next_edge}"),
            ));
        }
        let a = VertexId(parse_u32(toks[2], line, "endpoint")?);
        let b = VertexId(parse_u32(toks[3], line, "endpoint")?);
        if a == b {
            return Err(FormatError::SelfLoop { line });
        }
        if a.index() >= nv || b.index() >= nv {
            return Err(syntax(line, "endpoint out of range"));
        }
        graph.add_edge(a, b).expect("validated above");
        next_edge += 1;
    }
    if next_edge as usize != ne {
        return Err(FormatError::HeaderMismatch {
            msg: format!("header declares {ne} edges, found {next_edge}"),
        });
    }
    MedepInstance::new(graph, s, t, k).map_err(|e| FormatError::HeaderMismatch {
        msg: format!("{e}"),
    })
}

fn state_token(s: EdgeState) -> &'static str {
    match s {
        EdgeState::Forward => "fwd",
        EdgeState::Backward => "bwd",
        EdgeState::Undirected => "und",
    }
}

pub fn write_orientation(orientation: &Orientation) -> String {
    let mut out = String::new();
    for (e, s) in orientation.states.iter() {
        writeln!(out, "o {} {}", e, state_token(*s)).unwrap();
    }
    out
}

/// Parses an orientation certificate. Totality against an instance is
/// checked at use time by `check_orientation`, not here.
pub fn parse_orientation(text: &str) -> Result<Orientation, FormatError> {
    let mut orientation = Orientation::new();
    for (line, toks) in records(text) {
        if toks[0] != "o" || toks.len() != 3 {
            return Err(syntax(line, "expected `o <edgeId> fwd|bwd|und`"));
        }
        let e = EdgeId(parse_u32(toks[1], line, "edge id")?);
        let state = match toks[2] {
            "fwd" => EdgeState::Forward,
            "bwd" => EdgeState::Backward,
            "und" => EdgeState::Undirected,
            other => return Err(syntax(line, format!("unknown state `{other}`"))),
        };
        if orientation.states.insert(e, state).is_some() {
            return Err(FormatError::DuplicateEdgeRecord(e));
        }
    }
    Ok(orientation)
}

pub fn write_packing(packing: &PathPacking) -> String {
    let mut out = String::new();
    for triple in &packing.paths {
        writeln!(out, "p {} {} {}", triple.first, triple.middle, triple.last).unwrap();
    }
    out
}

/// Parses a packing certificate as raw edge-id triples; inner vertices are
/// resolved against the instance at use time.
pub fn parse_packing(text: &str) -> Result<Vec<(EdgeId, EdgeId, EdgeId)>, FormatError> {
    let mut triples = Vec::new();
    for (line, toks) in records(text) {
        if toks[0] != "p" || toks.len() != 4 {
            return Err(syntax(line, "expected `p <edge1> <edge2> <edge3>`"));
        }
        triples.push((
            EdgeId(parse_u32(toks[1], line, "edge id")?),
            EdgeId(parse_u32(toks[2], line, "edge id")?),
            EdgeId(parse_u32(toks[3], line, "edge id")?),
        ));
    }
    Ok(triples)
}
