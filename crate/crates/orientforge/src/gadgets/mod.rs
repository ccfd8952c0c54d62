//! Gadget constructors, the verified gadget store, the synthesizer, and
//! mirror completion.
//!
//! Variable gadgets are a contract, not a fixed construction: any subgraph
//! with exactly two orientations whose t-ports point away in the "true" one
//! qualifies, and the enumeration oracle is the sole authority on whether a
//! template meets the contract. Templates enter the store only after
//! verification, and are re-verified at load; behavior tables are always
//! recomputed, never trusted from disk.

pub mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::graph::{
    DegreeSpec, EdgeId, EdgeState, GraphError, Multigraph, Orientation, PartialOrientationInstance,
    VertexId,
};
use crate::oracle::{
    enumerate_orientations, OracleError, PortConstraint, PortState, PortedInstance,
    PortedOrientation,
};

#[derive(Debug, Error)]
pub enum GadgetError {
    #[error("no verified variable gadget for m = {0} in the store; synthesize one or add a transcribed construction and re-verify")]
    NotInStore(u32),
    #[error("store has no clause gadget")]
    NoClauseGadget,
    #[error("instance has no open ports to resolve")]
    NoPorts,
    #[error("gadget `{name}` failed verification: {}", problems.join("; "))]
    VerificationFailed { name: String, problems: Vec<String> },
    #[error("store error: {0}")]
    Store(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Port polarity. `TPort` points away from its gadget in the "true"
/// orientation and toward it in "false"; `FPort` is the opposite. Clause
/// gadgets expose three `LiteralSlot`s on top and `ResolutionPort`s that the
/// mirror completion later closes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortPolarity {
    TPort,
    FPort,
    LiteralSlot,
    ResolutionPort,
}

impl fmt::Display for PortPolarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tok = match self {
            PortPolarity::TPort => "tport",
            PortPolarity::FPort => "fport",
            PortPolarity::LiteralSlot => "literal",
            PortPolarity::ResolutionPort => "resolution",
        };
        write!(f, "{tok}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Port {
    pub vertex: VertexId,
    pub polarity: PortPolarity,
}

impl Port {
    pub fn new(vertex: VertexId, polarity: PortPolarity) -> Self {
        Port { vertex, polarity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetKind {
    Variable,
    Clause,
}

/// The canonical pair of orientations of a variable gadget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalOrientations {
    pub true_state: PortedOrientation,
    pub false_state: PortedOrientation,
}

/// For each directed pattern of the three literal slots (bit j set means
/// slot j points toward the gadget), one valid extension to the whole
/// subgraph, or `None` when the pattern cannot be extended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionTable {
    entries: Vec<Option<PortedOrientation>>,
}

impl ExtensionTable {
    pub fn get(&self, pattern: u8) -> Option<&PortedOrientation> {
        self.entries[pattern as usize].as_ref()
    }

    pub fn present(&self, pattern: u8) -> bool {
        self.entries[pattern as usize].is_some()
    }
}

/// A typed subgraph with open ports. `canonical` and `extensions` are
/// oracle-computed; constructors and the store fill them in after
/// verification.
#[derive(Debug, Clone)]
pub struct GadgetTemplate {
    pub kind: GadgetKind,
    pub inst: PortedInstance,
    pub ports: Vec<Port>,
    pub canonical: Option<CanonicalOrientations>,
    pub extensions: Option<ExtensionTable>,
}

impl GadgetTemplate {
    pub fn new(
        kind: GadgetKind,
        graph: Multigraph,
        specs: Vec<DegreeSpec>,
        ports: Vec<Port>,
    ) -> Result<Self, GraphError> {
        let inst = PortedInstance::new(graph, specs, ports.iter().map(|p| p.vertex).collect())?;
        Ok(GadgetTemplate {
            kind,
            inst,
            ports,
            canonical: None,
            extensions: None,
        })
    }

    pub fn port_indices(&self, polarity: PortPolarity) -> Vec<usize> {
        self.ports
            .iter()
            .enumerate()
            .filter(|(_, p)| p.polarity == polarity)
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of t-ports (equals the number of f-ports on verified variable
    /// gadgets).
    pub fn multiplicity(&self) -> u32 {
        self.port_indices(PortPolarity::TPort).len() as u32
    }
}

/// Maps a port state to the state of an edge whose canonical first endpoint
/// is the port's attachment vertex (used when a port is materialized as a
/// pendant edge or resolved by a mirror bridge).
pub fn port_state_as_edge_from_attachment(s: PortState) -> EdgeState {
    match s {
        PortState::Toward => EdgeState::Backward,
        PortState::Away => EdgeState::Forward,
        PortState::Undirected => EdgeState::Undirected,
    }
}

/// Closes a ported instance by attaching each port to a fresh pendant leaf
/// whose spec accepts exactly the given state. Pendant edge for port `i` has
/// id `num_edges + i` with endpoints `(attachment, leaf)`; leaf `i` is
/// vertex `num_vertices + i`.
pub fn materialize_ports(
    inst: &PortedInstance,
    states: &[PortState],
) -> PartialOrientationInstance {
    assert_eq!(states.len(), inst.ports.len());
    let n = inst.graph.num_vertices();
    let mut graph = Multigraph::new(n + inst.ports.len());
    for e in inst.graph.edges() {
        let (a, b) = inst.graph.endpoints(e);
        graph.add_edge(a, b).expect("copy of valid edge");
    }
    let mut specs = inst.specs.clone();
    for (i, (&attach, &state)) in inst.ports.iter().zip(states).enumerate() {
        let leaf = VertexId((n + i) as u32);
        graph.add_edge(attach, leaf).expect("pendant edge");
        specs.push(match state {
            PortState::Toward => DegreeSpec::new(0, 1, 0),
            PortState::Away => DegreeSpec::new(1, 0, 0),
            PortState::Undirected => DegreeSpec::new(0, 0, 1),
        });
    }
    PartialOrientationInstance::new(graph, specs).expect("sums preserved by construction")
}

/// The clause gadget: a triangle a, b, c with a hub x spoked to all three,
/// a pendant anchor below each triangle vertex, three literal slots on top
/// and four resolution ports below. Its defining behavior: the three literal
/// slots cannot all point away, and every other directed pattern extends.
pub fn clause_gadget() -> GadgetTemplate {
    let mut graph = Multigraph::new(7);
    let (a, b, c) = (VertexId(0), VertexId(1), VertexId(2));
    let (aa, bb, cc) = (VertexId(3), VertexId(4), VertexId(5));
    let x = VertexId(6);
    // Triangle, spokes, pendants; edge ids 0..9 in this order.
    for (u, v) in [
        (a, b),
        (b, c),
        (c, a),
        (x, a),
        (x, b),
        (x, c),
        (a, aa),
        (b, bb),
        (c, cc),
    ] {
        graph.add_edge(u, v).expect("fixed construction");
    }
    let specs = vec![
        DegreeSpec::new(1, 1, 3),
        DegreeSpec::new(1, 1, 3),
        DegreeSpec::new(1, 1, 3),
        DegreeSpec::new(1, 0, 1),
        DegreeSpec::new(1, 0, 1),
        DegreeSpec::new(1, 0, 1),
        DegreeSpec::new(0, 1, 3),
    ];
    let ports = vec![
        Port::new(a, PortPolarity::LiteralSlot),
        Port::new(b, PortPolarity::LiteralSlot),
        Port::new(c, PortPolarity::LiteralSlot),
        Port::new(aa, PortPolarity::ResolutionPort),
        Port::new(bb, PortPolarity::ResolutionPort),
        Port::new(cc, PortPolarity::ResolutionPort),
        Port::new(x, PortPolarity::ResolutionPort),
    ];
    let template = GadgetTemplate::new(GadgetKind::Clause, graph, specs, ports)
        .expect("fixed construction is well-formed");
    match verify_gadget(&template, crate::oracle::DEFAULT_NODE_BUDGET) {
        Ok(VerifyOutcome::Verified(analysis)) => with_analysis(template, analysis),
        other => unreachable!("clause gadget must verify: {other:?}"),
    }
}

/// The two-vertex variable gadget for m = 1: vertices a and b joined by one
/// edge, a carrying the t-port and b the f-port, both with in- and
/// out-degree 1.
pub fn two_vertex_variable_gadget() -> GadgetTemplate {
    let mut graph = Multigraph::new(2);
    graph
        .add_edge(VertexId(0), VertexId(1))
        .expect("fixed construction");
    let specs = vec![DegreeSpec::new(1, 1, 0), DegreeSpec::new(1, 1, 0)];
    let ports = vec![
        Port::new(VertexId(0), PortPolarity::TPort),
        Port::new(VertexId(1), PortPolarity::FPort),
    ];
    let template = GadgetTemplate::new(GadgetKind::Variable, graph, specs, ports)
        .expect("fixed construction is well-formed");
    match verify_gadget(&template, crate::oracle::DEFAULT_NODE_BUDGET) {
        Ok(VerifyOutcome::Verified(analysis)) => with_analysis(template, analysis),
        other => unreachable!("two-vertex gadget must verify: {other:?}"),
    }
}

/// Variable gadget for any m >= 1, built as a cycle of 4m vertices: each of
/// the m units is source - t-port vertex - sink - f-port vertex. The
/// undirected edges of a valid orientation must form a perfect matching of
/// the cycle (every vertex has exactly one undirected slot and ports cannot
/// stay undirected), an even cycle has exactly two perfect matchings, and in
/// each of them every directed stretch is pinned by a source or sink. That
/// yields exactly the two orientations the contract demands; the oracle
/// re-checks rather than trusts this argument.
pub fn cycle_variable_gadget(m: u32) -> GadgetTemplate {
    assert!(m >= 1);
    let n = 4 * m as usize;
    let mut graph = Multigraph::new(n);
    let mut specs = vec![DegreeSpec::new(0, 0, 0); n];
    let mut tports = Vec::new();
    let mut fports = Vec::new();
    for unit in 0..m as usize {
        let source = VertexId((4 * unit) as u32);
        let tv = VertexId((4 * unit + 1) as u32);
        let sink = VertexId((4 * unit + 2) as u32);
        let fv = VertexId((4 * unit + 3) as u32);
        specs[source.index()] = DegreeSpec::new(0, 1, 1);
        specs[tv.index()] = DegreeSpec::new(1, 1, 1);
        specs[sink.index()] = DegreeSpec::new(1, 0, 1);
        specs[fv.index()] = DegreeSpec::new(1, 1, 1);
        tports.push(Port::new(tv, PortPolarity::TPort));
        fports.push(Port::new(fv, PortPolarity::FPort));
    }
    for i in 0..n {
        let a = VertexId(i as u32);
        let b = VertexId(((i + 1) % n) as u32);
        graph.add_edge(a, b).expect("cycle edge");
    }
    let mut ports = tports;
    ports.extend(fports);
    let template = GadgetTemplate::new(GadgetKind::Variable, graph, specs, ports)
        .expect("fixed construction is well-formed");
    match verify_gadget(&template, crate::oracle::DEFAULT_NODE_BUDGET) {
        Ok(VerifyOutcome::Verified(analysis)) => with_analysis(template, analysis),
        other => unreachable!("cycle gadget m={m} must verify: {other:?}"),
    }
}

pub fn with_analysis(mut template: GadgetTemplate, analysis: GadgetAnalysis) -> GadgetTemplate {
    match analysis {
        GadgetAnalysis::Variable(c) => template.canonical = Some(c),
        GadgetAnalysis::Clause(t) => template.extensions = Some(t),
    }
    template
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GadgetAnalysis {
    Variable(CanonicalOrientations),
    Clause(ExtensionTable),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    Verified(GadgetAnalysis),
    Failed(Vec<String>),
}

impl VerifyOutcome {
    pub fn is_verified(&self) -> bool {
        matches!(self, VerifyOutcome::Verified(_))
    }
}

fn degree_bound_problems(inst: &PortedInstance, problems: &mut Vec<String>) {
    for v in inst.graph.vertices() {
        let s = inst.specs[v.index()];
        if s.rho > 1 || s.delta > 1 {
            problems.push(format!(
                "vertex {v} has rho={} delta={}, both must be at most 1",
                s.rho, s.delta
            ));
        }
    }
}

/// Runs the full oracle checks for a template's declared kind.
///
/// Variable contract: with every port free there are exactly two
/// orientations; in both, every port is directed; one orientation has every
/// t-port away and every f-port toward, the other the exact reverse.
///
/// Clause contract: exactly three literal slots; with resolution ports free,
/// the all-away literal pattern admits no orientation and each of the other
/// seven directed patterns admits at least one.
pub fn verify_gadget(template: &GadgetTemplate, budget: u64) -> Result<VerifyOutcome, OracleError> {
    let mut problems = Vec::new();
    degree_bound_problems(&template.inst, &mut problems);
    match template.kind {
        GadgetKind::Variable => {
            let tports = template.port_indices(PortPolarity::TPort);
            let fports = template.port_indices(PortPolarity::FPort);
            if tports.len() + fports.len() != template.ports.len() {
                problems.push("variable gadget ports must all be t-ports or f-ports".into());
            }
            if tports.is_empty() || fports.is_empty() {
                problems.push("variable gadget needs at least one port of each polarity".into());
            }
            let constraints = vec![PortConstraint::Free; template.ports.len()];
            let result = enumerate_orientations(&template.inst, &constraints, 8, budget)?;
            if result.hit_cap {
                problems.push(format!(
                    "expected exactly 2 orientations with ports free, found at least {}",
                    result.count
                ));
            } else if result.count != 2 {
                problems.push(format!(
                    "expected exactly 2 orientations with ports free, found {}",
                    result.count
                ));
            }
            let mut true_state = None;
            let mut false_state = None;
            for (i, w) in result.witnesses.iter().enumerate() {
                if w.port_states.contains(&PortState::Undirected) {
                    problems.push(format!("orientation {i} leaves a port undirected"));
                    continue;
                }
                let all_true = tports.iter().all(|&p| w.port_states[p] == PortState::Away)
                    && fports
                        .iter()
                        .all(|&p| w.port_states[p] == PortState::Toward);
                let all_false = tports
                    .iter()
                    .all(|&p| w.port_states[p] == PortState::Toward)
                    && fports.iter().all(|&p| w.port_states[p] == PortState::Away);
                match (all_true, all_false) {
                    (true, _) if true_state.is_none() => true_state = Some(w.clone()),
                    (_, true) if false_state.is_none() => false_state = Some(w.clone()),
                    _ => problems.push(format!(
                        "orientation {i} has mixed port polarities: {:?}",
                        w.port_states
                    )),
                }
            }
            if true_state.is_none() {
                problems.push("no orientation realizes the all-true port pattern".into());
            }
            if false_state.is_none() {
                problems.push("no orientation realizes the all-false port pattern".into());
            }
            if problems.is_empty() {
                Ok(VerifyOutcome::Verified(GadgetAnalysis::Variable(
                    CanonicalOrientations {
                        true_state: true_state.unwrap(),
                        false_state: false_state.unwrap(),
                    },
                )))
            } else {
                Ok(VerifyOutcome::Failed(problems))
            }
        }
        GadgetKind::Clause => {
            let literals = template.port_indices(PortPolarity::LiteralSlot);
            let resolutions = template.port_indices(PortPolarity::ResolutionPort);
            if literals.len() != 3 {
                problems.push(format!(
                    "clause gadget must have exactly 3 literal slots, found {}",
                    literals.len()
                ));
                return Ok(VerifyOutcome::Failed(problems));
            }
            if literals.len() + resolutions.len() != template.ports.len() {
                problems
                    .push("clause gadget ports must be literal slots or resolution ports".into());
            }
            let mut entries: Vec<Option<PortedOrientation>> = vec![None; 8];
            for pattern in 0u8..8 {
                let mut constraints = vec![PortConstraint::Free; template.ports.len()];
                for (bit, &pidx) in literals.iter().enumerate() {
                    constraints[pidx] = if pattern >> bit & 1 == 1 {
                        PortConstraint::MustBeToward
                    } else {
                        PortConstraint::MustBeAway
                    };
                }
                let result = enumerate_orientations(&template.inst, &constraints, 1, budget)?;
                if pattern == 0 {
                    if result.count != 0 {
                        problems
                            .push("the all-away literal pattern must admit no orientation".into());
                    }
                } else if result.count == 0 {
                    problems.push(format!(
                        "literal pattern {pattern:#05b} admits no orientation"
                    ));
                } else {
                    entries[pattern as usize] = Some(result.witnesses[0].clone());
                }
            }
            if problems.is_empty() {
                Ok(VerifyOutcome::Verified(GadgetAnalysis::Clause(
                    ExtensionTable { entries },
                )))
            } else {
                Ok(VerifyOutcome::Failed(problems))
            }
        }
    }
}

/// Book-keeping produced by `mirror_complete`: vertex v mirrors to
/// v + primal_vertices, edge e to e + primal_edges, and port i is resolved
/// by `bridges[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MirrorMap {
    pub primal_vertices: usize,
    pub primal_edges: usize,
    pub bridges: Vec<EdgeId>,
}

impl MirrorMap {
    pub fn mirror_vertex(&self, v: VertexId) -> VertexId {
        VertexId(v.0 + self.primal_vertices as u32)
    }

    pub fn mirror_edge(&self, e: EdgeId) -> EdgeId {
        EdgeId(e.0 + self.primal_edges as u32)
    }
}

/// Duplicates the construction, swaps prescribed in- and out-degrees on the
/// copies, and joins each vertex to its copy once per open port at that
/// vertex. The result is closed: every port is resolved by a bridge edge.
pub fn mirror_complete(
    inst: &PortedInstance,
) -> Result<(PartialOrientationInstance, MirrorMap), GadgetError> {
    if inst.ports.is_empty() {
        return Err(GadgetError::NoPorts);
    }
    let n = inst.graph.num_vertices();
    let m = inst.graph.num_edges();
    let mut graph = Multigraph::new(2 * n);
    for e in inst.graph.edges() {
        let (a, b) = inst.graph.endpoints(e);
        graph.add_edge(a, b).expect("primal copy");
    }
    for e in inst.graph.edges() {
        let (a, b) = inst.graph.endpoints(e);
        graph
            .add_edge(VertexId(a.0 + n as u32), VertexId(b.0 + n as u32))
            .expect("mirror copy");
    }
    let mut bridges = Vec::with_capacity(inst.ports.len());
    for &v in &inst.ports {
        let bridge = graph
            .add_edge(v, VertexId(v.0 + n as u32))
            .expect("bridge edge");
        bridges.push(bridge);
    }
    let mut specs = inst.specs.clone();
    specs.extend(
        inst.specs
            .iter()
            .map(|s| DegreeSpec::new(s.delta, s.rho, s.theta)),
    );
    let instance = PartialOrientationInstance::new(graph, specs)
        .expect("mirror completion preserves degree sums");
    Ok((
        instance,
        MirrorMap {
            primal_vertices: n,
            primal_edges: m,
            bridges,
        },
    ))
}

/// Extends a primal orientation-with-ports over a mirror completion: primal
/// edges keep their states, mirror copies carry the reversed states, and
/// each bridge plays the same role at the primal endpoint that the port did.
pub fn mirror_extend(map: &MirrorMap, primal: &PortedOrientation) -> Orientation {
    let mut out = Orientation::new();
    for (i, s) in primal.edge_states.iter().enumerate() {
        let e = EdgeId(i as u32);
        out.set(e, *s);
        out.set(map.mirror_edge(e), s.reversed());
    }
    for (i, s) in primal.port_states.iter().enumerate() {
        out.set(map.bridges[i], port_state_as_edge_from_attachment(*s));
    }
    out
}

/// A set of verified gadget templates, keyed by multiplicity for variable
/// gadgets.
#[derive(Debug, Default)]
pub struct GadgetStore {
    variables: BTreeMap<u32, GadgetTemplate>,
    clause: Option<GadgetTemplate>,
}

impl GadgetStore {
    pub fn empty() -> Self {
        GadgetStore::default()
    }

    /// The store shipped with the tool: variable gadgets for m = 1, 2, 3 and
    /// the clause gadget, verified on construction.
    pub fn builtin() -> Self {
        let mut store = GadgetStore::empty();
        store
            .insert_variable(two_vertex_variable_gadget())
            .expect("builtin m=1 verifies");
        store
            .insert_variable(cycle_variable_gadget(2))
            .expect("builtin m=2 verifies");
        store
            .insert_variable(cycle_variable_gadget(3))
            .expect("builtin m=3 verifies");
        store
            .set_clause(clause_gadget())
            .expect("builtin clause verifies");
        store
    }

    /// Inserts a variable gadget after verifying it; the key is its t-port
    /// count.
    pub fn insert_variable(&mut self, template: GadgetTemplate) -> Result<u32, GadgetError> {
        let template = verified(template, "variable gadget")?;
        let m = template.multiplicity();
        self.variables.insert(m, template);
        Ok(m)
    }

    /// Fault-injection hook for integrity tests: plants a template without
    /// the verification gate. Never use outside tests.
    #[doc(hidden)]
    pub fn insert_variable_unchecked(&mut self, m: u32, template: GadgetTemplate) {
        self.variables.insert(m, template);
    }

    pub fn set_clause(&mut self, template: GadgetTemplate) -> Result<(), GadgetError> {
        self.clause = Some(verified(template, "clause gadget")?);
        Ok(())
    }

    /// Returns the stored, verified template with m t-ports and m f-ports.
    pub fn variable_gadget(&self, m: u32) -> Result<&GadgetTemplate, GadgetError> {
        self.variables.get(&m).ok_or(GadgetError::NotInStore(m))
    }

    pub fn clause_gadget(&self) -> Result<&GadgetTemplate, GadgetError> {
        self.clause.as_ref().ok_or(GadgetError::NoClauseGadget)
    }

    pub fn max_variable_multiplicity(&self) -> Option<u32> {
        self.variables.keys().max().copied()
    }

    pub fn variable_multiplicities(&self) -> Vec<u32> {
        self.variables.keys().copied().collect()
    }

    /// Loads every `*.gadget` file in a directory, verifying each template.
    pub fn load_dir(dir: &Path) -> Result<Self, GadgetError> {
        let mut store = GadgetStore::empty();
        let entries = std::fs::read_dir(dir)
            .map_err(|e| GadgetError::Store(format!("cannot read {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "gadget"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(GadgetError::Store(format!(
                "no .gadget files in {}",
                dir.display()
            )));
        }
        for path in paths {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| GadgetError::Store(format!("cannot read {}: {e}", path.display())))?;
            let template = parse_gadget(&text)
                .map_err(|e| GadgetError::Store(format!("{}: {e}", path.display())))?;
            match template.kind {
                GadgetKind::Variable => {
                    store.insert_variable(template)?;
                }
                GadgetKind::Clause => store.set_clause(template)?,
            }
        }
        Ok(store)
    }

    /// Writes the store as `var_m<k>.gadget` and `clause.gadget` files.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (m, template) in &self.variables {
            std::fs::write(dir.join(format!("var_m{m}.gadget")), write_gadget(template))?;
        }
        if let Some(clause) = &self.clause {
            std::fs::write(dir.join("clause.gadget"), write_gadget(clause))?;
        }
        Ok(())
    }
}

fn verified(template: GadgetTemplate, name: &str) -> Result<GadgetTemplate, GadgetError> {
    match verify_gadget(&template, crate::oracle::DEFAULT_NODE_BUDGET)? {
        VerifyOutcome::Verified(analysis) => Ok(with_analysis(template, analysis)),
        VerifyOutcome::Failed(problems) => Err(GadgetError::VerificationFailed {
            name: name.to_string(),
            problems,
        }),
    }
}

/// Serializes a template in the instance grammar extended with
/// `port <id> <vertex> <polarity>` records. Behavior tables are not written;
/// they are recomputed at load.
pub fn write_gadget(template: &GadgetTemplate) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let graph = &template.inst.graph;
    writeln!(out, "po {} {}", graph.num_vertices(), graph.num_edges()).unwrap();
    for v in graph.vertices() {
        let s = template.inst.specs[v.index()];
        writeln!(out, "v {} {} {} {}", v, s.rho, s.delta, s.theta).unwrap();
    }
    for e in graph.edges() {
        let (a, b) = graph.endpoints(e);
        writeln!(out, "e {} {} {}", e, a, b).unwrap();
    }
    for (i, port) in template.ports.iter().enumerate() {
        writeln!(out, "port {} {} {}", i, port.vertex, port.polarity).unwrap();
    }
    out
}

/// Parses the extended grammar. Kind is inferred from the port polarities:
/// any literal slot or resolution port makes it a clause gadget.
pub fn parse_gadget(text: &str) -> Result<GadgetTemplate, crate::formats::FormatError> {
    use crate::formats::FormatError;
    let mut header: Option<(usize, usize)> = None;
    let mut body_lines: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut port_lines: Vec<(usize, Vec<&str>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        match toks[0] {
            "po" => {
                if header.is_some() || toks.len() != 3 {
                    return Err(FormatError::Syntax {
                        line: lineno,
                        msg: "bad `po` header".into(),
                    });
                }
                let nv = toks[1].parse().map_err(|_| FormatError::Syntax {
                    line: lineno,
                    msg: "bad vertex count".into(),
                })?;
                let ne = toks[2].parse().map_err(|_| FormatError::Syntax {
                    line: lineno,
                    msg: "bad edge count".into(),
                })?;
                header = Some((nv, ne));
            }
            "port" => port_lines.push((lineno, toks)),
            _ => body_lines.push((lineno, toks)),
        }
    }
    let (nv, ne) = header.ok_or(FormatError::Syntax {
        line: 1,
        msg: "missing `po` header".into(),
    })?;
    let parsed = crate::formats::parse_po_body(nv, ne, body_lines.into_iter())?;

    let mut ports = Vec::new();
    for (line, toks) in port_lines {
        if toks.len() != 4 {
            return Err(FormatError::Syntax {
                line,
                msg: "expected `port <id> <vertex> <polarity>`".into(),
            });
        }
        let id: usize = toks[1].parse().map_err(|_| FormatError::Syntax {
            line,
            msg: "bad port id".into(),
        })?;
        if id != ports.len() {
            return Err(FormatError::Syntax {
                line,
                msg: format!(
                    "port ids must be dense and ascending, expected {}",
                    ports.len()
                ),
            });
        }
        let vertex = VertexId(toks[2].parse().map_err(|_| FormatError::Syntax {
            line,
            msg: "bad port vertex".into(),
        })?);
        if vertex.index() >= nv {
            return Err(FormatError::Syntax {
                line,
                msg: "port vertex out of range".into(),
            });
        }
        let polarity = match toks[3] {
            "tport" => PortPolarity::TPort,
            "fport" => PortPolarity::FPort,
            "literal" => PortPolarity::LiteralSlot,
            "resolution" => PortPolarity::ResolutionPort,
            other => {
                return Err(FormatError::Syntax {
                    line,
                    msg: format!("unknown polarity `{other}`"),
                })
            }
        };
        ports.push(Port { vertex, polarity });
    }
    let kind = if ports.iter().any(|p| {
        matches!(
            p.polarity,
            PortPolarity::LiteralSlot | PortPolarity::ResolutionPort
        )
    }) {
        GadgetKind::Clause
    } else {
        GadgetKind::Variable
    };
    GadgetTemplate::new(kind, parsed.instance.graph, parsed.instance.specs, ports).map_err(|e| {
        FormatError::Syntax {
            line: 1,
            msg: format!("{e}"),
        }
    })
}
