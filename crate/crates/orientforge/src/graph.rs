//! Shared data model: multigraphs, degree prescriptions, orientations,
//! path-packing instances, and the two solution checkers.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. The checkers are pure functions; solvers and reductions in the
//! other modules build on these types and re-verify their own outputs with
//! them.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Dense vertex identifier, `0..num_vertices`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

/// Dense edge identifier, `0..num_edges`. Parallel edges get distinct ids;
/// edge identity (not the endpoint pair) is the unit of disjointness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(VertexId),
    #[error("vertex {0} out of range (graph has {1} vertices)")]
    VertexOutOfRange(VertexId, usize),
    #[error("vertex {vertex}: rho+delta+theta = {spec_sum} but incident count is {incident}")]
    SumMismatch {
        vertex: VertexId,
        spec_sum: u32,
        incident: u32,
    },
    #[error("expected one spec per vertex: {got} specs for {vertices} vertices")]
    SpecCountMismatch { got: usize, vertices: usize },
}

/// Undirected multigraph with stable dense ids and a stored canonical
/// endpoint order per edge (fixed at creation, so forward/backward is
/// unambiguous in files and certificates).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph {
    num_vertices: usize,
    endpoints: Vec<(VertexId, VertexId)>,
    incident: Vec<Vec<EdgeId>>,
}

impl Multigraph {
    pub fn new(num_vertices: usize) -> Self {
        Multigraph {
            num_vertices,
            endpoints: Vec::new(),
            incident: vec![Vec::new(); num_vertices],
        }
    }

    /// Adds an edge with canonical endpoint order `(a, b)` as given.
    /// Self-loops are rejected: their in/out semantics under partial
    /// orientation is undefined and no construction here produces one.
    pub fn add_edge(&mut self, a: VertexId, b: VertexId) -> Result<EdgeId, GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        for v in [a, b] {
            if v.index() >= self.num_vertices {
                return Err(GraphError::VertexOutOfRange(v, self.num_vertices));
            }
        }
        let id = EdgeId(self.endpoints.len() as u32);
        self.endpoints.push((a, b));
        self.incident[a.index()].push(id);
        self.incident[b.index()].push(id);
        Ok(id)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.endpoints.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.num_vertices as u32).map(VertexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.endpoints.len() as u32).map(EdgeId)
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.endpoints[e.index()]
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        e.index() < self.endpoints.len()
    }

    /// Edges incident to `v`, in insertion order.
    pub fn incident_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.incident[v.index()]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incident[v.index()].len()
    }

    /// Given an edge incident to `v`, the endpoint that is not `v`.
    pub fn other_endpoint(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.endpoints(e);
        if a == v {
            b
        } else {
            a
        }
    }
}

/// Checks whether the graph is simple; the second component lists every
/// pair of edges sharing the same unordered endpoint pair.
pub fn is_simple(graph: &Multigraph) -> (bool, Vec<(EdgeId, EdgeId)>) {
    let mut by_pair: BTreeMap<(VertexId, VertexId), Vec<EdgeId>> = BTreeMap::new();
    for e in graph.edges() {
        let (a, b) = graph.endpoints(e);
        let key = if a <= b { (a, b) } else { (b, a) };
        by_pair.entry(key).or_default().push(e);
    }
    let mut pairs = Vec::new();
    for group in by_pair.values() {
        for i in 0..group.len() {
            for j in i + 1..group.len() {
                pairs.push((group[i], group[j]));
            }
        }
    }
    (pairs.is_empty(), pairs)
}

/// Prescribed in-degree (rho), out-degree (delta), and undirected degree
/// (theta) of a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DegreeSpec {
    pub rho: u32,
    pub delta: u32,
    pub theta: u32,
}

impl DegreeSpec {
    pub fn new(rho: u32, delta: u32, theta: u32) -> Self {
        DegreeSpec { rho, delta, theta }
    }

    pub fn sum(&self) -> u32 {
        self.rho + self.delta + self.theta
    }
}

impl fmt::Display for DegreeSpec {
    /// Letter-string label, e.g. `rd3u` prints as the counts `(1,1,3)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.rho, self.delta, self.theta)
    }
}

/// A partial orientation instance: a multigraph plus one degree spec per
/// vertex. `new` enforces the sum invariant (rho+delta+theta equals the
/// incident edge count at every vertex); `new_unchecked` leaves it to the
/// checkers, for lenient file ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialOrientationInstance {
    pub graph: Multigraph,
    pub specs: Vec<DegreeSpec>,
}

impl PartialOrientationInstance {
    pub fn new(graph: Multigraph, specs: Vec<DegreeSpec>) -> Result<Self, GraphError> {
        let inst = Self::new_unchecked(graph, specs)?;
        inst.validate_sums()?;
        Ok(inst)
    }

    /// Skips the sum invariant but still requires one spec per vertex.
    pub fn new_unchecked(graph: Multigraph, specs: Vec<DegreeSpec>) -> Result<Self, GraphError> {
        if specs.len() != graph.num_vertices() {
            return Err(GraphError::SpecCountMismatch {
                got: specs.len(),
                vertices: graph.num_vertices(),
            });
        }
        Ok(PartialOrientationInstance { graph, specs })
    }

    pub fn spec(&self, v: VertexId) -> DegreeSpec {
        self.specs[v.index()]
    }

    /// Returns the first vertex violating the sum invariant, if any.
    pub fn validate_sums(&self) -> Result<(), GraphError> {
        for v in self.graph.vertices() {
            let spec = self.spec(v);
            let incident = self.graph.degree(v) as u32;
            if spec.sum() != incident {
                return Err(GraphError::SumMismatch {
                    vertex: v,
                    spec_sum: spec.sum(),
                    incident,
                });
            }
        }
        Ok(())
    }
}

/// Per-edge orientation state. `Forward` directs the edge from its canonical
/// first endpoint to its canonical second endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeState {
    Forward,
    Backward,
    Undirected,
}

impl EdgeState {
    pub fn reversed(self) -> EdgeState {
        match self {
            EdgeState::Forward => EdgeState::Backward,
            EdgeState::Backward => EdgeState::Forward,
            EdgeState::Undirected => EdgeState::Undirected,
        }
    }
}

/// A (possibly partial) assignment of states to edges. Checkers verify
/// totality against a concrete instance; solvers always produce total ones.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Orientation {
    pub states: BTreeMap<EdgeId, EdgeState>,
}

impl Orientation {
    pub fn new() -> Self {
        Orientation::default()
    }

    pub fn from_dense(states: &[EdgeState]) -> Self {
        Orientation {
            states: states
                .iter()
                .enumerate()
                .map(|(i, s)| (EdgeId(i as u32), *s))
                .collect(),
        }
    }

    pub fn set(&mut self, e: EdgeId, s: EdgeState) {
        self.states.insert(e, s);
    }

    pub fn get(&self, e: EdgeId) -> Option<EdgeState> {
        self.states.get(&e).copied()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("candidate assigns no state to edge {0}")]
    MissingEdgeState(EdgeId),
    #[error("candidate references unknown edge {0}")]
    UnknownEdge(EdgeId),
}

/// Which of the three per-vertex counts is off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountKind {
    In,
    Out,
    Undirected,
}

impl fmt::Display for CountKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountKind::In => write!(f, "in"),
            CountKind::Out => write!(f, "out"),
            CountKind::Undirected => write!(f, "undirected"),
        }
    }
}

/// Checker verdict. `Invalid` names the first offending vertex in id order,
/// checking the in, then out, then undirected count at each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrientationVerdict {
    Valid,
    Invalid {
        vertex: VertexId,
        kind: CountKind,
        expected: u32,
        actual: u32,
    },
}

impl OrientationVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, OrientationVerdict::Valid)
    }
}

/// Decides whether `cand` is a valid orientation of `instance`: at every
/// vertex the realized in/out/undirected counts must match the spec exactly.
pub fn check_orientation(
    instance: &PartialOrientationInstance,
    cand: &Orientation,
) -> Result<OrientationVerdict, CheckError> {
    let graph = &instance.graph;
    for &e in cand.states.keys() {
        if !graph.contains_edge(e) {
            return Err(CheckError::UnknownEdge(e));
        }
    }
    for e in graph.edges() {
        if cand.get(e).is_none() {
            return Err(CheckError::MissingEdgeState(e));
        }
    }

    let n = graph.num_vertices();
    let mut ins = vec![0u32; n];
    let mut outs = vec![0u32; n];
    let mut unds = vec![0u32; n];
    for e in graph.edges() {
        let (a, b) = graph.endpoints(e);
        match cand.get(e).expect("totality checked above") {
            EdgeState::Forward => {
                outs[a.index()] += 1;
                ins[b.index()] += 1;
            }
            EdgeState::Backward => {
                ins[a.index()] += 1;
                outs[b.index()] += 1;
            }
            EdgeState::Undirected => {
                unds[a.index()] += 1;
                unds[b.index()] += 1;
            }
        }
    }

    for v in graph.vertices() {
        let spec = instance.spec(v);
        let checks = [
            (CountKind::In, spec.rho, ins[v.index()]),
            (CountKind::Out, spec.delta, outs[v.index()]),
            (CountKind::Undirected, spec.theta, unds[v.index()]),
        ];
        for (kind, expected, actual) in checks {
            if expected != actual {
                return Ok(OrientationVerdict::Invalid {
                    vertex: v,
                    kind,
                    expected,
                    actual,
                });
            }
        }
    }
    Ok(OrientationVerdict::Valid)
}

/// An instance of the exact-length-3 edge-disjoint path packing problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MedepInstance {
    pub graph: Multigraph,
    pub s: VertexId,
    pub t: VertexId,
    pub k: u32,
}

/// Path length is fixed to 3 throughout this crate.
pub const PATH_LENGTH: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MedepError {
    #[error("s and t must be distinct")]
    SEqualsT,
    #[error("k must be positive")]
    KMustBePositive,
    #[error("vertex {0} out of range")]
    VertexOutOfRange(VertexId),
}

impl MedepInstance {
    pub fn new(graph: Multigraph, s: VertexId, t: VertexId, k: u32) -> Result<Self, MedepError> {
        if s == t {
            return Err(MedepError::SEqualsT);
        }
        if k == 0 {
            return Err(MedepError::KMustBePositive);
        }
        for v in [s, t] {
            if v.index() >= graph.num_vertices() {
                return Err(MedepError::VertexOutOfRange(v));
            }
        }
        Ok(MedepInstance { graph, s, t, k })
    }
}

/// One s-t path of length exactly 3: edges `first` (s to inner_u), `middle`
/// (inner_u to inner_v), `last` (inner_v to t), with s, inner_u, inner_v, t
/// pairwise distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathTriple {
    pub first: EdgeId,
    pub middle: EdgeId,
    pub last: EdgeId,
    pub inner_u: VertexId,
    pub inner_v: VertexId,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PackingError {
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("edges {0}, {1}, {2} do not chain s to t as a simple length-3 path")]
    EndpointMismatch(EdgeId, EdgeId, EdgeId),
}

impl PathTriple {
    /// Resolves raw edge ids into a triple, recovering the inner vertices.
    /// Fails if the edges do not chain `s -> u -> v -> t` with all four
    /// vertices distinct.
    pub fn resolve(
        instance: &MedepInstance,
        first: EdgeId,
        middle: EdgeId,
        last: EdgeId,
    ) -> Result<PathTriple, PackingError> {
        let graph = &instance.graph;
        for e in [first, middle, last] {
            if !graph.contains_edge(e) {
                return Err(PackingError::UnknownEdge(e));
            }
        }
        let mismatch = || PackingError::EndpointMismatch(first, middle, last);
        let (fa, fb) = graph.endpoints(first);
        let inner_u = if fa == instance.s {
            fb
        } else if fb == instance.s {
            fa
        } else {
            return Err(mismatch());
        };
        let (ma, mb) = graph.endpoints(middle);
        let inner_v = if ma == inner_u {
            mb
        } else if mb == inner_u {
            ma
        } else {
            return Err(mismatch());
        };
        let (la, lb) = graph.endpoints(last);
        let touches_t = (la == inner_v && lb == instance.t) || (lb == inner_v && la == instance.t);
        if !touches_t {
            return Err(mismatch());
        }
        let verts = [instance.s, inner_u, inner_v, instance.t];
        for i in 0..4 {
            for j in i + 1..4 {
                if verts[i] == verts[j] {
                    return Err(mismatch());
                }
            }
        }
        Ok(PathTriple {
            first,
            middle,
            last,
            inner_u,
            inner_v,
        })
    }
}

/// A set of path triples; a YES certificate has exactly `k` of them,
/// pairwise edge-disjoint by edge id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathPacking {
    pub paths: Vec<PathTriple>,
}

/// Checker verdict for packings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PackingVerdict {
    Valid,
    Invalid(String),
}

impl PackingVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, PackingVerdict::Valid)
    }
}

/// Decides whether `cand` is a valid packing: every triple a genuine simple
/// length-3 s-t path, all edge ids pairwise distinct, and exactly `k` paths.
pub fn check_packing(
    instance: &MedepInstance,
    cand: &PathPacking,
) -> Result<PackingVerdict, PackingError> {
    let mut used = BTreeMap::new();
    for (i, triple) in cand.paths.iter().enumerate() {
        let resolved = PathTriple::resolve(instance, triple.first, triple.middle, triple.last)?;
        if resolved.inner_u != triple.inner_u || resolved.inner_v != triple.inner_v {
            return Err(PackingError::EndpointMismatch(
                triple.first,
                triple.middle,
                triple.last,
            ));
        }
        for e in [triple.first, triple.middle, triple.last] {
            if let Some(prev) = used.insert(e, i) {
                return Ok(PackingVerdict::Invalid(format!(
                    "edge {e} reused by paths {prev} and {i}"
                )));
            }
        }
    }
    if cand.paths.len() != instance.k as usize {
        return Ok(PackingVerdict::Invalid(format!(
            "packing has {} paths but k = {}",
            cand.paths.len(),
            instance.k
        )));
    }
    Ok(PackingVerdict::Valid)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Single edge u-v with delta(u)=1, rho(v)=1: the one forced orientation.
    pub fn f1() -> PartialOrientationInstance {
        let mut g = Multigraph::new(2);
        g.add_edge(VertexId(0), VertexId(1)).unwrap();
        PartialOrientationInstance::new(g, vec![DegreeSpec::new(0, 1, 0), DegreeSpec::new(1, 0, 0)])
            .unwrap()
    }

    /// Single edge whose endpoints demand incompatible states.
    pub fn f2() -> PartialOrientationInstance {
        let mut g = Multigraph::new(2);
        g.add_edge(VertexId(0), VertexId(1)).unwrap();
        PartialOrientationInstance::new(g, vec![DegreeSpec::new(0, 1, 0), DegreeSpec::new(0, 0, 1)])
            .unwrap()
    }

    /// Path s-u-v-t with k=1.
    pub fn f3() -> MedepInstance {
        let mut g = Multigraph::new(4);
        g.add_edge(VertexId(0), VertexId(1)).unwrap();
        g.add_edge(VertexId(1), VertexId(2)).unwrap();
        g.add_edge(VertexId(2), VertexId(3)).unwrap();
        MedepInstance::new(g, VertexId(0), VertexId(3), 1).unwrap()
    }
}
