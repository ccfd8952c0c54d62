//! The two reductions and witness translation across every layer.
//!
//! `sat_to_po` instantiates one variable gadget per variable and one clause
//! gadget per clause, fuses each clause literal slot with a reserved port of
//! the matching variable gadget into a single shared edge, and closes the
//! assembly with the mirror completion. `po_to_medep` attaches terminals s
//! and t with multiplicities equal to the prescribed out- and in-degrees.
//! The provenance map records which instance elements encode which
//! variables, literals and clauses, making every correspondence executable
//! in both directions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::formats::{Assignment, CnfFormula, FormatError};
use crate::gadgets::{
    clause_gadget, mirror_complete, port_state_as_edge_from_attachment, GadgetError, GadgetStore,
    GadgetTemplate, PortPolarity,
};
use crate::graph::{
    EdgeId, EdgeState, MedepInstance, Multigraph, Orientation, PartialOrientationInstance,
    PathPacking, PathTriple, VertexId,
};
use crate::oracle::PortedInstance;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("variable {var} needs a gadget with m = {m}, store only has m <= {max}")]
    GadgetUnavailable { var: u32, m: u32, max: u32 },
    #[error("variable gadget m = {m} carries no canonical orientations; re-verify the store")]
    UnverifiedGadget { m: u32 },
    #[error("assignment leaves clause {clause} without a true literal")]
    NotSatisfying { clause: usize },
    #[error("incoherent gadget state: {0}")]
    IncoherentGadgetState(String),
    #[error("terminal-edge copies exhausted at vertex {0}")]
    CopyExhausted(VertexId),
    #[error("certificate translation error: {0}")]
    Translation(String),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}

/// Where one variable's gadget landed in the composed instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableProvenance {
    /// 1-based variable index.
    pub var: u32,
    pub m: u32,
    pub vertices: Vec<VertexId>,
    /// Composed edge carrying each t-port, in template port order: the fused
    /// literal edge when the port was consumed by a clause, otherwise the
    /// mirror bridge that resolved it.
    pub tport_edges: Vec<EdgeId>,
    pub fport_edges: Vec<EdgeId>,
    /// Full edge-state signature of the gadget (internal edges plus port
    /// edges) in its canonical true and false orientations.
    pub true_states: Vec<(EdgeId, EdgeState)>,
    pub false_states: Vec<(EdgeId, EdgeState)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseProvenance {
    pub clause: usize,
    pub literals: [i32; 3],
    pub vertices: Vec<VertexId>,
    /// Fused literal edges, slot order.
    pub literal_edges: [EdgeId; 3],
    /// Composed ids of the gadget's internal edges, template order.
    pub internal_edges: Vec<EdgeId>,
    /// Mirror bridges that resolved the resolution ports, template order.
    pub resolution_bridges: Vec<EdgeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MirrorInfo {
    pub primal_vertices: usize,
    pub primal_edges: usize,
}

/// Terminal-edge bookkeeping for the path-packing reduction. Original edges
/// keep their ids as the middle layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MedepProvenance {
    pub s: VertexId,
    pub t: VertexId,
    pub num_po_edges: usize,
    pub k: u32,
    /// s-side copies per vertex, allocation order.
    pub s_edges: BTreeMap<VertexId, Vec<EdgeId>>,
    /// t-side copies per vertex, allocation order.
    pub t_edges: BTreeMap<VertexId, Vec<EdgeId>>,
}

/// Records which instance elements encode which variables, literals,
/// clauses and mirror pairs; the backbone of witness translation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProvenanceMap {
    pub num_vars: u32,
    pub variables: Vec<VariableProvenance>,
    pub clauses: Vec<ClauseProvenance>,
    pub mirror: Option<MirrorInfo>,
    pub medep: Option<MedepProvenance>,
}

/// Rewrites the formula so each variable occurs at most `max_occ` times per
/// polarity, by splitting overloaded variables into a cycle of chained
/// copies (`copy i implies copy i+1`, wrapping around), which forces all
/// copies equal and preserves satisfiability.
pub fn bound_occurrences(formula: &CnfFormula, max_occ: u32) -> CnfFormula {
    assert!(max_occ >= 3, "max_occ below 3 cannot host a clause gadget");
    let counts = formula.occurrence_counts();
    let needs_split: Vec<bool> = counts
        .iter()
        .map(|(pos, neg)| *pos > max_occ || *neg > max_occ)
        .collect();
    if !needs_split.iter().any(|&b| b) {
        return formula.clone();
    }

    // Each chain clause is padded by repeating its positive literal, so a
    // copy carries two positive and one negative chain occurrences; it can
    // absorb max_occ - 2 original occurrences on top of that.
    let per_copy = (max_occ - 2) as usize;
    let mut copies: Vec<Vec<u32>> = Vec::new();
    let mut next_fresh = formula.num_vars + 1;
    for v in 1..=formula.num_vars {
        let idx = (v - 1) as usize;
        if !needs_split[idx] {
            copies.push(vec![v]);
            continue;
        }
        let total = (counts[idx].0 + counts[idx].1) as usize;
        let r = total.div_ceil(per_copy);
        let mut ids = vec![v];
        for _ in 1..r {
            ids.push(next_fresh);
            next_fresh += 1;
        }
        copies.push(ids);
    }

    let mut seen_occurrences = vec![0usize; formula.num_vars as usize];
    let mut clauses: Vec<[i32; 3]> = Vec::new();
    for clause in &formula.clauses {
        let mut rewritten = [0i32; 3];
        for (j, &lit) in clause.iter().enumerate() {
            let var = lit.unsigned_abs();
            let idx = (var - 1) as usize;
            let copy_ids = &copies[idx];
            let replacement = if copy_ids.len() == 1 {
                copy_ids[0]
            } else {
                let occ = seen_occurrences[idx];
                seen_occurrences[idx] += 1;
                copy_ids[occ / per_copy]
            };
            rewritten[j] = if lit > 0 {
                replacement as i32
            } else {
                -(replacement as i32)
            };
        }
        clauses.push(rewritten);
    }
    for copy_ids in &copies {
        if copy_ids.len() == 1 {
            continue;
        }
        for (i, &id) in copy_ids.iter().enumerate() {
            let next = copy_ids[(i + 1) % copy_ids.len()] as i32;
            clauses.push([-(id as i32), next, next]);
        }
    }
    CnfFormula::new(next_fresh - 1, clauses)
}

struct VarLayout<'a> {
    template: &'a GadgetTemplate,
    vertex_base: u32,
    edge_base: u32,
    /// template port index -> fused edge, filled while wiring clauses.
    port_edge: Vec<Option<EdgeId>>,
    tport_order: Vec<usize>,
    fport_order: Vec<usize>,
    next_t: usize,
    next_f: usize,
}

/// Reduces a 3-CNF formula to a closed partial-orientation instance.
/// Every variable's per-polarity occurrence count must be covered by the
/// gadget store.
pub fn sat_to_po(
    formula: &CnfFormula,
    store: &GadgetStore,
) -> Result<(PartialOrientationInstance, ProvenanceMap), ReductionError> {
    if formula.num_vars == 0 && formula.clauses.is_empty() {
        let instance =
            PartialOrientationInstance::new(Multigraph::new(0), vec![]).expect("empty instance");
        return Ok((instance, ProvenanceMap::default()));
    }

    let counts = formula.occurrence_counts();
    let store_max = store.max_variable_multiplicity().unwrap_or(0);
    let mut layouts: Vec<VarLayout> = Vec::with_capacity(formula.num_vars as usize);

    let mut num_vertices = 0u32;
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut specs = Vec::new();

    for v in 1..=formula.num_vars {
        let (pos, neg) = counts[(v - 1) as usize];
        let m = pos.max(neg).max(1);
        let template = store
            .variable_gadget(m)
            .map_err(|_| ReductionError::GadgetUnavailable {
                var: v,
                m,
                max: store_max,
            })?;
        let vertex_base = num_vertices;
        num_vertices += template.inst.graph.num_vertices() as u32;
        specs.extend(template.inst.specs.iter().copied());
        let edge_base = edges.len() as u32;
        for e in template.inst.graph.edges() {
            let (a, b) = template.inst.graph.endpoints(e);
            edges.push((VertexId(a.0 + vertex_base), VertexId(b.0 + vertex_base)));
        }
        layouts.push(VarLayout {
            template,
            vertex_base,
            edge_base,
            port_edge: vec![None; template.ports.len()],
            tport_order: template.port_indices(PortPolarity::TPort),
            fport_order: template.port_indices(PortPolarity::FPort),
            next_t: 0,
            next_f: 0,
        });
    }

    let clause_template = clause_gadget();
    let clause_literal_ports = clause_template.port_indices(PortPolarity::LiteralSlot);
    let clause_resolution_ports = clause_template.port_indices(PortPolarity::ResolutionPort);

    struct ClauseLayout {
        vertex_base: u32,
        edge_base: u32,
        literal_edges: [EdgeId; 3],
    }
    let mut clause_layouts = Vec::new();

    for clause in &formula.clauses {
        let vertex_base = num_vertices;
        num_vertices += clause_template.inst.graph.num_vertices() as u32;
        specs.extend(clause_template.inst.specs.iter().copied());
        let edge_base = edges.len() as u32;
        for e in clause_template.inst.graph.edges() {
            let (a, b) = clause_template.inst.graph.endpoints(e);
            edges.push((VertexId(a.0 + vertex_base), VertexId(b.0 + vertex_base)));
        }
        let mut literal_edges = [EdgeId(0); 3];
        for (slot, &lit) in clause.iter().enumerate() {
            let layout = &mut layouts[(lit.unsigned_abs() - 1) as usize];
            let port_idx = if lit > 0 {
                let i = layout.tport_order[layout.next_t];
                layout.next_t += 1;
                i
            } else {
                let i = layout.fport_order[layout.next_f];
                layout.next_f += 1;
                i
            };
            let var_attach =
                VertexId(layout.template.ports[port_idx].vertex.0 + layout.vertex_base);
            let slot_attach =
                VertexId(clause_template.ports[clause_literal_ports[slot]].vertex.0 + vertex_base);
            // The fused edge runs from the variable gadget to the clause
            // gadget, so a port pointing away from its gadget is Forward on
            // the variable side and Toward on the clause side.
            let id = EdgeId(edges.len() as u32);
            edges.push((var_attach, slot_attach));
            layout.port_edge[port_idx] = Some(id);
            literal_edges[slot] = id;
        }
        clause_layouts.push(ClauseLayout {
            vertex_base,
            edge_base,
            literal_edges,
        });
    }

    // Leftover ports, in a fixed order: unused variable ports (variable
    // order, template port order), then clause resolution ports.
    let mut leftover_attach: Vec<VertexId> = Vec::new();
    let mut var_leftover: Vec<Vec<(usize, usize)>> = Vec::new(); // (tpl port, leftover pos)
    for layout in &layouts {
        let mut own = Vec::new();
        for (i, fused) in layout.port_edge.iter().enumerate() {
            if fused.is_none() {
                own.push((i, leftover_attach.len()));
                leftover_attach.push(VertexId(
                    layout.template.ports[i].vertex.0 + layout.vertex_base,
                ));
            }
        }
        var_leftover.push(own);
    }
    let mut clause_leftover: Vec<Vec<usize>> = Vec::new();
    for cl in &clause_layouts {
        let mut own = Vec::new();
        for &pidx in &clause_resolution_ports {
            own.push(leftover_attach.len());
            leftover_attach.push(VertexId(
                clause_template.ports[pidx].vertex.0 + cl.vertex_base,
            ));
        }
        clause_leftover.push(own);
    }

    let mut graph = Multigraph::new(num_vertices as usize);
    for (a, b) in &edges {
        graph.add_edge(*a, *b).expect("assembly produces no loops");
    }
    let ported = PortedInstance::new(graph, specs, leftover_attach)
        .expect("assembly satisfies the degree-sum invariant");

    let (instance, mirror) = if ported.ports.is_empty() {
        // Only possible for degenerate formulas; a closed assembly needs no
        // mirror.
        (
            PartialOrientationInstance::new(ported.graph.clone(), ported.specs.clone())
                .expect("closed assembly"),
            None,
        )
    } else {
        let (closed, map) = mirror_complete(&ported)?;
        (closed, Some(map))
    };
    let bridge = |leftover_pos: usize| -> EdgeId {
        mirror
            .as_ref()
            .expect("leftover ports imply a mirror")
            .bridges[leftover_pos]
    };

    let mut variables = Vec::new();
    for (layout, leftovers) in layouts.iter().zip(&var_leftover) {
        let var = variables.len() as u32 + 1;
        let template = layout.template;
        let resolve_port = |tpl_port: usize| -> EdgeId {
            if let Some(e) = layout.port_edge[tpl_port] {
                e
            } else {
                let (_, pos) = leftovers
                    .iter()
                    .find(|(p, _)| *p == tpl_port)
                    .expect("unfused port is a leftover");
                bridge(*pos)
            }
        };
        let canonical = template
            .canonical
            .as_ref()
            .ok_or(ReductionError::UnverifiedGadget {
                m: template.multiplicity(),
            })?;
        let signature = |state: &crate::oracle::PortedOrientation| {
            let mut sig = Vec::new();
            for (i, s) in state.edge_states.iter().enumerate() {
                sig.push((EdgeId(layout.edge_base + i as u32), *s));
            }
            for (i, s) in state.port_states.iter().enumerate() {
                sig.push((resolve_port(i), port_state_as_edge_from_attachment(*s)));
            }
            sig
        };
        variables.push(VariableProvenance {
            var,
            m: template.multiplicity(),
            vertices: (0..template.inst.graph.num_vertices() as u32)
                .map(|i| VertexId(layout.vertex_base + i))
                .collect(),
            tport_edges: layout
                .tport_order
                .iter()
                .map(|&i| resolve_port(i))
                .collect(),
            fport_edges: layout
                .fport_order
                .iter()
                .map(|&i| resolve_port(i))
                .collect(),
            true_states: signature(&canonical.true_state),
            false_states: signature(&canonical.false_state),
        });
    }

    let mut clauses = Vec::new();
    for (c, (cl, leftovers)) in clause_layouts.iter().zip(&clause_leftover).enumerate() {
        clauses.push(ClauseProvenance {
            clause: c,
            literals: formula.clauses[c],
            vertices: (0..clause_template.inst.graph.num_vertices() as u32)
                .map(|i| VertexId(cl.vertex_base + i))
                .collect(),
            literal_edges: cl.literal_edges,
            internal_edges: (0..clause_template.inst.graph.num_edges() as u32)
                .map(|i| EdgeId(cl.edge_base + i))
                .collect(),
            resolution_bridges: leftovers.iter().map(|&pos| bridge(pos)).collect(),
        });
    }

    debug_assert!(instance.specs.iter().all(|s| s.rho <= 1 && s.delta <= 1));

    let provenance = ProvenanceMap {
        num_vars: formula.num_vars,
        variables,
        clauses,
        mirror: mirror.map(|m| MirrorInfo {
            primal_vertices: m.primal_vertices,
            primal_edges: m.primal_edges,
        }),
        medep: None,
    };
    Ok((instance, provenance))
}

/// Result of the orientation-to-packing reduction; the infeasibility
/// shortcut is a first-class outcome, not an error.
#[derive(Debug, Clone)]
pub enum Po2MedepOutcome {
    Instance(MedepInstance, MedepProvenance),
    TriviallyInfeasible { delta_sum: u64, rho_sum: u64 },
}

/// Adds terminals s and t, adjacent to each vertex with multiplicity equal
/// to its prescribed out- and in-degree respectively, and asks for
/// k = deg(s) disjoint paths. Unequal degree sums (or k = 0) short-circuit.
pub fn po_to_medep(instance: &PartialOrientationInstance) -> Po2MedepOutcome {
    let delta_sum: u64 = instance.specs.iter().map(|s| s.delta as u64).sum();
    let rho_sum: u64 = instance.specs.iter().map(|s| s.rho as u64).sum();
    if delta_sum != rho_sum || delta_sum == 0 {
        return Po2MedepOutcome::TriviallyInfeasible { delta_sum, rho_sum };
    }
    let n = instance.graph.num_vertices();
    let s = VertexId(n as u32);
    let t = VertexId(n as u32 + 1);
    let mut graph = Multigraph::new(n + 2);
    for e in instance.graph.edges() {
        let (a, b) = instance.graph.endpoints(e);
        graph.add_edge(a, b).expect("copy of middle layer");
    }
    let mut s_edges = BTreeMap::new();
    for v in instance.graph.vertices() {
        let copies: Vec<EdgeId> = (0..instance.spec(v).delta)
            .map(|_| graph.add_edge(s, v).expect("terminal edge"))
            .collect();
        if !copies.is_empty() {
            s_edges.insert(v, copies);
        }
    }
    let mut t_edges = BTreeMap::new();
    for v in instance.graph.vertices() {
        let copies: Vec<EdgeId> = (0..instance.spec(v).rho)
            .map(|_| graph.add_edge(v, t).expect("terminal edge"))
            .collect();
        if !copies.is_empty() {
            t_edges.insert(v, copies);
        }
    }
    let k = delta_sum as u32;
    let medep = MedepInstance::new(graph, s, t, k).expect("s, t fresh and k positive");
    Po2MedepOutcome::Instance(
        medep,
        MedepProvenance {
            s,
            t,
            num_po_edges: instance.graph.num_edges(),
            k,
            s_edges,
            t_edges,
        },
    )
}

/// Assembles the satisfying orientation corresponding to a satisfying
/// assignment: each variable gadget takes its canonical orientation, each
/// clause takes a stored extension for its literal pattern, and the mirror
/// half follows the mirror witness rule.
pub fn encode_assignment(
    formula: &CnfFormula,
    assignment: &Assignment,
    prov: &ProvenanceMap,
) -> Result<Orientation, ReductionError> {
    assert_eq!(formula.num_vars, prov.num_vars);
    let mut orientation = Orientation::new();
    for vp in &prov.variables {
        let states = if assignment.get(vp.var) {
            &vp.true_states
        } else {
            &vp.false_states
        };
        for (e, s) in states {
            orientation.set(*e, *s);
        }
    }

    let clause_template = clause_gadget();
    let table = clause_template
        .extensions
        .as_ref()
        .expect("clause gadget carries its extension table");
    let literal_ports = clause_template.port_indices(PortPolarity::LiteralSlot);
    let resolution_ports = clause_template.port_indices(PortPolarity::ResolutionPort);
    for cp in &prov.clauses {
        let mut pattern = 0u8;
        for (slot, &lit) in cp.literals.iter().enumerate() {
            let value = assignment.get(lit.unsigned_abs());
            let literal_true = if lit > 0 { value } else { !value };
            if literal_true {
                pattern |= 1 << slot;
            }
        }
        let Some(extension) = table.get(pattern) else {
            return Err(ReductionError::NotSatisfying { clause: cp.clause });
        };
        for (i, s) in extension.edge_states.iter().enumerate() {
            orientation.set(cp.internal_edges[i], *s);
        }
        for (slot, &pidx) in literal_ports.iter().enumerate() {
            // The fused edge was already set by the variable side; the
            // extension's literal state must agree with the pattern.
            debug_assert_eq!(
                orientation.get(cp.literal_edges[slot]),
                Some(port_state_as_edge_from_attachment(
                    extension.port_states[pidx]
                ))
                .map(|s| s.reversed()),
                "variable and clause sides of a fused edge must agree"
            );
        }
        for (r, &pidx) in resolution_ports.iter().enumerate() {
            orientation.set(
                cp.resolution_bridges[r],
                port_state_as_edge_from_attachment(extension.port_states[pidx]),
            );
        }
    }

    if let Some(mirror) = &prov.mirror {
        for e in 0..mirror.primal_edges {
            let state = orientation
                .get(EdgeId(e as u32))
                .expect("primal edges are fully covered by gadget signatures");
            orientation.set(EdgeId((e + mirror.primal_edges) as u32), state.reversed());
        }
    }
    Ok(orientation)
}

/// Reads each variable gadget's port polarity from a valid orientation of
/// the composed instance. The two-orientation contract makes this
/// well-defined; anything else is reported as an incoherent gadget state.
pub fn decode_orientation(
    orientation: &Orientation,
    prov: &ProvenanceMap,
) -> Result<Assignment, ReductionError> {
    let mut values = Vec::with_capacity(prov.num_vars as usize);
    for vp in &prov.variables {
        let matches = |signature: &[(EdgeId, EdgeState)]| {
            let ports: std::collections::BTreeMap<EdgeId, EdgeState> =
                signature.iter().copied().collect();
            vp.tport_edges
                .iter()
                .chain(&vp.fport_edges)
                .all(|e| orientation.get(*e) == ports.get(e).copied())
        };
        let is_true = matches(&vp.true_states);
        let is_false = matches(&vp.false_states);
        match (is_true, is_false) {
            (true, false) => values.push(true),
            (false, true) => values.push(false),
            _ => {
                return Err(ReductionError::IncoherentGadgetState(format!(
                    "variable {} matches neither canonical port pattern",
                    vp.var
                )))
            }
        }
    }
    let assignment = Assignment::new(values);
    for cp in &prov.clauses {
        let satisfied = cp.literals.iter().any(|&lit| {
            let value = assignment.get(lit.unsigned_abs());
            if lit > 0 {
                value
            } else {
                !value
            }
        });
        if !satisfied {
            return Err(ReductionError::IncoherentGadgetState(format!(
                "decoded assignment leaves clause {} unsatisfied",
                cp.clause
            )));
        }
    }
    Ok(assignment)
}

/// Translates a valid orientation into the corresponding packing: each
/// directed edge u -> v becomes the path s, u, v, t, consuming terminal-edge
/// copies in id order.
pub fn orientation_to_packing(
    orientation: &Orientation,
    po_instance: &PartialOrientationInstance,
    medep: &MedepProvenance,
) -> Result<PathPacking, ReductionError> {
    let mut s_next: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut t_next: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut paths = Vec::new();
    for e in po_instance.graph.edges() {
        let (a, b) = po_instance.graph.endpoints(e);
        let (u, v) = match orientation.get(e) {
            Some(EdgeState::Forward) => (a, b),
            Some(EdgeState::Backward) => (b, a),
            Some(EdgeState::Undirected) => continue,
            None => {
                return Err(ReductionError::Translation(format!(
                    "orientation assigns no state to edge {e}"
                )))
            }
        };
        let si = s_next.entry(u).or_insert(0);
        let first = medep
            .s_edges
            .get(&u)
            .and_then(|copies| copies.get(*si))
            .copied()
            .ok_or(ReductionError::CopyExhausted(u))?;
        *si += 1;
        let ti = t_next.entry(v).or_insert(0);
        let last = medep
            .t_edges
            .get(&v)
            .and_then(|copies| copies.get(*ti))
            .copied()
            .ok_or(ReductionError::CopyExhausted(v))?;
        *ti += 1;
        paths.push(PathTriple {
            first,
            middle: e,
            last,
            inner_u: u,
            inner_v: v,
        });
    }
    Ok(PathPacking { paths })
}

/// Translates a valid packing back: each path's middle edge is directed
/// from its s-side inner vertex to its t-side inner vertex, and untouched
/// original edges stay undirected.
pub fn packing_to_orientation(
    packing: &PathPacking,
    po_instance: &PartialOrientationInstance,
    medep: &MedepProvenance,
) -> Result<Orientation, ReductionError> {
    let mut s_owner: BTreeMap<EdgeId, VertexId> = BTreeMap::new();
    for (v, copies) in &medep.s_edges {
        for e in copies {
            s_owner.insert(*e, *v);
        }
    }
    let mut t_owner: BTreeMap<EdgeId, VertexId> = BTreeMap::new();
    for (v, copies) in &medep.t_edges {
        for e in copies {
            t_owner.insert(*e, *v);
        }
    }

    let mut orientation = Orientation::new();
    for triple in &packing.paths {
        let u = *s_owner.get(&triple.first).ok_or_else(|| {
            ReductionError::Translation(format!("edge {} is not an s-side edge", triple.first))
        })?;
        let w = *t_owner.get(&triple.last).ok_or_else(|| {
            ReductionError::Translation(format!("edge {} is not a t-side edge", triple.last))
        })?;
        if triple.middle.index() >= medep.num_po_edges {
            return Err(ReductionError::Translation(format!(
                "edge {} is not an original middle edge",
                triple.middle
            )));
        }
        let (a, b) = po_instance.graph.endpoints(triple.middle);
        let state = if (a, b) == (u, w) {
            EdgeState::Forward
        } else if (b, a) == (u, w) {
            EdgeState::Backward
        } else {
            return Err(ReductionError::Translation(format!(
                "path around edge {} does not match its endpoints",
                triple.middle
            )));
        };
        if orientation.states.insert(triple.middle, state).is_some() {
            return Err(ReductionError::Translation(format!(
                "edge {} used by two paths",
                triple.middle
            )));
        }
    }
    for e in po_instance.graph.edges() {
        orientation.states.entry(e).or_insert(EdgeState::Undirected);
    }
    Ok(orientation)
}

fn state_token(s: EdgeState) -> &'static str {
    match s {
        EdgeState::Forward => "fwd",
        EdgeState::Backward => "bwd",
        EdgeState::Undirected => "und",
    }
}

fn ids<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Serializes a provenance map as line-based `prov` records.
pub fn write_provenance(prov: &ProvenanceMap) -> String {
    let mut out = String::new();
    if !prov.variables.is_empty() || !prov.clauses.is_empty() || prov.num_vars > 0 {
        let (pv, pe, mirrored) = match &prov.mirror {
            Some(m) => (m.primal_vertices, m.primal_edges, 1),
            None => (0, 0, 0),
        };
        writeln!(out, "prov sat {} {} {} {}", prov.num_vars, pv, pe, mirrored).unwrap();
        for vp in &prov.variables {
            writeln!(
                out,
                "prov var {} m {} verts {}",
                vp.var,
                vp.m,
                ids(&vp.vertices)
            )
            .unwrap();
            writeln!(out, "prov var {} tedges {}", vp.var, ids(&vp.tport_edges)).unwrap();
            writeln!(out, "prov var {} fedges {}", vp.var, ids(&vp.fport_edges)).unwrap();
            for (name, states) in [("true", &vp.true_states), ("false", &vp.false_states)] {
                let body = states
                    .iter()
                    .map(|(e, s)| format!("{e}:{}", state_token(*s)))
                    .collect::<Vec<_>>()
                    .join(" ");
                writeln!(out, "prov var {} {} {}", vp.var, name, body).unwrap();
            }
        }
        for cp in &prov.clauses {
            writeln!(
                out,
                "prov clause {} lits {} {} {}",
                cp.clause, cp.literals[0], cp.literals[1], cp.literals[2]
            )
            .unwrap();
            writeln!(out, "prov clause {} verts {}", cp.clause, ids(&cp.vertices)).unwrap();
            writeln!(
                out,
                "prov clause {} ledges {}",
                cp.clause,
                ids(cp.literal_edges)
            )
            .unwrap();
            writeln!(
                out,
                "prov clause {} iedges {}",
                cp.clause,
                ids(&cp.internal_edges)
            )
            .unwrap();
            writeln!(
                out,
                "prov clause {} redges {}",
                cp.clause,
                ids(&cp.resolution_bridges)
            )
            .unwrap();
        }
    }
    if let Some(m) = &prov.medep {
        writeln!(out, "prov medep {} {} {} {}", m.s, m.t, m.num_po_edges, m.k).unwrap();
        for (v, copies) in &m.s_edges {
            writeln!(out, "prov sedges {} {}", v, ids(copies)).unwrap();
        }
        for (v, copies) in &m.t_edges {
            writeln!(out, "prov tedges {} {}", v, ids(copies)).unwrap();
        }
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_edge_list(toks: &[&str], line: usize) -> Result<Vec<EdgeId>, FormatError> {
    toks.iter()
        .map(|t| {
            t.parse::<u32>()
                .map(EdgeId)
                .map_err(|_| perr(line, format!("bad edge id `{t}`")))
        })
        .collect()
}

fn parse_state_list(toks: &[&str], line: usize) -> Result<Vec<(EdgeId, EdgeState)>, FormatError> {
    toks.iter()
        .map(|t| {
            let (e, s) = t
                .split_once(':')
                .ok_or_else(|| perr(line, format!("bad state record `{t}`")))?;
            let e = e
                .parse::<u32>()
                .map(EdgeId)
                .map_err(|_| perr(line, format!("bad edge id `{e}`")))?;
            let s = match s {
                "fwd" => EdgeState::Forward,
                "bwd" => EdgeState::Backward,
                "und" => EdgeState::Undirected,
                other => return Err(perr(line, format!("bad state `{other}`"))),
            };
            Ok((e, s))
        })
        .collect()
}

/// Parses provenance records written by `write_provenance`.
pub fn parse_provenance(text: &str) -> Result<ProvenanceMap, FormatError> {
    let mut prov = ProvenanceMap::default();
    let mut vars: BTreeMap<u32, VariableProvenance> = BTreeMap::new();
    let mut clauses: BTreeMap<usize, ClauseProvenance> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks[0] != "prov" || toks.len() < 2 {
            return Err(perr(line, "expected `prov <kind> ...`"));
        }
        match toks[1] {
            "sat" => {
                if toks.len() != 6 {
                    return Err(perr(
                        line,
                        "expected `prov sat <vars> <pv> <pe> <mirrored>`",
                    ));
                }
                prov.num_vars = toks[2].parse().map_err(|_| perr(line, "bad var count"))?;
                let pv: usize = toks[3]
                    .parse()
                    .map_err(|_| perr(line, "bad vertex count"))?;
                let pe: usize = toks[4].parse().map_err(|_| perr(line, "bad edge count"))?;
                match toks[5] {
                    "1" => {
                        prov.mirror = Some(MirrorInfo {
                            primal_vertices: pv,
                            primal_edges: pe,
                        })
                    }
                    "0" => prov.mirror = None,
                    _ => return Err(perr(line, "bad mirror flag")),
                }
            }
            "var" => {
                if toks.len() < 4 {
                    return Err(perr(line, "truncated var record"));
                }
                let v: u32 = toks[2].parse().map_err(|_| perr(line, "bad var id"))?;
                let entry = vars.entry(v).or_insert_with(|| VariableProvenance {
                    var: v,
                    m: 0,
                    vertices: Vec::new(),
                    tport_edges: Vec::new(),
                    fport_edges: Vec::new(),
                    true_states: Vec::new(),
                    false_states: Vec::new(),
                });
                match toks[3] {
                    "m" => {
                        if toks.len() < 6 || toks[5] != "verts" {
                            return Err(perr(line, "expected `m <m> verts <...>`"));
                        }
                        entry.m = toks[4].parse().map_err(|_| perr(line, "bad m"))?;
                        entry.vertices = toks[6..]
                            .iter()
                            .map(|t| {
                                t.parse::<u32>()
                                    .map(VertexId)
                                    .map_err(|_| perr(line, "bad vertex id"))
                            })
                            .collect::<Result<_, _>>()?;
                    }
                    "tedges" => entry.tport_edges = parse_edge_list(&toks[4..], line)?,
                    "fedges" => entry.fport_edges = parse_edge_list(&toks[4..], line)?,
                    "true" => entry.true_states = parse_state_list(&toks[4..], line)?,
                    "false" => entry.false_states = parse_state_list(&toks[4..], line)?,
                    other => return Err(perr(line, format!("unknown var record `{other}`"))),
                }
            }
            "clause" => {
                if toks.len() < 4 {
                    return Err(perr(line, "truncated clause record"));
                }
                let c: usize = toks[2].parse().map_err(|_| perr(line, "bad clause id"))?;
                let entry = clauses.entry(c).or_insert_with(|| ClauseProvenance {
                    clause: c,
                    literals: [0; 3],
                    vertices: Vec::new(),
                    literal_edges: [EdgeId(0); 3],
                    internal_edges: Vec::new(),
                    resolution_bridges: Vec::new(),
                });
                match toks[3] {
                    "lits" => {
                        if toks.len() != 7 {
                            return Err(perr(line, "expected three literals"));
                        }
                        for (i, t) in toks[4..7].iter().enumerate() {
                            entry.literals[i] = t.parse().map_err(|_| perr(line, "bad literal"))?;
                        }
                    }
                    "verts" => {
                        entry.vertices = toks[4..]
                            .iter()
                            .map(|t| {
                                t.parse::<u32>()
                                    .map(VertexId)
                                    .map_err(|_| perr(line, "bad vertex id"))
                            })
                            .collect::<Result<_, _>>()?;
                    }
                    "ledges" => {
                        let edges = parse_edge_list(&toks[4..], line)?;
                        if edges.len() != 3 {
                            return Err(perr(line, "expected three literal edges"));
                        }
                        entry.literal_edges = [edges[0], edges[1], edges[2]];
                    }
                    "iedges" => entry.internal_edges = parse_edge_list(&toks[4..], line)?,
                    "redges" => entry.resolution_bridges = parse_edge_list(&toks[4..], line)?,
                    other => return Err(perr(line, format!("unknown clause record `{other}`"))),
                }
            }
            "medep" => {
                if toks.len() != 6 {
                    return Err(perr(line, "expected `prov medep <s> <t> <edges> <k>`"));
                }
                prov.medep = Some(MedepProvenance {
                    s: VertexId(toks[2].parse().map_err(|_| perr(line, "bad s"))?),
                    t: VertexId(toks[3].parse().map_err(|_| perr(line, "bad t"))?),
                    num_po_edges: toks[4].parse().map_err(|_| perr(line, "bad edge count"))?,
                    k: toks[5].parse().map_err(|_| perr(line, "bad k"))?,
                    s_edges: BTreeMap::new(),
                    t_edges: BTreeMap::new(),
                });
            }
            "sedges" | "tedges" => {
                if toks.len() < 3 {
                    return Err(perr(line, "truncated terminal-edge record"));
                }
                let v = VertexId(toks[2].parse().map_err(|_| perr(line, "bad vertex"))?);
                let copies = parse_edge_list(&toks[3..], line)?;
                let medep = prov
                    .medep
                    .as_mut()
                    .ok_or_else(|| perr(line, "terminal edges before `prov medep`"))?;
                if toks[1] == "sedges" {
                    medep.s_edges.insert(v, copies);
                } else {
                    medep.t_edges.insert(v, copies);
                }
            }
            other => return Err(perr(line, format!("unknown prov kind `{other}`"))),
        }
    }
    prov.variables = vars.into_values().collect();
    prov.clauses = clauses.into_values().collect();
    Ok(prov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{check_orientation, check_packing, is_simple};
    use crate::oracle::{
        solve_po, solve_sat_bruteforce, SatVerdict, SolveOutcome, DEFAULT_NODE_BUDGET,
    };

    fn store() -> GadgetStore {
        GadgetStore::builtin()
    }

    #[test]
    fn bound_occurrences_leaves_bounded_formulas_alone() {
        let f = CnfFormula::new(3, vec![[1, 2, 3], [-1, -2, -3]]);
        assert_eq!(bound_occurrences(&f, 3), f);
        let triple = CnfFormula::new(1, vec![[1, 1, 1]]);
        assert_eq!(bound_occurrences(&triple, 3), triple);
    }

    #[test]
    fn bound_occurrences_splits_and_preserves_satisfiability() {
        // x appears five times positively across clauses.
        let f = CnfFormula::new(2, vec![[1, 1, 2], [1, 1, 2], [1, 2, 2]]);
        let bounded = bound_occurrences(&f, 3);
        assert!(bounded.num_vars > f.num_vars);
        for (pos, neg) in bounded.occurrence_counts() {
            assert!(pos <= 3 && neg <= 3, "occurrence bound violated");
        }
        let a = solve_sat_bruteforce(&f, 24).unwrap();
        let b = solve_sat_bruteforce(&bounded, 24).unwrap();
        assert_eq!(
            matches!(a, SatVerdict::Sat(_)),
            matches!(b, SatVerdict::Sat(_))
        );

        // An unsatisfiable formula stays unsatisfiable after splitting.
        let g = CnfFormula::new(
            2,
            vec![[1, 1, 1], [1, 1, 1], [-1, -1, -1], [-1, -1, -1], [2, 2, 2]],
        );
        let bounded = bound_occurrences(&g, 3);
        assert_eq!(solve_sat_bruteforce(&g, 24).unwrap(), SatVerdict::Unsat);
        assert_eq!(
            solve_sat_bruteforce(&bounded, 24).unwrap(),
            SatVerdict::Unsat
        );
    }

    #[test]
    fn sat_to_po_census_for_one_clause() {
        // Three single-use variables and one clause: 3 * 2 + 7 = 13 primal
        // vertices, doubled by the mirror.
        let f = CnfFormula::new(3, vec![[1, 2, 3]]);
        let (inst, prov) = sat_to_po(&f, &store()).unwrap();
        assert_eq!(inst.graph.num_vertices(), 26);
        // Primal edges: 3 gadget internals + 9 clause internals + 3 fused;
        // mirrored doubles them; 3 spare variable ports + 4 resolution ports
        // become bridges.
        assert_eq!(inst.graph.num_edges(), 2 * 15 + 7);
        assert_eq!(prov.variables.len(), 3);
        assert_eq!(prov.clauses.len(), 1);
        assert!(inst.specs.iter().all(|s| s.rho <= 1 && s.delta <= 1));
    }

    #[test]
    fn sat_to_po_empty_formula() {
        let f = CnfFormula::new(0, vec![]);
        let (inst, prov) = sat_to_po(&f, &store()).unwrap();
        assert_eq!(inst.graph.num_vertices(), 0);
        assert!(prov.mirror.is_none());
        assert!(solve_po(&inst, 1000).is_solvable());
        // The empty assignment encodes to the empty orientation, trivially
        // valid.
        let orientation = encode_assignment(&f, &Assignment::new(vec![]), &prov).unwrap();
        assert!(orientation.states.is_empty());
        assert!(check_orientation(&inst, &orientation).unwrap().is_valid());
    }

    #[test]
    fn flipping_one_internal_edge_invalidates_the_orientation() {
        // Decoding is only defined on valid orientations; a single flipped
        // gadget-internal edge is caught by the checker first.
        let f = CnfFormula::new(3, vec![[1, 2, 3]]);
        let (inst, prov) = sat_to_po(&f, &store()).unwrap();
        let assignment = Assignment::new(vec![true, true, true]);
        let mut orientation = encode_assignment(&f, &assignment, &prov).unwrap();
        let internal = prov.variables[0].true_states[0].0;
        let flipped = match orientation.get(internal).unwrap() {
            EdgeState::Forward => EdgeState::Backward,
            EdgeState::Backward => EdgeState::Forward,
            EdgeState::Undirected => EdgeState::Forward,
        };
        orientation.set(internal, flipped);
        assert!(!check_orientation(&inst, &orientation).unwrap().is_valid());
    }

    #[test]
    fn unsat_contradiction_is_unsolvable_by_both_engines() {
        // The two-clause contradiction over one variable needs the m = 3
        // gadget. The propagating solver and the plain exhaustive
        // enumerator must both find the reduced instance unsolvable.
        let formula = CnfFormula::new(1, vec![[1, 1, 1], [-1, -1, -1]]);
        let (inst, _) = sat_to_po(&formula, &store()).unwrap();
        assert_eq!(inst.graph.num_vertices(), 52);
        assert_eq!(
            solve_po(&inst, DEFAULT_NODE_BUDGET),
            SolveOutcome::Unsolvable
        );
        let ported = crate::oracle::PortedInstance::closed(&inst);
        let result =
            crate::oracle::enumerate_orientations(&ported, &[], 1, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(result.count, 0);
        assert!(!result.hit_cap);
    }

    #[test]
    fn sat_to_po_unavailable_gadget() {
        let mut small = GadgetStore::empty();
        small
            .insert_variable(crate::gadgets::two_vertex_variable_gadget())
            .unwrap();
        small.set_clause(clause_gadget()).unwrap();
        let f = CnfFormula::new(1, vec![[1, 1, 1]]);
        match sat_to_po(&f, &small) {
            Err(ReductionError::GadgetUnavailable {
                var: 1,
                m: 3,
                max: 1,
            }) => {}
            other => panic!("expected GadgetUnavailable, got {other:?}"),
        }
    }

    #[test]
    fn encode_decode_round_trip_over_all_satisfying_assignments() {
        let f = CnfFormula::new(3, vec![[1, 2, 3]]);
        let (inst, prov) = sat_to_po(&f, &store()).unwrap();
        let mut satisfying = 0;
        for bits in 0u32..8 {
            let values: Vec<bool> = (0..3).map(|j| bits >> (2 - j) & 1 == 1).collect();
            let assignment = Assignment::new(values);
            if !f.evaluate(&assignment) {
                assert!(matches!(
                    encode_assignment(&f, &assignment, &prov),
                    Err(ReductionError::NotSatisfying { clause: 0 })
                ));
                continue;
            }
            satisfying += 1;
            let orientation = encode_assignment(&f, &assignment, &prov).unwrap();
            assert!(
                check_orientation(&inst, &orientation).unwrap().is_valid(),
                "encoded orientation must validate for {assignment:?}"
            );
            let decoded = decode_orientation(&orientation, &prov).unwrap();
            assert_eq!(decoded, assignment);
        }
        assert_eq!(satisfying, 7);
    }

    #[test]
    fn decode_from_solver_witness_satisfies_formula() {
        let f = CnfFormula::new(3, vec![[1, -2, 3], [-1, 2, 2]]);
        let (inst, prov) = sat_to_po(&f, &store()).unwrap();
        match solve_po(&inst, DEFAULT_NODE_BUDGET) {
            SolveOutcome::Solvable(o) => {
                assert!(check_orientation(&inst, &o).unwrap().is_valid());
                let assignment = decode_orientation(&o, &prov).unwrap();
                assert!(f.evaluate(&assignment));
            }
            other => panic!("expected solvable, got {other:?}"),
        }
    }

    #[test]
    fn po_to_medep_examples() {
        // The forced single edge maps to the three-edge path instance.
        let inst = crate::graph::fixtures::f1();
        match po_to_medep(&inst) {
            Po2MedepOutcome::Instance(medep, prov) => {
                assert_eq!(medep.k, 1);
                assert_eq!(medep.graph.num_vertices(), 4);
                assert_eq!(medep.graph.num_edges(), 3);
                assert_eq!(prov.num_po_edges, 1);
            }
            other => panic!("expected instance, got {other:?}"),
        }

        // Unequal degree sums short-circuit.
        let mut g = Multigraph::new(3);
        g.add_edge(VertexId(0), VertexId(2)).unwrap();
        g.add_edge(VertexId(1), VertexId(2)).unwrap();
        let unbalanced = PartialOrientationInstance::new(
            g,
            vec![
                crate::graph::DegreeSpec::new(0, 1, 0),
                crate::graph::DegreeSpec::new(0, 1, 0),
                crate::graph::DegreeSpec::new(1, 0, 1),
            ],
        )
        .unwrap();
        assert!(matches!(
            po_to_medep(&unbalanced),
            Po2MedepOutcome::TriviallyInfeasible {
                delta_sum: 2,
                rho_sum: 1
            }
        ));

        // All-theta instances have k = 0 and are also short-circuited.
        let mut g = Multigraph::new(2);
        g.add_edge(VertexId(0), VertexId(1)).unwrap();
        let theta_only = PartialOrientationInstance::new(
            g,
            vec![
                crate::graph::DegreeSpec::new(0, 0, 1),
                crate::graph::DegreeSpec::new(0, 0, 1),
            ],
        )
        .unwrap();
        assert!(matches!(
            po_to_medep(&theta_only),
            Po2MedepOutcome::TriviallyInfeasible { .. }
        ));
    }

    #[test]
    fn both_solvers_agree_on_f1_under_the_correspondence() {
        let inst = crate::graph::fixtures::f1();
        let Po2MedepOutcome::Instance(medep, prov) = po_to_medep(&inst) else {
            panic!("f1 is balanced");
        };
        let SolveOutcome::Solvable(orientation) = solve_po(&inst, DEFAULT_NODE_BUDGET) else {
            panic!("f1 is solvable");
        };
        let SolveOutcome::Solvable(packing) =
            crate::oracle::solve_medep(&medep, DEFAULT_NODE_BUDGET)
        else {
            panic!("image of f1 is solvable");
        };
        let translated = orientation_to_packing(&orientation, &inst, &prov).unwrap();
        assert_eq!(translated, packing);
    }

    #[test]
    fn orientation_packing_round_trip_on_f1() {
        let inst = crate::graph::fixtures::f1();
        let Po2MedepOutcome::Instance(medep, prov) = po_to_medep(&inst) else {
            panic!("f1 is balanced");
        };
        let orientation = Orientation::from_dense(&[EdgeState::Forward]);
        let packing = orientation_to_packing(&orientation, &inst, &prov).unwrap();
        assert!(check_packing(&medep, &packing).unwrap().is_valid());
        assert_eq!(
            (
                packing.paths[0].first,
                packing.paths[0].middle,
                packing.paths[0].last
            ),
            (EdgeId(1), EdgeId(0), EdgeId(2))
        );
        let back = packing_to_orientation(&packing, &inst, &prov).unwrap();
        assert_eq!(back, orientation);
    }

    #[test]
    fn pipeline_output_is_simple_with_bounded_degrees() {
        let f = CnfFormula::new(3, vec![[1, 2, 3], [-1, -2, 3]]);
        let bounded = bound_occurrences(&f, 3);
        let (inst, _) = sat_to_po(&bounded, &store()).unwrap();
        assert!(inst.specs.iter().all(|s| s.rho <= 1 && s.delta <= 1));
        let (simple, pairs) = is_simple(&inst.graph);
        assert!(
            simple,
            "pipeline orientation instance not simple: {pairs:?}"
        );
        match po_to_medep(&inst) {
            Po2MedepOutcome::Instance(medep, _) => {
                let (simple, pairs) = is_simple(&medep.graph);
                assert!(simple, "pipeline packing instance not simple: {pairs:?}");
            }
            other => panic!("mirror completion balances degree sums: {other:?}"),
        }
    }

    #[test]
    fn provenance_round_trips_through_text() {
        let f = CnfFormula::new(2, vec![[1, -2, 1]]);
        let (inst, mut prov) = sat_to_po(&f, &store()).unwrap();
        if let Po2MedepOutcome::Instance(_, medep) = po_to_medep(&inst) {
            prov.medep = Some(medep);
        }
        let text = write_provenance(&prov);
        let parsed = parse_provenance(&text).unwrap();
        assert_eq!(parsed, prov);
        assert_eq!(write_provenance(&parsed), text);
    }
}
